/**
 * DOM layer: renders the role dashboards from viewmodel projections and
 * wires form actions. Views refresh on a 2 s poll and immediately after any
 * action. Rendering never invents state: every cell comes from a projection.
 */

import { ApiError, Gateway } from "./api.js";
import { fromHex } from "./canonical.js";
import { ConsoleSession } from "./session.js";
import * as vm from "./viewmodel.js";

function parseSeed(hex: string, what: string): Uint8Array {
  const seed = fromHex(hex.trim());
  if (seed.length !== 32) throw new Error(`${what} must be 32 bytes of hex`);
  return seed;
}

const POLL_MS = 2000;

function el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function rows(table: HTMLElement, cells: string[][]) {
  for (const cell of cells) {
    const tr = el("tr");
    for (const value of cell) tr.appendChild(el("td", {}, value));
    table.appendChild(tr);
  }
}

export class ConsoleApp {
  session: ConsoleSession | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private busy = false;
  private payError = "";        // survives re-renders until the next success
  private enrollOutput = "";    // shown-once key material stays visible

  constructor(
    public root: HTMLElement,
    public baseUrl: string,
  ) {}

  banner(message: string, kind = "error") {
    const box = this.root.querySelector("#banner");
    if (box) {
      box.textContent = message;
      box.setAttribute("class", message ? `banner ${kind}` : "banner hidden");
    }
  }

  start() {
    this.renderLogin();
  }

  private async action(label: string, fn: () => Promise<unknown>) {
    if (this.busy) return;  // at most one in-flight mutation per session
    this.busy = true;
    try {
      await fn();
      this.banner("");
      await this.refresh();
    } catch (error) {
      const detail = error instanceof ApiError ? error.detail : String(error);
      this.banner(`${label}: ${detail}`);
    } finally {
      this.busy = false;
    }
  }

  renderLogin() {
    this.root.innerHTML = `
      <h1>Telechain console</h1>
      <div id="banner" class="banner hidden"></div>
      <form id="login-form">
        <h2>Log in</h2>
        <label>Subject id <input name="subject" required></label>
        <label>Key (seed hex, stays in this browser)
          <input name="seed" type="password"></label>
        <button type="submit">Log in</button>
      </form>
      <form id="enroll-form">
        <h2>Enroll (admin key required)</h2>
        <label>Admin seed hex <input name="adminseed" type="password"></label>
        <label>New subject id <input name="subject" required></label>
        <label>Role
          <select name="role">
            <option>PATIENT</option><option>PRACTITIONER</option>
            <option>ANALYST</option><option>ADMIN</option>
          </select></label>
        <button type="submit">Enroll & log in</button>
      </form>
      <p class="help">Keys are generated and kept in your browser; the server
      only ever sees signatures and ciphertext. New here? Ask the operator to
      enroll you, or use the enroll form with the operator's admin key.</p>
    `;
    const login = this.root.querySelector("#login-form") as HTMLFormElement;
    login.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(login);
      void this.action("login", async () => {
        const gateway = new Gateway(this.baseUrl);
        const seedHex = String(data.get("seed") || "").trim();
        const seed = seedHex ? parseSeed(seedHex, "key") : undefined;
        this.session = await ConsoleSession.login(
          gateway, String(data.get("subject")), seed);
        this.renderDashboard();
      });
    });
    const enroll = this.root.querySelector("#enroll-form") as HTMLFormElement;
    enroll.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(enroll);
      void this.action("enroll", async () => {
        const adminGateway = new Gateway(this.baseUrl);
        const adminSeed = parseSeed(
          String(data.get("adminseed") || ""), "admin seed");
        await ConsoleSession.login(adminGateway, "admin", adminSeed);
        this.session = await ConsoleSession.enroll(
          adminGateway, new Gateway(this.baseUrl),
          String(data.get("subject")), String(data.get("role")));
        this.renderDashboard();
      });
    });
  }

  renderDashboard() {
    if (!this.session) return;
    this.root.innerHTML = `
      <h1>Telechain console: ${this.session.subjectId}
        <small>${this.session.role}</small></h1>
      <div id="banner" class="banner hidden"></div>
      <div id="content">loading…</div>
      <button id="logout">Log out</button>
    `;
    (this.root.querySelector("#logout") as HTMLElement).addEventListener("click", () => {
      this.session?.logout();
      this.session = null;
      if (this.timer) clearInterval(this.timer);
      this.renderLogin();
    });
    void this.refresh();
    if (this.timer) clearInterval(this.timer);
    this.timer = setInterval(() => void this.refresh(), POLL_MS);
  }

  async refresh() {
    if (!this.session) return;
    const content = this.root.querySelector("#content");
    if (!content) return;
    // don't yank a form out from under the user's cursor on a poll tick
    const active = document.activeElement;
    if (active && content.contains(active) &&
        (active.tagName === "INPUT" || active.tagName === "SELECT")) {
      return;
    }
    try {
      if (this.session.role === "PATIENT") {
        this.renderPatient(content as HTMLElement, await vm.patientDashboard(this.session));
      } else if (this.session.role === "PRACTITIONER") {
        this.renderPractitioner(
          content as HTMLElement, await vm.practitionerDashboard(this.session));
      } else {
        await this.renderAdmin(content as HTMLElement);
      }
    } catch (error) {
      this.banner(error instanceof ApiError ? error.detail : String(error));
    }
  }

  renderPatient(content: HTMLElement, view: vm.PatientDashboard) {
    content.innerHTML = "";
    const session = this.session!;

    const inbox = el("section", { id: "inbox" });
    inbox.appendChild(el("h2", {}, `Access requests (${view.inbox.length})`));
    if (!view.inbox.length) inbox.appendChild(el("p", { class: "empty" }, "No pending requests."));
    for (const grant of view.inbox) {
      const row = el("div", { class: "request", "data-grant": grant.grant_id },
        `${grant.practitioner_id} asks for ${grant.scope.join("+")} `);
      const approve = el("button", { class: "approve" }, "Approve");
      approve.addEventListener("click", () =>
        void this.action("approve", () => vm.approveRequest(session, grant)));
      const deny = el("button", { class: "deny" }, "Deny");
      deny.addEventListener("click", () =>
        void this.action("deny", () => vm.denyRequest(session, grant)));
      row.append(approve, deny);
      inbox.appendChild(row);
    }

    const grants = el("section", { id: "grants" });
    grants.appendChild(el("h2", {}, "Grants"));
    for (const grant of view.grants) {
      const row = el("div", { class: `grant ${grant.status.toLowerCase()}` },
        `${grant.practitioner_id}: ${grant.scope.join("+")} [${grant.status}] `);
      if (grant.status === "ACTIVE") {
        const revoke = el("button", {}, "Revoke");
        revoke.addEventListener("click", () =>
          void this.action("revoke", () => vm.revokeGrant(session, grant.grant_id)));
        row.appendChild(revoke);
        if (!(String(view.era) in grant.wrapped_keys)) {
          // a past revocation bumped the era; this grant cannot read new
          // records until the patient re-wraps the current key
          const rewrap = el("button", { class: "rewrap" }, "Re-wrap key");
          rewrap.addEventListener("click", () =>
            void this.action("re-wrap", () => vm.rewrapGrant(session, grant)));
          row.appendChild(rewrap);
        }
      }
      grants.appendChild(row);
    }

    const records = el("section", { id: "records" });
    records.appendChild(el("h2", {}, `My records (key era ${view.era})`));
    const recordTable = el("table");
    rows(recordTable, view.records.map((r) => [
      r.record_type, new Date(r.created_at * 1000).toISOString(), r.author_id,
      r.locked ? "🔒 locked" : r.plaintext,
    ]));
    records.appendChild(recordTable);
    const storeForm = el("form", { id: "store-form" }) as HTMLFormElement;
    storeForm.innerHTML = `
      <input name="type" placeholder="type (note, vital…)" required>
      <input name="text" placeholder="content" required>
      <button type="submit">Store encrypted</button>`;
    storeForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(storeForm);
      void this.action("store", () => vm.storeRecord(
        session, String(data.get("type")), String(data.get("text"))));
    });
    records.appendChild(storeForm);

    const messages = el("section", { id: "messages" });
    messages.appendChild(el("h2", {}, "Messages"));
    for (const message of view.messages) {
      messages.appendChild(el("div", { class: "message" },
        `${message.sender_id} @${message.sent_at}: ` +
        (message.locked ? "🔒 undecryptable" : message.plaintext)));
    }
    const msgForm = el("form", { id: "message-form" }) as HTMLFormElement;
    msgForm.innerHTML = `
      <input name="to" placeholder="practitioner id" required>
      <input name="text" placeholder="message" required>
      <button type="submit">Send encrypted</button>`;
    msgForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(msgForm);
      void this.action("message", () => vm.sendMessage(
        session, String(data.get("to")), String(data.get("text"))));
    });
    messages.appendChild(msgForm);

    const consents = el("section", { id: "consents" });
    consents.appendChild(el("h2", {}, "Consents"));
    for (const consent of view.consents) {
      const row = el("div", { class: "consent" },
        `${consent.purpose} → ${consent.grantee}: ${consent.status} `);
      if (consent.status === "ACTIVE") {
        const revoke = el("button", {}, "Revoke");
        revoke.addEventListener("click", () => void this.action("revoke consent",
          () => vm.revokeConsent(session, consent.consent_id)));
        row.appendChild(revoke);
      }
      consents.appendChild(row);
    }
    const consentForm = el("form", { id: "consent-form" }) as HTMLFormElement;
    consentForm.innerHTML = `
      <select name="purpose"><option>ANALYTICS</option><option>SHARING</option>
        <option>TREATMENT</option></select>
      <input name="grantee" placeholder="grantee or ANY-ANALYST" required>
      <button type="submit">Grant consent</button>`;
    consentForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(consentForm);
      void this.action("consent", () => vm.grantConsent(
        session, String(data.get("purpose")), String(data.get("grantee"))));
    });
    consents.appendChild(consentForm);

    const payments = el("section", { id: "payments" });
    payments.appendChild(el("h2", {}, `Payments (balance ${view.balance})`));
    const payTable = el("table");
    rows(payTable, view.payments.map((p) => [
      p.payer_id, p.payee_id, String(p.amount), p.reference, p.status,
    ]));
    payments.appendChild(payTable);
    const payForm = el("form", { id: "pay-form" }) as HTMLFormElement;
    payForm.innerHTML = `
      <input name="to" placeholder="payee" required>
      <input name="amount" type="number" min="1" step="1" required>
      <input name="ref" placeholder="reference">
      <span id="pay-error" class="inline-error">${this.payError}</span>
      <button type="submit">Pay</button>`;
    payForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(payForm);
      const amount = Number(data.get("amount"));
      if (!Number.isInteger(amount) || amount <= 0) {
        this.payError = "amount must be a positive integer";
        (payForm.querySelector("#pay-error") as HTMLElement).textContent = this.payError;
        return;
      }
      void this.action("pay", async () => {
        const result = await vm.makePayment(
          session, String(data.get("to")), amount, String(data.get("ref") || ""));
        this.payError = result.status === "VALID" ? "" : result.status;
      });
    });
    payments.appendChild(payForm);

    const audit = el("section", { id: "audit" });
    audit.appendChild(el("h2", {}, "My audit trail"));
    const auditTable = el("table");
    rows(auditTable, view.audit.map((entry) => [
      `#${entry.height}.${entry.tx_index}`, entry.contract + "." + entry.function,
      entry.creator, entry.code + (entry.error_code ? `:${entry.error_code}` : ""),
    ]));
    audit.appendChild(auditTable);

    content.append(inbox, grants, records, messages, consents, payments, audit);
  }

  renderPractitioner(content: HTMLElement, view: vm.PractitionerDashboard) {
    content.innerHTML = "";
    const session = this.session!;

    const requestSection = el("section", { id: "request" });
    requestSection.appendChild(el("h2", {}, "Request access"));
    const requestForm = el("form", { id: "request-form" }) as HTMLFormElement;
    requestForm.innerHTML = `
      <input name="patient" placeholder="patient id" required>
      <input name="scopes" value="READ,MESSAGE">
      <button type="submit">Request</button>`;
    requestForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(requestForm);
      void this.action("request", () => vm.requestAccess(
        session, String(data.get("patient")), String(data.get("scopes"))));
    });
    requestSection.appendChild(requestForm);
    requestSection.appendChild(el("p", {},
      `Pending: ${view.pendingRequests.map((g) => g.patient_id).join(", ") || "none"}`));

    const patients = el("section", { id: "patients" });
    patients.appendChild(el("h2", {}, "My patients"));
    for (const grant of view.activeGrants) {
      const row = el("div", { class: "patient-row", "data-patient": grant.patient_id },
        `${grant.patient_id} (${grant.scope.join("+")}) `);
      const viewButton = el("button", {}, "View records");
      viewButton.addEventListener("click", () => void this.action("records", async () => {
        const result = await vm.patientRecords(session, grant.patient_id);
        const target = this.root.querySelector("#patient-records") as HTMLElement;
        target.innerHTML = "";
        target.appendChild(el("h2", {}, `Records of ${grant.patient_id}`));
        if (result.denied) {
          target.appendChild(el("p", { class: "denied" }, "access denied"));
          return;
        }
        const table = el("table");
        rows(table, result.records.map((r) => [
          r.record_type, r.author_id, r.locked ? "🔒 locked" : r.plaintext,
        ]));
        target.appendChild(table);
      }));
      row.appendChild(viewButton);
      patients.appendChild(row);
    }
    patients.appendChild(el("div", { id: "patient-records" }));

    const messages = el("section", { id: "messages" });
    messages.appendChild(el("h2", {}, "Messages"));
    for (const message of view.messages) {
      messages.appendChild(el("div", { class: "message" },
        `${message.sender_id} @${message.sent_at}: ` +
        (message.locked ? "🔒 undecryptable" : message.plaintext)));
    }
    const msgForm = el("form", { id: "message-form" }) as HTMLFormElement;
    msgForm.innerHTML = `
      <input name="to" placeholder="patient id" required>
      <input name="text" placeholder="message" required>
      <button type="submit">Send encrypted</button>`;
    msgForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(msgForm);
      void this.action("message", () => vm.sendMessage(
        session, String(data.get("to")), String(data.get("text"))));
    });
    messages.appendChild(msgForm);

    const payments = el("section", { id: "payments" });
    payments.appendChild(el("h2", {}, `Payments (balance ${view.balance})`));
    const table = el("table");
    rows(table, view.payments.map((p) => [
      p.payer_id, p.payee_id, String(p.amount), p.status,
    ]));
    payments.appendChild(table);

    content.append(requestSection, patients, messages, payments);
  }

  async renderAdmin(content: HTMLElement) {
    const session = this.session!;
    const metrics = await session.gateway.metrics();
    content.innerHTML = "";
    const box = el("section", { id: "metrics" });
    box.appendChild(el("h2", {}, "Node metrics"));
    box.appendChild(el("pre", {}, JSON.stringify(metrics, null, 2)));
    const enrollForm = el("form", { id: "admin-enroll" }) as HTMLFormElement;
    enrollForm.innerHTML = `
      <h2>Enroll subject</h2>
      <input name="subject" placeholder="id" required>
      <select name="role"><option>PATIENT</option><option>PRACTITIONER</option>
        <option>ANALYST</option></select>
      <button type="submit">Enroll</button>
      <pre id="enroll-output"></pre>`;
    (enrollForm.querySelector("#enroll-output") as HTMLElement).textContent =
      this.enrollOutput;
    enrollForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(enrollForm);
      void this.action("enroll", async () => {
        const issued = await session.gateway.enroll(
          String(data.get("subject")), String(data.get("role")));
        // kept in memory for this admin session only; never persisted
        this.enrollOutput = "deliver to the subject (not stored server-side):\n" +
          JSON.stringify(issued, null, 2);
      });
    });
    content.append(box, enrollForm);
  }
}
