/**
 * End-to-end against a real gateway: enroll patient + practitioner,
 * request -> approve -> store -> retrieve -> message -> pay -> audit.
 * Every screen is checked against the gateway query oracle, a denied
 * practitioner sees locked/denied state only, and the captured network
 * traffic over the whole flow contains zero private-key bytes.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

import { Gateway, FetchLike } from "../src/api.js";
import { CMap, fromHex, toHex, utf8 } from "../src/canonical.js";
import { ConsoleSession } from "../src/session.js";
import * as vm from "../src/viewmodel.js";

const PORT = 8500 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let home: string;
const capturedTraffic: string[] = [];

/** every request body and URL the console sends, for the custody scan */
const capturingFetch: FetchLike = async (input, init) => {
  capturedTraffic.push(String(input));
  if (init?.body) capturedTraffic.push(String(init.body));
  if (init?.headers) capturedTraffic.push(JSON.stringify(init.headers));
  return globalThis.fetch(input, init);
};

function gateway(): Gateway {
  return new Gateway(BASE, capturingFetch);
}

async function waitForHealth(timeoutMs = 60_000) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("gateway did not come up");
}

beforeAll(async () => {
  home = mkdtempSync(join(tmpdir(), "tch-e2e-"));
  server = spawn(
    "python3", ["-m", "telechain.cli", "serve", "--home", home,
      "--port", String(PORT), "--seed", "424242"],
    { stdio: ["ignore", "pipe", "pipe"], cwd: REPO_ROOT },
  );
  server.stderr?.on("data", (chunk) => process.stderr.write(chunk));
  await waitForHealth();
});

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("console end-to-end against a live gateway", () => {
  let admin: ConsoleSession;
  let alice: ConsoleSession;
  let drBob: ConsoleSession;
  let drEve: ConsoleSession;
  let recordId = "";

  it("admin logs in with the operator key file", async () => {
    const keyFile = readFileSync(join(home, "admin.key"), "utf8").trim().split("\n");
    admin = await ConsoleSession.login(gateway(), "admin", fromHex(keyFile[0]));
    expect(admin.role).toBe("ADMIN");
  });

  it("enrolls patient and practitioners with locally generated keys", async () => {
    alice = await ConsoleSession.enroll(admin.gateway, gateway(), "alice", "PATIENT");
    drBob = await ConsoleSession.enroll(admin.gateway, gateway(), "dr-bob", "PRACTITIONER");
    drEve = await ConsoleSession.enroll(admin.gateway, gateway(), "dr-eve", "PRACTITIONER");
    expect(alice.role).toBe("PATIENT");
    expect(drBob.role).toBe("PRACTITIONER");
    // oracle: the gateway published the exact public keys we generated
    const identity = await alice.gateway.identity("alice");
    expect(identity.certificate).toBe(alice.certificateHex);
  });

  it("request -> inbox -> approve activates the grant with a wrapped key", async () => {
    await vm.requestAccess(drBob, "alice", "READ,MESSAGE");
    let dashboard = await vm.patientDashboard(alice);
    expect(dashboard.inbox.map((g) => g.practitioner_id)).toEqual(["dr-bob"]);

    await vm.approveRequest(alice, dashboard.inbox[0]);
    dashboard = await vm.patientDashboard(alice);
    expect(dashboard.inbox).toEqual([]);
    const grant = dashboard.grants.find((g) => g.practitioner_id === "dr-bob");
    expect(grant?.status).toBe("ACTIVE");
    expect(Object.keys(grant!.wrapped_keys)).toContain("0");
    // oracle: the same grant comes back from the raw query surface
    const raw = await alice.gateway.grants();
    expect(raw.find((g) => g.grant_id === grant!.grant_id)?.status).toBe("ACTIVE");
  });

  it("patient stores an encrypted record and sees it decrypted", async () => {
    await vm.storeRecord(alice, "vital", "bp 120/80", { heart_rate: 72 });
    const dashboard = await vm.patientDashboard(alice);
    expect(dashboard.records).toHaveLength(1);
    expect(dashboard.records[0].locked).toBe(false);
    expect(dashboard.records[0].plaintext).toBe("bp 120/80");
    recordId = dashboard.records[0].record_id;
    // oracle: raw record list has the same single envelope, and it is ciphertext
    const raw = await alice.gateway.records("alice");
    expect(raw).toHaveLength(1);
    expect(raw[0].record_id).toBe(recordId);
    expect(raw[0].envelope).not.toContain(toHex(utf8("bp 120/80")));
  });

  it("granted practitioner retrieves and decrypts; the retrieval is audited", async () => {
    const view = await vm.patientRecords(drBob, "alice");
    expect(view.denied).toBe(false);
    expect(view.records[0].locked).toBe(false);
    expect(view.records[0].plaintext).toBe("bp 120/80");
    // the committed (audited) retrieval path returns the same envelope
    const record = await vm.retrieveRecord(drBob, recordId);
    expect(toHex((record as CMap).get("envelope") as Uint8Array))
      .toBe((await alice.gateway.records("alice"))[0].envelope);
  });

  it("denied practitioner sees locked/denied state, never plaintext", async () => {
    const view = await vm.patientRecords(drEve, "alice");
    expect(view.denied).toBe(true);
    expect(view.records).toEqual([]);
    // a direct committed attempt is denied and lands on the audit trail
    const attempt = await drEve.submit("records", "retrieve_record", [utf8(recordId)]);
    expect(attempt.status).toBe("CONTRACT_ERROR:ACCESS_DENIED");
  });

  it("messages flow both ways, decrypted with the pair key", async () => {
    await vm.sendMessage(drBob, "alice", "please rest");
    const patientView = await vm.patientDashboard(alice);
    expect(patientView.messages.map((m) => m.plaintext)).toContain("please rest");

    await vm.sendMessage(alice, "dr-bob", "thank you");
    const practitionerView = await vm.practitionerDashboard(drBob);
    expect(practitionerView.messages.map((m) => m.plaintext)).toContain("thank you");
  });

  it("payment updates history and balance per the gateway oracle", async () => {
    await admin.submit("payments", "credit_account", [utf8("alice"), utf8("100")]);
    const result = await vm.makePayment(alice, "dr-bob", 30, "consult");
    expect(result.status).toBe("VALID");
    const dashboard = await vm.patientDashboard(alice);
    expect(dashboard.balance).toBe(70);
    expect(dashboard.payments[0].status).toBe("COMPLETED");
    expect(dashboard.payments[0].amount).toBe(30);
    const oracle = await alice.gateway.balance();
    expect(dashboard.balance).toBe(oracle.balance);
    // overspend shows a non-VALID status for inline display, never throws
    const overspend = await vm.makePayment(alice, "dr-bob", 100000, "too much");
    expect(overspend.status).toBe("CONTRACT_ERROR:INSUFFICIENT_FUNDS");
  });

  it("refund flips the payment row to REFUNDED on refresh", async () => {
    const before = await vm.patientDashboard(alice);
    const paid = before.payments.find((p) => p.status === "COMPLETED");
    expect(paid).toBeDefined();
    // the other party refunds from their own session
    const result = await drBob.submit("payments", "refund_payment",
      [utf8(paid!.payment_id), utf8(String(paid!.amount))]);
    expect(result.status).toBe("VALID");
    const after = await vm.patientDashboard(alice);
    const row = after.payments.find((p) => p.payment_id === paid!.payment_id);
    expect(row?.status).toBe("REFUNDED");
    expect(after.balance).toBe(before.balance + paid!.amount);
  });

  it("client-side validation blocks non-positive amounts before any request", async () => {
    await expect(vm.makePayment(alice, "dr-bob", 0, "zero")).rejects.toThrow(/positive/);
    await expect(vm.makePayment(alice, "dr-bob", 2.5, "frac")).rejects.toThrow(/integer/);
  });

  it("audit feed shows the whole story including the denied attempt", async () => {
    const dashboard = await vm.patientDashboard(alice);
    const functions = dashboard.audit.map((e) => `${e.function}:${e.code}`);
    expect(functions).toContain("store_record:VALID");
    expect(functions).toContain("approve_access:VALID");
    expect(functions).toContain("send_message:VALID");
    expect(functions).toContain("make_payment:VALID");
    expect(functions).toContain("retrieve_record:CONTRACT_ERROR");
    const denied = dashboard.audit.find(
      (e) => e.function === "retrieve_record" && e.creator === "dr-eve");
    expect(denied?.error_code).toBe("ACCESS_DENIED");
    // oracle: identical to the raw audit endpoint
    expect(dashboard.audit).toEqual(await alice.gateway.audit("alice"));
  });

  it("revocation bumps the era; re-wrapping restores forward readability", async () => {
    // a second practitioner gets a direct grant at the current era
    await vm.grantAccess(alice, "dr-eve", "READ");
    let eveView = await vm.patientRecords(drEve, "alice");
    expect(eveView.denied).toBe(false);
    expect(eveView.records.every((r) => !r.locked)).toBe(true);

    // revoking dr-bob's grant bumps alice's key era
    const dashboard = await vm.patientDashboard(alice);
    const bobGrant = dashboard.grants.find(
      (g) => g.practitioner_id === "dr-bob" && g.status === "ACTIVE");
    await vm.revokeGrant(alice, bobGrant!.grant_id);
    expect((await alice.gateway.era("alice")).era).toBe(1);
    const bobView = await vm.patientRecords(drBob, "alice");
    expect(bobView.denied).toBe(true);

    // a new record under era 1 is locked for dr-eve (only era 0 was wrapped)
    await vm.storeRecord(alice, "note", "post-revocation note");
    eveView = await vm.patientRecords(drEve, "alice");
    const byType = Object.fromEntries(eveView.records.map((r) => [r.record_type, r]));
    expect(byType.vital.locked).toBe(false);   // old era stays readable
    expect(byType.note.locked).toBe(true);     // new era not yet shared

    // the patient re-wraps the current era for dr-eve's surviving grant
    const refreshed = await vm.patientDashboard(alice);
    const eveGrant = refreshed.grants.find(
      (g) => g.practitioner_id === "dr-eve" && g.status === "ACTIVE");
    expect("1" in eveGrant!.wrapped_keys).toBe(false);
    await vm.rewrapGrant(alice, eveGrant!);
    eveView = await vm.patientRecords(drEve, "alice");
    expect(eveView.records.every((r) => !r.locked)).toBe(true);
    expect(eveView.records.map((r) => r.plaintext)).toContain("post-revocation note");
  });

  it("captured traffic over the full flow contains zero private-key bytes", () => {
    const seeds = [alice, drBob, drEve, admin].map((s) => toHex(s.seed));
    const traffic = capturedTraffic.join("\n");
    expect(capturedTraffic.length).toBeGreaterThan(30);
    for (const seed of seeds) {
      expect(traffic).not.toContain(seed);
      expect(traffic).not.toContain(seed.toUpperCase());
    }
  });
});
