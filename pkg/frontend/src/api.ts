/**
 * Thin typed client for the gateway HTTP API. Every byte-valued field
 * travels as hex. The fetch implementation is injectable so tests can
 * script the backend or capture traffic.
 */

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
    public body: unknown = null,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface SubmitBody {
  contract: string;
  function: string;
  args: string[];
  client_time: number;
  nonce: string;
  signature: string;
}

export interface SubmitResult {
  tx_id: string;
  status: string;
  response: string;
}

export interface GrantView {
  grant_id: string;
  patient_id: string;
  practitioner_id: string;
  scope: string[];
  status: string;
  expires_at: number;
  created_at: number;
  wrapped_keys: Record<string, string>;
}

export interface RecordView {
  record_id: string;
  patient_id: string;
  author_id: string;
  record_type: string;
  created_at: number;
  public_metadata: Record<string, unknown>;
  envelope: string;
}

export interface MessageView {
  message_id: string;
  sender_id: string;
  recipient_id: string;
  sent_at: number;
  envelope: string;
}

export interface PaymentView {
  payment_id: string;
  payer_id: string;
  payee_id: string;
  amount: number;
  reference: string;
  status: string;
  refunded_total: number;
  created_at: number;
}

export interface ConsentView {
  consent_id: string;
  patient_id: string;
  purpose: string;
  grantee: string;
  status: string;
  granted_at: number;
  revoked_at: number;
}

export interface AuditEntryView {
  height: number;
  tx_index: number;
  tx_id: string;
  code: string;
  error_code: string;
  contract: string;
  function: string;
  creator: string;
  patients: string[];
  logical_time: number;
}

export class Gateway {
  token = "";

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    params?: Record<string, string | number>,
  ): Promise<unknown> {
    let url = this.baseUrl + path;
    if (params && Object.keys(params).length) {
      const query = new URLSearchParams();
      for (const [key, value] of Object.entries(params)) query.set(key, String(value));
      url += "?" + query.toString();
    }
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers.authorization = `Bearer ${this.token}`;
    const response = await this.fetchImpl(url, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!response.ok && response.status !== 409) {
      const detail =
        parsed && typeof parsed === "object" && "detail" in (parsed as object)
          ? String((parsed as { detail: unknown }).detail)
          : text;
      throw new ApiError(response.status, detail, parsed);
    }
    return parsed;
  }

  health() {
    return this.request("GET", "/health") as Promise<{ ok: boolean; height: number }>;
  }

  enroll(id: string, role: string, publicKeyHex?: string) {
    const body: Record<string, string> = { id, role };
    if (publicKeyHex) body.public_key = publicKeyHex;
    return this.request("POST", "/identities", body) as Promise<{
      subject_id: string; role: string; certificate: string; private_key?: string;
    }>;
  }

  identity(subjectId: string) {
    return this.request("GET", `/identities/${subjectId}`) as Promise<{
      subject_id: string; role: string; public_key: string; certificate: string;
    }>;
  }

  loginChallenge(subjectId: string) {
    return this.request("POST", "/login/challenge", { subject_id: subjectId }) as Promise<{
      challenge: string;
    }>;
  }

  loginVerify(subjectId: string, challengeHex: string, signatureHex: string) {
    return this.request("POST", "/login/verify", {
      subject_id: subjectId,
      challenge: challengeHex,
      signature: signatureHex,
    }) as Promise<{ token: string; expires_at: number; subject_id: string; role: string }>;
  }

  submit(body: SubmitBody) {
    return this.request("POST", "/submit", body) as Promise<SubmitResult>;
  }

  records(patientId: string) {
    return this.request("GET", "/state/records", undefined, {
      patient_id: patientId,
    }) as Promise<RecordView[]>;
  }

  era(patientId: string) {
    return this.request("GET", "/state/era", undefined, {
      patient_id: patientId,
    }) as Promise<{ patient_id: string; era: number }>;
  }

  messages(since = 0) {
    return this.request("GET", "/state/messages", undefined, { since }) as Promise<
      MessageView[]
    >;
  }

  grants() {
    return this.request("GET", "/state/grants") as Promise<GrantView[]>;
  }

  consents() {
    return this.request("GET", "/state/consents") as Promise<ConsentView[]>;
  }

  payments() {
    return this.request("GET", "/state/payments") as Promise<PaymentView[]>;
  }

  balance() {
    return this.request("GET", "/state/balance") as Promise<{
      subject_id: string; balance: number;
    }>;
  }

  audit(patientId: string) {
    return this.request("GET", "/audit", undefined, {
      patient_id: patientId,
    }) as Promise<AuditEntryView[]>;
  }

  metrics() {
    return this.request("GET", "/metrics") as Promise<Record<string, unknown>>;
  }
}
