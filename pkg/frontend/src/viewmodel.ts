/**
 * Screen projections and user actions. Every displayed fact is computed
 * from gateway query responses plus local decryption; nothing is invented
 * client-side. Envelopes that fail to decrypt surface as locked entries,
 * never as garbled plaintext.
 */

import {
  ApiError,
  AuditEntryView,
  ConsentView,
  GrantView,
  MessageView,
  PaymentView,
  RecordView,
} from "./api.js";
import { decode, encode, fromHex, utf8, CMap } from "./canonical.js";
import * as envelope from "./envelope.js";
import { ConsoleSession } from "./session.js";

const text = new TextDecoder();

export interface DecryptedRecord extends RecordView {
  locked: boolean;
  plaintext: string;
}

export interface DecryptedMessage extends MessageView {
  locked: boolean;
  plaintext: string;
}

export interface PatientDashboard {
  inbox: GrantView[];       // PENDING requests awaiting this patient
  grants: GrantView[];      // ACTIVE / REVOKED history
  records: DecryptedRecord[];
  messages: DecryptedMessage[];
  consents: ConsentView[];
  payments: PaymentView[];
  balance: number;
  audit: AuditEntryView[];
  era: number;
}

export interface PractitionerDashboard {
  activeGrants: GrantView[];   // patients this practitioner can work with
  pendingRequests: GrantView[];
  messages: DecryptedMessage[];
  payments: PaymentView[];
  balance: number;
}

export interface PatientRecordsResult {
  denied: boolean;
  records: DecryptedRecord[];
}

async function decryptRecord(
  session: ConsoleSession,
  record: RecordView,
  keyForEra: (era: number) => Promise<Uint8Array | null>,
): Promise<DecryptedRecord> {
  try {
    const env = envelope.decodeEnvelope(fromHex(record.envelope));
    const key = await keyForEra(env.era);
    if (key === null) return { ...record, locked: true, plaintext: "" };
    const plain = await envelope.open(
      key, env, envelope.recordAad(record.patient_id, record.record_type));
    return { ...record, locked: false, plaintext: text.decode(plain) };
  } catch {
    return { ...record, locked: true, plaintext: "" };
  }
}

async function decryptMessage(
  session: ConsoleSession,
  message: MessageView,
): Promise<DecryptedMessage> {
  try {
    const other =
      message.sender_id === session.subjectId ? message.recipient_id : message.sender_id;
    const otherKey = fromHex((await session.gateway.identity(other)).public_key);
    const key = await envelope.messageKey(session.seed, otherKey);
    const env = envelope.decodeEnvelope(fromHex(message.envelope));
    const plain = await envelope.open(
      key, env,
      envelope.messageAad(message.sender_id, message.recipient_id, message.sent_at));
    return { ...message, locked: false, plaintext: text.decode(plain) };
  } catch {
    return { ...message, locked: true, plaintext: "" };
  }
}

export async function patientDashboard(session: ConsoleSession): Promise<PatientDashboard> {
  const gw = session.gateway;
  const [grants, records, messages, consents, payments, balance, audit, era] =
    await Promise.all([
      gw.grants(), gw.records(session.subjectId), gw.messages(), gw.consents(),
      gw.payments(), gw.balance(), gw.audit(session.subjectId),
      gw.era(session.subjectId),
    ]);
  const own = async (eraWanted: number) => envelope.dataKey(session.seed, eraWanted);
  return {
    inbox: grants.filter((g) => g.status === "PENDING"),
    grants: grants.filter((g) => g.status !== "PENDING"),
    records: await Promise.all(records.map((r) => decryptRecord(session, r, own))),
    messages: await Promise.all(messages.map((m) => decryptMessage(session, m))),
    consents,
    payments,
    balance: balance.balance,
    audit,
    era: era.era,
  };
}

export async function practitionerDashboard(
  session: ConsoleSession,
): Promise<PractitionerDashboard> {
  const gw = session.gateway;
  const [grants, messages, payments, balance] = await Promise.all([
    gw.grants(), gw.messages(), gw.payments(), gw.balance(),
  ]);
  return {
    activeGrants: grants.filter(
      (g) => g.practitioner_id === session.subjectId && g.status === "ACTIVE"),
    pendingRequests: grants.filter(
      (g) => g.practitioner_id === session.subjectId && g.status === "PENDING"),
    messages: await Promise.all(messages.map((m) => decryptMessage(session, m))),
    payments,
    balance: balance.balance,
  };
}

/** A practitioner's view of one patient's records, via wrapped era keys. */
export async function patientRecords(
  session: ConsoleSession,
  patientId: string,
): Promise<PatientRecordsResult> {
  let records: RecordView[];
  try {
    records = await session.gateway.records(patientId);
  } catch (error) {
    if (error instanceof ApiError && (error.status === 403 || error.status === 401)) {
      return { denied: true, records: [] };
    }
    throw error;
  }
  const grants = await session.gateway.grants();
  const wrapped: Record<string, string> = {};
  for (const grant of grants) {
    if (grant.patient_id === patientId && grant.practitioner_id === session.subjectId) {
      Object.assign(wrapped, grant.wrapped_keys);
    }
  }
  const keyForEra = async (era: number) => {
    const blob = wrapped[String(era)];
    if (!blob) return null;
    try {
      return await envelope.unwrapKey(session.seed, fromHex(blob));
    } catch {
      return null;
    }
  };
  return {
    denied: false,
    records: await Promise.all(records.map((r) => decryptRecord(session, r, keyForEra))),
  };
}

// --- actions (all locally signed submissions) --------------------------------

function expectOk(result: { status: string }, action: string) {
  if (result.status !== "VALID") {
    throw new Error(`${action} failed: ${result.status}`);
  }
  return result;
}

export async function requestAccess(
  session: ConsoleSession,
  patientId: string,
  scopes: string,
) {
  return expectOk(
    await session.submit("access", "request_access",
      [utf8(patientId), utf8(scopes)]),
    "request_access");
}

export async function approveRequest(session: ConsoleSession, grant: GrantView) {
  const era = (await session.gateway.era(session.subjectId)).era;
  const key = await envelope.dataKey(session.seed, era);
  const practitioner = await session.gateway.identity(grant.practitioner_id);
  const wrapped = await envelope.wrapKey(fromHex(practitioner.public_key), key);
  return expectOk(
    await session.submit("access", "approve_access",
      [utf8(grant.grant_id), wrapped]),
    "approve_access");
}

export async function denyRequest(session: ConsoleSession, grant: GrantView) {
  // denying a pending request is a revocation of the grant record
  return expectOk(
    await session.submit("access", "revoke_access", [utf8(grant.grant_id)]),
    "revoke_access");
}

export async function grantAccess(
  session: ConsoleSession,
  practitionerId: string,
  scopes: string,
  expiresAt = 0,
) {
  const era = (await session.gateway.era(session.subjectId)).era;
  const key = await envelope.dataKey(session.seed, era);
  const practitioner = await session.gateway.identity(practitionerId);
  const wrapped = await envelope.wrapKey(fromHex(practitioner.public_key), key);
  return expectOk(
    await session.submit("access", "grant_access",
      [utf8(practitionerId), utf8(scopes), utf8(String(expiresAt)), wrapped]),
    "grant_access");
}

export async function revokeGrant(session: ConsoleSession, grantId: string) {
  return expectOk(
    await session.submit("access", "revoke_access", [utf8(grantId)]),
    "revoke_access");
}

/** After a revocation bumps the key era, re-wrap the current era's data key
 * for a grant that should stay readable going forward. */
export async function rewrapGrant(session: ConsoleSession, grant: GrantView) {
  const era = (await session.gateway.era(session.subjectId)).era;
  const key = await envelope.dataKey(session.seed, era);
  const practitioner = await session.gateway.identity(grant.practitioner_id);
  const wrapped = await envelope.wrapKey(fromHex(practitioner.public_key), key);
  return expectOk(
    await session.submit("access", "add_wrapped_key",
      [utf8(grant.grant_id), utf8(String(era)), wrapped]),
    "add_wrapped_key");
}

export async function storeRecord(
  session: ConsoleSession,
  recordType: string,
  plaintext: string,
  metadata: Record<string, number> = {},
) {
  const era = (await session.gateway.era(session.subjectId)).era;
  const key = await envelope.dataKey(session.seed, era);
  const env = await envelope.seal(
    key, era, utf8(plaintext), envelope.recordAad(session.subjectId, recordType));
  const meta = new Map<string, number>(Object.entries(metadata));
  return expectOk(
    await session.submit("records", "store_record", [
      utf8(session.subjectId), utf8(recordType),
      envelope.encodeEnvelope(env), encode(meta),
    ]),
    "store_record");
}

/** Committed (audited) retrieval of a single record. */
export async function retrieveRecord(session: ConsoleSession, recordId: string) {
  const result = await session.submit("records", "retrieve_record", [utf8(recordId)]);
  expectOk(result, "retrieve_record");
  const record = decode(fromHex(result.response)) as CMap;
  return record;
}

export async function sendMessage(
  session: ConsoleSession,
  recipientId: string,
  plaintext: string,
) {
  const sentAt = Math.floor(Date.now() / 1000);
  const recipient = await session.gateway.identity(recipientId);
  const key = await envelope.messageKey(session.seed, fromHex(recipient.public_key));
  const env = await envelope.seal(
    key, 0, utf8(plaintext),
    envelope.messageAad(session.subjectId, recipientId, sentAt));
  return expectOk(
    await session.submit("messages", "send_message",
      [utf8(recipientId), envelope.encodeEnvelope(env)], sentAt),
    "send_message");
}

export async function makePayment(
  session: ConsoleSession,
  payeeId: string,
  amount: number,
  reference: string,
) {
  if (!Number.isInteger(amount) || amount <= 0) {
    throw new Error("amount must be a positive integer");
  }
  return session.submit("payments", "make_payment",
    [utf8(payeeId), utf8(String(amount)), utf8(reference)]);
}

export async function grantConsent(
  session: ConsoleSession,
  purpose: string,
  grantee: string,
) {
  return expectOk(
    await session.submit("consent", "grant_consent", [utf8(purpose), utf8(grantee)]),
    "grant_consent");
}

export async function revokeConsent(session: ConsoleSession, consentId: string) {
  return expectOk(
    await session.submit("consent", "revoke_consent", [utf8(consentId)]),
    "revoke_consent");
}
