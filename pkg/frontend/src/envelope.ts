/**
 * CipherEnvelope: the authenticated-encryption container every patient
 * payload lives in on-chain. Layout matches the node byte-for-byte:
 *
 *   "TCH1" | era u64 BE | nonce_len u8 | nonce | aad_digest(32)
 *   | ct_len u32 BE | ciphertext
 */

import { cmap, concatBytes, encode, utf8 } from "./canonical.js";
import * as crypto from "./crypto.js";

const MAGIC = utf8("TCH1");
const NONCE_LEN = 12;

export interface CipherEnvelope {
  era: number;
  nonce: Uint8Array;
  ciphertext: Uint8Array;
  aadDigest: Uint8Array;
}

export function encodeEnvelope(env: CipherEnvelope): Uint8Array {
  const header = new Uint8Array(8);
  new DataView(header.buffer).setBigUint64(0, BigInt(env.era), false);
  const ctLen = new Uint8Array(4);
  new DataView(ctLen.buffer).setUint32(0, env.ciphertext.length, false);
  return concatBytes(
    MAGIC, header, new Uint8Array([env.nonce.length]), env.nonce,
    env.aadDigest, ctLen, env.ciphertext,
  );
}

export function decodeEnvelope(data: Uint8Array): CipherEnvelope {
  if (data.length < 4 || !MAGIC.every((b, i) => data[i] === b)) {
    throw new Error("missing envelope magic");
  }
  let offset = 4;
  const view = new DataView(data.buffer, data.byteOffset);
  const era = Number(view.getBigUint64(offset, false));
  offset += 8;
  const nonceLen = data[offset++];
  if (nonceLen < NONCE_LEN) throw new Error("nonce too short");
  const nonce = data.slice(offset, offset + nonceLen);
  offset += nonceLen;
  const aadDigest = data.slice(offset, offset + 32);
  offset += 32;
  const ctLen = view.getUint32(offset, false);
  offset += 4;
  const ciphertext = data.slice(offset, offset + ctLen);
  if (ciphertext.length !== ctLen || offset + ctLen !== data.length) {
    throw new Error("ciphertext length mismatch");
  }
  return { era, nonce, ciphertext, aadDigest };
}

export function recordAad(patientId: string, recordType: string): Uint8Array {
  return encode(cmap({ patient: patientId, type: recordType }));
}

export function messageAad(
  senderId: string,
  recipientId: string,
  sentAt: number,
): Uint8Array {
  return encode(cmap({ sender: senderId, recipient: recipientId, sent_at: sentAt }));
}

export async function dataKey(seed: Uint8Array, era: number): Promise<Uint8Array> {
  const info = new Uint8Array(8 + 12);
  info.set(utf8("tch-data-key"), 0);
  new DataView(info.buffer).setBigUint64(12, BigInt(era), false);
  return crypto.hkdf(seed, info);
}

function boundAad(aadDigest: Uint8Array, era: number): Uint8Array {
  // the era travels in the clear but is authenticated
  const eraBytes = new Uint8Array(8);
  new DataView(eraBytes.buffer).setBigUint64(0, BigInt(era), false);
  return concatBytes(aadDigest, eraBytes);
}

export async function seal(
  key: Uint8Array,
  era: number,
  plaintext: Uint8Array,
  aadMeta: Uint8Array,
): Promise<CipherEnvelope> {
  const nonce = crypto.randomBytes(NONCE_LEN);
  const aadDigest = await crypto.sha256(aadMeta);
  const ciphertext = await crypto.aeadEncrypt(
    key, nonce, plaintext, boundAad(aadDigest, era));
  return { era, nonce, ciphertext, aadDigest };
}

export async function open(
  key: Uint8Array,
  env: CipherEnvelope,
  aadMeta: Uint8Array,
): Promise<Uint8Array> {
  const aadDigest = await crypto.sha256(aadMeta);
  if (!aadDigest.every((b, i) => env.aadDigest[i] === b)) {
    throw new Error("associated metadata mismatch");
  }
  return crypto.aeadDecrypt(key, env.nonce, env.ciphertext,
    boundAad(aadDigest, env.era));
}

export const wrapKey = crypto.sealToPublic;
export const unwrapKey = crypto.openSealed;
export const messageKey = crypto.pairKey;
