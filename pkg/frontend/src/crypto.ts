/**
 * WebCrypto-backed primitives matching the node's byte formats exactly:
 * Ed25519 signatures, the Ed25519->X25519 conversion, HKDF-SHA256 key
 * derivation, AES-256-GCM, sealed boxes, and the static pair key.
 */

import { compareBytes, concatBytes, utf8 } from "./canonical.js";

const subtle = globalThis.crypto.subtle;

// DER/PKCS8 prefixes for importing raw 32-byte private keys
const ED25519_PKCS8_PREFIX = new Uint8Array([
  0x30, 0x2e, 0x02, 0x01, 0x00, 0x30, 0x05, 0x06, 0x03, 0x2b, 0x65, 0x70,
  0x04, 0x22, 0x04, 0x20,
]);
const X25519_PKCS8_PREFIX = new Uint8Array([
  0x30, 0x2e, 0x02, 0x01, 0x00, 0x30, 0x05, 0x06, 0x03, 0x2b, 0x65, 0x6e,
  0x04, 0x22, 0x04, 0x20,
]);

export function randomBytes(length: number): Uint8Array {
  const out = new Uint8Array(length);
  globalThis.crypto.getRandomValues(out);
  return out;
}

export async function sha256(data: Uint8Array): Promise<Uint8Array> {
  return new Uint8Array(await subtle.digest("SHA-256", data as BufferSource));
}

export async function sha512(data: Uint8Array): Promise<Uint8Array> {
  return new Uint8Array(await subtle.digest("SHA-512", data as BufferSource));
}

export async function hkdf(
  ikm: Uint8Array,
  info: Uint8Array,
  length = 32,
): Promise<Uint8Array> {
  const key = await subtle.importKey("raw", ikm as BufferSource, "HKDF", false, [
    "deriveBits",
  ]);
  // 32 zero bytes = the RFC 5869 default salt for SHA-256
  const bits = await subtle.deriveBits(
    { name: "HKDF", hash: "SHA-256", salt: new Uint8Array(32), info: info as BufferSource },
    key,
    length * 8,
  );
  return new Uint8Array(bits);
}

// --- Ed25519 ---------------------------------------------------------------

async function importSigningKey(seed: Uint8Array): Promise<CryptoKey> {
  return subtle.importKey(
    "pkcs8",
    concatBytes(ED25519_PKCS8_PREFIX, seed) as BufferSource,
    "Ed25519",
    true,
    ["sign"],
  );
}

export async function publicKeyFromSeed(seed: Uint8Array): Promise<Uint8Array> {
  const priv = await importSigningKey(seed);
  const jwk = await subtle.exportKey("jwk", priv);
  // the JWK "x" member is the base64url raw public key
  const b64 = (jwk.x as string).replace(/-/g, "+").replace(/_/g, "/");
  const raw = atob(b64 + "=".repeat((4 - (b64.length % 4)) % 4));
  return Uint8Array.from(raw, (c) => c.charCodeAt(0));
}

export async function sign(seed: Uint8Array, message: Uint8Array): Promise<Uint8Array> {
  const key = await importSigningKey(seed);
  return new Uint8Array(await subtle.sign("Ed25519", key, message as BufferSource));
}

export async function verify(
  publicKey: Uint8Array,
  message: Uint8Array,
  signature: Uint8Array,
): Promise<boolean> {
  try {
    const key = await subtle.importKey("raw", publicKey as BufferSource, "Ed25519", false, [
      "verify",
    ]);
    return await subtle.verify("Ed25519", key, signature as BufferSource, message as BufferSource);
  } catch {
    return false;
  }
}

// --- Ed25519 -> X25519 conversion (birational map, matches libsodium) -------

const P = (1n << 255n) - 19n;

function bytesToBigIntLE(data: Uint8Array): bigint {
  let value = 0n;
  for (let i = data.length - 1; i >= 0; i--) {
    value = (value << 8n) | BigInt(data[i]);
  }
  return value;
}

function bigIntToBytesLE(value: bigint, length: number): Uint8Array {
  const out = new Uint8Array(length);
  for (let i = 0; i < length; i++) {
    out[i] = Number(value & 0xffn);
    value >>= 8n;
  }
  return out;
}

function modPow(base: bigint, exp: bigint, mod: bigint): bigint {
  let result = 1n;
  base %= mod;
  while (exp > 0n) {
    if (exp & 1n) result = (result * base) % mod;
    base = (base * base) % mod;
    exp >>= 1n;
  }
  return result;
}

export function ed25519PublicToX25519(edPublic: Uint8Array): Uint8Array {
  if (edPublic.length !== 32) throw new Error("ed25519 public key must be 32 bytes");
  const y = bytesToBigIntLE(edPublic) & ((1n << 255n) - 1n);
  if (y >= P) throw new Error("point out of field range");
  const denom = (1n - y + P) % P;
  if (denom === 0n) throw new Error("degenerate point");
  const u = ((1n + y) * modPow(denom, P - 2n, P)) % P;
  return bigIntToBytesLE(u, 32);
}

export async function ed25519SeedToX25519(seed: Uint8Array): Promise<Uint8Array> {
  const h = (await sha512(seed)).slice(0, 32);
  h[0] &= 248;
  h[31] &= 127;
  h[31] |= 64;
  return h;
}

async function importXPrivate(scalar: Uint8Array): Promise<CryptoKey> {
  return subtle.importKey(
    "pkcs8",
    concatBytes(X25519_PKCS8_PREFIX, scalar) as BufferSource,
    { name: "X25519" },
    true,
    ["deriveBits"],
  );
}

export async function x25519PublicFromScalar(scalar: Uint8Array): Promise<Uint8Array> {
  const priv = await importXPrivate(scalar);
  const jwk = await subtle.exportKey("jwk", priv);
  const b64 = (jwk.x as string).replace(/-/g, "+").replace(/_/g, "/");
  const raw = atob(b64 + "=".repeat((4 - (b64.length % 4)) % 4));
  return Uint8Array.from(raw, (c) => c.charCodeAt(0));
}

export async function x25519Shared(
  myScalar: Uint8Array,
  theirPublic: Uint8Array,
): Promise<Uint8Array> {
  const priv = await importXPrivate(myScalar);
  const pub = await subtle.importKey("raw", theirPublic as BufferSource, { name: "X25519" },
    false, []);
  const bits = await subtle.deriveBits({ name: "X25519", public: pub }, priv, 256);
  return new Uint8Array(bits);
}

// --- AES-256-GCM --------------------------------------------------------------

export async function aeadEncrypt(
  key: Uint8Array,
  nonce: Uint8Array,
  plaintext: Uint8Array,
  aad: Uint8Array,
): Promise<Uint8Array> {
  const k = await subtle.importKey("raw", key as BufferSource, "AES-GCM", false, ["encrypt"]);
  const ct = await subtle.encrypt(
    { name: "AES-GCM", iv: nonce as BufferSource, additionalData: aad as BufferSource },
    k,
    plaintext as BufferSource,
  );
  return new Uint8Array(ct);
}

export async function aeadDecrypt(
  key: Uint8Array,
  nonce: Uint8Array,
  ciphertext: Uint8Array,
  aad: Uint8Array,
): Promise<Uint8Array> {
  const k = await subtle.importKey("raw", key as BufferSource, "AES-GCM", false, ["decrypt"]);
  const pt = await subtle.decrypt(
    { name: "AES-GCM", iv: nonce as BufferSource, additionalData: aad as BufferSource },
    k,
    ciphertext as BufferSource,
  );
  return new Uint8Array(pt);
}

// --- key wrapping ---------------------------------------------------------------

export async function sealToPublic(
  recipientEdPublic: Uint8Array,
  plaintext: Uint8Array,
): Promise<Uint8Array> {
  const ephSeed = randomBytes(32);
  // any 32 bytes are a valid X25519 scalar (clamped on use)
  const ephPub = await x25519PublicFromScalar(ephSeed);
  const recipX = ed25519PublicToX25519(recipientEdPublic);
  const shared = await x25519Shared(ephSeed, recipX);
  const key = await hkdf(shared, concatBytes(utf8("tch-seal"), ephPub, recipX));
  const nonce = await hkdf(shared, concatBytes(utf8("tch-seal-nonce"), ephPub, recipX), 12);
  return concatBytes(ephPub, await aeadEncrypt(key, nonce, plaintext, new Uint8Array(0)));
}

export async function openSealed(
  recipientSeed: Uint8Array,
  blob: Uint8Array,
): Promise<Uint8Array> {
  if (blob.length < 48) throw new Error("sealed blob too short");
  const ephPub = blob.slice(0, 32);
  const ciphertext = blob.slice(32);
  const myScalar = await ed25519SeedToX25519(recipientSeed);
  const myXPub = await x25519PublicFromScalar(myScalar);
  const shared = await x25519Shared(myScalar, ephPub);
  const key = await hkdf(shared, concatBytes(utf8("tch-seal"), ephPub, myXPub));
  const nonce = await hkdf(shared, concatBytes(utf8("tch-seal-nonce"), ephPub, myXPub), 12);
  return aeadDecrypt(key, nonce, ciphertext, new Uint8Array(0));
}

export async function pairKey(
  mySeed: Uint8Array,
  theirEdPublic: Uint8Array,
): Promise<Uint8Array> {
  const myScalar = await ed25519SeedToX25519(mySeed);
  const myXPub = await x25519PublicFromScalar(myScalar);
  const theirX = ed25519PublicToX25519(theirEdPublic);
  const shared = await x25519Shared(myScalar, theirX);
  const [lo, hi] = compareBytes(myXPub, theirX) <= 0 ? [myXPub, theirX] : [theirX, myXPub];
  return hkdf(shared, concatBytes(utf8("tch-pair"), lo, hi));
}
