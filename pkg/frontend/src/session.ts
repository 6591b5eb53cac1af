/**
 * Console sessions: local key generation, challenge login, and local
 * proposal signing. The private seed lives in browser storage only; every
 * network request carries signatures and ciphertext, never the seed.
 */

import { Gateway, SubmitResult } from "./api.js";
import { cmap, encode, fromHex, toHex, utf8, concatBytes } from "./canonical.js";
import * as crypto from "./crypto.js";

const STORAGE_PREFIX = "telechain:key:";

function keyStore(): Storage | null {
  try {
    return typeof localStorage === "undefined" ? null : localStorage;
  } catch {
    return null;
  }
}

export class ConsoleSession {
  constructor(
    public gateway: Gateway,
    public subjectId: string,
    public role: string,
    public seed: Uint8Array,
    public certificateHex: string,
  ) {}

  /** Generate keys locally, register the public key, then challenge-login. */
  static async enroll(
    adminGateway: Gateway,
    gateway: Gateway,
    subjectId: string,
    role: string,
  ): Promise<ConsoleSession> {
    const seed = crypto.randomBytes(32);
    const publicKey = await crypto.publicKeyFromSeed(seed);
    const issued = await adminGateway.enroll(subjectId, role, toHex(publicKey));
    keyStore()?.setItem(STORAGE_PREFIX + subjectId, toHex(seed));
    return ConsoleSession.login(gateway, subjectId, seed, issued.certificate);
  }

  static async login(
    gateway: Gateway,
    subjectId: string,
    seed?: Uint8Array,
    certificateHex?: string,
  ): Promise<ConsoleSession> {
    if (!seed) {
      const stored = keyStore()?.getItem(STORAGE_PREFIX + subjectId);
      if (!stored) throw new Error(`no stored key for ${subjectId}`);
      seed = fromHex(stored);
    }
    const { challenge } = await gateway.loginChallenge(subjectId);
    const signature = await crypto.sign(
      seed,
      concatBytes(utf8("tch-login"), fromHex(challenge)),
    );
    const result = await gateway.loginVerify(subjectId, challenge, toHex(signature));
    gateway.token = result.token;
    if (!certificateHex) {
      certificateHex = (await gateway.identity(subjectId)).certificate;
    }
    return new ConsoleSession(gateway, subjectId, result.role, seed, certificateHex);
  }

  /** Build, locally sign, and submit one contract invocation. */
  async submit(
    contract: string,
    fn: string,
    args: Uint8Array[],
    clientTime?: number,
  ): Promise<SubmitResult> {
    const time = clientTime ?? Math.floor(Date.now() / 1000);
    const nonce = crypto.randomBytes(16);
    const payload = encode(
      cmap({
        args: args,
        client_time: time,
        contract,
        creator: fromHex(this.certificateHex),
        function: fn,
        nonce,
      }),
    );
    const signature = await crypto.sign(this.seed, payload);
    return this.gateway.submit({
      contract,
      function: fn,
      args: args.map(toHex),
      client_time: time,
      nonce: toHex(nonce),
      signature: toHex(signature),
    });
  }

  logout() {
    this.gateway.token = "";
  }
}
