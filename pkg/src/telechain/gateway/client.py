"""Client-side helpers: local signing, envelope crypto, HTTP access.

This is the code a user-facing tool runs: it keeps the private seed, builds
and signs proposals locally, encrypts payloads before they leave the
machine, and decrypts what comes back.  The gateway only ever sees
ciphertext and signatures.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import httpx

from .. import crypto, envelope
from ..errors import ClientError, TelechainError
from ..identity import Certificate
from ..ledger.blocks import proposal_payload_bytes


@dataclass
class ClientKeys:
    seed: bytes
    certificate: Certificate

    @property
    def subject_id(self) -> str:
        return self.certificate.subject_id

    def sign_login(self, challenge: bytes) -> bytes:
        return crypto.sign(self.seed, b"tch-login" + challenge)

    def signed_submission(self, contract: str, function: str, args: Sequence[bytes],
                          client_time: int = 0, nonce: Optional[bytes] = None) -> dict:
        nonce = nonce if nonce is not None else os.urandom(16)
        payload = proposal_payload_bytes(contract, function, tuple(args),
                                         self.certificate, client_time, nonce)
        signature = crypto.sign(self.seed, payload)
        return {
            "contract": contract,
            "function": function,
            "args": [a.hex() for a in args],
            "client_time": client_time,
            "nonce": nonce.hex(),
            "signature": signature.hex(),
        }

    # --- payload crypto -------------------------------------------------------

    def data_key(self, era: int) -> bytes:
        return envelope.data_key(self.seed, era)

    def seal_record(self, era: int, plaintext: bytes, record_type: str) -> bytes:
        key = self.data_key(era)
        aad = envelope.record_aad(self.subject_id, record_type)
        return envelope.seal(key, era, plaintext, aad).encode()

    def open_record(self, key: bytes, envelope_raw: bytes, patient_id: str,
                    record_type: str) -> bytes:
        env = envelope.CipherEnvelope.decode(envelope_raw)
        return envelope.open_envelope(key, env, envelope.record_aad(patient_id, record_type))

    def wrap_data_key(self, era: int, recipient_public: bytes) -> bytes:
        return envelope.wrap_key(recipient_public, self.data_key(era))

    def unwrap_data_key(self, wrapped: bytes) -> bytes:
        return envelope.unwrap_key(self.seed, wrapped)

    def seal_message(self, recipient_public: bytes, recipient_id: str,
                     plaintext: bytes, sent_at: int) -> bytes:
        key = envelope.message_key(self.seed, recipient_public)
        aad = envelope.message_aad(self.subject_id, recipient_id, sent_at)
        return envelope.seal(key, 0, plaintext, aad).encode()

    def open_message(self, sender_public: bytes, sender_id: str, envelope_raw: bytes,
                     sent_at: int) -> bytes:
        key = envelope.message_key(self.seed, sender_public)
        env = envelope.CipherEnvelope.decode(envelope_raw)
        aad = envelope.message_aad(sender_id, self.subject_id, sent_at)
        return envelope.open_envelope(key, env, aad)


class GatewayClient:
    """Thin HTTP wrapper; raises ClientError(NETWORK) when unreachable."""

    def __init__(self, base_url: str, token: str = "", timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self._http = httpx.Client(base_url=self.base_url, timeout=timeout)

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            return self._http.request(method, path, headers=self._headers(), **kwargs)
        except httpx.HTTPError as exc:
            raise ClientError("NETWORK", f"{method} {path}: {exc}") from None

    def check(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json()
            except Exception:
                detail = response.text
            raise ClientError("HTTP_%d" % response.status_code, str(detail))
        return response.json()

    # --- flows ------------------------------------------------------------------

    def login(self, keys: ClientKeys) -> str:
        challenge = self.check(self.request(
            "POST", "/login/challenge", json={"subject_id": keys.subject_id}))
        signature = keys.sign_login(bytes.fromhex(challenge["challenge"]))
        result = self.check(self.request("POST", "/login/verify", json={
            "subject_id": keys.subject_id,
            "challenge": challenge["challenge"],
            "signature": signature.hex(),
        }))
        self.token = result["token"]
        return self.token

    def enroll(self, subject_id: str, role: str,
               public_key: Optional[bytes] = None) -> dict:
        body = {"id": subject_id, "role": role}
        if public_key is not None:
            body["public_key"] = public_key.hex()
        return self.check(self.request("POST", "/identities", json=body))

    def identity(self, subject_id: str) -> dict:
        return self.check(self.request("GET", f"/identities/{subject_id}"))

    def submit(self, keys: ClientKeys, contract: str, function: str,
               args: Sequence[bytes], client_time: int = 0) -> dict:
        body = keys.signed_submission(contract, function, args, client_time)
        response = self.request("POST", "/submit", json=body)
        if response.status_code == 409:
            return response.json()  # committed but not VALID; caller inspects status
        return self.check(response)

    def get(self, path: str, **params) -> dict | list:
        return self.check(self.request("GET", path, params=params))

    def close(self) -> None:
        self._http.close()


def load_keys(path: str) -> ClientKeys:
    """Key file: line 1 = seed hex, line 2 = certificate hex line."""
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 2:
        raise TelechainError("BAD_KEYFILE", f"{path} needs seed and certificate lines")
    return ClientKeys(seed=bytes.fromhex(lines[0]),
                      certificate=Certificate.from_hex_line(lines[1]))


def save_keys(path: str, seed: bytes, certificate_hex: str) -> None:
    with open(path, "w") as fh:
        fh.write(seed.hex() + "\n" + certificate_hex + "\n")
    os.chmod(path, 0o600)
