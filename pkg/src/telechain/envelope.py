"""Authenticated-encryption envelopes for every patient payload on chain.

The chain stores ciphertext only.  Envelope layout (fixed, self-describing):

    magic "TCH1" | era u64 BE | nonce_len u8 | nonce | aad_digest (32)
    | ct_len u32 BE | ciphertext (AES-256-GCM output incl. tag)

``aad_digest`` is the SHA-256 of the canonical associated metadata and is
bound into the AEAD, so an envelope cannot be replayed under different
metadata.

Client-side key schedule (nothing here ever reaches the ledger):

    data key for era e   = HKDF(identity seed, "tch-data-key" || e)
    wrapped key to peer  = sealed box to the recipient's identity key
    message key for pair = static-static X25519 between the two identities
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import canonical, crypto
from .errors import TelechainError

MAGIC = b"TCH1"
MIN_NONCE = 12


@dataclass(frozen=True)
class CipherEnvelope:
    era: int
    nonce: bytes
    ciphertext: bytes
    aad_digest: bytes

    def encode(self) -> bytes:
        if len(self.nonce) < MIN_NONCE or len(self.nonce) > 255:
            raise TelechainError("MALFORMED_ENVELOPE", "nonce length out of range")
        if len(self.aad_digest) != 32:
            raise TelechainError("MALFORMED_ENVELOPE", "aad digest must be 32 bytes")
        return b"".join([
            MAGIC,
            self.era.to_bytes(8, "big"),
            bytes([len(self.nonce)]),
            self.nonce,
            self.aad_digest,
            len(self.ciphertext).to_bytes(4, "big"),
            self.ciphertext,
        ])

    @classmethod
    def decode(cls, data: bytes) -> "CipherEnvelope":
        if len(data) < 4 or data[:4] != MAGIC:
            raise TelechainError("MALFORMED_ENVELOPE", "missing magic tag")
        offset = 4
        if len(data) < offset + 9:
            raise TelechainError("MALFORMED_ENVELOPE", "truncated header")
        era = int.from_bytes(data[offset:offset + 8], "big")
        offset += 8
        nonce_len = data[offset]
        offset += 1
        if nonce_len < MIN_NONCE:
            raise TelechainError("MALFORMED_ENVELOPE", "nonce too short")
        if len(data) < offset + nonce_len + 32 + 4:
            raise TelechainError("MALFORMED_ENVELOPE", "truncated body")
        nonce = data[offset:offset + nonce_len]
        offset += nonce_len
        aad_digest = data[offset:offset + 32]
        offset += 32
        ct_len = int.from_bytes(data[offset:offset + 4], "big")
        offset += 4
        ciphertext = data[offset:offset + ct_len]
        if len(ciphertext) != ct_len or offset + ct_len != len(data):
            raise TelechainError("MALFORMED_ENVELOPE", "ciphertext length mismatch")
        if ct_len < 16:
            raise TelechainError("MALFORMED_ENVELOPE", "ciphertext shorter than a GCM tag")
        return cls(era=era, nonce=nonce, ciphertext=ciphertext, aad_digest=aad_digest)


def is_envelope(data: bytes) -> bool:
    try:
        CipherEnvelope.decode(data)
        return True
    except TelechainError:
        return False


def _bound_aad(aad_digest: bytes, era: int) -> bytes:
    # the era travels in the clear but is authenticated, so a flipped era
    # field fails decryption even when the key is known out-of-band
    return aad_digest + era.to_bytes(8, "big")


def seal(key: bytes, era: int, plaintext: bytes, aad_meta: bytes,
         rng: random.Random | None = None) -> CipherEnvelope:
    nonce = crypto.generate_seed(rng)[:MIN_NONCE]
    aad_digest = crypto.sha256(aad_meta)
    ciphertext = crypto.aead_encrypt(key, nonce, plaintext, _bound_aad(aad_digest, era))
    return CipherEnvelope(era=era, nonce=nonce, ciphertext=ciphertext, aad_digest=aad_digest)


def open_envelope(key: bytes, envelope: CipherEnvelope, aad_meta: bytes) -> bytes:
    """Raises TelechainError(DECRYPT_FAILED) on wrong key, tamper, or
    metadata that does not match the bound digest."""
    aad_digest = crypto.sha256(aad_meta)
    if aad_digest != envelope.aad_digest:
        raise TelechainError("DECRYPT_FAILED", "associated metadata mismatch")
    return crypto.aead_decrypt(key, envelope.nonce, envelope.ciphertext,
                               _bound_aad(aad_digest, envelope.era))


# --- client key schedule -----------------------------------------------------

def data_key(identity_seed: bytes, era: int) -> bytes:
    return crypto.hkdf(identity_seed, b"tch-data-key" + era.to_bytes(8, "big"))


def wrap_key(recipient_public_key: bytes, key: bytes,
             rng: random.Random | None = None) -> bytes:
    return crypto.seal_to_public(recipient_public_key, key, rng)


def unwrap_key(recipient_seed: bytes, wrapped: bytes) -> bytes:
    return crypto.open_sealed(recipient_seed, wrapped)


def message_key(my_seed: bytes, their_public_key: bytes) -> bytes:
    return crypto.pair_key(my_seed, their_public_key)


def record_aad(patient_id: str, record_type: str) -> bytes:
    return canonical.encode({b"patient": patient_id, b"type": record_type})


def message_aad(sender_id: str, recipient_id: str, sent_at: int) -> bytes:
    return canonical.encode({
        b"sender": sender_id,
        b"recipient": recipient_id,
        b"sent_at": sent_at,
    })
