"""Membership service: key pairs, role certificates and the network registry.

A single root CA signs every certificate.  Certificates are canonical binary
records (not X.509) so they hash and sign bit-exactly; a hex line form is
provided for CLI enrollment output.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from . import canonical, crypto
from .errors import IdentityError


class Role(str, Enum):
    PATIENT = "PATIENT"
    PRACTITIONER = "PRACTITIONER"
    ANALYST = "ANALYST"
    ADMIN = "ADMIN"
    PEER = "PEER"
    ORDERER = "ORDERER"


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 seed plus the derived public key.

    The private seed never appears in any ledger write or wire message;
    it stays with the client (or the sim harness standing in for one).
    """

    private_seed: bytes
    public_key: bytes

    @classmethod
    def generate(cls, rng: random.Random | None = None) -> "KeyPair":
        seed = crypto.generate_seed(rng)
        return cls(private_seed=seed, public_key=crypto.public_key_from_seed(seed))

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        return cls(private_seed=seed, public_key=crypto.public_key_from_seed(seed))


@dataclass(frozen=True)
class Certificate:
    subject_id: str
    role: Role
    public_key: bytes
    issued_at: int
    issuer_id: str
    signature: bytes  # CA signature over signing_payload()

    def signing_payload(self) -> bytes:
        return _certificate_signing_payload(self)

    def verify(self, ca_public: bytes) -> bool:
        """Signature check only; revocation is a registry question."""
        try:
            return crypto.verify(ca_public, self.signing_payload(), self.signature)
        except Exception:
            return False

    def to_canonical(self) -> bytes:
        return _encode_certificate(self)

    @classmethod
    def from_canonical(cls, data: bytes) -> "Certificate":
        return _decode_certificate(bytes(data))

    def to_hex_line(self) -> str:
        return self.to_canonical().hex()

    @classmethod
    def from_hex_line(cls, line: str) -> "Certificate":
        try:
            raw = bytes.fromhex(line.strip())
        except ValueError as exc:
            raise IdentityError("BAD_CERTIFICATE", str(exc)) from None
        return cls.from_canonical(raw)


# certificates are small immutable records re-encoded and re-decoded on every
# proposal by every peer; cache both directions
@lru_cache(maxsize=8192)
def _certificate_signing_payload(cert: Certificate) -> bytes:
    return canonical.encode({
        b"subject": cert.subject_id,
        b"role": cert.role.value,
        b"public_key": cert.public_key,
        b"issued_at": cert.issued_at,
        b"issuer": cert.issuer_id,
    })


@lru_cache(maxsize=8192)
def _encode_certificate(cert: Certificate) -> bytes:
    return canonical.encode({
        b"subject": cert.subject_id,
        b"role": cert.role.value,
        b"public_key": cert.public_key,
        b"issued_at": cert.issued_at,
        b"issuer": cert.issuer_id,
        b"signature": cert.signature,
    })


@lru_cache(maxsize=8192)
def _decode_certificate(data: bytes) -> Certificate:
    try:
        m = canonical.decode(data)
        return Certificate(
            subject_id=m[b"subject"],
            role=Role(m[b"role"]),
            public_key=m[b"public_key"],
            issued_at=m[b"issued_at"],
            issuer_id=m[b"issuer"],
            signature=m[b"signature"],
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise IdentityError("BAD_CERTIFICATE", str(exc)) from None


def sign_payload(private_seed: bytes, payload: bytes) -> bytes:
    if not payload:
        raise IdentityError("EMPTY_PAYLOAD", "refusing to sign empty payload")
    return crypto.sign(private_seed, payload)


def verify_signature(public_key: bytes, payload: bytes, signature: bytes) -> bool:
    return crypto.verify(public_key, payload, signature)


def verify_certificate(cert: Certificate, ca_public: bytes,
                       revoked: frozenset | set = frozenset()) -> bool:
    """True iff the CA signature verifies and the subject is not revoked."""
    try:
        if cert.subject_id in revoked:
            return False
        return cert.verify(ca_public)
    except Exception:
        return False


CA_SUBJECT_ID = "telechain-ca"


@dataclass
class IdentityRegistry:
    """The permissioning authority: one root CA, one namespace of subjects.

    Reads may be concurrent; create/revoke calls are expected to come from a
    single writer (the gateway or the sim harness).
    """

    ca_keypair: KeyPair
    certificates: dict = field(default_factory=dict)
    revoked: set = field(default_factory=set)
    _clock: int = 0

    @classmethod
    def create(cls, rng: random.Random | None = None) -> "IdentityRegistry":
        return cls(ca_keypair=KeyPair.generate(rng))

    @property
    def ca_public(self) -> bytes:
        return self.ca_keypair.public_key

    def create_identity(self, subject_id: str, role: Role,
                        rng: random.Random | None = None,
                        public_key: bytes | None = None) -> tuple[KeyPair | None, Certificate]:
        """Issue a certificate; generates a key pair unless one is supplied.

        When the caller brings their own public key (client-side keygen) the
        returned KeyPair is None: the registry never sees that private key.
        """
        if not subject_id:
            raise IdentityError("BAD_SUBJECT", "subject_id must be non-empty")
        if subject_id in self.certificates:
            raise IdentityError("DUPLICATE_SUBJECT", subject_id)
        keypair = None
        if public_key is None:
            keypair = KeyPair.generate(rng)
            public_key = keypair.public_key
        self._clock += 1
        unsigned = Certificate(
            subject_id=subject_id,
            role=role,
            public_key=public_key,
            issued_at=self._clock,
            issuer_id=CA_SUBJECT_ID,
            signature=b"",
        )
        signature = sign_payload(self.ca_keypair.private_seed, unsigned.signing_payload())
        cert = Certificate(
            subject_id=subject_id,
            role=role,
            public_key=public_key,
            issued_at=unsigned.issued_at,
            issuer_id=CA_SUBJECT_ID,
            signature=signature,
        )
        self.certificates[subject_id] = cert
        return keypair, cert

    def get(self, subject_id: str) -> Certificate | None:
        return self.certificates.get(subject_id)

    def revoke(self, subject_id: str) -> None:
        if subject_id not in self.certificates:
            raise IdentityError("UNKNOWN_SUBJECT", subject_id)
        self.revoked.add(subject_id)

    def is_revoked(self, subject_id: str) -> bool:
        return subject_id in self.revoked

    def verify_certificate(self, cert: Certificate) -> bool:
        return verify_certificate(cert, self.ca_public, self.revoked)
