"""Challenge login and signed session tokens.

Tokens are signed by an ephemeral gateway key and stored nowhere: deleting
the session state only forces re-login, it cannot change what audit or
metrics return (those derive from the block store).
"""

from __future__ import annotations

import os
import time
from typing import Callable, Optional

from .. import canonical, crypto
from ..identity import Certificate

DEFAULT_TTL = 3600
CHALLENGE_TTL = 300


class SessionManager:
    def __init__(self, ttl: int = DEFAULT_TTL, clock: Callable[[], float] = time.time):
        self._seed = crypto.generate_seed()
        self._public = crypto.public_key_from_seed(self._seed)
        self.ttl = ttl
        self.clock = clock
        self._challenges: dict[str, tuple[bytes, float]] = {}

    def issue_challenge(self, subject_id: str) -> bytes:
        challenge = os.urandom(32)
        self._challenges[subject_id] = (challenge, self.clock() + CHALLENGE_TTL)
        return challenge

    def verify_challenge(self, subject_id: str, challenge: bytes,
                         signature: bytes, cert: Certificate) -> bool:
        entry = self._challenges.get(subject_id)
        if entry is None:
            return False
        expected, expires = entry
        if self.clock() > expires or challenge != expected:
            return False
        if not crypto.verify(cert.public_key, b"tch-login" + challenge, signature):
            return False
        del self._challenges[subject_id]
        return True

    def issue_token(self, subject_id: str) -> tuple[str, int]:
        expires = int(self.clock()) + self.ttl
        payload = canonical.encode({b"subject": subject_id, b"expires": expires})
        signature = crypto.sign(self._seed, payload)
        return payload.hex() + "." + signature.hex(), expires

    def verify_token(self, token: str) -> Optional[str]:
        """Subject id for a valid unexpired token, else None."""
        try:
            payload_hex, _, sig_hex = token.partition(".")
            payload = bytes.fromhex(payload_hex)
            signature = bytes.fromhex(sig_hex)
        except ValueError:
            return None
        if not crypto.verify(self._public, payload, signature):
            return None
        try:
            fields = canonical.decode(payload)
            subject = fields[b"subject"]
            expires = fields[b"expires"]
        except Exception:
            return None
        if self.clock() > expires:
            return None
        return subject

    def clear(self) -> None:
        """Drop all session state (tokens stay verifiable until expiry only
        if the key survives; a restart rotates the key, logging everyone out)."""
        self._challenges.clear()
