"""Execution context handed to contract functions during simulation.

All contract effects flow through this object: reads are recorded with the
version they had in the snapshot, writes are buffered and never touch the
snapshot.  Contract code gets no clock and no randomness; anything
non-deterministic must arrive through the proposal (args, nonce,
client_time).
"""

from __future__ import annotations

from typing import Optional

from .. import canonical, crypto
from ..errors import ContractError
from ..identity import Certificate, Role
from ..ledger.rwset import ReadWriteSet
from ..ledger.state import WorldState
from ..ledger.store import GenesisConfig


def ok_response(data: bytes = b"") -> bytes:
    return canonical.encode({b"ok": 1, b"code": "", b"data": data})


def error_response(code: str) -> bytes:
    return canonical.encode({b"ok": 0, b"code": code, b"data": b""})


def decode_response(response: bytes) -> tuple[bool, str, bytes]:
    m = canonical.decode(response)
    return bool(m[b"ok"]), m[b"code"], m[b"data"]


class ContractContext:
    def __init__(self, state: WorldState, creator: Certificate, tx_id: bytes,
                 args: tuple, client_time: int, cfg: GenesisConfig):
        self._state = state
        self.creator = creator
        self.tx_id = tx_id
        self.args = args
        self.client_time = client_time
        self.cfg = cfg
        self._reads: dict[bytes, object] = {}
        self._writes: dict[bytes, Optional[bytes]] = {}

    # --- state access ---------------------------------------------------

    def get_state(self, key: bytes) -> Optional[bytes]:
        if key in self._writes:
            # read-your-own-write: no snapshot version to record
            return self._writes[key]
        entry = self._state.get(key)
        version = entry[1] if entry else None
        if key not in self._reads:
            self._reads[key] = version
        return entry[0] if entry else None

    def put_state(self, key: bytes, value: bytes) -> None:
        self._writes[key] = value

    def delete_state(self, key: bytes) -> None:
        self._writes[key] = None

    def range_scan(self, prefix: bytes):
        """Committed entries under prefix, key order; each read is recorded."""
        for key, value, version in self._state.range_scan(prefix):
            if key in self._writes:
                buffered = self._writes[key]
                if buffered is None:
                    continue
                yield key, buffered
                continue
            if key not in self._reads:
                self._reads[key] = version
            yield key, value

    def rwset(self, keep_writes: bool = True) -> ReadWriteSet:
        reads = tuple(self._reads.items())
        writes = tuple(self._writes.items()) if keep_writes else ()
        return ReadWriteSet(reads=reads, writes=writes)

    # --- helpers used across contracts -----------------------------------

    @property
    def caller(self) -> str:
        return self.creator.subject_id

    def require(self, condition: bool, code: str, message: str = "") -> None:
        if not condition:
            raise ContractError(code, message)

    def require_role(self, role: Role, code: str) -> None:
        if self.creator.role is not role:
            raise ContractError(code, f"caller role is {self.creator.role.value}")

    def arg(self, index: int) -> bytes:
        try:
            return self.args[index]
        except IndexError:
            raise ContractError("BAD_ARGS", f"missing argument {index}") from None

    def arg_str(self, index: int) -> str:
        try:
            return self.arg(index).decode("utf-8")
        except UnicodeDecodeError:
            raise ContractError("BAD_ARGS", f"argument {index} is not UTF-8") from None

    def arg_u64(self, index: int) -> int:
        raw = self.arg_str(index)
        try:
            value = int(raw)
        except ValueError:
            raise ContractError("BAD_ARGS", f"argument {index} is not an integer") from None
        if value < 0 or value > canonical.U64_MAX:
            raise ContractError("BAD_ARGS", f"argument {index} out of u64 range")
        return value

    def new_id(self, tag: bytes) -> str:
        """Deterministic per-transaction identifier for created entities."""
        return crypto.sha256(tag + self.tx_id).hex()

    def subject_certificate(self, subject_id: str) -> Optional[Certificate]:
        """On-chain identity lookup (written by the identity contract)."""
        raw = self.get_state(b"id/" + subject_id.encode())
        if raw is None:
            return None
        return Certificate.from_canonical(raw)

    def subject_role(self, subject_id: str) -> Optional[Role]:
        cert = self.subject_certificate(subject_id)
        return cert.role if cert else None
