"""Read/write sets captured during contract simulation.

A read records the version the key had in the simulated snapshot (None when
the key was absent); a write is a buffered (key, value) pair where value None
is a delete marker.  Keys are unique within each list.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence, Tuple

from .. import canonical, crypto
from ..errors import LedgerError


class Version(NamedTuple):
    block: int
    tx_index: int


@dataclass(frozen=True)
class ReadWriteSet:
    reads: Tuple[Tuple[bytes, Optional[Version]], ...]
    writes: Tuple[Tuple[bytes, Optional[bytes]], ...]

    def __post_init__(self):
        seen = set()
        for key, _ in self.reads:
            if key in seen:
                raise LedgerError("DUPLICATE_READ_KEY", repr(key))
            seen.add(key)
        seen = set()
        for key, _ in self.writes:
            if key in seen:
                raise LedgerError("DUPLICATE_WRITE_KEY", repr(key))
            seen.add(key)

    def to_value(self) -> dict:
        reads = []
        for key, version in self.reads:
            reads.append([key, [] if version is None else [version.block, version.tx_index]])
        writes = []
        for key, value in self.writes:
            writes.append([key, [] if value is None else [value]])
        return {b"r": reads, b"w": writes}

    def to_canonical(self) -> bytes:
        return _encode_rwset(self)

    def digest(self) -> bytes:
        # recomputed by every endorser and validator; value-cached
        return crypto.sha256(self.to_canonical())

    @classmethod
    def from_value(cls, value) -> "ReadWriteSet":
        try:
            reads = tuple(
                (key, None if not ver else Version(ver[0], ver[1]))
                for key, ver in value[b"r"]
            )
            writes = tuple(
                (key, None if not val else val[0])
                for key, val in value[b"w"]
            )
            return cls(reads=reads, writes=writes)
        except (KeyError, IndexError, TypeError) as exc:
            raise LedgerError("BAD_RWSET", str(exc)) from None

    @classmethod
    def from_canonical(cls, data: bytes) -> "ReadWriteSet":
        return cls.from_value(canonical.decode(data))

    @classmethod
    def build(cls, reads: Sequence, writes: Sequence) -> "ReadWriteSet":
        return cls(reads=tuple(reads), writes=tuple(writes))


@lru_cache(maxsize=16384)
def _encode_rwset(rwset: ReadWriteSet) -> bytes:
    return canonical.encode(rwset.to_value())
