"""Versioned world state derived from the block sequence.

Each entry remembers the (block, tx_index) that last wrote it; MVCC
validation compares those versions.  Snapshot bytes are canonical, so two
states are equal iff their snapshots are byte-identical.
"""

from __future__ import annotations

from typing import Iterator, Optional, Tuple

from .. import canonical, crypto
from ..errors import LedgerError
from .blocks import Block, ValidationCode
from .rwset import Version


class WorldState:
    def __init__(self):
        self.entries: dict[bytes, tuple[bytes, Version]] = {}
        self.height = -1  # no block applied yet; genesis brings it to 0

    def get(self, key: bytes) -> Optional[Tuple[bytes, Version]]:
        return self.entries.get(key)

    def get_value(self, key: bytes) -> Optional[bytes]:
        entry = self.entries.get(key)
        return entry[0] if entry else None

    def range_scan(self, prefix: bytes) -> Iterator[Tuple[bytes, bytes, Version]]:
        """All live entries whose key starts with prefix, in key order."""
        for key in sorted(self.entries):
            if key.startswith(prefix):
                value, version = self.entries[key]
                yield key, value, version

    def copy(self) -> "WorldState":
        dup = WorldState()
        dup.entries = dict(self.entries)
        dup.height = self.height
        return dup

    def snapshot_value(self) -> dict:
        entries = {
            key: [value, version.block, version.tx_index]
            for key, (value, version) in self.entries.items()
        }
        return {b"height": self.height + 1, b"entries": entries}

    def snapshot_bytes(self) -> bytes:
        # height is stored +1 so the pre-genesis state (-1) stays in u64 range
        return canonical.encode(self.snapshot_value())

    def digest(self) -> bytes:
        return crypto.sha256(self.snapshot_bytes())

    @classmethod
    def from_snapshot(cls, data: bytes) -> "WorldState":
        m = canonical.decode(data)
        state = cls()
        state.height = m[b"height"] - 1
        for key, (value, block, tx_index) in m[b"entries"].items():
            state.entries[key] = (value, Version(block, tx_index))
        return state


def apply_block(state: WorldState, block: Block) -> WorldState:
    """Apply the writes of VALID transactions, in transaction order.

    Mutates and returns ``state``.  Transactions flagged anything other than
    VALID have zero state effect.  The block's validation flags must already
    be populated (one per transaction).
    """
    if block.height != state.height + 1:
        raise LedgerError(
            "HEIGHT_GAP",
            f"state at {state.height}, block at {block.height}",
        )
    if len(block.validation_flags) != len(block.txs):
        raise LedgerError("BAD_FLAGS", "validation flags not populated")
    for tx_index, (tx, flag) in enumerate(zip(block.txs, block.validation_flags)):
        if flag is not ValidationCode.VALID:
            continue
        version = Version(block.height, tx_index)
        for key, value in tx.rwset.writes:
            if value is None:
                state.entries.pop(key, None)
            else:
                state.entries[key] = (value, version)
    state.height = block.height
    return state
