"""FIFO block cutting for the single-orderer service."""

from __future__ import annotations

from typing import List, Optional

from ..ledger.blocks import Block, Transaction, data_hash_of


class BlockCutter:
    """Cuts the pending queue into block payloads.

    A batch is cut when ``max_txs`` accumulate, or when ``max_wait`` logical
    ticks have passed since the oldest pending transaction arrived.  Order is
    FIFO and empty blocks are never produced.
    """

    def __init__(self, max_txs: int, max_wait: int):
        self.max_txs = max_txs
        self.max_wait = max_wait
        self._pending: list[Transaction] = []
        self._oldest_tick: Optional[int] = None

    def __len__(self) -> int:
        return len(self._pending)

    def add(self, tx: Transaction, tick: int) -> List[List[Transaction]]:
        """Enqueue; returns any batches that became due by size."""
        if self._oldest_tick is None:
            self._oldest_tick = tick
        self._pending.append(tx)
        batches = []
        while len(self._pending) >= self.max_txs:
            batches.append(self._take(self.max_txs, tick))
        return batches

    def poll(self, tick: int) -> List[List[Transaction]]:
        """Advance logical time; cut if the oldest tx waited long enough."""
        if self._pending and self._oldest_tick is not None \
                and tick - self._oldest_tick >= self.max_wait:
            return [self._take(len(self._pending), tick)]
        return []

    def flush(self, tick: int) -> List[List[Transaction]]:
        """Cut everything pending (shutdown / forced cut)."""
        batches = []
        while self._pending:
            batches.append(self._take(min(self.max_txs, len(self._pending)), tick))
        return batches

    def _take(self, count: int, tick: int) -> List[Transaction]:
        batch = self._pending[:count]
        self._pending = self._pending[count:]
        self._oldest_tick = tick if self._pending else None
        return batch


def build_block(height: int, prev_hash: bytes, ordering_time: int,
                txs: List[Transaction]) -> Block:
    """Assemble an ordered (not yet validated) block payload."""
    return Block(
        height=height,
        prev_hash=prev_hash,
        data_hash=data_hash_of(txs),
        ordering_time=ordering_time,
        txs=tuple(txs),
        validation_flags=(),
    )
