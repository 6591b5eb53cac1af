"""A committing node: block store, world state, validation and events.

The committer is single-threaded by construction; concurrent readers may
hold a reference to the state and will only ever observe block-boundary
snapshots because apply happens under the node's commit path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional

from ..errors import LedgerError
from ..ledger.blocks import Block, ValidationCode, hash_block
from ..ledger.state import WorldState, apply_block
from ..ledger.store import (
    BlockStore,
    DirectoryBlockStore,
    GenesisConfig,
    make_genesis_block,
)
from .policy import EndorsementPolicy
from .validate import validate_block


@dataclass(frozen=True)
class TxEvent:
    height: int
    tx_index: int
    tx_id: bytes
    code: ValidationCode
    contract: str
    function: str


class Node:
    def __init__(self, cfg: GenesisConfig, store: BlockStore,
                 policy: EndorsementPolicy, peer_keys: Mapping[str, bytes],
                 ca_public: bytes,
                 event_sink: Optional[Callable[[TxEvent], None]] = None):
        self.cfg = cfg
        self.store = store
        self.policy = policy
        self.peer_keys = dict(peer_keys)
        self.ca_public = ca_public
        self.state = WorldState()
        self.seen_txids: set[bytes] = set()
        self.event_sink = event_sink
        self._blocks_since_snapshot = 0

    # --- bootstrap / recovery --------------------------------------------

    @classmethod
    def bootstrap(cls, cfg: GenesisConfig, store: BlockStore,
                  policy: EndorsementPolicy, peer_keys: Mapping[str, bytes],
                  ca_public: bytes, event_sink=None) -> "Node":
        """Fresh node: commit the genesis block derived from the config."""
        node = cls(cfg, store, policy, peer_keys, ca_public, event_sink)
        genesis = make_genesis_block(cfg)
        store.append(genesis)
        apply_block(node.state, genesis)
        return node

    @classmethod
    def recover(cls, cfg: GenesisConfig, store: BlockStore,
                policy: EndorsementPolicy, peer_keys: Mapping[str, bytes],
                ca_public: bytes, event_sink=None) -> "Node":
        """Rebuild state from an existing store (snapshot + replay of the rest)."""
        node = cls(cfg, store, policy, peer_keys, ca_public, event_sink)
        start_height = 0
        if isinstance(store, DirectoryBlockStore):
            snap = store.read_snapshot()
            if snap is not None:
                node.state = WorldState.from_snapshot(snap)
                start_height = node.state.height + 1
        if store.height() < 0:
            raise LedgerError("BAD_CONFIG", "cannot recover from an empty store")
        for height in range(start_height, store.height() + 1):
            apply_block(node.state, store.get(height))
        for block in store.blocks():
            for tx in block.txs:
                node.seen_txids.add(tx.tx_id)
        return node

    # --- commit path -------------------------------------------------------

    def tip_hash(self) -> bytes:
        tip = self.store.tip()
        if tip is None:
            raise LedgerError("BAD_HEIGHT", "no blocks committed")
        return hash_block(tip)

    def next_height(self) -> int:
        return self.store.height() + 1

    def commit_block(self, payload: Block) -> tuple[Block, List[TxEvent]]:
        """Validate, persist and apply one ordered block atomically.

        The store append happens before state apply; ``recover`` replays any
        block that was persisted but not yet applied, so a crash between the
        two steps cannot lose or double-apply writes.
        """
        seen_before = set(self.seen_txids)
        try:
            flags = validate_block(payload, self.state, self.policy,
                                   self.seen_txids, self.peer_keys, self.ca_public)
            block = payload.with_flags(flags)
            self.store.append(block)
            apply_block(self.state, block)
        except Exception:
            self.seen_txids = seen_before
            raise
        events = [
            TxEvent(block.height, index, tx.tx_id, flag, tx.contract, tx.function)
            for index, (tx, flag) in enumerate(zip(block.txs, block.validation_flags))
        ]
        if self.event_sink is not None:
            for event in events:
                self.event_sink(event)
        self._maybe_snapshot()
        return block, events

    def _maybe_snapshot(self) -> None:
        if not isinstance(self.store, DirectoryBlockStore):
            return
        self._blocks_since_snapshot += 1
        if self._blocks_since_snapshot >= self.cfg.snapshot_interval:
            self.store.write_snapshot(self.state.snapshot_bytes())
            self._blocks_since_snapshot = 0

    def persist_snapshot(self) -> None:
        if isinstance(self.store, DirectoryBlockStore):
            self.store.write_snapshot(self.state.snapshot_bytes())
            self._blocks_since_snapshot = 0


def replay_with_revalidation(cfg: GenesisConfig, blocks, policy: EndorsementPolicy,
                             peer_keys: Mapping[str, bytes],
                             ca_public: bytes) -> tuple[WorldState, list]:
    """Re-run validation from scratch and rebuild state from the results.

    Returns (state, per-block recomputed flags).  Used as the revalidation
    oracle: stored flags must equal recomputed flags on every honest chain.
    """
    state = WorldState()
    seen: set[bytes] = set()
    all_flags = []
    for block in blocks:
        if block.height == 0:
            apply_block(state, block)
            all_flags.append(list(block.validation_flags))
            continue
        flags = validate_block(block, state, policy, seen, peer_keys, ca_public)
        all_flags.append(flags)
        apply_block(state, block.with_flags(flags))
    return state, all_flags
