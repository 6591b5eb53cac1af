"""Chain verification and deterministic replay.

``verify_chain`` audits structure and signatures; ``replay`` folds
``apply_block`` over the block sequence to rebuild the world state.  A
replayed state's snapshot bytes must equal the live node's, which is the
backbone oracle for most integration tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .. import canonical, crypto
from ..errors import LedgerError
from .blocks import Block, ZERO_HASH, hash_block
from .state import WorldState, apply_block
from .store import GenesisConfig


@dataclass
class ChainReport:
    ok: bool
    height: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_chain(blocks: Iterable[Block], ca_public: Optional[bytes] = None,
                 genesis_cfg: Optional[GenesisConfig] = None) -> ChainReport:
    """Check hash links, data hashes, tx ids and client signatures.

    Returns a report naming the first failing block.  ``ca_public`` enables
    the creator-certificate check.  Block 0's data hash commits to the
    genesis configuration, not a transaction list; it is checked when
    ``genesis_cfg`` is supplied.
    """
    prev: Optional[Block] = None
    empty = True
    for block in blocks:
        empty = False
        if prev is None:
            if block.height != 0:
                return ChainReport(False, block.height, "first block is not height 0")
            if block.prev_hash != ZERO_HASH:
                return ChainReport(False, 0, "genesis prev_hash not zero")
            if block.txs:
                return ChainReport(False, 0, "genesis block carries transactions")
            if genesis_cfg is not None:
                expected = crypto.sha256(canonical.encode(genesis_cfg.to_value()))
                if block.data_hash != expected:
                    return ChainReport(False, 0, "genesis data hash mismatch")
        else:
            if block.height != prev.height + 1:
                return ChainReport(False, block.height, "height gap")
            if block.prev_hash != hash_block(prev):
                return ChainReport(False, block.height, "broken hash link")
            if block.data_hash != block.recompute_data_hash():
                return ChainReport(False, block.height, "data hash mismatch")
        if len(block.validation_flags) != len(block.txs):
            return ChainReport(False, block.height, "validation flags missing")
        for index, tx in enumerate(block.txs):
            where = f"tx {index} in block {block.height}"
            if tx.tx_id != tx.recompute_tx_id():
                return ChainReport(False, block.height, f"tx_id mismatch for {where}")
            if not crypto.verify(tx.creator.public_key, tx.proposal_payload(),
                                 tx.client_signature):
                return ChainReport(False, block.height, f"bad client signature on {where}")
            if ca_public is not None and not tx.creator.verify(ca_public):
                return ChainReport(False, block.height, f"bad creator certificate on {where}")
        prev = block
    if empty:
        return ChainReport(False, None, "empty chain")
    return ChainReport(True, prev.height if prev else None)


def replay(genesis_cfg: GenesisConfig, blocks: Iterable[Block],
           verify: bool = True, ca_public: Optional[bytes] = None) -> WorldState:
    """Rebuild world state from scratch using each block's stored flags."""
    blocks = list(blocks)
    if verify:
        report = verify_chain(blocks, ca_public, genesis_cfg)
        if not report:
            raise LedgerError("VERIFY_FAILED", f"block {report.height}: {report.reason}")
    state = WorldState()
    for block in blocks:
        apply_block(state, block)
    return state
