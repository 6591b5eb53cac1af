"""Commit-time validation: signatures, endorsement policy, MVCC.

Checks run per transaction in a fixed order and the first failure wins:

    DUPLICATE_TXID   tx id already committed (or earlier in this block)
    BAD_SIGNATURE    client signature/certificate invalid, or a counted
                     endorsement carries an invalid peer signature
    ENDORSEMENT_FAILURE  fewer than threshold valid endorsements from
                     eligible peers over this tx's rwset/response digests
    MVCC_CONFLICT    a recorded read version no longer matches the committed
                     state (including writes of earlier VALID txs in the
                     same block, tracked through a scratch view)
    CONTRACT_ERROR   the endorsed response reports a contract-level error
    VALID            otherwise; writes will be applied at commit
"""

from __future__ import annotations

from typing import Mapping, Optional, Set

from .. import crypto
from ..ledger.blocks import Block, Transaction, ValidationCode
from ..ledger.state import WorldState
from .context import decode_response
from .policy import EndorsementPolicy


def count_endorsements(tx: Transaction, policy: EndorsementPolicy,
                       peer_keys: Mapping[str, bytes]) -> tuple[int, bool]:
    """(count, saw_bad_signature) over the tx's own rwset/response digests.

    An endorsement is counted when it comes from a distinct eligible peer
    and attests exactly this transaction's rwset and response digests with a
    valid signature.  A matching eligible endorsement whose signature fails
    is a BAD_SIGNATURE condition, not merely an uncounted vote.
    """
    rw_digest = tx.rwset.digest()
    resp_digest = crypto.sha256(tx.response)
    counted: Set[str] = set()
    saw_bad = False
    for end in tx.endorsements:
        if end.peer_id not in policy.eligible_peers:
            continue
        if end.rwset_digest != rw_digest or end.response_digest != resp_digest:
            continue
        public = peer_keys.get(end.peer_id)
        if public is None or not crypto.verify(
                public, end.signing_payload(tx.tx_id), end.signature):
            saw_bad = True
            continue
        counted.add(end.peer_id)
    return len(counted), saw_bad


def validate_block(block: Block, state: WorldState, policy: EndorsementPolicy,
                   seen_txids: Set[bytes], peer_keys: Mapping[str, bytes],
                   ca_public: Optional[bytes] = None) -> list[ValidationCode]:
    """Flag every transaction; mutates ``seen_txids`` with this block's ids.

    ``state`` is not modified: intra-block read dependencies are tracked in
    a scratch overlay so a key written by an earlier VALID transaction
    invalidates later readers in the same block.
    """
    flags: list[ValidationCode] = []
    scratch: dict[bytes, bool] = {}  # key -> True written / False deleted

    for tx in block.txs:
        code = _validate_tx(tx, state, scratch, policy, seen_txids, peer_keys, ca_public)
        flags.append(code)
        seen_txids.add(tx.tx_id)
        if code is ValidationCode.VALID:
            for key, value in tx.rwset.writes:
                scratch[key] = value is not None
    return flags


def _validate_tx(tx: Transaction, state: WorldState, scratch: dict,
                 policy: EndorsementPolicy, seen_txids: Set[bytes],
                 peer_keys: Mapping[str, bytes],
                 ca_public: Optional[bytes]) -> ValidationCode:
    if tx.tx_id in seen_txids:
        return ValidationCode.DUPLICATE_TXID

    if tx.tx_id != tx.recompute_tx_id():
        return ValidationCode.BAD_SIGNATURE
    if ca_public is not None and not tx.creator.verify(ca_public):
        return ValidationCode.BAD_SIGNATURE
    if not crypto.verify(tx.creator.public_key, tx.proposal_payload(), tx.client_signature):
        return ValidationCode.BAD_SIGNATURE

    counted, saw_bad = count_endorsements(tx, policy, peer_keys)
    if saw_bad:
        return ValidationCode.BAD_SIGNATURE
    if counted < policy.threshold:
        return ValidationCode.ENDORSEMENT_FAILURE

    for key, read_version in tx.rwset.reads:
        if key in scratch:
            # touched by an earlier VALID tx in this block
            return ValidationCode.MVCC_CONFLICT
        entry = state.get(key)
        current = entry[1] if entry else None
        if current != read_version:
            return ValidationCode.MVCC_CONFLICT

    ok, _, _ = decode_response(tx.response)
    if not ok:
        return ValidationCode.CONTRACT_ERROR
    return ValidationCode.VALID
