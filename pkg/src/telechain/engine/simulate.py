"""Contract simulation with read/write-set capture.

Simulation never mutates the snapshot it runs against.  A contract-level
failure (ContractError) still produces a simulatable outcome: the reads
performed up to the failure are kept, writes are discarded, and the response
carries the error code.  Such transactions commit as CONTRACT_ERROR so that
denied attempts remain on the audit trail.
"""

from __future__ import annotations

from typing import Mapping, Optional, Tuple

from ..errors import ClientError, ContractError
from ..ledger.rwset import ReadWriteSet
from ..ledger.state import WorldState
from ..ledger.store import GenesisConfig
from .context import ContractContext, error_response, ok_response
from .proposal import Proposal


def simulate(proposal: Proposal, snapshot: WorldState, contracts: Mapping,
             cfg: GenesisConfig, ca_public: Optional[bytes] = None,
             revoked: frozenset | set = frozenset()) -> Tuple[ReadWriteSet, bytes]:
    """Execute the proposal's function against a state snapshot.

    Returns (rwset, response).  Raises ClientError for anything that stops
    the proposal before contract code runs: unknown contract or function,
    bad signatures, revoked creator.
    """
    contract = contracts.get(proposal.contract)
    if contract is None:
        raise ClientError("UNKNOWN_CONTRACT", proposal.contract)
    fn = contract.get(proposal.function)
    if fn is None:
        raise ClientError("UNKNOWN_FUNCTION", f"{proposal.contract}.{proposal.function}")
    if ca_public is not None:
        if proposal.creator.subject_id in revoked:
            raise ClientError("ENDORSE_REFUSED", "creator certificate revoked")
        if not proposal.creator.verify(ca_public):
            raise ClientError("BAD_PROPOSAL", "creator certificate does not verify")
    if not proposal.verify():
        raise ClientError("BAD_PROPOSAL", "client signature does not verify")

    ctx = ContractContext(
        state=snapshot,
        creator=proposal.creator,
        tx_id=proposal.tx_id(),
        args=proposal.args,
        client_time=proposal.client_time,
        cfg=cfg,
    )
    try:
        data = fn(ctx)
        return ctx.rwset(keep_writes=True), ok_response(data or b"")
    except ContractError as exc:
        return ctx.rwset(keep_writes=False), error_response(exc.code)
