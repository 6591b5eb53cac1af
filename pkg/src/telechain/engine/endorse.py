"""Peer endorsement over simulation outcomes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .. import canonical, crypto
from ..errors import ClientError
from ..identity import Certificate, KeyPair, Role
from ..ledger.blocks import Endorsement
from ..ledger.rwset import ReadWriteSet
from ..ledger.state import WorldState
from ..ledger.store import GenesisConfig
from .proposal import Proposal
from .simulate import simulate


@dataclass(frozen=True)
class PeerIdentity:
    keypair: KeyPair
    certificate: Certificate

    @property
    def peer_id(self) -> str:
        return self.certificate.subject_id


@dataclass(frozen=True)
class ProposalResponse:
    """What a peer hands back to the client: the simulated read/write set,
    the contract response, and a signed endorsement over both digests."""

    peer_id: str
    rwset: ReadWriteSet
    response: bytes
    endorsement: Endorsement


def endorse(peer: PeerIdentity, proposal: Proposal, snapshot: WorldState,
            contracts: Mapping, cfg: GenesisConfig, ca_public: bytes,
            revoked: frozenset | set = frozenset()) -> ProposalResponse:
    if peer.certificate.role is not Role.PEER:
        raise ClientError("NOT_PEER", peer.peer_id)
    rwset, response = simulate(proposal, snapshot, contracts, cfg,
                               ca_public=ca_public, revoked=revoked)
    return sign_endorsement(peer, proposal.tx_id(), rwset, response)


def sign_endorsement(peer: PeerIdentity, tx_id: bytes, rwset: ReadWriteSet,
                     response: bytes) -> ProposalResponse:
    rw_digest = rwset.digest()
    resp_digest = crypto.sha256(response)
    payload = canonical.encode([tx_id, rw_digest, resp_digest])
    signature = crypto.sign(peer.keypair.private_seed, payload)
    endorsement = Endorsement(
        peer_id=peer.peer_id,
        rwset_digest=rw_digest,
        response_digest=resp_digest,
        signature=signature,
    )
    return ProposalResponse(
        peer_id=peer.peer_id,
        rwset=rwset,
        response=response,
        endorsement=endorsement,
    )
