"""Client-side proposal construction and transaction assembly."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence, Tuple

from .. import crypto
from ..errors import ClientError
from ..identity import Certificate, KeyPair
from ..ledger.blocks import Transaction, proposal_payload_bytes


@dataclass(frozen=True)
class Proposal:
    contract: str
    function: str
    args: Tuple[bytes, ...]
    creator: Certificate
    client_time: int
    nonce: bytes
    client_signature: bytes

    def payload(self) -> bytes:
        return proposal_payload_bytes(
            self.contract, self.function, self.args,
            self.creator, self.client_time, self.nonce,
        )

    def tx_id(self) -> bytes:
        return crypto.sha256(self.payload())

    def verify(self) -> bool:
        return crypto.verify(self.creator.public_key, self.payload(), self.client_signature)


def build_proposal(keypair: KeyPair, cert: Certificate, contract: str, function: str,
                   args: Sequence[bytes], client_time: int,
                   rng: random.Random | None = None,
                   nonce: bytes | None = None) -> Proposal:
    """Sign a contract invocation; the 16-byte nonce makes the tx id unique."""
    if nonce is None:
        nonce = crypto.generate_seed(rng)[:16]
    if len(nonce) != 16:
        raise ClientError("BAD_NONCE", "nonce must be 16 bytes")
    payload = proposal_payload_bytes(contract, function, tuple(args), cert,
                                     client_time, nonce)
    signature = crypto.sign(keypair.private_seed, payload)
    return Proposal(
        contract=contract,
        function=function,
        args=tuple(args),
        creator=cert,
        client_time=client_time,
        nonce=nonce,
        client_signature=signature,
    )


def assemble_transaction(proposal: Proposal, responses: Sequence, threshold: int = 1) -> Transaction:
    """Pick the plurality read/write set among endorsements and build the tx.

    Endorsements whose signed digests do not match the bytes the same peer
    returned are self-inconsistent and dropped immediately.  Remaining
    responses are grouped by (rwset digest, response digest); the largest
    group wins, ties break toward the smallest digest pair so assembly is
    deterministic.  Raises NO_MATCHING_ENDORSEMENTS when the winning group
    is smaller than ``threshold``.
    """
    groups: dict[tuple[bytes, bytes], list] = {}
    for resp in responses:
        rw_digest = resp.rwset.digest()
        resp_digest = crypto.sha256(resp.response)
        end = resp.endorsement
        if end.rwset_digest != rw_digest or end.response_digest != resp_digest:
            continue  # dissenting peer disagrees with itself; drop
        groups.setdefault((rw_digest, resp_digest), []).append(resp)
    if not groups:
        raise ClientError("NO_MATCHING_ENDORSEMENTS", "no self-consistent endorsement")
    winner_key = min(groups, key=lambda k: (-len(groups[k]), k))
    winner = groups[winner_key]
    if len(winner) < max(threshold, 1):
        raise ClientError(
            "NO_MATCHING_ENDORSEMENTS",
            f"largest agreeing group has {len(winner)} < {threshold} endorsements",
        )
    first = winner[0]
    return Transaction(
        tx_id=proposal.tx_id(),
        contract=proposal.contract,
        function=proposal.function,
        args=proposal.args,
        creator=proposal.creator,
        client_time=proposal.client_time,
        nonce=proposal.nonce,
        client_signature=proposal.client_signature,
        rwset=first.rwset,
        endorsements=tuple(resp.endorsement for resp in winner),
        response=first.response,
    )
