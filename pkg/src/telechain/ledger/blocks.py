"""Transactions, endorsements and hash-chained blocks.

``hash_block`` covers (height, prev_hash, data_hash, ordering_time) only:
validation flags are attached at commit time, after ordering, and must not
change the chain linkage.  Everything serializes through the canonical
encoding so block files are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Tuple

from .. import canonical, crypto
from ..errors import LedgerError
from ..identity import Certificate
from .rwset import ReadWriteSet

ZERO_HASH = bytes(32)


class ValidationCode(str, Enum):
    VALID = "VALID"
    MVCC_CONFLICT = "MVCC_CONFLICT"
    ENDORSEMENT_FAILURE = "ENDORSEMENT_FAILURE"
    BAD_SIGNATURE = "BAD_SIGNATURE"
    CONTRACT_ERROR = "CONTRACT_ERROR"
    DUPLICATE_TXID = "DUPLICATE_TXID"


@dataclass(frozen=True)
class Endorsement:
    """A peer's signed attestation over a proposal's simulation outcome."""

    peer_id: str
    rwset_digest: bytes
    response_digest: bytes
    signature: bytes

    def signing_payload(self, tx_id: bytes) -> bytes:
        return canonical.encode([tx_id, self.rwset_digest, self.response_digest])

    def to_value(self) -> dict:
        return {
            b"peer": self.peer_id,
            b"rwset_digest": self.rwset_digest,
            b"response_digest": self.response_digest,
            b"signature": self.signature,
        }

    @classmethod
    def from_value(cls, value) -> "Endorsement":
        return cls(
            peer_id=value[b"peer"],
            rwset_digest=value[b"rwset_digest"],
            response_digest=value[b"response_digest"],
            signature=value[b"signature"],
        )


@dataclass(frozen=True)
class Transaction:
    """A signed contract invocation with its endorsed read/write set.

    ``response`` carries the endorsed contract response (ok or error); it is
    kept in the transaction so denied attempts stay auditable on-chain and so
    validators can re-check the endorsed response digest.
    """

    tx_id: bytes
    contract: str
    function: str
    args: Tuple[bytes, ...]
    creator: Certificate
    client_time: int
    nonce: bytes
    client_signature: bytes
    rwset: ReadWriteSet
    endorsements: Tuple[Endorsement, ...]
    response: bytes

    def proposal_payload(self) -> bytes:
        return proposal_payload_bytes(
            self.contract, self.function, self.args,
            self.creator, self.client_time, self.nonce,
        )

    def recompute_tx_id(self) -> bytes:
        return crypto.sha256(self.proposal_payload())

    def to_value(self) -> dict:
        return {
            b"tx_id": self.tx_id,
            b"contract": self.contract,
            b"function": self.function,
            b"args": list(self.args),
            b"creator": self.creator.to_canonical(),
            b"client_time": self.client_time,
            b"nonce": self.nonce,
            b"client_signature": self.client_signature,
            b"rwset": self.rwset.to_value(),
            b"endorsements": [e.to_value() for e in self.endorsements],
            b"response": self.response,
        }

    def to_canonical(self) -> bytes:
        return canonical.encode(self.to_value())

    @classmethod
    def from_value(cls, value) -> "Transaction":
        try:
            return cls(
                tx_id=value[b"tx_id"],
                contract=value[b"contract"],
                function=value[b"function"],
                args=tuple(value[b"args"]),
                creator=Certificate.from_canonical(value[b"creator"]),
                client_time=value[b"client_time"],
                nonce=value[b"nonce"],
                client_signature=value[b"client_signature"],
                rwset=ReadWriteSet.from_value(value[b"rwset"]),
                endorsements=tuple(Endorsement.from_value(e) for e in value[b"endorsements"]),
                response=value[b"response"],
            )
        except (KeyError, TypeError) as exc:
            raise LedgerError("BAD_TRANSACTION", str(exc)) from None


def proposal_payload_bytes(contract: str, function: str, args, creator: Certificate,
                           client_time: int, nonce: bytes) -> bytes:
    """The byte message a client signs; its digest is the transaction id."""
    return _proposal_payload_cached(contract, function, tuple(args), creator,
                                    client_time, nonce)


@lru_cache(maxsize=16384)
def _proposal_payload_cached(contract, function, args, creator, client_time, nonce):
    # one proposal is re-encoded by every endorsing and validating peer;
    # all inputs are immutable values
    return canonical.encode({
        b"contract": contract,
        b"function": function,
        b"args": list(args),
        b"creator": creator.to_canonical(),
        b"client_time": client_time,
        b"nonce": nonce,
    })


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    data_hash: bytes
    ordering_time: int
    txs: Tuple[Transaction, ...]
    validation_flags: Tuple[ValidationCode, ...] = field(default=())

    def with_flags(self, flags) -> "Block":
        flags = tuple(flags)
        if len(flags) != len(self.txs):
            raise LedgerError("BAD_FLAGS", "one validation code per transaction")
        return replace(self, validation_flags=flags)

    def recompute_data_hash(self) -> bytes:
        return data_hash_of(self.txs)

    def to_canonical(self) -> bytes:
        return canonical.encode({
            b"height": self.height,
            b"prev_hash": self.prev_hash,
            b"data_hash": self.data_hash,
            b"ordering_time": self.ordering_time,
            b"txs": [tx.to_value() for tx in self.txs],
            b"flags": [flag.value for flag in self.validation_flags],
        })

    @classmethod
    def from_canonical(cls, data: bytes) -> "Block":
        try:
            m = canonical.decode(data)
            return cls(
                height=m[b"height"],
                prev_hash=m[b"prev_hash"],
                data_hash=m[b"data_hash"],
                ordering_time=m[b"ordering_time"],
                txs=tuple(Transaction.from_value(t) for t in m[b"txs"]),
                validation_flags=tuple(ValidationCode(f) for f in m[b"flags"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise LedgerError("BAD_BLOCK", str(exc)) from None


def data_hash_of(txs) -> bytes:
    return crypto.sha256(canonical.encode([tx.to_value() for tx in txs]))


def hash_block(block: Block) -> bytes:
    """Chain-linking digest; deliberately excludes validation flags."""
    return crypto.sha256(canonical.encode([
        block.height, block.prev_hash, block.data_hash, block.ordering_time,
    ]))
