from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet

from ..errors import LedgerError


@dataclass(frozen=True)
class EndorsementPolicy:
    """m-of-N rule: a transaction needs ``threshold`` valid endorsements
    from distinct eligible peers over its read/write-set digest."""

    threshold: int
    eligible_peers: FrozenSet[str]

    def __post_init__(self):
        if self.threshold < 1 or self.threshold > len(self.eligible_peers):
            raise LedgerError(
                "BAD_CONFIG",
                f"threshold {self.threshold} not in 1..{len(self.eligible_peers)}",
            )

    @classmethod
    def of(cls, threshold: int, peer_ids) -> "EndorsementPolicy":
        return cls(threshold=threshold, eligible_peers=frozenset(peer_ids))
