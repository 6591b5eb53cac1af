"""Audit-trail extraction and counters from committed blocks.

Everything here is a pure function of the block sequence: regenerating from
a replayed chain yields identical results, which is both an invariant and
the way the gateway stays stateless about trust.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from ..engine.context import decode_response
from ..ledger.blocks import Block, ValidationCode

# namespaces whose first path segment is a subject id
_SUBJECT_NAMESPACES = (b"id/", b"era/", b"acc/", b"con/", b"rpi/", b"msg/", b"bal/")


@dataclass(frozen=True)
class AuditEntry:
    height: int
    tx_index: int
    tx_id: bytes
    code: ValidationCode
    contract: str
    function: str
    creator: str
    patients: Tuple[str, ...]
    logical_time: int
    error_code: str = ""

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "tx_index": self.tx_index,
            "tx_id": self.tx_id.hex(),
            "code": self.code.value,
            "error_code": self.error_code,
            "contract": self.contract,
            "function": self.function,
            "creator": self.creator,
            "patients": list(self.patients),
            "logical_time": self.logical_time,
        }


def _subjects_in_keys(keys: Iterable[bytes]) -> Tuple[str, ...]:
    subjects = set()
    for key in keys:
        for namespace in _SUBJECT_NAMESPACES:
            if key.startswith(namespace):
                segment = key[len(namespace):].split(b"/", 1)[0]
                try:
                    subjects.add(segment.decode("utf-8"))
                except UnicodeDecodeError:
                    pass
                break
    return tuple(sorted(subjects))


def _tx_keys(tx) -> list[bytes]:
    return [key for key, _ in tx.rwset.reads] + [key for key, _ in tx.rwset.writes]


def iter_entries(blocks: Iterable[Block]) -> Iterable[AuditEntry]:
    for block in blocks:
        for tx_index, (tx, code) in enumerate(zip(block.txs, block.validation_flags)):
            error_code = ""
            if code is ValidationCode.CONTRACT_ERROR:
                try:
                    _, error_code, _ = decode_response(tx.response)
                except Exception:
                    error_code = "UNKNOWN"
            yield AuditEntry(
                height=block.height,
                tx_index=tx_index,
                tx_id=tx.tx_id,
                code=code,
                contract=tx.contract,
                function=tx.function,
                creator=tx.creator.subject_id,
                patients=_subjects_in_keys(_tx_keys(tx)),
                logical_time=block.ordering_time,
                error_code=error_code,
            )


def audit_trail(blocks: Iterable[Block], patient_id: str,
                from_height: int = 0, to_height: Optional[int] = None) -> List[AuditEntry]:
    """Every committed transaction touching the patient, in commit order.

    A transaction "touches" the patient when the patient id appears inside
    any read or written key, or the patient created the transaction.  Denied
    and invalid attempts are included: they committed with a non-VALID flag.
    """
    needle = patient_id.encode("utf-8")
    out = []
    for entry_block in blocks:
        if entry_block.height < from_height:
            continue
        if to_height is not None and entry_block.height > to_height:
            continue
        for tx_index, (tx, code) in enumerate(
                zip(entry_block.txs, entry_block.validation_flags)):
            touched = tx.creator.subject_id == patient_id or any(
                needle in key for key in _tx_keys(tx))
            if not touched:
                continue
            error_code = ""
            if code is ValidationCode.CONTRACT_ERROR:
                try:
                    _, error_code, _ = decode_response(tx.response)
                except Exception:
                    error_code = "UNKNOWN"
            out.append(AuditEntry(
                height=entry_block.height,
                tx_index=tx_index,
                tx_id=tx.tx_id,
                code=code,
                contract=tx.contract,
                function=tx.function,
                creator=tx.creator.subject_id,
                patients=_subjects_in_keys(_tx_keys(tx)),
                logical_time=entry_block.ordering_time,
                error_code=error_code,
            ))
    return out


def metrics_from_blocks(blocks: Iterable[Block]) -> dict:
    """Monotone counters and latency stats derivable from the chain alone.

    Latency is ordering_time - client_time per committed transaction
    (clamped at zero: client_time is informational and untrusted).
    """
    height = -1
    committed = 0
    by_code: dict[str, int] = {}
    latencies: list[int] = []
    for block in blocks:
        height = max(height, block.height)
        for tx, code in zip(block.txs, block.validation_flags):
            committed += 1
            by_code[code.value] = by_code.get(code.value, 0) + 1
            latencies.append(max(0, block.ordering_time - tx.client_time))
    stats = {"mean": 0.0, "p95": 0}
    if latencies:
        ordered = sorted(latencies)
        stats["mean"] = sum(ordered) / len(ordered)
        stats["p95"] = ordered[max(0, -(-len(ordered) * 95 // 100) - 1)]
    return {
        "chain_height": height,
        "committed": committed,
        "by_code": dict(sorted(by_code.items())),
        "latency_ticks": stats,
    }
