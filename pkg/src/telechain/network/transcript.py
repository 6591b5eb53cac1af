"""Scenario transcripts: the ordered record of everything a run did.

The canonical binary form is bit-identical across runs with the same script
and seed, and it embeds full block bytes, so replaying the transcript alone
reproduces the final world state.  The text dump is for humans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

from .. import canonical
from ..ledger.blocks import Block
from ..ledger.replay import verify_chain
from ..ledger.state import WorldState, apply_block
from ..ledger.store import GenesisConfig


@dataclass
class Metrics:
    submitted: int = 0
    committed: int = 0
    by_code: dict = field(default_factory=dict)
    latency_mean: float = 0.0
    latency_p95: int = 0
    first_tick: int = 0
    final_tick: int = 0
    chain_height: int = 0
    throughput_tx_per_tick: float = 0.0

    def to_value(self) -> dict:
        return {
            b"submitted": self.submitted,
            b"committed": self.committed,
            b"by_code": {code.encode(): count for code, count in sorted(self.by_code.items())},
            b"latency_mean_milli": int(self.latency_mean * 1000),
            b"latency_p95": self.latency_p95,
            b"final_tick": self.final_tick,
            b"chain_height": self.chain_height,
            b"throughput_milli": int(self.throughput_tx_per_tick * 1000),
        }

    def to_json(self) -> dict:
        return {
            "submitted": self.submitted,
            "committed": self.committed,
            "by_code": dict(sorted(self.by_code.items())),
            "latency_mean": round(self.latency_mean, 3),
            "latency_p95": self.latency_p95,
            "final_tick": self.final_tick,
            "chain_height": self.chain_height,
            "throughput_tx_per_tick": round(self.throughput_tx_per_tick, 3),
        }


class ScenarioTranscript:
    def __init__(self, cfg: GenesisConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.events: List[dict] = []
        self.metrics = Metrics()
        self.failures: List[str] = []
        self._submit_ticks: dict[bytes, int] = {}
        self._latencies: List[int] = []

    # --- recording hooks ---------------------------------------------------

    def record(self, kind: str, **fields) -> None:
        event = {b"kind": kind}
        for key, value in fields.items():
            event[key.encode()] = value
        self.events.append(event)

    def on_submit(self, tick: int, tx_id: bytes) -> None:
        self.metrics.submitted += 1
        self._submit_ticks[tx_id] = tick

    def on_block(self, tick: int, block: Block) -> None:
        from ..ledger.blocks import hash_block
        self.record(
            "block",
            tick=tick,
            height=block.height,
            block_hash=hash_block(block),
            flags=[flag.value for flag in block.validation_flags],
            block=block.to_canonical(),
        )
        for tx, flag in zip(block.txs, block.validation_flags):
            self.metrics.committed += 1
            self.metrics.by_code[flag.value] = self.metrics.by_code.get(flag.value, 0) + 1
            submit_tick = self._submit_ticks.get(tx.tx_id)
            if submit_tick is not None:
                self._latencies.append(max(0, tick - submit_tick))

    def fail(self, message: str) -> None:
        self.failures.append(message)
        self.record("failure", message=message)

    @property
    def ok(self) -> bool:
        return not self.failures

    def finalize(self, final_tick: int, chain_height: int) -> None:
        m = self.metrics
        m.final_tick = final_tick
        m.chain_height = chain_height
        if self._latencies:
            ordered = sorted(self._latencies)
            m.latency_mean = sum(ordered) / len(ordered)
            m.latency_p95 = ordered[max(0, -(-len(ordered) * 95 // 100) - 1)]
        if final_tick > 0:
            m.throughput_tx_per_tick = m.committed / final_tick
        self.record("metrics", **{
            key.decode(): value for key, value in m.to_value().items()
        })

    # --- serialization -------------------------------------------------------

    def to_canonical_bytes(self) -> bytes:
        return canonical.encode({
            b"genesis": self.cfg.to_text(),
            b"seed": self.seed,
            b"events": self.events,
        })

    def to_text(self) -> str:
        lines = [f"# scenario transcript (seed={self.seed})"]
        for event in self.events:
            kind = event[b"kind"]
            parts = []
            for key in sorted(k for k in event if k != b"kind"):
                value = event[key]
                if isinstance(value, bytes):
                    value = value.hex() if len(value) <= 40 else f"<{len(value)} bytes>"
                parts.append(f"{key.decode()}={value}")
            lines.append(f"{kind} " + " ".join(parts))
        return "\n".join(lines) + "\n"

    def blocks(self) -> List[Block]:
        return [Block.from_canonical(e[b"block"]) for e in self.events
                if e[b"kind"] == "block"]

    def replay_state(self) -> WorldState:
        """Rebuild world state from the embedded blocks (transcript oracle)."""
        blocks = self.blocks()
        report = verify_chain(blocks)
        if not report:
            raise AssertionError(f"transcript chain invalid: {report.reason}")
        state = WorldState()
        for block in blocks:
            apply_block(state, block)
        return state
