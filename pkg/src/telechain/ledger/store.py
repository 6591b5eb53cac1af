"""Block persistence and the genesis configuration.

On disk a chain is a directory of append-only files:

    genesis.cfg       key=value text (hash algorithm, signature scheme,
                      endorsement threshold, block cutting, analytics k)
    blocks/%08d.blk   canonical encoding of one block each
    state.snapshot    canonical world-state snapshot (written periodically)

Block files are never rewritten after commit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Optional

from .. import canonical, crypto
from ..errors import LedgerError
from .blocks import Block, ZERO_HASH, hash_block


@dataclass(frozen=True)
class GenesisConfig:
    hash_algo: str = "sha256"
    sig_scheme: str = "ed25519"
    policy_threshold: int = 2
    block_max_txs: int = 10
    block_max_wait: int = 5
    analytics_k: int = 5
    n_peers: int = 3
    snapshot_interval: int = 16

    _KEYS = {
        "hash.algo": ("hash_algo", str),
        "sig.scheme": ("sig_scheme", str),
        "policy.threshold": ("policy_threshold", int),
        "block.max_txs": ("block_max_txs", int),
        "block.max_wait": ("block_max_wait", int),
        "analytics.k": ("analytics_k", int),
        "network.peers": ("n_peers", int),
        "snapshot.interval": ("snapshot_interval", int),
    }

    def validate(self) -> "GenesisConfig":
        if self.hash_algo not in crypto.HASH_ALGORITHMS:
            raise LedgerError("BAD_CONFIG", f"unknown hash algorithm {self.hash_algo!r}")
        if self.sig_scheme not in crypto.SIGNATURE_SCHEMES:
            raise LedgerError("BAD_CONFIG", f"unknown signature scheme {self.sig_scheme!r}")
        if self.policy_threshold < 1:
            raise LedgerError("BAD_CONFIG", "policy.threshold must be >= 1")
        if self.policy_threshold > self.n_peers:
            raise LedgerError("BAD_CONFIG", "policy.threshold exceeds peer count")
        if self.block_max_txs < 1 or self.block_max_wait < 1:
            raise LedgerError("BAD_CONFIG", "block cutting parameters must be >= 1")
        if self.analytics_k < 1:
            raise LedgerError("BAD_CONFIG", "analytics.k must be >= 1")
        if self.snapshot_interval < 1:
            raise LedgerError("BAD_CONFIG", "snapshot.interval must be >= 1")
        return self

    def to_value(self) -> dict:
        out = {}
        for key, (attr, _) in self._KEYS.items():
            out[key.encode()] = str(getattr(self, attr))
        return out

    def to_text(self) -> str:
        lines = [f"{key}={str(getattr(self, attr))}"
                 for key, (attr, _) in sorted(self._KEYS.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GenesisConfig":
        values = {}
        for raw_line in text.splitlines():
            line = raw_line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LedgerError("BAD_CONFIG", f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in cls._KEYS:
                raise LedgerError("BAD_CONFIG", f"unknown key {key!r}")
            attr, typ = cls._KEYS[key]
            try:
                values[attr] = typ(value.strip())
            except ValueError:
                raise LedgerError("BAD_CONFIG", f"bad value for {key}: {value!r}") from None
        return cls(**values).validate()


def make_genesis_block(cfg: GenesisConfig) -> Block:
    """Block 0: no transactions, data hash commits to the configuration."""
    return Block(
        height=0,
        prev_hash=ZERO_HASH,
        data_hash=crypto.sha256(canonical.encode(cfg.to_value())),
        ordering_time=0,
        txs=(),
        validation_flags=(),
    )


class BlockStore:
    """Append-only chain of blocks; subclasses provide the byte storage."""

    def __init__(self):
        self._tip: Optional[Block] = None

    def height(self) -> int:
        return -1 if self._tip is None else self._tip.height

    def tip(self) -> Optional[Block]:
        return self._tip

    def append(self, block: Block) -> None:
        tip = self._tip
        if tip is None:
            if block.height != 0:
                raise LedgerError("BAD_HEIGHT", f"first block must be 0, got {block.height}")
            if block.prev_hash != ZERO_HASH:
                raise LedgerError("BROKEN_LINK", "genesis prev_hash must be all zeros")
        else:
            if block.height != tip.height + 1:
                raise LedgerError(
                    "BAD_HEIGHT", f"tip at {tip.height}, got {block.height}")
            if block.prev_hash != hash_block(tip):
                raise LedgerError("BROKEN_LINK", f"prev_hash mismatch at {block.height}")
        self._write(block)
        self._tip = block

    def get(self, height: int) -> Block:
        raise NotImplementedError

    def blocks(self) -> Iterator[Block]:
        for h in range(self.height() + 1):
            yield self.get(h)

    def _write(self, block: Block) -> None:
        raise NotImplementedError


class MemoryBlockStore(BlockStore):
    def __init__(self):
        super().__init__()
        self._blocks: list[Block] = []

    def _write(self, block: Block) -> None:
        self._blocks.append(block)

    def get(self, height: int) -> Block:
        try:
            return self._blocks[height]
        except IndexError:
            raise LedgerError("UNKNOWN_BLOCK", str(height)) from None


class DirectoryBlockStore(BlockStore):
    """One canonical block file per height under <root>/blocks/."""

    def __init__(self, root: str):
        super().__init__()
        self.root = root
        self.blocks_dir = os.path.join(root, "blocks")
        os.makedirs(self.blocks_dir, exist_ok=True)
        heights = sorted(
            int(name[:-4]) for name in os.listdir(self.blocks_dir)
            if name.endswith(".blk")
        )
        for expected, actual in enumerate(heights):
            if expected != actual:
                raise LedgerError("BAD_HEIGHT", f"missing block file for height {expected}")
        if heights:
            self._tip = self.get(heights[-1])

    def _path(self, height: int) -> str:
        return os.path.join(self.blocks_dir, f"{height:08d}.blk")

    def _write(self, block: Block) -> None:
        path = self._path(block.height)
        if os.path.exists(path):
            raise LedgerError("BAD_HEIGHT", f"block file exists: {path}")
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(block.to_canonical())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def get(self, height: int) -> Block:
        path = self._path(height)
        if not os.path.exists(path):
            raise LedgerError("UNKNOWN_BLOCK", str(height))
        with open(path, "rb") as fh:
            return Block.from_canonical(fh.read())

    # genesis.cfg and state.snapshot live next to the blocks directory

    def write_genesis_config(self, cfg: GenesisConfig) -> None:
        with open(os.path.join(self.root, "genesis.cfg"), "w") as fh:
            fh.write(cfg.to_text())

    def read_genesis_config(self) -> GenesisConfig:
        path = os.path.join(self.root, "genesis.cfg")
        if not os.path.exists(path):
            raise LedgerError("BAD_CONFIG", f"missing genesis.cfg in {self.root}")
        with open(path) as fh:
            return GenesisConfig.from_text(fh.read())

    def write_snapshot(self, snapshot: bytes) -> None:
        path = os.path.join(self.root, "state.snapshot")
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(snapshot)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def read_snapshot(self) -> Optional[bytes]:
        path = os.path.join(self.root, "state.snapshot")
        if not os.path.exists(path):
            return None
        with open(path, "rb") as fh:
            return fh.read()
