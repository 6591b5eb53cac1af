from .blocks import (
    Block,
    Endorsement,
    Transaction,
    ValidationCode,
    hash_block,
)
from .rwset import ReadWriteSet, Version
from .state import WorldState, apply_block
from .store import (
    BlockStore,
    DirectoryBlockStore,
    GenesisConfig,
    MemoryBlockStore,
    make_genesis_block,
)
from .replay import replay, verify_chain

__all__ = [
    "Block",
    "BlockStore",
    "DirectoryBlockStore",
    "Endorsement",
    "GenesisConfig",
    "MemoryBlockStore",
    "ReadWriteSet",
    "Transaction",
    "ValidationCode",
    "Version",
    "WorldState",
    "apply_block",
    "hash_block",
    "make_genesis_block",
    "replay",
    "verify_chain",
]
