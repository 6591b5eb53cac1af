from .proposal import Proposal, assemble_transaction, build_proposal
from .policy import EndorsementPolicy
from .context import ContractContext, decode_response, error_response, ok_response
from .simulate import simulate
from .endorse import PeerIdentity, ProposalResponse, endorse
from .orderer import BlockCutter
from .validate import validate_block
from .node import Node

__all__ = [
    "BlockCutter",
    "ContractContext",
    "EndorsementPolicy",
    "Node",
    "PeerIdentity",
    "Proposal",
    "ProposalResponse",
    "assemble_transaction",
    "build_proposal",
    "decode_response",
    "endorse",
    "error_response",
    "ok_response",
    "simulate",
    "validate_block",
]
