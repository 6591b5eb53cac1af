from .sim import FaultKind, NetworkConfig, SimNetwork, TxHandle
from .transcript import ScenarioTranscript
from .scenario import parse_script, run_scenario

__all__ = [
    "FaultKind",
    "NetworkConfig",
    "ScenarioTranscript",
    "SimNetwork",
    "TxHandle",
    "parse_script",
    "run_scenario",
]
