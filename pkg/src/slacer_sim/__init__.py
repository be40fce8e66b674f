"""Discrete-event simulator for the SLAC and SLACER overlay protocols.

Nodes play a pairwise cooperation game against their overlay neighbors,
copy better-scoring peers (strategy and links, with probabilistic link
retention), and mutate occasionally.  The package measures the network
topologies this produces: cooperative connectivity, clustering, path
lengths, and robustness against node resets.
"""

from .config import ExperimentConfig, load_config, parse_config, save_config, serialize_config
from .engine import GAMES_PER_NODE, RunResult, TraceRow, apply_churn, build_random_topology, run_until
from .game import GameRecord, PdPayoffs, average_utility, play_game, play_round
from .harness import PRESETS, ExperimentResult, PointResult, preset, preset_names, run_experiment
from .metrics import (
    MetricsSettings,
    MetricsSnapshot,
    avg_path_length,
    ccp,
    ccp_bruteforce,
    ccpl,
    ccpl_bruteforce,
    clustering_coefficient,
    cooperation_fraction,
    degree_histogram,
    largest_component,
    measure,
)
from .overlay import (
    GraphSnapshot,
    LinkResult,
    NodeState,
    OverlayGraph,
    Strategy,
    read_snapshot,
    write_snapshot,
)
from .protocol import AdaptOutcome, ProtocolParams, compare_and_adapt
from .sampling import GossipSampler, OracleSampler, make_sampler

__version__ = "0.1.0"

__all__ = [
    "AdaptOutcome",
    "ExperimentConfig",
    "ExperimentResult",
    "GAMES_PER_NODE",
    "GameRecord",
    "GossipSampler",
    "GraphSnapshot",
    "LinkResult",
    "MetricsSettings",
    "MetricsSnapshot",
    "NodeState",
    "OracleSampler",
    "OverlayGraph",
    "PdPayoffs",
    "PointResult",
    "PRESETS",
    "ProtocolParams",
    "RunResult",
    "Strategy",
    "TraceRow",
    "apply_churn",
    "average_utility",
    "avg_path_length",
    "build_random_topology",
    "ccp",
    "ccp_bruteforce",
    "ccpl",
    "ccpl_bruteforce",
    "clustering_coefficient",
    "cooperation_fraction",
    "degree_histogram",
    "largest_component",
    "load_config",
    "make_sampler",
    "measure",
    "parse_config",
    "play_game",
    "play_round",
    "preset",
    "preset_names",
    "read_snapshot",
    "run_experiment",
    "run_until",
    "save_config",
    "serialize_config",
    "write_snapshot",
]
