"""Experiment configuration: one flat dataclass, a flat key=value file format,
and validation. CLI flags override file values which override defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .game import PdPayoffs
from .metrics import MetricsSettings
from .protocol import ProtocolParams

MODES = ("semi", "full")
SAMPLERS = ("oracle", "gossip")
INITIAL_STRATEGIES = ("defect", "cooperate")
INITIAL_TOPOLOGIES = ("random", "empty")

# keys allowed in sweep_<key> lists
SWEEPABLE = ("n", "w", "m", "mr", "view_size", "seed", "max_cycles",
             "churn_fraction", "mode", "sampler")


@dataclass
class ExperimentConfig:
    # population and protocol
    n: int = 2000
    w: float = 0.9
    m: float = 0.001
    mr: float = 0.01
    view_size: int = 20
    mode: str = "semi"              # semi | full
    compare_prob: float = 0.1       # per-game comparison probability in full mode
    sampler: str = "oracle"         # oracle | gossip
    gossip_cache: int = 20
    gossip_rounds: int = 1
    # payoffs
    payoff_t: float = 1.9
    payoff_r: float = 1.0
    payoff_p: float = 2e-4
    payoff_s: float = 1e-4
    # run control
    seed: int = 1
    replicates: int = 10
    max_cycles: int = 1000
    stop_coop: float | None = 0.98  # None disables the convergence stop
    metrics_interval: int = 10
    initial_strategy: str = "defect"    # defect | cooperate
    initial_topology: str = "random"    # random | empty
    # churn: recurring every churn_interval cycles, or one-shot at churn_at
    # (a cycle number or "converged"); churn_tail fixes the post-shock window
    churn_fraction: float | None = None
    churn_interval: int | None = None
    churn_at: int | str | None = None
    churn_tail: int = 50
    # estimator thresholds
    exact_ccp_limit: int = 4000
    ccp_pair_sample: int = 100_000
    exact_path_limit: int = 4000
    path_source_sample: int = 500
    ccpl_exact_limit: int = 4000
    ccpl_source_sample: int = 500
    # output
    out_dir: str | None = None
    dump_graph: bool = False
    charts: bool = False
    trace_events: bool = False
    workers: int = 1
    # sweep_<key> entries from config files land here
    sweep: dict[str, list] = field(default_factory=dict)

    # -- derived views -------------------------------------------------------

    def protocol_params(self) -> ProtocolParams:
        return ProtocolParams(w=self.w, m=self.m, mr=self.mr)

    def payoffs(self) -> PdPayoffs:
        return PdPayoffs(t=self.payoff_t, r=self.payoff_r,
                         p=self.payoff_p, s=self.payoff_s)

    def metrics_settings(self) -> MetricsSettings:
        return MetricsSettings(
            exact_ccp_limit=self.exact_ccp_limit,
            ccp_pair_sample=self.ccp_pair_sample,
            exact_path_limit=self.exact_path_limit,
            path_source_sample=self.path_source_sample,
            ccpl_exact_limit=self.ccpl_exact_limit,
            ccpl_source_sample=self.ccpl_source_sample,
        )

    def validate(self) -> list[str]:
        """All validation problems at once, empty when the config is runnable."""
        problems = []
        if self.n < 2:
            problems.append(f"n must be >= 2, got {self.n}")
        if self.view_size < 1:
            problems.append(f"view_size must be >= 1, got {self.view_size}")
        problems += self.protocol_params().validate()
        if not 0.0 <= self.compare_prob <= 1.0:
            problems.append(f"compare_prob must be in [0, 1], got {self.compare_prob}")
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}, got '{self.mode}'")
        if self.sampler not in SAMPLERS:
            problems.append(f"sampler must be one of {SAMPLERS}, got '{self.sampler}'")
        if self.gossip_cache < 1:
            problems.append(f"gossip_cache must be >= 1, got {self.gossip_cache}")
        if self.gossip_rounds < 1:
            problems.append(f"gossip_rounds must be >= 1, got {self.gossip_rounds}")
        problems += self.payoffs().validate()
        if self.replicates < 1:
            problems.append(f"replicates must be >= 1, got {self.replicates}")
        if self.max_cycles < 1:
            problems.append(f"max_cycles must be >= 1, got {self.max_cycles}")
        if self.stop_coop is not None and not 0.0 < self.stop_coop <= 1.0:
            problems.append(f"stop_coop must be in (0, 1] or none, got {self.stop_coop}")
        if self.metrics_interval < 1:
            problems.append(f"metrics_interval must be >= 1, got {self.metrics_interval}")
        if self.initial_strategy not in INITIAL_STRATEGIES:
            problems.append(f"initial_strategy must be one of {INITIAL_STRATEGIES}, "
                            f"got '{self.initial_strategy}'")
        if self.initial_topology not in INITIAL_TOPOLOGIES:
            problems.append(f"initial_topology must be one of {INITIAL_TOPOLOGIES}, "
                            f"got '{self.initial_topology}'")
        if self.churn_fraction is not None and not 0.0 <= self.churn_fraction <= 1.0:
            problems.append(f"churn_fraction must be in [0, 1], got {self.churn_fraction}")
        if self.churn_interval is not None and self.churn_interval < 1:
            problems.append(f"churn_interval must be >= 1, got {self.churn_interval}")
        if self.churn_interval is not None and self.churn_at is not None:
            problems.append("churn_interval and churn_at are mutually exclusive")
        if (self.churn_interval is not None or self.churn_at is not None) \
                and self.churn_fraction is None:
            problems.append("churn schedule given without churn_fraction")
        if isinstance(self.churn_at, str) and self.churn_at != "converged":
            problems.append(f"churn_at must be a cycle number or 'converged', "
                            f"got '{self.churn_at}'")
        if isinstance(self.churn_at, int) and self.churn_at < 1:
            problems.append(f"churn_at cycle must be >= 1, got {self.churn_at}")
        if self.churn_tail < 0:
            problems.append(f"churn_tail must be >= 0, got {self.churn_tail}")
        for name in ("ccp_pair_sample", "path_source_sample", "ccpl_source_sample"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("exact_ccp_limit", "exact_path_limit", "ccpl_exact_limit"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        for key, values in self.sweep.items():
            if key not in SWEEPABLE:
                problems.append(f"sweep key '{key}' not supported "
                                f"(supported: {', '.join(SWEEPABLE)})")
            elif not values:
                problems.append(f"sweep_{key} is empty")
        return problems


# -- flat text format ---------------------------------------------------------


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _parse_scalar(text: str):
    low = text.lower()
    if low == "none":
        return None
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def serialize_config(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        if f.name == "sweep":
            continue
        lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    for key, values in config.sweep.items():
        lines.append(f"sweep_{key} = {', '.join(_format_value(v) for v in values)}")
    return "\n".join(lines) + "\n"


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_config(config))


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse 'key = value' lines ('#' comments allowed) on top of base/defaults."""
    config = dataclasses.replace(base) if base else ExperimentConfig()
    config.sweep = dict(config.sweep)
    known = {f.name for f in fields(ExperimentConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got '{raw.strip()}'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("sweep_"):
            sweep_key = key[len("sweep_"):]
            config.sweep[sweep_key] = [_parse_scalar(v.strip())
                                       for v in value.split(",") if v.strip()]
            continue
        if key not in known or key == "sweep":
            raise ValueError(f"line {lineno}: unknown key '{key}'")
        config = dataclasses.replace(config, **{key: _parse_scalar(value)})
    return config


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), base=base)


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Return a copy with the given non-None fields replaced."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    sweep = updates.pop("sweep", None)
    out = dataclasses.replace(config, **updates)
    if sweep is not None:
        out.sweep = dict(sweep)
    return out
