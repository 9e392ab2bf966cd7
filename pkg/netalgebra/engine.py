# src/netalgebra/engine.py

"""
Workflows behind the CLI sub-commands. Each function takes a parsed
NetworkCase and returns plain result objects; printing stays in cli.py.
"""

from __future__ import annotations
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

from .modules.case import NetworkCase, SimConfig, SourceKind
from .modules.comparison import ComparisonReport, compare
from .modules.equilibrium import Equilibrium, find_equilibrium
from .modules.network import DividerProperties, dae_counts, divider_properties, reduce_case
from .modules.simulation import simulate_reduced, simulate_reference
from .modules.system import apply_event
from .modules.timeseries import TimeSeries

LOG = logging.getLogger(__name__)

MODELS = ("reduced", "reference")
DEFAULT_VERIFY_TOL = 1e-6


@dataclass(frozen=True)
class CheckReport:
    name: str
    n_nodes: int
    n_source_nodes: int
    n_intermediate_nodes: int
    n_branches: int
    device_counts: Dict[str, int]
    dae_counts: Tuple[int, int]
    divider: DividerProperties


def with_overrides(
    config: SimConfig,
    dt: Optional[float] = None,
    t_end: Optional[float] = None,
    stride: Optional[int] = None,
    wrap_phase: Optional[bool] = None,
) -> SimConfig:
    """CLI flags win over the case's sim section."""
    changes = {
        "dt": dt,
        "t_end": t_end,
        "record_stride": stride,
        "wrap_phase": wrap_phase,
    }
    return replace(config, **{k: v for k, v in changes.items() if v is not None})


def check_case(case: NetworkCase) -> CheckReport:
    full, net = reduce_case(case)
    return CheckReport(
        name=case.name,
        n_nodes=full.n,
        n_source_nodes=len(full.source_ids),
        n_intermediate_nodes=len(full.intermediate_ids),
        n_branches=len(case.branches),
        device_counts={k.value: len(case.device_ids(k)) for k in SourceKind},
        dae_counts=dae_counts(case),
        divider=divider_properties(full, net),
    )


def settled_case(case: NetworkCase) -> NetworkCase:
    """The case with every event already applied (post-event references)."""
    devices = dict(case.devices)
    for event in sorted(case.events, key=lambda e: e.time):
        devices = apply_event(devices, event)
    return replace(case, devices=devices, events=())


def equilibrium(case: NetworkCase, after_events: bool = False) -> Equilibrium:
    return find_equilibrium(settled_case(case) if after_events else case)


def run_model(
    case: NetworkCase, model: str, config: Optional[SimConfig] = None
) -> TimeSeries:
    config = config or case.sim
    if model == "reduced":
        return simulate_reduced(case, config=config)
    if model == "reference":
        return simulate_reference(case, config=config)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def verify_case(
    case: NetworkCase,
    config: Optional[SimConfig] = None,
    signals: Optional[Sequence[str]] = None,
    parallel: bool = True,
) -> Tuple[ComparisonReport, TimeSeries, TimeSeries]:
    """Run both models on the same grid and compare every shared signal."""
    config = config or case.sim
    if parallel:
        with ProcessPoolExecutor(max_workers=len(MODELS)) as pool:
            futures = [pool.submit(run_model, case, m, config) for m in MODELS]
            reduced, reference = (f.result() for f in futures)
    else:
        reduced, reference = (run_model(case, m, config) for m in MODELS)
    return compare(reduced, reference, signals), reduced, reference
