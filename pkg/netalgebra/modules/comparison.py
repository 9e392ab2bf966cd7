# src/netalgebra/modules/comparison.py

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptySelection, GridMismatch, UnknownSignal
from .timeseries import TimeSeries

LOG = logging.getLogger(__name__)

GRID_ATOL = 1e-12


@dataclass(frozen=True)
class SignalDeviation:
    max_abs: float
    rms: float
    time_of_max: float


@dataclass(frozen=True)
class ComparisonReport:
    deviations: Dict[str, SignalDeviation]

    def __getitem__(self, name: str) -> SignalDeviation:
        return self.deviations[name]

    @property
    def signals(self) -> Tuple[str, ...]:
        return tuple(self.deviations)

    def worst(self) -> Tuple[str, SignalDeviation]:
        name = max(self.deviations, key=lambda k: self.deviations[k].max_abs)
        return name, self.deviations[name]

    def failures(self, tol: float) -> List[str]:
        # NaN deviations count as failures
        return [k for k, d in self.deviations.items() if not d.max_abs <= tol]

    def within(self, tol: float) -> bool:
        return not self.failures(tol)


def check_same_grid(ts_a: TimeSeries, ts_b: TimeSeries) -> None:
    if ts_a.n_samples != ts_b.n_samples:
        raise GridMismatch(
            f"sample counts differ ({ts_a.n_samples} vs {ts_b.n_samples}); "
            "use the same dt, t_end and stride"
        )
    gap = np.abs(ts_a.times - ts_b.times)
    if gap.size and float(gap.max()) > GRID_ATOL * max(1.0, float(np.abs(ts_a.times).max())):
        k = int(np.argmax(gap))
        raise GridMismatch(
            f"sample times differ at row {k}: {ts_a.times[k]!r} vs {ts_b.times[k]!r}"
        )


def shared_signals(ts_a: TimeSeries, ts_b: TimeSeries) -> List[str]:
    other = set(ts_b.columns)
    return [name for name in ts_a.columns if name in other]


def compare(
    ts_a: TimeSeries, ts_b: TimeSeries, signal_names: Optional[Sequence[str]] = None
) -> ComparisonReport:
    """Per-signal max-abs and RMS deviation on a common sample grid."""
    check_same_grid(ts_a, ts_b)
    names = list(signal_names) if signal_names else shared_signals(ts_a, ts_b)
    if not names:
        raise EmptySelection("the two series share no signals")
    for name in names:
        for label, ts in (("first", ts_a), ("second", ts_b)):
            if name not in ts:
                raise UnknownSignal(f"signal {name!r} missing from the {label} series")

    deviations: Dict[str, SignalDeviation] = {}
    for name in names:
        diff = np.abs(ts_a.column(name) - ts_b.column(name))
        k = int(np.argmax(diff))
        deviations[name] = SignalDeviation(
            max_abs=float(diff[k]),
            rms=float(np.sqrt(np.mean(diff**2))),
            time_of_max=float(ts_a.times[k]),
        )
    report = ComparisonReport(deviations)
    name, worst = report.worst()
    LOG.info(
        "Compared %d signal(s); largest deviation %.3e on %s at t=%g s",
        len(names),
        worst.max_abs,
        name,
        worst.time_of_max,
    )
    return report
