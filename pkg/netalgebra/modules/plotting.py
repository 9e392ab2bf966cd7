# src/netalgebra/modules/plotting.py

from __future__ import annotations
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .comparison import check_same_grid  # noqa: E402
from .errors import EmptySelection, IoError, UnknownSignal  # noqa: E402
from .timeseries import TimeSeries, partial_path  # noqa: E402

LOG = logging.getLogger(__name__)

LINE_STYLES = ("-", "--", ":", "-.")
SVG_HASH_SALT = "netalgebra"
PANEL_HEIGHT_IN = 2.2
FLAT_PADDING = 1e-3


def series_gid(label: str, signal: str) -> str:
    """SVG group id of one plotted curve."""
    return f"{label}:{signal}"


def _padded_limits(values: np.ndarray) -> Optional[tuple]:
    finite = values[np.isfinite(values)]
    if not finite.size:
        return None
    lo, hi = float(finite.min()), float(finite.max())
    span = hi - lo
    pad = 0.05 * span if span > 0 else max(FLAT_PADDING, 0.05 * abs(lo))
    return lo - pad, hi + pad


def emit_plot_svg(
    ts_list: Sequence[TimeSeries],
    signal_names: Sequence[str],
    path: Union[str, Path],
    labels: Optional[Sequence[str]] = None,
    title: Optional[str] = None,
) -> Path:
    """
    One panel per signal; the first series is drawn solid, the second dashed,
    further ones dotted / dash-dotted. Every curve carries the gid
    ``<label>:<signal>`` so it can be located in the SVG.
    """
    if not ts_list or not signal_names:
        raise EmptySelection("nothing to plot: need at least one series and one signal")
    labels = list(labels) if labels else [f"series{k + 1}" for k in range(len(ts_list))]
    if len(labels) != len(ts_list):
        raise ValueError(f"{len(labels)} labels for {len(ts_list)} series")
    for ts in ts_list[1:]:
        check_same_grid(ts_list[0], ts)
    for name in signal_names:
        for label, ts in zip(labels, ts_list):
            if name not in ts:
                raise UnknownSignal(f"signal {name!r} is not in series {label!r}")

    path = Path(path)
    fig = Figure(figsize=(8.0, PANEL_HEIGHT_IN * len(signal_names) + 0.6))
    axes = fig.subplots(len(signal_names), 1, sharex=True, squeeze=False)[:, 0]
    for ax, name in zip(axes, signal_names):
        stacked = []
        for k, (label, ts) in enumerate(zip(labels, ts_list)):
            values = ts.column(name)
            stacked.append(values)
            (line,) = ax.plot(
                ts.times,
                values,
                linestyle=LINE_STYLES[k % len(LINE_STYLES)],
                linewidth=1.2,
                label=label,
            )
            line.set_gid(series_gid(label, name))
        limits = _padded_limits(np.concatenate(stacked))
        if limits is not None:
            ax.set_ylim(*limits)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize="small")
    axes[-1].set_xlabel("time [s]")
    if title:
        fig.suptitle(title)
    fig.tight_layout()

    tmp = partial_path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
            fig.savefig(tmp, format="svg", metadata={"Date": None})
        tmp.replace(path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {exc}") from exc
    LOG.info("Plotted %d signal(s) from %d series to %s", len(signal_names), len(ts_list), path)
    return path
