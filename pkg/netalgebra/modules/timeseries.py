# src/netalgebra/modules/timeseries.py

from __future__ import annotations
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import IoError, MalformedCsv, UnknownSignal

LOG = logging.getLogger(__name__)

TIME_COLUMN = "time_s"
# 17 significant digits survive a text round trip bit-exactly.
FLOAT_FORMAT = "%.17g"
PathLike = Union[str, Path]


@dataclass(frozen=True)
class TimeSeries:
    """Recorded samples: one row per recorded time, one column per signal."""

    times: np.ndarray
    columns: Tuple[str, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.shape != (self.times.size, len(self.columns)):
            raise ValueError(
                f"data shape {self.data.shape} does not match "
                f"{self.times.size} samples x {len(self.columns)} columns"
            )

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise UnknownSignal(f"signal {name!r} is not in this series") from None

    def __contains__(self, name: object) -> bool:
        return name in self.columns

    def select(self, names: Sequence[str]) -> "TimeSeries":
        idx = []
        for name in names:
            if name not in self.columns:
                raise UnknownSignal(f"signal {name!r} is not in this series")
            idx.append(self.columns.index(name))
        return TimeSeries(self.times, tuple(names), self.data[:, idx])

    def final(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.columns, self.data[-1])}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.data, columns=list(self.columns))
        frame.insert(0, TIME_COLUMN, self.times)
        return frame

    @classmethod
    def from_rows(
        cls, times: Iterable[float], columns: Sequence[str], rows: List[np.ndarray]
    ) -> "TimeSeries":
        data = np.vstack(rows) if rows else np.zeros((0, len(columns)))
        return cls(np.asarray(list(times), dtype=float), tuple(columns), data)


def partial_path(dest: PathLike) -> Path:
    dest = Path(dest)
    return dest.with_name(dest.name + ".tmp-write")


def write_timeseries_csv(series: TimeSeries, dest: PathLike) -> Path:
    """Write to a sibling temp file, then rename over ``dest``."""
    dest = Path(dest)
    tmp = partial_path(dest)
    try:
        tmp.parent.mkdir(parents=True, exist_ok=True)
        series.to_frame().to_csv(tmp, index=False, float_format=FLOAT_FORMAT)
        tmp.replace(dest)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {dest}: {exc}") from exc
    LOG.info(
        "Wrote %d samples x %d signals to %s",
        series.n_samples,
        len(series.columns),
        dest,
    )
    return dest


def read_timeseries_csv(path: PathLike) -> TimeSeries:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc

    if frame.empty or frame.columns[0] != TIME_COLUMN:
        raise MalformedCsv(
            f"{path}: expected a non-empty table whose first column is {TIME_COLUMN!r}"
        )
    # pandas renames repeated headers to "name.1"; compare against the raw header
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\r\n").split(",")
    if len(set(header)) != len(header):
        raise MalformedCsv(f"{path}: header repeats a column name")
    non_numeric = [c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])]
    if non_numeric:
        raise MalformedCsv(f"{path}: non-numeric values in columns {non_numeric}")

    times = frame[TIME_COLUMN].to_numpy(dtype=float)
    if np.any(np.diff(times) <= 0):
        raise MalformedCsv(f"{path}: {TIME_COLUMN} is not strictly increasing")
    columns = tuple(str(c) for c in frame.columns[1:])
    data = frame.iloc[:, 1:].to_numpy(dtype=float)
    LOG.debug("Read %d samples x %d signals from %s", times.size, len(columns), path)
    return TimeSeries(times, columns, data)
