# src/netalgebra/modules/case.py

"""
Declarative case objects shared by every layer: nodes, branches, source
attachments, events and run settings. All objects are frozen; a parsed
case is never mutated, events produce new parameter tables instead.
"""

from __future__ import annotations
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence, Tuple, Union

import numpy as np

from .devices import LoadParams, SlackParams, VscParams, omega0_from_frequency

DeviceParams = Union[VscParams, LoadParams, SlackParams]

DEFAULT_DT = 20e-6
DEFAULT_T_END = 2.0
DEFAULT_RECORD_STRIDE = 50
DEFAULT_NEWTON_TOL = 1e-10
DEFAULT_NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class XYPair:
    """Per-unit components on the common synchronous frame (rotating at ω0)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"XYPair components must be finite, got ({self.x}, {self.y})")

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "XYPair":
        return cls(float(arr[0]), float(arr[1]))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)

    @property
    def magnitude(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def angle(self) -> float:
        return math.atan2(self.y, self.x)


def pairs_to_array(pairs: Sequence[XYPair]) -> np.ndarray:
    """Stack XYPairs into a (k, 2) array; column 0 is x, column 1 is y."""
    if not pairs:
        return np.zeros((0, 2))
    return np.array([[p.x, p.y] for p in pairs], dtype=float)


def array_to_pairs(arr: np.ndarray) -> list:
    return [XYPair(float(r[0]), float(r[1])) for r in np.asarray(arr).reshape(-1, 2)]


class SourceKind(str, Enum):
    VSC = "vsc"
    LOAD = "load"
    SLACK = "slack"


@dataclass(frozen=True)
class SourceAttachment:
    kind: SourceKind
    series_inductance: float
    device_id: str

    @property
    def admittance(self) -> float:
        return 1.0 / self.series_inductance


@dataclass(frozen=True)
class NodeSpec:
    id: str
    attachments: Tuple[SourceAttachment, ...] = ()


@dataclass(frozen=True)
class BranchSpec:
    from_node: str
    to_node: str
    inductance: float

    @property
    def key(self) -> frozenset:
        return frozenset((self.from_node, self.to_node))

    @property
    def label(self) -> str:
        return f"branch{self.from_node}_{self.to_node}"


@dataclass(frozen=True)
class Event:
    time: float
    target: str
    field: str
    value: object


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    record_stride: int = DEFAULT_RECORD_STRIDE
    integrator: str = "rk4"
    newton_tol: float = DEFAULT_NEWTON_TOL
    newton_max_iter: int = DEFAULT_NEWTON_MAX_ITER
    wrap_phase: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if int(self.record_stride) < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.integrator.lower() != "rk4":
            raise ValueError(f"Unsupported integrator {self.integrator!r} (only 'rk4')")


@dataclass(frozen=True)
class NetworkCase:
    nodes: Tuple[NodeSpec, ...]
    branches: Tuple[BranchSpec, ...]
    devices: Mapping[str, DeviceParams] = field(default_factory=dict)
    events: Tuple[Event, ...] = ()
    sim: SimConfig = field(default_factory=SimConfig)
    base_frequency_hz: float = 50.0
    name: str = "case"
    notes: Tuple[str, ...] = ()

    @property
    def omega0(self) -> float:
        return omega0_from_frequency(self.base_frequency_hz)

    def attachments(self) -> Tuple[Tuple[str, SourceAttachment], ...]:
        """(node id, attachment) pairs in declaration order."""
        return tuple((n.id, a) for n in self.nodes for a in n.attachments)

    def device_ids(self, kind: SourceKind) -> Tuple[str, ...]:
        return tuple(a.device_id for _, a in self.attachments() if a.kind is kind)

    def slack_id(self) -> str:
        slacks = self.device_ids(SourceKind.SLACK)
        if len(slacks) != 1:
            raise ValueError(f"Expected exactly one slack attachment, found {len(slacks)}")
        return slacks[0]

    def node_of(self, device_id: str) -> str:
        for node_id, att in self.attachments():
            if att.device_id == device_id:
                return node_id
        raise KeyError(device_id)

