# src/netalgebra/modules/system.py

"""
State layouts and right-hand sides of the two system models.

ReducedModel
    node ODEs only; terminal voltages come from the Kron-reduced divider.
ReferenceModel
    every inductor current is a state (filters, loads, lines, grid branch);
    node voltages are solved from the unreduced admittance system and no
    Schur-complement code path is shared with the reduced model.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .case import DeviceParams, Event, NetworkCase, SourceKind, XYPair
from .devices import (
    LOAD_STATE_NAMES,
    VSC_STATE_NAMES,
    LoadParams,
    LoadState,
    SlackParams,
    VscParams,
    VscState,
    inductor_current_derivative,
    load_derivative,
    load_internal_voltage,
    stack_params,
    vsc_derivative,
    vsc_open_loop_voltage,
    xy_to_dq,
)
from .errors import InconsistentInitialState, SingularNetwork, UnknownField, UnknownTarget
from .network import (
    AttachmentSlot,
    FullAdmittance,
    ReducedNetwork,
    checked_lu_factor,
    intermediate_voltage_array,
    slack_injection,
)

LOG = logging.getLogger(__name__)

KCL_CONSISTENCY_TOL = 1e-9

StateKey = Tuple[str, str]


@dataclass(frozen=True)
class SimState:
    """Flat state vector plus the (device id, state name) -> offset map."""

    x: np.ndarray
    index: Mapping[StateKey, int]
    time: float = 0.0
    reference: bool = False

    def __getitem__(self, key: StateKey) -> float:
        return float(self.x[self.index[key]])

    def __len__(self) -> int:
        return int(self.x.size)

    def as_dict(self) -> Dict[str, float]:
        return {f"{dev}.{name}": float(self.x[k]) for (dev, name), k in self.index.items()}


class StateLayout:
    """Offsets of every state; VSC blocks, then loads, then (reference) branches and grid."""

    def __init__(self, case: NetworkCase, reference: bool = False) -> None:
        self.reference = reference
        self.vsc_ids = case.device_ids(SourceKind.VSC)
        self.load_ids = case.device_ids(SourceKind.LOAD)
        self.slack_id = case.slack_id()
        self.branches = tuple(case.branches) if reference else ()

        index: Dict[StateKey, int] = {}
        for dev in self.vsc_ids:
            for name in VSC_STATE_NAMES:
                index[(dev, name)] = len(index)
        for dev in self.load_ids:
            for name in LOAD_STATE_NAMES:
                index[(dev, name)] = len(index)
        self.n_reduced = len(index)
        for br in self.branches:
            index[(br.label, "i_x")] = len(index)
            index[(br.label, "i_y")] = len(index)
        if reference:
            index[(self.slack_id, "i_x")] = len(index)
            index[(self.slack_id, "i_y")] = len(index)
        self.index = index
        self.size = len(index)

        n_vsc = len(VSC_STATE_NAMES) * len(self.vsc_ids)
        n_branch = 2 * len(self.branches)
        self.vsc_slice = slice(0, n_vsc)
        self.load_slice = slice(n_vsc, self.n_reduced)
        self.branch_slice = slice(self.n_reduced, self.n_reduced + n_branch)
        self.slack_slice = slice(self.n_reduced + n_branch, self.size)

    def state_names(self) -> List[str]:
        return [f"{dev}.{name}" for dev, name in self.index]

    def wrap(self, x: np.ndarray, time: float = 0.0) -> SimState:
        x = np.array(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"state vector has shape {x.shape}, expected ({self.size},)")
        return SimState(x, dict(self.index), time, self.reference)


# ---------------- events ----------------
def _coerce(current: object, value: object) -> object:
    if isinstance(current, (bool, np.bool_)):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    return float(value)  # type: ignore[arg-type]


def apply_event(
    params: Mapping[str, DeviceParams], event: Event
) -> Dict[str, DeviceParams]:
    """Return a new parameter table with ``event`` applied; states are untouched."""
    if event.target not in params:
        raise UnknownTarget(f"event targets unknown device {event.target!r}")
    device = params[event.target]
    names = {f.name for f in fields(device)}
    if event.field not in names:
        raise UnknownField(
            f"device {event.target!r} ({device.kind}) has no field {event.field!r}"
        )
    if event.field in device.structural_fields:
        raise UnknownField(
            f"{event.target}.{event.field} is a network inductance and cannot be stepped"
        )
    value = _coerce(getattr(device, event.field), event.value)
    table = dict(params)
    table[event.target] = replace(device, **{event.field: value})
    return table


# ---------------- models ----------------
def _wrap_angle(angle: np.ndarray) -> np.ndarray:
    return np.arctan2(np.sin(angle), np.cos(angle))


class _SourceDynamics:
    """Device side shared by both models: internal voltages, node ODEs, signals."""

    def __init__(
        self,
        case: NetworkCase,
        devices: Mapping[str, DeviceParams],
        attachments: Sequence[AttachmentSlot],
        source_ids: Sequence[str],
        intermediate_ids: Sequence[str],
        layout: StateLayout,
        wrap_phase: bool = False,
    ) -> None:
        self.omega0 = case.omega0
        self.layout = layout
        self.devices = dict(devices)
        self.source_ids = tuple(source_ids)
        self.intermediate_ids = tuple(intermediate_ids)
        self.wrap_phase = wrap_phase

        col_of = {a.device_id: c for c, a in enumerate(attachments)}
        self._vsc_cols = np.array([col_of[d] for d in layout.vsc_ids], dtype=int)
        self._vsc_rows = np.array([attachments[c].row for c in self._vsc_cols], dtype=int)
        self._load_cols = np.array([col_of[d] for d in layout.load_ids], dtype=int)
        self._load_rows = np.array([attachments[c].row for c in self._load_cols], dtype=int)
        self._slack_col = col_of[layout.slack_id]
        self._slack_row = attachments[self._slack_col].row

        vsc_params: List[VscParams] = [devices[d] for d in layout.vsc_ids]  # type: ignore[misc]
        load_params: List[LoadParams] = [devices[d] for d in layout.load_ids]  # type: ignore[misc]
        self._vp: Optional[VscParams] = stack_params(vsc_params) if vsc_params else None
        self._lp: Optional[LoadParams] = stack_params(load_params) if load_params else None
        self._ff = np.array([float(p.feedforward_enabled) for p in vsc_params])

        self.slack: SlackParams = devices[layout.slack_id]  # type: ignore[assignment]
        self.slack_angle = self.slack.angle
        self._e_base = np.zeros((len(attachments), 2))
        self._e_base[self._slack_col] = self.slack.u_g

    # -- algebraic side, supplied by the concrete model
    def _voltages(self, e_att: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _network_rates(self, x: np.ndarray, u: np.ndarray, out: np.ndarray) -> None:
        return None

    def _feedforward_matrix(self, n_rows: int) -> np.ndarray:
        """P with e_att = a + P·u: unit entries for VSCs that feed u_t forward."""
        P = np.zeros((self._e_base.shape[0], n_rows))
        P[self._vsc_cols, self._vsc_rows] = self._ff
        return P

    @property
    def has_feedforward(self) -> bool:
        return bool(self._ff.any())

    def _open_loop(self, x: np.ndarray):
        e = self._e_base.copy()
        vs = ls = None
        if self._vp is not None:
            xv = x[self.layout.vsc_slice].reshape(-1, len(VSC_STATE_NAMES))
            vs = VscState(*xv.T)
            e_x, e_y = vsc_open_loop_voltage(vs, self._vp, self.omega0)
            e[self._vsc_cols, 0] = e_x
            e[self._vsc_cols, 1] = e_y
        if self._lp is not None:
            xl = x[self.layout.load_slice].reshape(-1, len(LOAD_STATE_NAMES))
            ls = LoadState(*xl.T)
            e_x, e_y = load_internal_voltage(ls, self._lp)
            e[self._load_cols, 0] = e_x
            e[self._load_cols, 1] = e_y
        return vs, ls, e

    def derivative(self, t: float, x: np.ndarray) -> np.ndarray:
        vs, ls, e = self._open_loop(x)
        u = self._voltages(e)
        out = np.empty_like(x)
        if vs is not None:
            uv = u[self._vsc_rows]
            dv = vsc_derivative(vs, uv[:, 0], uv[:, 1], self._vp, self.omega0)
            out[self.layout.vsc_slice] = np.column_stack(dv).ravel()
        if ls is not None:
            ul = u[self._load_rows]
            dl = load_derivative(ls, ul[:, 0], ul[:, 1], self._lp, self.omega0)
            out[self.layout.load_slice] = np.column_stack(dl).ravel()
        self._network_rates(x, u, out)
        return out

    def node_voltages(self, x: np.ndarray) -> np.ndarray:
        """Voltages of every node (sources, then intermediates) as an (n, 2) array."""
        raise NotImplementedError

    def internal_voltages(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        _, _, e = self._open_loop(x)
        if self.has_feedforward:
            e[self._vsc_cols] += self._ff[:, None] * u[self._vsc_rows]
        return e

    # -- recording
    def _slack_current(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _extra_names(self) -> List[str]:
        return []

    def _extra_values(self, x: np.ndarray, u: np.ndarray) -> List[float]:
        return []

    def signal_names(self) -> List[str]:
        names = self.layout.state_names()[: self.layout.n_reduced]
        for dev in self.layout.vsc_ids:
            names += [f"{dev}.i_d", f"{dev}.i_q", f"{dev}.phi", f"{dev}.e_angle"]
        for node in self.source_ids + self.intermediate_ids:
            names += [f"node{node}.ut_x", f"node{node}.ut_y"]
        names += [f"{self.layout.slack_id}.i_x", f"{self.layout.slack_id}.i_y"]
        return names + self._extra_names()

    def sample(self, x: np.ndarray) -> np.ndarray:
        u = self.node_voltages(x)
        values: List[float] = list(x[: self.layout.n_reduced])
        if self._vp is not None:
            xv = x[self.layout.vsc_slice].reshape(-1, len(VSC_STATE_NAMES))
            i_d, i_q = xy_to_dq(xv[:, 0], xv[:, 1], xv[:, 5])
            phi = xv[:, 5] - self.slack_angle
            if self.wrap_phase:
                phi = _wrap_angle(phi)
            e = self.internal_voltages(x, u)[self._vsc_cols]
            e_angle = _wrap_angle(np.arctan2(e[:, 1], e[:, 0]) - self.slack_angle)
            for k in range(xv.shape[0]):
                values += [i_d[k], i_q[k], phi[k], e_angle[k]]
        values += list(u.ravel())
        values += list(self._slack_current(x))
        values += self._extra_values(x, u)
        return np.array(values, dtype=float)


class ReducedModel(_SourceDynamics):
    def __init__(
        self,
        case: NetworkCase,
        devices: Mapping[str, DeviceParams],
        net: ReducedNetwork,
        wrap_phase: bool = False,
    ) -> None:
        super().__init__(
            case,
            devices,
            net.attachments,
            net.source_ids,
            net.intermediate_ids,
            StateLayout(case),
            wrap_phase,
        )
        self.net = net
        self._W = np.array(net.attachment_divider)
        self._factor = None
        if self.has_feedforward:
            # u = A·(a + P·u)  ->  (I - A·P)·u = A·a
            K = np.eye(net.s) - self._W @ self._feedforward_matrix(net.s)
            self._factor = checked_lu_factor(K, "feedforward loop (I - A·P)", SingularNetwork)

    def _voltages(self, e_att: np.ndarray) -> np.ndarray:
        rhs = self._W @ e_att
        if self._factor is None:
            return rhs
        return sla.lu_solve(self._factor, rhs)

    def terminal_voltages(self, x: np.ndarray) -> np.ndarray:
        _, _, e = self._open_loop(x)
        return self._voltages(e)

    def node_voltages(self, x: np.ndarray) -> np.ndarray:
        u_s = self.terminal_voltages(x)
        u_m = intermediate_voltage_array(self.net, u_s)
        return np.vstack([u_s, u_m])

    def _slack_current(self, x: np.ndarray) -> np.ndarray:
        xv = x[self.layout.vsc_slice].reshape(-1, len(VSC_STATE_NAMES))
        xl = x[self.layout.load_slice].reshape(-1, len(LOAD_STATE_NAMES))
        i_g = slack_injection(
            [XYPair(float(r[0]), float(r[1])) for r in xv],
            [XYPair(float(r[0]), float(r[1])) for r in xl],
        )
        return np.array(i_g.as_tuple())


class ReferenceModel(_SourceDynamics):
    def __init__(
        self,
        case: NetworkCase,
        devices: Mapping[str, DeviceParams],
        full: FullAdmittance,
        wrap_phase: bool = False,
    ) -> None:
        super().__init__(
            case,
            devices,
            full.attachments,
            full.source_ids,
            full.intermediate_ids,
            StateLayout(case, reference=True),
            wrap_phase,
        )
        self.full = full
        self._W = np.array(full.B)
        # Y·u = B·(a + P·u)  ->  (Y - B·P)·u = B·a ; P is zero without feedforward
        G = np.array(full.Y) - self._W @ self._feedforward_matrix(full.n)
        self._factor = checked_lu_factor(G, "full admittance system", SingularNetwork)

        order = full.ordering
        branches = self.layout.branches
        self._br_from = np.array([order[b.from_node] for b in branches], dtype=int)
        self._br_to = np.array([order[b.to_node] for b in branches], dtype=int)
        self._br_L = np.array([b.inductance for b in branches], dtype=float)
        self._slack_L = self.slack.Lg

        s = len(full.source_ids)
        incidence = np.zeros((len(full.intermediate_ids), len(branches)))
        for k, (i, j) in enumerate(zip(self._br_from, self._br_to)):
            if i >= s:
                incidence[i - s, k] += 1.0
            if j >= s:
                incidence[j - s, k] -= 1.0
        self._kcl_incidence = incidence

    def _voltages(self, e_att: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self._factor, self._W @ e_att)

    def node_voltages(self, x: np.ndarray) -> np.ndarray:
        _, _, e = self._open_loop(x)
        return self._voltages(e)

    def _network_rates(self, x: np.ndarray, u: np.ndarray, out: np.ndarray) -> None:
        if self._br_L.size:
            ib = x[self.layout.branch_slice].reshape(-1, 2)
            v = u[self._br_from] - u[self._br_to]
            dx, dy = inductor_current_derivative(
                ib[:, 0], ib[:, 1], v[:, 0], v[:, 1], self._br_L, self.omega0
            )
            out[self.layout.branch_slice] = np.column_stack((dx, dy)).ravel()
        ig = x[self.layout.slack_slice]
        v = np.asarray(self.slack.u_g) - u[self._slack_row]
        out[self.layout.slack_slice] = inductor_current_derivative(
            ig[0], ig[1], v[0], v[1], self._slack_L, self.omega0
        )

    def kcl_residual(self, x: np.ndarray) -> np.ndarray:
        """Net branch outflow at every intermediate node, shape (n_intermediate, 2)."""
        ib = x[self.layout.branch_slice].reshape(-1, 2)
        return self._kcl_incidence @ ib

    def check_consistent(self, x: np.ndarray) -> None:
        residual = self.kcl_residual(x)
        worst = float(np.abs(residual).max()) if residual.size else 0.0
        if worst > KCL_CONSISTENCY_TOL:
            raise InconsistentInitialState(
                "initial branch currents violate Kirchhoff's current law at intermediate nodes",
                worst,
            )

    def _slack_current(self, x: np.ndarray) -> np.ndarray:
        return np.array(x[self.layout.slack_slice])

    def _extra_names(self) -> List[str]:
        names = []
        for br in self.layout.branches:
            names += [f"{br.label}.i_x", f"{br.label}.i_y"]
        for node in self.intermediate_ids:
            names += [f"node{node}.kcl_x", f"node{node}.kcl_y"]
        return names

    def _extra_values(self, x: np.ndarray, u: np.ndarray) -> List[float]:
        return list(x[self.layout.branch_slice]) + list(self.kcl_residual(x).ravel())


def steady_branch_current(
    v_from: np.ndarray, v_to: np.ndarray, inductance: float
) -> np.ndarray:
    """Current of an inductor at rest in the rotating frame: i = (Δu_y, -Δu_x) / L."""
    dv = np.asarray(v_from, dtype=float) - np.asarray(v_to, dtype=float)
    return np.array([dv[1], -dv[0]]) / inductance


def expand_to_reference(
    case: NetworkCase,
    devices: Mapping[str, DeviceParams],
    reduced: SimState,
    net: ReducedNetwork,
    full: FullAdmittance,
) -> SimState:
    """Reference-layout state whose branch currents sit on the KCL manifold of ``reduced``."""
    model = ReducedModel(case, devices, net)
    u = model.node_voltages(reduced.x)
    order = full.ordering
    layout = StateLayout(case, reference=True)
    x = np.zeros(layout.size)
    x[: layout.n_reduced] = reduced.x
    for br in layout.branches:
        k = layout.index[(br.label, "i_x")]
        x[k : k + 2] = steady_branch_current(
            u[order[br.from_node]], u[order[br.to_node]], br.inductance
        )
    slack: SlackParams = devices[layout.slack_id]  # type: ignore[assignment]
    k = layout.index[(layout.slack_id, "i_x")]
    x[k : k + 2] = steady_branch_current(
        np.asarray(slack.u_g), u[order[case.node_of(layout.slack_id)]], slack.Lg
    )
    return layout.wrap(x, reduced.time)

