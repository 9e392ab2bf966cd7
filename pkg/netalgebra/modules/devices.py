# src/netalgebra/modules/devices.py

"""
Differential models of the source nodes.

Every function here is a pure map of (state, terminal voltage, params) and is
written with numpy ufuncs, so the same code evaluates one device (floats) or a
whole bank of devices at once (equal-length arrays, see ``stack_params``).

Conventions:
 - xy is the common frame rotating at ω0, dq the local frame rotated by the
   PLL angle δ.
 - Currents are injections into the network node (source-like), loads
   included; a load therefore absorbs power as negative terminal power.
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, fields
from typing import ClassVar, NamedTuple, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from .errors import MissingFeedforwardInput

LOG = logging.getLogger(__name__)

Scalar = Union[float, np.ndarray]

DEFAULT_BASE_FREQUENCY_HZ = 50.0
DEFAULT_OMEGA0 = 2.0 * math.pi * DEFAULT_BASE_FREQUENCY_HZ

# Current-loop and PLL gains used when a case does not set them.
DEFAULT_KP_ACC = 0.3
DEFAULT_KI_ACC = 160.0
DEFAULT_KP_PLL = 50.0
DEFAULT_KI_PLL = 2000.0

VSC_STATE_NAMES = ("i_x", "i_y", "acc_xd", "acc_xq", "pll_xi", "pll_delta")
LOAD_STATE_NAMES = ("i_x", "i_y")


def omega0_from_frequency(base_frequency_hz: float) -> float:
    return 2.0 * math.pi * base_frequency_hz


# ---------------- parameters ----------------
@dataclass(frozen=True)
class VscParams:
    Lf: float
    id_ref: float = 0.0
    iq_ref: float = 0.0
    kp_acc: float = DEFAULT_KP_ACC
    ki_acc: float = DEFAULT_KI_ACC
    kp_pll: float = DEFAULT_KP_PLL
    ki_pll: float = DEFAULT_KI_PLL
    decoupling_enabled: bool = True
    feedforward_enabled: bool = False
    decoupling_uses_pll_frequency: bool = False

    kind: ClassVar[str] = "vsc"
    state_names: ClassVar[Tuple[str, ...]] = VSC_STATE_NAMES
    structural_fields: ClassVar[Tuple[str, ...]] = ("Lf",)

    @property
    def series_inductance(self) -> float:
        return self.Lf


@dataclass(frozen=True)
class LoadParams:
    r_load: float
    L_load: float

    kind: ClassVar[str] = "load"
    state_names: ClassVar[Tuple[str, ...]] = LOAD_STATE_NAMES
    structural_fields: ClassVar[Tuple[str, ...]] = ("L_load",)

    @property
    def series_inductance(self) -> float:
        return self.L_load

    @classmethod
    def from_power(cls, p: float, q: float, v_nom: float = 1.0) -> "LoadParams":
        """Series r + jX drawing (p, q) at nominal voltage v_nom."""
        s2 = p * p + q * q
        if s2 <= 0:
            raise ValueError("Load power (p, q) must not be zero")
        return cls(r_load=p * v_nom**2 / s2, L_load=q * v_nom**2 / s2)


@dataclass(frozen=True)
class SlackParams:
    Lg: float
    u_g_x: float = 1.0
    u_g_y: float = 0.0

    kind: ClassVar[str] = "slack"
    state_names: ClassVar[Tuple[str, ...]] = ()
    structural_fields: ClassVar[Tuple[str, ...]] = ("Lg",)

    @property
    def series_inductance(self) -> float:
        return self.Lg

    @property
    def u_g(self) -> Tuple[float, float]:
        return (self.u_g_x, self.u_g_y)

    @property
    def angle(self) -> float:
        return math.atan2(self.u_g_y, self.u_g_x)


P = TypeVar("P", VscParams, LoadParams)


def stack_params(params: Sequence[P]) -> P:
    """Turn a list of same-kind parameter sets into one set of float arrays."""
    if not params:
        raise ValueError("stack_params needs at least one parameter set")
    cls = type(params[0])
    values = {
        f.name: np.array([float(getattr(p, f.name)) for p in params], dtype=float)
        for f in fields(cls)
    }
    return cls(**values)


def state_dimension(params: object) -> int:
    return len(getattr(params, "state_names", ()))


# ---------------- states ----------------
class VscState(NamedTuple):
    i_x: Scalar
    i_y: Scalar
    acc_xd: Scalar
    acc_xq: Scalar
    pll_xi: Scalar
    pll_delta: Scalar


class LoadState(NamedTuple):
    i_x: Scalar
    i_y: Scalar


class AccOutput(NamedTuple):
    e_d: Scalar
    e_q: Scalar
    dxd_dt: Scalar
    dxq_dt: Scalar


# ---------------- frames ----------------
def xy_to_dq(x: Scalar, y: Scalar, delta: Scalar) -> Tuple[Scalar, Scalar]:
    c = np.cos(delta)
    s = np.sin(delta)
    return x * c + y * s, -x * s + y * c


def dq_to_xy(d: Scalar, q: Scalar, delta: Scalar) -> Tuple[Scalar, Scalar]:
    c = np.cos(delta)
    s = np.sin(delta)
    return d * c - q * s, d * s + q * c


def inductor_current_derivative(
    i_x: Scalar,
    i_y: Scalar,
    v_x: Scalar,
    v_y: Scalar,
    inductance: Scalar,
    omega0: float,
) -> Tuple[Scalar, Scalar]:
    """d/dt of the current through a series inductance driven by v = v_from - v_to."""
    k = omega0 / inductance
    return k * v_x + omega0 * i_y, k * v_y - omega0 * i_x


# ---------------- VSC ----------------
def _flag(value: object) -> Scalar:
    return np.asarray(value, dtype=float)


def decoupling_frequency(state: VscState, params: VscParams, omega0: float) -> Scalar:
    """Per-unit frequency used by the decoupling terms (1.0 unless the PLL variant is on)."""
    use_pll = _flag(params.decoupling_uses_pll_frequency)
    return 1.0 + use_pll * state.pll_xi / omega0


def acc_output(
    state: VscState,
    i_d: Scalar,
    i_q: Scalar,
    params: VscParams,
    u_t_dq: Optional[Tuple[Scalar, Scalar]] = None,
    omega0: float = DEFAULT_OMEGA0,
) -> AccOutput:
    """PI current control in the local frame; returns e_dq and the integrator rates."""
    err_d = params.id_ref - i_d
    err_q = params.iq_ref - i_q
    dec = _flag(params.decoupling_enabled) * params.Lf * decoupling_frequency(
        state, params, omega0
    )
    e_d = params.kp_acc * err_d + state.acc_xd - dec * i_q
    e_q = params.kp_acc * err_q + state.acc_xq + dec * i_d

    ff = _flag(params.feedforward_enabled)
    if np.any(ff):
        if u_t_dq is None:
            raise MissingFeedforwardInput(
                "terminal-voltage feedforward is enabled but no u_t was supplied"
            )
        e_d = e_d + ff * u_t_dq[0]
        e_q = e_q + ff * u_t_dq[1]
    return AccOutput(e_d, e_q, params.ki_acc * err_d, params.ki_acc * err_q)


def _pll_rates(u_tq: Scalar, pll_xi: Scalar, params: VscParams) -> Tuple[Scalar, Scalar]:
    return params.kp_pll * u_tq + pll_xi, params.ki_pll * u_tq


def pll_derivative(
    state: VscState, u_tx: Scalar, u_ty: Scalar, params: VscParams
) -> Tuple[Scalar, Scalar]:
    """(dδ/dt, dξ/dt) of the synchronous-frame PLL; gains in rad/s per pu volt."""
    delta = state.pll_delta
    u_tq = -u_tx * np.sin(delta) + u_ty * np.cos(delta)
    return _pll_rates(u_tq, state.pll_xi, params)


def vsc_open_loop_voltage(
    state: VscState, params: VscParams, omega0: float = DEFAULT_OMEGA0
) -> Tuple[Scalar, Scalar]:
    """Internal voltage in xy without the feedforward term."""
    i_d, i_q = xy_to_dq(state.i_x, state.i_y, state.pll_delta)
    acc = acc_output(state, i_d, i_q, params, (0.0, 0.0), omega0)
    return dq_to_xy(acc.e_d, acc.e_q, state.pll_delta)


def vsc_internal_voltage(
    state: VscState,
    params: VscParams,
    u_t: Optional[Tuple[Scalar, Scalar]] = None,
    omega0: float = DEFAULT_OMEGA0,
) -> Tuple[Scalar, Scalar]:
    # Feedforward adds u_t in dq; rotated back it is u_t itself in xy.
    e_x, e_y = vsc_open_loop_voltage(state, params, omega0)
    ff = _flag(params.feedforward_enabled)
    if np.any(ff):
        if u_t is None:
            raise MissingFeedforwardInput(
                "terminal-voltage feedforward is enabled but no u_t was supplied"
            )
        e_x = e_x + ff * u_t[0]
        e_y = e_y + ff * u_t[1]
    return e_x, e_y


def vsc_derivative(
    state: VscState,
    u_tx: Scalar,
    u_ty: Scalar,
    params: VscParams,
    omega0: float = DEFAULT_OMEGA0,
) -> VscState:
    delta = state.pll_delta
    i_d, i_q = xy_to_dq(state.i_x, state.i_y, delta)
    u_td, u_tq = xy_to_dq(u_tx, u_ty, delta)
    acc = acc_output(state, i_d, i_q, params, (u_td, u_tq), omega0)
    e_x, e_y = dq_to_xy(acc.e_d, acc.e_q, delta)
    di_x, di_y = inductor_current_derivative(
        state.i_x, state.i_y, e_x - u_tx, e_y - u_ty, params.Lf, omega0
    )
    d_delta, d_xi = _pll_rates(u_tq, state.pll_xi, params)
    return VscState(di_x, di_y, acc.dxd_dt, acc.dxq_dt, d_xi, d_delta)


def vsc_equilibrium_state(
    u_tx: float, u_ty: float, params: VscParams, omega0: float = DEFAULT_OMEGA0
) -> VscState:
    """Controller and filter state that holds the references at a fixed terminal voltage."""
    delta = math.atan2(u_ty, u_tx)
    i_x, i_y = dq_to_xy(params.id_ref, params.iq_ref, delta)
    # filter steady state: e - u = Lf * (-i_y, i_x)
    e_d, e_q = xy_to_dq(u_tx - params.Lf * i_y, u_ty + params.Lf * i_x, delta)
    u_td, u_tq = xy_to_dq(u_tx, u_ty, delta)
    ff = float(params.feedforward_enabled)
    dec = float(params.decoupling_enabled) * params.Lf
    return VscState(
        float(i_x),
        float(i_y),
        float(e_d - ff * u_td + dec * params.iq_ref),
        float(e_q - ff * u_tq - dec * params.id_ref),
        0.0,
        delta,
    )


# ---------------- loads ----------------
def load_internal_voltage(state: LoadState, params: LoadParams) -> Tuple[Scalar, Scalar]:
    return -params.r_load * state.i_x, -params.r_load * state.i_y


def load_derivative(
    state: LoadState,
    u_tx: Scalar,
    u_ty: Scalar,
    params: LoadParams,
    omega0: float = DEFAULT_OMEGA0,
) -> LoadState:
    e_x, e_y = load_internal_voltage(state, params)
    di_x, di_y = inductor_current_derivative(
        state.i_x, state.i_y, e_x - u_tx, e_y - u_ty, params.L_load, omega0
    )
    return LoadState(di_x, di_y)


def load_equilibrium_current(u_tx: float, u_ty: float, params: LoadParams) -> LoadState:
    """Solve -r*i_x - u_x + L*i_y = 0, -r*i_y - u_y - L*i_x = 0 for the injection."""
    r, L = params.r_load, params.L_load
    a = np.array([[-r, L], [-L, -r]])
    i_x, i_y = np.linalg.solve(a, np.array([u_tx, u_ty], dtype=float))
    return LoadState(float(i_x), float(i_y))


# ---------------- dispatch ----------------
def internal_voltage(
    params: object,
    state: Optional[Sequence[float]] = None,
    u_t: Optional[Tuple[float, float]] = None,
    omega0: float = DEFAULT_OMEGA0,
) -> Tuple[float, float]:
    if isinstance(params, SlackParams):
        return params.u_g
    if isinstance(params, LoadParams):
        e = load_internal_voltage(LoadState(*state), params)  # type: ignore[misc]
    elif isinstance(params, VscParams):
        e = vsc_internal_voltage(VscState(*state), params, u_t, omega0)  # type: ignore[misc]
    else:
        raise TypeError(f"Unknown device parameters: {type(params).__name__}")
    return float(e[0]), float(e[1])
