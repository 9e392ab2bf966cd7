# src/netalgebra/modules/equilibrium.py

"""
Operating-point initialization.

A phasor power-flow style solve gives the starting guess (VSCs as current
sources aligned with their terminal voltage, loads as r + jX, the grid as
u_g behind jLg); damped Newton on the reduced-model derivative then polishes
it to the requested residual.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .case import DeviceParams, NetworkCase, SimConfig, SourceKind, XYPair
from .devices import (
    LoadParams,
    SlackParams,
    VscParams,
    load_equilibrium_current,
    vsc_equilibrium_state,
)
from .errors import NewtonDivergence, SingularNetwork
from .network import FullAdmittance, ReducedNetwork, checked_lu_factor, reduce_case
from .system import ReducedModel, SimState, StateLayout, expand_to_reference

LOG = logging.getLogger(__name__)

FD_REL_STEP = 1e-7
MIN_DAMPING = 2.0**-30
PHASOR_SWEEPS = 100
PHASOR_ANGLE_TOL = 1e-13

ResidualFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Equilibrium:
    state: SimState
    reference_state: SimState
    residual: float
    iterations: int
    node_voltages: Mapping[str, XYPair]


def _residual_norm(f: np.ndarray) -> float:
    return float(np.abs(f).max()) if f.size else 0.0


def fd_jacobian(fn: ResidualFn, x: np.ndarray, f0: Optional[np.ndarray] = None) -> np.ndarray:
    """Forward-difference Jacobian with step 1e-7·(1 + |x_j|)."""
    x = np.asarray(x, dtype=float)
    f0 = fn(x) if f0 is None else f0
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = FD_REL_STEP * (1.0 + abs(x[j]))
        xp = x.copy()
        xp[j] += h
        J[:, j] = (fn(xp) - f0) / h
    return J


def central_jacobian(fn: ResidualFn, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((fn(xp) - fn(xm)) / (2.0 * h))
    return np.column_stack(cols)


def newton_solve(
    fn: ResidualFn, x0: np.ndarray, tol: float, max_iter: int
) -> Tuple[np.ndarray, float, int]:
    """Damped Newton: full step first, halved until the residual decreases."""
    x = np.array(x0, dtype=float)
    f = fn(x)
    res = _residual_norm(f)
    iterations = 0
    LOG.debug("Newton start: residual %.3e", res)
    while not res < tol:
        if not np.isfinite(res):
            raise NewtonDivergence("residual is not finite", res, iterations)
        if iterations >= max_iter:
            raise NewtonDivergence(
                f"no convergence to {tol:g} within {max_iter} iterations", res, iterations
            )
        J = fd_jacobian(fn, x, f)
        try:
            step = sla.lu_solve(sla.lu_factor(J, check_finite=True), -f)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NewtonDivergence(f"Jacobian could not be factored: {exc}", res, iterations)

        damping = 1.0
        while True:
            x_try = x + damping * step
            f_try = fn(x_try)
            res_try = _residual_norm(f_try)
            if np.isfinite(res_try) and res_try < res:
                break
            damping *= 0.5
            if damping < MIN_DAMPING:
                raise NewtonDivergence(
                    "line search could not reduce the residual", res, iterations
                )
        x, f, res = x_try, f_try, res_try
        iterations += 1
        LOG.debug("Newton iter %d: residual %.3e (damping %g)", iterations, res, damping)
    return x, res, iterations


def _phasor_node_voltages(
    case: NetworkCase, devices: Mapping[str, DeviceParams], full: FullAdmittance
) -> np.ndarray:
    """Complex node voltages with converter currents locked to their terminal angle."""
    # branch-only part of Y, then 1/(jL) for every network inductance
    y_lines = np.array(full.Y) - np.diag(np.array(full.B).sum(axis=1))
    Yc = -1j * y_lines.astype(complex)
    rhs_fixed = np.zeros(full.n, dtype=complex)
    vsc_slots = []
    for slot in full.attachments:
        dev = devices[slot.device_id]
        if isinstance(dev, SlackParams):
            y = 1.0 / (1j * dev.Lg)
            Yc[slot.row, slot.row] += y
            rhs_fixed[slot.row] += complex(dev.u_g_x, dev.u_g_y) * y
        elif isinstance(dev, LoadParams):
            Yc[slot.row, slot.row] += 1.0 / complex(dev.r_load, dev.L_load)
        else:
            vsc_slots.append((slot.row, complex(dev.id_ref, dev.iq_ref)))

    factor = checked_lu_factor(Yc, "phasor network matrix", SingularNetwork)
    slack: SlackParams = devices[case.slack_id()]  # type: ignore[assignment]
    angles = np.full(len(vsc_slots), slack.angle)
    u = sla.lu_solve(factor, rhs_fixed)
    for sweep in range(PHASOR_SWEEPS):
        rhs = rhs_fixed.copy()
        for (row, i_dq), delta in zip(vsc_slots, angles):
            rhs[row] += i_dq * np.exp(1j * delta)
        u = sla.lu_solve(factor, rhs)
        new = np.array([np.angle(u[row]) for row, _ in vsc_slots])
        change = float(np.abs(new - angles).max()) if new.size else 0.0
        angles = new
        if change < PHASOR_ANGLE_TOL:
            LOG.debug("Phasor guess converged after %d sweeps", sweep + 1)
            break
    else:
        LOG.warning("Phasor initial guess did not settle; Newton starts from the last sweep")
    return u


def phasor_initial_guess(
    case: NetworkCase, devices: Mapping[str, DeviceParams], full: FullAdmittance
) -> np.ndarray:
    """Reduced-layout state vector built from the phasor solution."""
    u = _phasor_node_voltages(case, devices, full)
    layout = StateLayout(case)
    x = np.zeros(layout.size)
    for dev_id in layout.vsc_ids:
        params: VscParams = devices[dev_id]  # type: ignore[assignment]
        u_node = u[full.ordering[case.node_of(dev_id)]]
        state = vsc_equilibrium_state(u_node.real, u_node.imag, params, case.omega0)
        k = layout.index[(dev_id, "i_x")]
        x[k : k + len(state)] = state
    for dev_id in layout.load_ids:
        load: LoadParams = devices[dev_id]  # type: ignore[assignment]
        u_node = u[full.ordering[case.node_of(dev_id)]]
        k = layout.index[(dev_id, "i_x")]
        x[k : k + 2] = load_equilibrium_current(u_node.real, u_node.imag, load)
    return x


def find_equilibrium(
    case: NetworkCase,
    devices: Optional[Mapping[str, DeviceParams]] = None,
    config: Optional[SimConfig] = None,
    network: Optional[Tuple[FullAdmittance, ReducedNetwork]] = None,
) -> Equilibrium:
    """
    Fixed point of the reduced model at the current references, plus the
    matching reference-model state (branch currents from the steady-state
    branch relation).
    """
    devices = dict(case.devices if devices is None else devices)
    config = config or case.sim
    full, net = network or reduce_case(case)

    model = ReducedModel(case, devices, net)
    x0 = phasor_initial_guess(case, devices, full)

    def residual(x: np.ndarray) -> np.ndarray:
        return model.derivative(0.0, x)

    x, res, iterations = newton_solve(
        residual, x0, config.newton_tol, config.newton_max_iter
    )
    state = model.layout.wrap(x)
    reference = expand_to_reference(case, devices, state, net, full)

    u = model.node_voltages(x)
    node_ids = net.source_ids + net.intermediate_ids
    voltages: Dict[str, XYPair] = {
        nid: XYPair(float(u[k, 0]), float(u[k, 1])) for k, nid in enumerate(node_ids)
    }
    LOG.info(
        "Equilibrium of %s: residual %.3e after %d Newton iteration(s)",
        case.name,
        res,
        iterations,
    )
    n_vsc = len(case.device_ids(SourceKind.VSC))
    LOG.debug("Equilibrium covers %d VSC(s) and %d state(s)", n_vsc, x.size)
    return Equilibrium(state, reference, res, iterations, voltages)
