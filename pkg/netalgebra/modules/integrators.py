# src/netalgebra/modules/integrators.py

from __future__ import annotations
import logging
from typing import Callable

import numpy as np

from .errors import NonFiniteDerivative

LOG = logging.getLogger(__name__)

DerivativeFn = Callable[[float, np.ndarray], np.ndarray]


def step_rk4(fn: DerivativeFn, state: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size dt."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    half = 0.5 * dt
    k1 = fn(t, state)
    k2 = fn(t + half, state + half * k1)
    k3 = fn(t + half, state + half * k2)
    k4 = fn(t + dt, state + dt * k3)
    slope = k1 + 2.0 * (k2 + k3) + k4
    if not np.all(np.isfinite(slope)):
        raise NonFiniteDerivative(f"non-finite derivative in RK4 step at t={t:.6g} s")
    return state + (dt / 6.0) * slope


def integrate_rk4(
    fn: DerivativeFn, state: np.ndarray, t0: float, dt: float, n_steps: int
) -> np.ndarray:
    """Advance n_steps fixed RK4 steps from t0 and return the end state."""
    x = np.array(state, dtype=float)
    for k in range(n_steps):
        x = step_rk4(fn, x, t0 + k * dt, dt)
    return x
