# src/netalgebra/modules/simulation.py

from __future__ import annotations
import logging
import math
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .case import DeviceParams, Event, NetworkCase, SimConfig
from .equilibrium import find_equilibrium
from .errors import NonFiniteDerivative, NonFiniteState
from .integrators import step_rk4
from .network import FullAdmittance, ReducedNetwork, reduce_case
from .system import (
    ReducedModel,
    ReferenceModel,
    SimState,
    StateLayout,
    apply_event,
    expand_to_reference,
)
from .timeseries import TimeSeries

LOG = logging.getLogger(__name__)

ModelFactory = Callable[[Mapping[str, DeviceParams]], object]


def step_count(config: SimConfig) -> int:
    n = int(round(config.t_end / config.dt))
    if abs(n * config.dt - config.t_end) > 1e-9 * max(config.t_end, 1.0):
        LOG.warning(
            "t_end=%g is not a multiple of dt=%g; stopping at %g",
            config.t_end,
            config.dt,
            n * config.dt,
        )
    return n


def schedule_events(
    events: Iterable[Event], config: SimConfig
) -> List[Tuple[int, Event]]:
    """
    Map each event to the first step boundary at or after its time.

    Events are kept in declaration order within a boundary, so the later
    of two same-time events on one field wins.
    """
    n_steps = step_count(config)
    scheduled: List[Tuple[int, Event]] = []
    seen = {}
    for event in events:
        if event.time < 0:
            raise ValueError(f"event time must be >= 0, got {event.time}")
        k = int(math.ceil(event.time / config.dt - 1e-9))
        if k > n_steps:
            LOG.warning(
                "Event %s.%s at t=%g s lies beyond t_end=%g s and is ignored",
                event.target,
                event.field,
                event.time,
                config.t_end,
            )
            continue
        key = (k, event.target, event.field)
        if key in seen:
            LOG.warning(
                "Two events set %s.%s at the same step; the later value %r wins over %r",
                event.target,
                event.field,
                event.value,
                seen[key],
            )
        seen[key] = event.value
        scheduled.append((k, event))
    scheduled.sort(key=lambda item: item[0])
    return scheduled


def _integrate(
    factory: ModelFactory,
    devices: Mapping[str, DeviceParams],
    x0: np.ndarray,
    events: Sequence[Event],
    config: SimConfig,
    label: str,
) -> TimeSeries:
    n_steps = step_count(config)
    schedule = schedule_events(events, config)
    stride = int(config.record_stride)
    dt = config.dt

    model = factory(devices)
    names = model.signal_names()
    times: List[float] = []
    rows: List[np.ndarray] = []
    x = np.array(x0, dtype=float)
    pending = 0

    LOG.info(
        "%s run: %d steps of %g s, recording every %d (%d states)",
        label,
        n_steps,
        dt,
        stride,
        x.size,
    )
    for k in range(n_steps + 1):
        t = k * dt
        changed = False
        while pending < len(schedule) and schedule[pending][0] <= k:
            event = schedule[pending][1]
            devices = apply_event(devices, event)
            LOG.info("t=%.6f s: %s.%s -> %r", t, event.target, event.field, event.value)
            pending += 1
            changed = True
        if changed:
            model = factory(devices)
        if k % stride == 0:
            times.append(t)
            rows.append(model.sample(x))
        if k == n_steps:
            break
        try:
            x = step_rk4(model.derivative, x, t, dt)
        except NonFiniteDerivative as exc:
            raise NonFiniteState(exc.detail, t) from exc
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"{label} state became non-finite", t + dt)
    return TimeSeries.from_rows(times, names, rows)


def _initial_reduced(
    case: NetworkCase,
    devices: Mapping[str, DeviceParams],
    config: SimConfig,
    network: Tuple[FullAdmittance, ReducedNetwork],
    initial: Optional[SimState],
) -> np.ndarray:
    layout = StateLayout(case)
    if initial is None:
        return find_equilibrium(case, devices, config, network).state.x
    if initial.x.size == layout.size:
        return initial.x
    if initial.x.size > layout.size:
        # a reference-layout state: node states come first
        return initial.x[: layout.size]
    raise ValueError(f"initial state has {initial.x.size} entries, expected {layout.size}")


def simulate_reduced(
    case: NetworkCase,
    events: Optional[Sequence[Event]] = None,
    config: Optional[SimConfig] = None,
    initial: Optional[SimState] = None,
    network: Optional[Tuple[FullAdmittance, ReducedNetwork]] = None,
) -> TimeSeries:
    """Node ODEs driven through the Kron-reduced divider; starts at equilibrium by default."""
    config = config or case.sim
    events = case.events if events is None else events
    full, net = network or reduce_case(case)
    devices = dict(case.devices)
    x0 = _initial_reduced(case, devices, config, (full, net), initial)

    def factory(table: Mapping[str, DeviceParams]) -> ReducedModel:
        return ReducedModel(case, table, net, config.wrap_phase)

    return _integrate(factory, devices, x0, events, config, "reduced")


def simulate_reference(
    case: NetworkCase,
    events: Optional[Sequence[Event]] = None,
    config: Optional[SimConfig] = None,
    initial: Optional[SimState] = None,
    network: Optional[Tuple[FullAdmittance, ReducedNetwork]] = None,
) -> TimeSeries:
    """Every inductor current integrated; node voltages from the unreduced system."""
    config = config or case.sim
    events = case.events if events is None else events
    full, net = network or reduce_case(case)
    devices = dict(case.devices)
    layout = StateLayout(case, reference=True)

    if initial is None:
        x0 = find_equilibrium(case, devices, config, (full, net)).reference_state.x
    elif initial.x.size == layout.size:
        x0 = np.array(initial.x, dtype=float)
    else:
        reduced = StateLayout(case).wrap(initial.x, initial.time)
        x0 = expand_to_reference(case, devices, reduced, net, full).x

    def factory(table: Mapping[str, DeviceParams]) -> ReferenceModel:
        return ReferenceModel(case, table, full, config.wrap_phase)

    factory(devices).check_consistent(x0)
    return _integrate(factory, devices, x0, events, config, "reference")
