# tests/modules/test_simulation.py

from dataclasses import replace
from types import SimpleNamespace
from unittest import mock

import numpy as np
import pytest

from conftest import load_bus_case
from netalgebra.engine import settled_case
from netalgebra.modules.case import Event, SimConfig
from netalgebra.modules.comparison import compare
from netalgebra.modules.devices import VSC_STATE_NAMES, VscState, vsc_internal_voltage
from netalgebra.modules.equilibrium import find_equilibrium
from netalgebra.modules.errors import (
    InconsistentInitialState,
    NonFiniteDerivative,
    NonFiniteState,
    UnknownField,
)
from netalgebra.modules.network import reduce_case
from netalgebra.modules.simulation import (
    schedule_events,
    simulate_reduced,
    simulate_reference,
    step_count,
)
from netalgebra.modules.system import StateLayout, expand_to_reference

SHORT = SimConfig(dt=5e-5, t_end=0.02, record_stride=10)
STEP = Event(0.01, "vsc1", "id_ref", 1.0)


def _state_columns(ts, layout):
    return [name for name in layout.state_names() if name in ts]


class TestScheduling:
    def test_step_count(self):
        assert step_count(SimConfig(dt=2e-5, t_end=2.0)) == 100_000
        assert step_count(SHORT) == 400

    def test_step_count_warns_on_remainder(self, caplog):
        with caplog.at_level("WARNING"):
            assert step_count(SimConfig(dt=3e-5, t_end=1e-4)) == 3
        assert "not a multiple of dt" in caplog.text

    def test_snap_to_next_boundary(self):
        config = SimConfig(dt=2e-5, t_end=2.0)
        events = [
            Event(0.5, "vsc1", "id_ref", 2.0),
            Event(0.500001, "vsc1", "iq_ref", 0.1),
            Event(0.0, "vsc2", "id_ref", 0.5),
        ]
        steps = [k for k, _ in schedule_events(events, config)]
        assert steps == [0, 25_000, 25_001]

    def test_events_past_horizon_are_dropped(self, caplog):
        with caplog.at_level("WARNING"):
            scheduled = schedule_events([Event(1.0, "vsc1", "id_ref", 2.0)], SHORT)
        assert scheduled == []
        assert "beyond t_end" in caplog.text

    def test_same_step_collision_keeps_order(self, caplog):
        events = [STEP, replace(STEP, value=1.5)]
        with caplog.at_level("WARNING"):
            scheduled = schedule_events(events, SHORT)
        assert [e.value for _, e in scheduled] == [1.0, 1.5]
        assert "later value 1.5 wins" in caplog.text

    def test_negative_time(self):
        with pytest.raises(ValueError):
            schedule_events([replace(STEP, time=-0.1)], SHORT)


class TestReducedRuns:
    def test_recording_grid(self, three_bus):
        ts = simulate_reduced(three_bus, events=[], config=SHORT)
        assert ts.n_samples == 41
        expected = np.arange(41) * 10 * 5e-5
        np.testing.assert_allclose(ts.times, expected, rtol=0, atol=1e-15)
        assert ts.columns[0] == "vsc1.i_x"

    def test_no_drift_at_equilibrium(self, three_bus):
        ts = simulate_reduced(three_bus, events=[], config=SHORT)
        for name in _state_columns(ts, StateLayout(three_bus)):
            col = ts.column(name)
            assert np.abs(col - col[0]).max() < 1e-8, name

    def test_single_bus_divider_holds_every_sample(self, single_vsc):
        config = SimConfig(dt=5e-5, t_end=0.05, record_stride=5)
        eq = find_equilibrium(single_vsc)
        x0 = eq.state.x.copy()
        x0[0] += 0.2
        x0[5] += 0.1
        layout = StateLayout(single_vsc)
        ts = simulate_reduced(single_vsc, [], config, initial=layout.wrap(x0))

        params = single_vsc.devices["vsc1"]
        slack = single_vsc.devices["grid"]
        state = VscState(*(ts.column(f"vsc1.{n}") for n in VSC_STATE_NAMES))
        e_x, e_y = vsc_internal_voltage(state, params, omega0=single_vsc.omega0)
        Lf, Lg = params.Lf, slack.Lg
        ux = (Lg * e_x + Lf * slack.u_g_x) / (Lf + Lg)
        uy = (Lg * e_y + Lf * slack.u_g_y) / (Lf + Lg)
        assert np.abs(ts.column("node1.ut_x") - ux).max() < 1e-12
        assert np.abs(ts.column("node1.ut_y") - uy).max() < 1e-12
        np.testing.assert_allclose(
            ts.column("grid.i_x"), -ts.column("vsc1.i_x"), rtol=0, atol=1e-15
        )
        # the perturbation actually moved something
        assert np.ptp(ts.column("vsc1.i_d")) > 1e-3

    def test_event_moves_current(self, three_bus):
        ts = simulate_reduced(three_bus, events=[STEP], config=SHORT)
        i_d = ts.column("vsc1.i_d")
        before = i_d[ts.times < 0.01]
        assert np.abs(before - 0.8).max() < 1e-8
        assert i_d[-1] > 0.9

    def test_unknown_event_field_fails_at_its_step(self, three_bus):
        with pytest.raises(UnknownField):
            simulate_reduced(three_bus, [replace(STEP, field="nope")], SHORT)

    def test_non_finite_state_reported_with_time(self, three_bus):
        boom = NonFiniteDerivative("non-finite derivative")
        with mock.patch("netalgebra.modules.simulation.step_rk4", side_effect=boom):
            with pytest.raises(NonFiniteState) as info:
                simulate_reduced(three_bus, [], SHORT)
        assert info.value.time == 0.0

    def test_reference_layout_initial_accepted(self, three_bus):
        eq = find_equilibrium(three_bus)
        ts = simulate_reduced(three_bus, [], SHORT, initial=eq.reference_state)
        np.testing.assert_allclose(ts.data[0, :8], eq.state.x, rtol=0, atol=0)

    def test_bad_initial_size(self, three_bus):
        short = SimpleNamespace(x=np.zeros(3), time=0.0)
        with pytest.raises(ValueError):
            simulate_reduced(three_bus, [], SHORT, initial=short)


class TestReferenceRuns:
    @pytest.mark.parametrize("feedforward", [False, True])
    def test_matches_reduced(self, feedforward):
        case = load_bus_case(feedforward)
        reduced = simulate_reduced(case, [STEP], SHORT)
        reference = simulate_reference(case, [STEP], SHORT)
        report = compare(reduced, reference)
        assert report.within(1e-6), report.worst()
        for name in ("nodem.kcl_x", "nodem.kcl_y"):
            assert np.abs(reference.column(name)).max() < 1e-8

    def test_extra_columns(self, three_bus):
        ts = simulate_reference(three_bus, [], SHORT)
        assert "branchg_m.i_x" in ts
        assert ts.columns[-1] == "nodem.kcl_y"

    def test_reduced_layout_initial_is_expanded(self, three_bus):
        eq = find_equilibrium(three_bus)
        ts = simulate_reference(three_bus, [], SHORT, initial=eq.state)
        assert ts.column("branchg_m.i_x")[0] == pytest.approx(
            eq.reference_state[("branchg_m", "i_x")], abs=1e-12
        )

    def test_inconsistent_initial_rejected(self, three_bus):
        full, net = reduce_case(three_bus)
        eq = find_equilibrium(three_bus)
        x = eq.reference_state.x.copy()
        x[eq.reference_state.index[("branchv_m", "i_y")]] += 0.01
        bad = StateLayout(three_bus, reference=True).wrap(x)
        with pytest.raises(InconsistentInitialState):
            simulate_reference(three_bus, [], SHORT, initial=bad)
        # the untouched state passes
        good = expand_to_reference(three_bus, three_bus.devices, eq.state, net, full)
        simulate_reference(three_bus, [], replace(SHORT, t_end=1e-3), initial=good)


SHIPPED_CASES = [
    "single_vsc",
    pytest.param("nine_bus_no_loads", marks=pytest.mark.slow),
    pytest.param("nine_bus", marks=pytest.mark.slow),
]


@pytest.mark.timeout(1800)
@pytest.mark.parametrize("case_name", SHIPPED_CASES)
def test_shipped_case_rests_at_equilibrium(case_name, request):
    case = request.getfixturevalue(case_name)
    eq = find_equilibrium(case)
    assert eq.residual < 1e-10
    ts = simulate_reduced(case, events=[], config=replace(case.sim, t_end=1.0))
    assert ts.times[-1] == pytest.approx(1.0)
    for name in ts.columns:
        col = ts.column(name)
        assert np.abs(col - col[0]).max() < 1e-8, name


@pytest.fixture(scope="module")
def nine_bus_runs(nine_bus):
    reduced = simulate_reduced(nine_bus)
    reference = simulate_reference(nine_bus)
    return reduced, reference


@pytest.mark.slow
@pytest.mark.timeout(1800)
class TestNineBusScenario:
    def test_row_count(self, nine_bus_runs):
        reduced, reference = nine_bus_runs
        assert reduced.n_samples == reference.n_samples == 2001

    def test_models_agree(self, nine_bus_runs):
        report = compare(*nine_bus_runs)
        assert report.within(1e-6), report.worst()
        for name in ("grid.i_x", "grid.i_y"):
            assert report[name].max_abs < 1e-8

    def test_kcl_preserved(self, nine_bus_runs):
        _, reference = nine_bus_runs
        kcl = [c for c in reference.columns if ".kcl_" in c]
        assert len(kcl) == 6
        assert np.abs(reference.select(kcl).data).max() < 1e-8

    def test_step_settles(self, nine_bus_runs):
        reduced, _ = nine_bus_runs
        i_d = reduced.column("vsc1.i_d")
        assert np.abs(i_d[reduced.times < 0.5] - 1.59).max() < 1e-6
        assert np.abs(i_d[reduced.times >= 0.7 - 1e-12] - 2.0).max() < 1e-3

    def test_endpoint_is_new_equilibrium(self, nine_bus, nine_bus_runs):
        reduced, _ = nine_bus_runs
        eq = find_equilibrium(settled_case(nine_bus))
        final = reduced.final()
        for name, value in eq.state.as_dict().items():
            assert final[name] == pytest.approx(value, abs=1e-6), name

    def test_halving_dt_changes_little(self, nine_bus, nine_bus_runs):
        reduced, _ = nine_bus_runs
        finer = simulate_reduced(
            nine_bus, config=replace(nine_bus.sim, dt=1e-5, record_stride=100)
        )
        assert finer.n_samples == reduced.n_samples
        layout = StateLayout(nine_bus)
        for name in layout.state_names():
            assert abs(finer.final()[name] - reduced.final()[name]) < 1e-8, name
