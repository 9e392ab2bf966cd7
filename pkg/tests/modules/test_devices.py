# tests/modules/test_devices.py

import math
import unittest

import numpy as np
import pytest

from netalgebra.modules.devices import (
    DEFAULT_OMEGA0,
    LoadParams,
    LoadState,
    SlackParams,
    VscParams,
    VscState,
    acc_output,
    decoupling_frequency,
    dq_to_xy,
    inductor_current_derivative,
    internal_voltage,
    load_derivative,
    load_equilibrium_current,
    pll_derivative,
    stack_params,
    state_dimension,
    vsc_derivative,
    vsc_equilibrium_state,
    vsc_internal_voltage,
    xy_to_dq,
)
from netalgebra.modules.errors import MissingFeedforwardInput

W0 = DEFAULT_OMEGA0
ZERO = VscState(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


class TestFrames(unittest.TestCase):
    def test_identity_at_zero_angle(self):
        self.assertEqual(xy_to_dq(0.3, -0.7, 0.0), (0.3, -0.7))

    def test_quarter_turn(self):
        d, q = xy_to_dq(1.0, 0.0, math.pi / 2)
        self.assertAlmostEqual(d, 0.0, places=15)
        self.assertAlmostEqual(q, -1.0, places=15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=(2, 100))
        delta = rng.uniform(-10, 10, size=100)
        xr, yr = dq_to_xy(*xy_to_dq(x, y, delta), delta)
        np.testing.assert_allclose(xr, x, atol=1e-14)
        np.testing.assert_allclose(yr, y, atol=1e-14)


class TestCurrentLoop(unittest.TestCase):
    def test_zero_error_is_integrator_output(self):
        params = VscParams(Lf=0.01, id_ref=0.4, decoupling_enabled=False)
        state = ZERO._replace(acc_xd=0.9, acc_xq=-0.1)
        out = acc_output(state, 0.4, 0.0, params)
        self.assertEqual((out.e_d, out.e_q), (0.9, -0.1))
        self.assertEqual((out.dxd_dt, out.dxq_dt), (0.0, 0.0))

    def test_proportional_gain(self):
        params = VscParams(Lf=0.01, id_ref=0.1, decoupling_enabled=False)
        out = acc_output(ZERO, 0.0, 0.0, params)
        self.assertAlmostEqual(out.e_d, 0.03, places=15)
        self.assertAlmostEqual(out.dxd_dt, 16.0, places=12)

    def test_decoupling_terms(self):
        params = VscParams(Lf=0.01, id_ref=0.5, iq_ref=1.0)
        out = acc_output(ZERO, 0.5, 1.0, params)
        self.assertAlmostEqual(out.e_d, -0.01, places=15)
        self.assertAlmostEqual(out.e_q, 0.01 * 0.5, places=15)

    def test_feedforward_needs_terminal_voltage(self):
        params = VscParams(Lf=0.01, feedforward_enabled=True)
        with self.assertRaises(MissingFeedforwardInput):
            acc_output(ZERO, 0.0, 0.0, params)
        out = acc_output(ZERO, 0.0, 0.0, params, (1.0, 0.2))
        self.assertEqual((out.e_d, out.e_q), (1.0, 0.2))

    def test_decoupling_frequency_variant(self):
        state = ZERO._replace(pll_xi=0.1 * DEFAULT_OMEGA0)
        nominal = VscParams(Lf=0.01)
        tracked = VscParams(Lf=0.01, decoupling_uses_pll_frequency=True)
        self.assertEqual(decoupling_frequency(state, nominal, DEFAULT_OMEGA0), 1.0)
        self.assertAlmostEqual(
            float(decoupling_frequency(state, tracked, DEFAULT_OMEGA0)), 1.1, places=14
        )


class TestPll:
    def test_locked(self):
        assert pll_derivative(ZERO, 1.0, 0.0, VscParams(Lf=0.01)) == (0.0, 0.0)

    def test_gain_arithmetic(self):
        d_delta, d_xi = pll_derivative(ZERO, 0.0, 1.0, VscParams(Lf=0.01))
        assert d_delta == pytest.approx(50.0)
        assert d_xi == pytest.approx(2000.0)

    def test_integrator_feeds_angle(self):
        state = ZERO._replace(pll_xi=3.0)
        d_delta, d_xi = pll_derivative(state, 1.0, 0.0, VscParams(Lf=0.01))
        assert d_delta == pytest.approx(3.0)
        assert d_xi == 0.0


class TestFilterAndLoad:
    def test_balanced_filter(self):
        assert inductor_current_derivative(0.0, 0.0, 0.0, 0.0, 0.01, W0) == (0.0, 0.0)

    def test_cross_coupling(self):
        di_x, di_y = inductor_current_derivative(0.5, 0.0, 0.0, 0.0, 0.01, W0)
        assert di_x == 0.0
        assert di_y == pytest.approx(-157.0796326794897, rel=1e-12)

    def test_rotation_covariance(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            i, v = rng.normal(size=(2, 2))
            theta = rng.uniform(-math.pi, math.pi)
            c, s = math.cos(theta), math.sin(theta)
            rot = np.array([[c, -s], [s, c]])
            base = np.array(inductor_current_derivative(*i, *v, 0.05, W0))
            ir, vr = rot @ i, rot @ v
            turned = np.array(inductor_current_derivative(*ir, *vr, 0.05, W0))
            np.testing.assert_allclose(turned, rot @ base, atol=1e-9)

    def test_load_zero(self):
        params = LoadParams(r_load=1.0, L_load=0.5)
        assert load_derivative(LoadState(0.0, 0.0), 0.0, 0.0, params) == (0.0, 0.0)

    def test_load_equilibrium(self):
        params = LoadParams(r_load=1.0, L_load=0.5)
        i = load_equilibrium_current(1.0, 0.0, params)
        assert i.i_x == pytest.approx(-0.8, abs=1e-14)
        assert i.i_y == pytest.approx(0.4, abs=1e-14)
        rates = load_derivative(i, 1.0, 0.0, params)
        assert max(abs(r) for r in rates) < 1e-10

    def test_pure_inductor_load(self):
        params = LoadParams(r_load=0.0, L_load=0.25)
        i = load_equilibrium_current(0.6, 0.8, params)
        assert i.i_x == pytest.approx(-0.8 / 0.25)
        assert i.i_y == pytest.approx(0.6 / 0.25)

    def test_load_absorbs_power(self):
        params = LoadParams(r_load=0.7, L_load=0.3)
        u = (0.95, -0.2)
        i = load_equilibrium_current(*u, params)
        p = u[0] * i.i_x + u[1] * i.i_y
        assert p == pytest.approx(-0.7 * (i.i_x**2 + i.i_y**2), rel=1e-12)
        assert p < 0

    def test_load_from_power(self):
        params = LoadParams.from_power(1.25, 0.5)
        assert params.r_load == pytest.approx(0.6896551724137931, rel=1e-15)
        assert params.L_load == pytest.approx(0.27586206896551724, rel=1e-15)
        with pytest.raises(ValueError):
            LoadParams.from_power(0.0, 0.0)


class TestVsc:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {},
            {"decoupling_enabled": False},
            {"feedforward_enabled": True},
            {"decoupling_uses_pll_frequency": True},
        ],
    )
    def test_equilibrium_state_is_fixed_point(self, kwargs):
        params = VscParams(Lf=0.01, id_ref=1.2, iq_ref=-0.3, **kwargs)
        u = (1.02, 0.2)
        state = vsc_equilibrium_state(*u, params)
        rates = vsc_derivative(state, *u, params)
        assert max(abs(r) for r in rates) < 1e-10

    def test_zero_flow_equilibrium(self):
        state = vsc_equilibrium_state(1.0, 0.0, VscParams(Lf=0.01))
        assert state.i_x == 0.0 and state.i_y == 0.0
        # without feedforward the d integrator carries the whole terminal voltage
        assert state.acc_xd == pytest.approx(1.0)
        assert state.acc_xq == 0.0
        assert state.pll_xi == 0.0 and state.pll_delta == 0.0

    def test_stacked_params_match_scalar(self):
        p1 = VscParams(Lf=0.01, id_ref=1.0)
        p2 = VscParams(Lf=0.02, id_ref=0.5, iq_ref=0.2, feedforward_enabled=True)
        s1 = VscState(0.9, 0.1, 1.0, 0.0, 0.5, 0.05)
        s2 = VscState(0.4, -0.2, 0.2, 0.1, -0.3, -0.1)
        u = np.array([[1.0, 0.05], [0.98, -0.1]])
        stacked = VscState(*np.array([s1, s2]).T)
        rates = vsc_derivative(stacked, u[:, 0], u[:, 1], stack_params([p1, p2]))
        for k, (s, p) in enumerate(((s1, p1), (s2, p2))):
            single = vsc_derivative(s, u[k, 0], u[k, 1], p)
            np.testing.assert_allclose(
                np.array(rates)[:, k], single, rtol=1e-12, atol=1e-12
            )

    def test_internal_voltage_dispatch(self):
        load = LoadParams(r_load=0.5, L_load=0.1)
        assert internal_voltage(load, (0.2, -0.1)) == pytest.approx((-0.1, 0.05))
        assert internal_voltage(SlackParams(Lg=0.01)) == (1.0, 0.0)
        assert internal_voltage(VscParams(Lf=0.01), tuple(ZERO)) == (0.0, 0.0)
        with pytest.raises(TypeError):
            internal_voltage(object(), ())

    def test_feedforward_internal_voltage_adds_terminal_voltage(self):
        params = VscParams(Lf=0.01, feedforward_enabled=True)
        state = ZERO._replace(pll_delta=0.7)
        e = vsc_internal_voltage(state, params, (0.9, 0.3))
        assert e == pytest.approx((0.9, 0.3))

    def test_state_dimensions(self):
        assert state_dimension(VscParams(Lf=0.01)) == 6
        assert state_dimension(LoadParams(r_load=1.0, L_load=0.1)) == 2
        assert state_dimension(SlackParams(Lg=0.01)) == 0
