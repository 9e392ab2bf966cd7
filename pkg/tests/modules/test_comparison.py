# tests/modules/test_comparison.py

import math

import numpy as np
import pytest

from netalgebra.modules.comparison import compare, shared_signals
from netalgebra.modules.errors import EmptySelection, GridMismatch, UnknownSignal
from netalgebra.modules.timeseries import TimeSeries


def _ts(columns, data, times=None):
    data = np.asarray(data, dtype=float)
    if times is None:
        times = np.arange(data.shape[0]) * 0.1
    return TimeSeries(np.asarray(times, dtype=float), tuple(columns), data)


class TestCompare:
    def test_identical(self):
        a = _ts(["x", "y"], [[1.0, 2.0], [3.0, 4.0]])
        report = compare(a, a)
        assert report.within(0.0)
        assert report["x"].max_abs == 0.0

    def test_deviation_statistics(self):
        a = _ts(["x"], [[0.0], [0.0], [0.0], [0.0]])
        b = _ts(["x"], [[0.0], [0.5], [-1.0], [0.0]])
        dev = compare(a, b)["x"]
        assert dev.max_abs == 1.0
        assert dev.time_of_max == pytest.approx(0.2)
        assert dev.rms == pytest.approx(math.sqrt(1.25 / 4))

    def test_only_shared_signals(self):
        a = _ts(["x", "grid.i_x", "only_a"], np.zeros((2, 3)))
        b = _ts(["grid.i_x", "x", "branch1_2.i_x"], np.ones((2, 3)))
        assert shared_signals(a, b) == ["x", "grid.i_x"]
        report = compare(a, b)
        assert report.signals == ("x", "grid.i_x")
        assert report.failures(0.5) == ["x", "grid.i_x"]

    def test_worst(self):
        a = _ts(["x", "y"], [[0.0, 0.0]])
        b = _ts(["x", "y"], [[1e-9, 3e-7]])
        name, dev = compare(a, b).worst()
        assert name == "y" and dev.max_abs == pytest.approx(3e-7)

    def test_nan_fails(self):
        a = _ts(["x"], [[0.0], [np.nan]])
        b = _ts(["x"], [[0.0], [0.0]])
        assert not compare(a, b, ["x"]).within(1.0)

    def test_explicit_selection(self):
        a = _ts(["x", "y"], [[0.0, 0.0]])
        b = _ts(["x"], [[0.0]])
        assert compare(a, b, ["x"]).signals == ("x",)
        with pytest.raises(UnknownSignal):
            compare(a, b, ["y"])

    def test_nothing_shared(self):
        with pytest.raises(EmptySelection):
            compare(_ts(["x"], [[0.0]]), _ts(["y"], [[0.0]]))

    def test_grid_mismatch(self):
        a = _ts(["x"], [[0.0], [1.0]])
        with pytest.raises(GridMismatch):
            compare(a, _ts(["x"], [[0.0]]))
        with pytest.raises(GridMismatch):
            compare(a, _ts(["x"], [[0.0], [1.0]], times=[0.0, 0.2]))
