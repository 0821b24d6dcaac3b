import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaypower.allocation import PowerBudget, Protocol, average_rate, solve_mu
from relaypower.fading import states_from_list
from relaypower.oracle import (
    GridSpec,
    discrete_allocation_oracle,
    df_rate_oracle,
    fd_derivative,
    hull_oracle,
    upper_hull,
)
from relaypower.rates import rate_cf, rate_df, shannon


class TestGrid:
    def test_linear_and_log(self):
        np.testing.assert_allclose(GridSpec(4.0, 5).points(), [0, 1, 2, 3, 4])
        pts = GridSpec(10.0, 4, "log", s2_min=0.1).points()
        np.testing.assert_allclose(pts, [0, 0.1, 1, 10])

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 1)
        with pytest.raises(ValueError):
            GridSpec(0.0, 10)
        with pytest.raises(ValueError):
            GridSpec(1.0, 10, "cubic")


class TestHull:
    def test_three_points_by_hand(self):
        assert upper_hull([0, 1, 2], [0, 0, 1]).tolist() == [0, 2]
        assert upper_hull([0, 1, 2], [0, 1, 0]).tolist() == [0, 1, 2]
        # collinear middle point is dropped
        assert upper_hull([0, 1, 2], [0, 1, 2]).tolist() == [0, 2]

    def test_concave_input_is_its_own_hull(self):
        grid = GridSpec(40.0, 200)
        x = grid.points()
        y = rate_cf(1.0, 4.0, x)
        assert upper_hull(x, y).size == x.size
        h = hull_oracle(1.0, 4.0, grid, samples=y)
        assert h.warn and math.isnan(h.s_d)

    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=60))
    def test_idempotent_and_dominating(self, ys):
        x = np.arange(len(ys), dtype=float)
        y = np.array(ys)
        v = upper_hull(x, y)
        assert np.all(np.interp(x, x[v], y[v]) >= y - 1e-12)
        again = upper_hull(x[v], y[v])
        assert again.tolist() == list(range(v.size))


class TestDfOracle:
    def test_requires_fine_grid(self):
        with pytest.raises(ValueError):
            df_rate_oracle(1, 4, 1, n_rho=100)

    def test_zero_relay_power(self):
        assert df_rate_oracle(1, 4, 0) == pytest.approx(rate_df(1, 4, 0), abs=1e-15)

    def test_saturated(self):
        assert df_rate_oracle(1, 4, 10) == pytest.approx(0.5 + 0.5 * math.log2(5), abs=1e-12)


class TestFiniteDifference:
    def test_shannon_slope(self):
        assert fd_derivative(lambda x: float(shannon(x)), 1.0) == pytest.approx(1 / (2 * math.log(2)), rel=1e-9)

    def test_one_sided(self):
        f = lambda x: abs(x - 1.0)
        assert fd_derivative(f, 1.0, side="left") == pytest.approx(-1.0)
        assert fd_derivative(f, 1.0, side="right") == pytest.approx(1.0)
        with pytest.raises(ValueError):
            fd_derivative(f, 1.0, side="both")


class TestDiscreteOracle:
    def test_single_state(self):
        states = [((1.0, 2.0, 1.0), 1.0)]
        res = discrete_allocation_oracle(states, PowerBudget(1, 1), Protocol.CF)
        assert res.s2[0] == pytest.approx(2.0, rel=res.cell)
        assert res.rate == pytest.approx(rate_cf(1, 4, 2.0), rel=1e-6)

    def test_df_matches_policy(self):
        states = [((1.0, 2.0, 0.6), 0.5), ((0.8, 1.5, 1.2), 0.5)]
        budget = PowerBudget(1.0, 0.5)
        res = discrete_allocation_oracle(states, budget, Protocol.DF)
        policy = solve_mu(Protocol.DF, budget, states=states_from_list(states))
        # the oracle's grid cannot spend the budget exactly, so agreement is
        # limited by its cell width
        assert res.cell < 5e-3
        assert average_rate(policy).value == pytest.approx(res.rate, rel=1e-3)

    def test_limits(self):
        with pytest.raises(ValueError):
            discrete_allocation_oracle([((1, 1, 1), 1 / 9)] * 9, PowerBudget(1, 1), "df")
        with pytest.raises(ValueError):
            discrete_allocation_oracle([((1, 1, 1), 1.0)], PowerBudget(1, 1), "df", n_grid=5000)
