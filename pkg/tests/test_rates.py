import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from relaypower.oracle import df_rate_oracle, fd_derivative
from relaypower.rates import (
    DomainError,
    Regime,
    SnrState,
    crossover_f,
    d_rate_cf,
    d_rate_df,
    eta,
    f1,
    f2,
    rate_cf,
    rate_df,
    rate_hybrid,
    regime,
    rho_star,
    shannon,
)

s1s = st.floats(0.01, 10.0)
ts = st.floats(0.01, 10.0)
ts_above_one = st.floats(1.05, 10.0)


# Values frozen from the rho-grid oracle (df_rate_oracle, 4 refinement levels).
DF_ORACLE = [
    ((1.0, 4.0, 0.5), 1.4179001735026242),
    ((1.0, 4.0, 1.0), 1.5282209774830984),
    ((2.0, 6.0, 3.0), 2.3957066890941405),
    ((0.5, 9.0, 0.01), 0.654335384076944),
    ((3.0, 1.5, 2.0), 2.2297158093186487),
    ((1.0, 0.5, 2.0), 0.792481250360578),
]


class TestShannon:
    @pytest.mark.parametrize("x, expected", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
    def test_values(self, x, expected):
        assert shannon(x) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(DomainError):
            shannon(bad)

    def test_vectorised(self):
        out = shannon(np.array([0.0, 1.0, 3.0]))
        assert out.shape == (3,)
        np.testing.assert_allclose(out, [0, 1, 2])


class TestThresholds:
    def test_eta(self):
        assert eta(1, 4) == pytest.approx(2.5)
        assert eta(0, 7) == 1.0
        assert eta(2, 1) == 1.0

    def test_f2(self):
        assert f2(1, 4) == 3.0
        assert f2(2, 1) == 0.0
        assert f2(1, 0.5) == -0.5

    def test_f1_values(self):
        assert f1(1, 4) == pytest.approx((math.sqrt(1.5) - 1) ** 2, rel=1e-14)
        e = (1 + 2.5) / 1.5
        assert f1(0.5, 5) == pytest.approx(0.5 * (math.sqrt(5 - e) - 1) ** 2, rel=1e-14)

    def test_f1_empty_branch(self):
        assert math.isnan(f1(1, 3))
        assert math.isnan(f1(1, 2))

    def test_f1_is_unit_correlation_boundary(self):
        assert rho_star(1, 4, f1(1, 4)) == pytest.approx(1.0, abs=1e-12)
        assert rho_star(0.5, 5, f1(0.5, 5)) == pytest.approx(1.0, abs=1e-12)

    def test_crossover(self):
        assert crossover_f(1, 4) == 18.0
        assert crossover_f(0, 2) == 1.0
        assert math.isnan(crossover_f(1, 1))


class TestRhoStar:
    def test_zero_at_saturation(self):
        assert rho_star(1, 4, 3) == pytest.approx(0.0, abs=1e-15)

    def test_interior_matches_balance_equation(self):
        # solve the equal-rates condition for rho by plain bisection
        s1, t, s2 = 1.0, 4.0, 1.0

        def diff(r):
            relay = shannon(t * s1) + shannon((1 - r * r) * s1)
            dest = shannon(s1) + shannon(s1 + s2 + 2 * r * math.sqrt(s1 * s2))
            return relay - dest

        lo, hi = 0.0, 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if diff(mid) > 0 else (lo, mid)
        r = rho_star(s1, t, s2)
        assert 0 < r < 1
        assert r == pytest.approx(lo, abs=1e-12)

    def test_s1_zero_is_error(self):
        with pytest.raises(DomainError):
            rho_star(0, 4, 1)

    def test_not_applicable_is_nan(self):
        # far past saturation the radicand goes negative: no equal-rates crossing
        assert math.isnan(rho_star(1, 4, 100))

    @given(s1s, ts_above_one, st.floats(0.0, 1.0))
    def test_balances_constraints_in_correlated_regime(self, s1, t, frac):
        lo = f1(s1, t)
        lo = 0.0 if math.isnan(lo) else lo
        s2 = lo + frac * (f2(s1, t) - lo)
        assume(regime(s1, t, s2) == Regime.DF_CORRELATED)
        r = min(max(rho_star(s1, t, s2), 0.0), 1.0)
        relay = shannon(t * s1) + shannon((1 - r * r) * s1)
        dest = shannon(s1) + shannon(s1 + s2 + 2 * r * math.sqrt(s1 * s2))
        assert relay == pytest.approx(dest, abs=1e-9)


class TestRegime:
    def test_closed_boundaries(self):
        assert regime(1, 4, f1(1, 4)) == Regime.DF_CORRELATED
        assert regime(1, 4, 3.0) == Regime.DF_SATURATED
        assert regime(1, 4, 0.01) == Regime.DF_SQRT
        assert regime(1, 4, 1.0) == Regime.DF_CORRELATED

    def test_t_at_most_one_is_saturated(self):
        assert regime(1, 1, 0.0) == Regime.DF_SATURATED
        assert regime(1, 0.5, 5.0) == Regime.DF_SATURATED

    def test_no_sqrt_branch_below_threshold(self):
        assert regime(1, 2.5, 0.0) == Regime.DF_CORRELATED


class TestRateDF:
    def test_saturated_value(self):
        expected = 0.5 + 0.5 * math.log2(5)
        for s2 in (3.0, 10.0, 1e6):
            assert rate_df(1, 4, s2) == pytest.approx(expected, rel=1e-15)

    def test_unit_t(self):
        assert rate_df(1, 1, 5) == pytest.approx(1.0)

    @pytest.mark.parametrize("args, expected", DF_ORACLE)
    def test_matches_rho_grid_oracle(self, args, expected):
        assert rate_df(*args) == pytest.approx(expected, abs=2e-9)

    def test_s1_zero_degenerate(self):
        assert rate_df(0, 4, 3) == 0.0
        assert rate_cf(0, 4, 3) == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            rate_df(-1, 4, 1)
        with pytest.raises(DomainError):
            rate_df(1, 4, math.nan)
        with pytest.raises(ValueError):
            SnrState(1, -4, 1)

    def test_snr_state_unpacks(self):
        assert rate_df(*SnrState(1, 4, 1)) == rate_df(1, 4, 1)

    @given(s1s, ts, st.floats(0.0, 50.0))
    def test_matches_oracle_property(self, s1, t, s2):
        assert rate_df(s1, t, s2) == pytest.approx(df_rate_oracle(s1, t, s2), abs=2e-6)

    @given(s1s, ts_above_one, st.floats(0.0, 5.0))
    def test_saturation_exact(self, s1, t, extra):
        top = f2(s1, t)
        assert rate_df(s1, t, top * (1 + extra)) == rate_df(s1, t, top)


class TestRateCF:
    def test_zero_relay_power(self):
        assert rate_cf(1, 4, 0) == pytest.approx(1.0, abs=1e-15)

    def test_limit(self):
        assert rate_cf(1, 4, 1e9) == pytest.approx(0.5 + 0.5 * math.log2(6), abs=1e-8)

    def test_interior_value(self):
        # 1 + t s1 s2 / (1 + (t+1) s1 + s2) = 1 + 24/12
        assert rate_cf(1, 4, 6) == pytest.approx(0.5 + 0.5 * math.log2(4), rel=1e-15)


class TestHybrid:
    def test_direct_link_only(self):
        assert rate_hybrid(1, 4, 0) == rate_df(1, 4, 0) == pytest.approx(rate_cf(1, 4, 0))

    def test_crossing_point(self):
        assert abs(rate_df(1, 4, 18) - rate_cf(1, 4, 18)) <= 1e-9

    def test_cf_dominates_for_small_t(self):
        s2 = np.linspace(0, 50, 501)
        assert np.all(rate_cf(1, 0.5, s2) >= rate_df(1, 0.5, s2))
        np.testing.assert_array_equal(rate_hybrid(1, 0.5, s2), rate_cf(1, 0.5, s2))

    @given(s1s, ts_above_one)
    def test_single_sign_change_at_crossover(self, s1, t):
        cross = crossover_f(s1, t)
        s2 = np.geomspace(cross * 1e-6, 10 * cross, 4001)
        diff = rate_df(s1, t, s2) - rate_cf(s1, t, s2)
        # ignore rounding-level differences around the crossing itself
        sign = np.sign(np.where(np.abs(diff) < 1e-13, 0.0, diff))
        nz = sign[sign != 0]
        assert np.count_nonzero(np.diff(nz)) == 1
        last_pos = s2[np.nonzero(sign > 0)[0][-1]]
        first_neg = s2[np.nonzero(sign < 0)[0][0]]
        assert last_pos <= cross * (1 + 1e-6) and first_neg >= cross * (1 - 1e-6)

    @given(s1s, ts_above_one)
    def test_piecewise_selection(self, s1, t):
        cross = crossover_f(s1, t)
        below, above = 0.5 * cross, 2.0 * cross
        assert rate_hybrid(s1, t, below) == rate_df(s1, t, below)
        assert rate_hybrid(s1, t, above) == rate_cf(s1, t, above)


class TestShapeProperties:
    @given(s1s, ts)
    def test_concave_and_monotone(self, s1, t):
        s2 = np.linspace(0, 5 * max(s1 * t, 1.0), 301)
        for fn in (rate_df, rate_cf):
            r = fn(s1, t, s2)
            assert np.all(np.diff(r) >= -1e-15)
            assert np.all(0.5 * (r[:-2] + r[2:]) - r[1:-1] <= 1e-12)

    @given(s1s, ts_above_one)
    def test_continuous_at_thresholds(self, s1, t):
        for x in (f1(s1, t), f2(s1, t)):
            if math.isnan(x):
                continue
            lo, hi = max(x - 1e-9, 0.0), x + 1e-9
            assert abs(rate_df(s1, t, hi) - rate_df(s1, t, lo)) <= 1e-7
            assert abs(rate_cf(s1, t, hi) - rate_cf(s1, t, lo)) <= 1e-7


class TestDerivatives:
    def test_zero_at_and_beyond_saturation(self):
        for side in ("left", "right"):
            assert d_rate_df(1, 4, 3, side) == 0.0
            assert d_rate_df(1, 4, 7, side) == 0.0

    def test_jump_at_f1(self):
        x = f1(1, 4)
        left, right = d_rate_df(1, 4, x, "left"), d_rate_df(1, 4, x, "right")
        assert left > right > 0
        fn = lambda s: float(rate_df(1, 4, s))
        assert left == pytest.approx(fd_derivative(fn, x, h=1e-6, side="left"), rel=1e-5)
        assert right == pytest.approx(fd_derivative(fn, x, h=1e-6, side="right"), rel=1e-5)

    def test_correlated_branch_value(self):
        fd = fd_derivative(lambda s: float(rate_df(1, 4, s)), 1.0)
        assert d_rate_df(1, 4, 1.0) == pytest.approx(fd, rel=1e-7)
        assert d_rate_df(1, 4, 1.0) == pytest.approx(0.16211915571093669, rel=1e-12)

    def test_infinite_slope_at_origin(self):
        assert math.isinf(d_rate_df(1, 4, 0.0))
        # the correlated branch also carries a sqrt(s2) term
        assert math.isinf(d_rate_df(1, 2.5, 0.0))
        assert d_rate_df(1, 0.5, 0.0) == 0.0

    def test_cf_at_zero(self):
        # g_c'(0) / (2 g_c(0) ln2) with A = 1 + (t+1) s1 = 6: (4/6) / (4 ln2)
        expected = (2.0 / 3.0) / (4.0 * math.log(2))
        assert d_rate_cf(1, 4, 0) == pytest.approx(expected, rel=1e-14)
        assert d_rate_cf(1, 4, 0) == pytest.approx(
            fd_derivative(lambda s: float(rate_cf(1, 4, s)), 0.0, side="right"), rel=1e-6
        )

    def test_cf_dead_direct_link(self):
        assert d_rate_cf(0, 4, 1) == 0.0

    def test_cf_interior(self):
        fd = fd_derivative(lambda s: float(rate_cf(1, 4, s)), 6.0)
        assert d_rate_cf(1, 4, 6) == pytest.approx(fd, rel=1e-6)

    def test_bad_side(self):
        with pytest.raises(ValueError):
            d_rate_df(1, 4, 1, "up")

    @given(s1s, ts, st.floats(1e-3, 1.0))
    def test_match_finite_differences(self, s1, t, frac):
        s2 = frac * 3 * max((t - 1) * s1, 1.0)
        for x in (f1(s1, t), f2(s1, t)):
            assume(math.isnan(x) or abs(s2 - x) > 2e-3 * max(1.0, x))
        h = 1e-4 * max(s2, 1e-2)
        fd_df = fd_derivative(lambda s: float(rate_df(s1, t, s)), s2, h=h)
        fd_cf = fd_derivative(lambda s: float(rate_cf(s1, t, s)), s2, h=h)
        assert d_rate_df(s1, t, s2) == pytest.approx(fd_df, rel=1e-5, abs=1e-9)
        assert d_rate_cf(s1, t, s2) == pytest.approx(fd_cf, rel=1e-5, abs=1e-12)

    @given(s1s, ts, st.floats(1e-4, 50.0), st.floats(1e-4, 50.0))
    def test_nonincreasing(self, s1, t, a, b):
        lo, hi = sorted((a, b))
        assert d_rate_df(s1, t, hi, "left") <= d_rate_df(s1, t, lo, "right") + 1e-15
        assert d_rate_cf(s1, t, hi) <= d_rate_cf(s1, t, lo)
