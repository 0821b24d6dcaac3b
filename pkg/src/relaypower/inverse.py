"""Inverse marginal-rate maps ``T_DF`` and ``T_CF``.

``T(nu)`` is the relay SNR ``s2`` at which the marginal rate ``dR/ds2`` equals
the slope ``nu``. With a Lagrange multiplier ``mu`` on average relay power,
the optimal per-state SNR is ``T(mu / (2 |h32|^2))``.
"""

from __future__ import annotations

import numpy as np

from ._bisect import bisect_decreasing
from .rates import LN2, _checked, _d_corr, _d_rate_cf, _d_sqrt, _f1, _out

# smallest s2 handed to the bisection when the bracket starts at zero
_TINY = 1e-300


class UnboundedError(ArithmeticError):
    """A zero slope was requested from a rate that never saturates."""


def _t_cf(nu, s1, t):
    nu, s1, t = np.broadcast_arrays(nu, s1, t)
    gain = t * s1
    if np.any((nu == 0) & (gain > 0)):
        raise UnboundedError("CF rate is strictly increasing; nu = 0 has no finite maximiser")
    a_ = 1.0 + (t + 1.0) * s1
    qa = 1.0 + s1 + gain
    qb = a_ * (2.0 * (1.0 + s1) + gain)
    with np.errstate(divide="ignore", invalid="ignore"):
        qc = (1.0 + s1) * a_ ** 2 - gain * a_ / (2.0 * nu * LN2)
        # larger root of qa x^2 + qb x + qc, written to avoid cancellation
        root = -2.0 * qc / (qb + np.sqrt(qb ** 2 - 4.0 * qa * qc))
    # the clamp is decided against the marginal rate at zero power itself so
    # that T_CF(nu) == 0 holds exactly when nu >= R_CF'(0)
    clamp = (gain == 0) | (nu >= _d_rate_cf(s1, t, np.zeros(nu.shape)))
    return np.where(clamp, 0.0, np.maximum(np.nan_to_num(root), 0.0))


def t_cf(nu, s1, t):
    """Relay SNR at which the CF marginal rate equals ``nu``.

    Returns 0 once ``nu`` reaches the marginal rate at zero power.

    Raises
    ------
    UnboundedError
        If ``nu == 0`` for a state where CF gains from the relay.
    """
    return _out(_t_cf(_checked(nu, "nu"), _checked(s1, "s1"), _checked(t, "t")))


def f1_jump(s1, t):
    """One-sided DF marginal rates ``(left, right)`` at the kink ``f1``.

    Slopes strictly between the two are all answered by ``f1`` itself.
    ``nan`` where the kink does not exist.
    """
    s1, t = np.broadcast_arrays(np.asarray(s1, dtype=float), np.asarray(t, dtype=float))
    knee = _f1(s1, t)
    ok = ~np.isnan(knee)
    left = np.full(knee.shape, np.nan)
    right = np.full(knee.shape, np.nan)
    if np.any(ok):
        left[ok] = _d_sqrt(s1[ok], knee[ok])
        right[ok] = _d_corr(s1[ok], t[ok], knee[ok])
    return left, right


def _t_df_solve(nu, s1, t, *, rtol=2e-15):
    """Vectorised ``T_DF``; also returns the bisection iteration count."""
    nu, s1, t = np.broadcast_arrays(
        np.asarray(nu, dtype=float), np.asarray(s1, dtype=float), np.asarray(t, dtype=float)
    )
    out = np.zeros(nu.shape)
    iterations = 0
    live = (t > 1.0) & (s1 > 0)
    upper = (t - 1.0) * s1
    out[live & (nu == 0)] = upper[live & (nu == 0)]
    live &= nu > 0
    if not np.any(live):
        return out, iterations

    knee = _f1(s1, t)
    has_knee = ~np.isnan(knee)
    left, right = f1_jump(s1, t)

    sq = live & has_knee & (nu > left)
    co = live & ((~has_knee) | (nu < right))
    gap = live & ~sq & ~co
    out[gap] = knee[gap]

    if np.any(sq):
        s1_, hi = s1[sq], knee[sq]
        res = bisect_decreasing(lambda x: _d_sqrt(s1_, x), nu[sq], np.full(hi.shape, _TINY), hi, rtol=rtol)
        out[sq] = res.root
        iterations = max(iterations, res.iterations)
    if np.any(co):
        s1_, t_ = s1[co], t[co]
        lo = np.where(has_knee[co], knee[co], _TINY)
        res = bisect_decreasing(lambda x: _d_corr(s1_, t_, x), nu[co], lo, upper[co], rtol=rtol)
        out[co] = res.root
        iterations = max(iterations, res.iterations)
    return out, iterations


def t_df(nu, s1, t):
    """Relay SNR at which the DF marginal rate equals ``nu``.

    Slopes that fall inside the derivative jump at ``f1`` map to ``f1``;
    ``nu == 0`` maps to the saturation point ``f2``, the least power reaching
    the maximal DF rate. For ``t <= 1`` DF gains nothing from the relay and the
    answer is 0.
    """
    out, _ = _t_df_solve(_checked(nu, "nu"), _checked(s1, "s1"), _checked(t, "t"))
    return _out(out)
