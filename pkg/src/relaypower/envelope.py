"""Concave envelope of the best-of-DF/CF rate.

For ``t > 1`` the hybrid rate ``max(R_DF, R_CF)`` is not concave: DF wins
below the crossover and CF above, and the derivative jumps up where they
meet. Its concave envelope is the DF curve up to ``s_d``, a straight bridge of
slope ``k`` to ``s_c``, and the CF curve beyond. For ``t <= 1`` CF dominates
everywhere and the envelope is CF itself.

The bridge is located by a bracketed root search on the common slope ``nu``: the intercept
of the supporting line of slope ``nu`` is ``R(T(nu)) - nu T(nu)`` for each
protocol, and the bridge slope is the one where both intercepts coincide.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._bisect import illinois_decreasing
from .inverse import UnboundedError, _t_cf, _t_df_solve
from .rates import (
    _checked,
    _d_rate_cf,
    _d_rate_df,
    _out,
    _rate_cf,
    _rate_df,
)

logger = logging.getLogger(__name__)

SLOPE_TIE_RTOL = 1e-12


class NoBridgeError(RuntimeError):
    """The intercept gap did not change sign on the search interval."""


class GeometryMismatchError(ValueError):
    """An envelope geometry was used with a different ``(s1, t)``."""


@dataclass(frozen=True)
class EnvelopeGeometry:
    """Bridge of the concave envelope for one (or an array of) ``(s1, t)``.

    Fields are scalars or equally shaped arrays. Where ``degenerate`` is true
    the envelope is the CF rate and ``s_d``, ``s_c``, ``k`` are ``nan``.
    """

    s1: np.ndarray
    t: np.ndarray
    s_d: np.ndarray
    s_c: np.ndarray
    k: np.ndarray
    degenerate: np.ndarray

    def check(self, s1=None, t=None):
        if s1 is not None and not np.allclose(s1, self.s1, rtol=1e-12, atol=0):
            raise GeometryMismatchError("geometry was built for a different s1")
        if t is not None and not np.allclose(t, self.t, rtol=1e-12, atol=0):
            raise GeometryMismatchError("geometry was built for a different t")

    def __getitem__(self, idx) -> "EnvelopeGeometry":
        return EnvelopeGeometry(
            *(np.asarray(getattr(self, f))[idx] for f in ("s1", "t", "s_d", "s_c", "k", "degenerate"))
        )


def _intercept_gap(nu, s1, t):
    s_d, _ = _t_df_solve(nu, s1, t)
    s_c = _t_cf(nu, s1, t)
    return _rate_cf(s1, t, s_c) - _rate_df(s1, t, s_d) - nu * (s_c - s_d)


def _build(s1, t):
    s1, t = np.broadcast_arrays(np.asarray(s1, dtype=float), np.asarray(t, dtype=float))
    s1 = s1.ravel()
    t = t.ravel()
    n = s1.size
    s_d = np.full(n, np.nan)
    s_c = np.full(n, np.nan)
    k = np.full(n, np.nan)
    degenerate = t <= 1.0
    live = ~degenerate
    if not np.any(live):
        return s_d, s_c, k, degenerate

    s1_, t_ = s1[live], t[live]
    cross = (t_ - 1.0) * (1.0 + (t_ + 1.0) * s1_)
    # Beyond the crossover T_CF > f > f2 >= T_DF, so the gap is strictly
    # decreasing for nu <= R_CF'(f); at nu = R_CF'(f) the gap is negative.
    nu_hi = _d_rate_cf(s1_, t_, cross)
    gap_hi = _intercept_gap(nu_hi, s1_, t_)
    nu_lo = 0.5 * nu_hi
    gap_lo = _intercept_gap(nu_lo, s1_, t_)
    for _ in range(200):
        need = gap_lo <= 0
        if not np.any(need):
            break
        nu_lo = np.where(need, 0.5 * nu_lo, nu_lo)
        gap_lo = np.where(need, _intercept_gap(nu_lo, s1_, t_), gap_lo)
    bad = (gap_hi >= 0) | (gap_lo <= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NoBridgeError(
            f"no sign change of the intercept gap for s1={s1_[i]!r}, t={t_[i]!r}: "
            f"gap({nu_lo[i]:.6g})={gap_lo[i]:.6g}, gap({nu_hi[i]:.6g})={gap_hi[i]:.6g}"
        )

    res = illinois_decreasing(lambda v: _intercept_gap(v, s1_, t_), nu_lo, nu_hi, rtol=1e-15)
    nu = res.root
    sd, _ = _t_df_solve(nu, s1_, t_)
    sc = _t_cf(nu, s1_, t_)

    crossed = sc <= sd
    if np.any(crossed):
        logger.warning("bridge endpoints crossed for %d states; treating them as CF-only", crossed.sum())
    idx = np.flatnonzero(live)
    s_d[idx] = np.where(crossed, np.nan, sd)
    s_c[idx] = np.where(crossed, np.nan, sc)
    k[idx] = np.where(crossed, np.nan, nu)
    degenerate[idx[crossed]] = True
    return s_d, s_c, k, degenerate


def build_envelope(s1, t) -> EnvelopeGeometry:
    """Compute the envelope bridge ``(s_d, s_c, k)`` for each ``(s1, t)``.

    Raises
    ------
    NoBridgeError
        If the bridge slope cannot be bracketed for some ``t > 1``.
    """
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    if np.any(s1 == 0):
        raise ValueError("build_envelope needs s1 > 0")
    shape = np.broadcast_shapes(s1.shape, t.shape)
    s_d, s_c, k, degenerate = _build(s1, t)
    s1b, tb = np.broadcast_arrays(s1, t)
    return EnvelopeGeometry(
        s1=_out(s1b.copy()),
        t=_out(tb.copy()),
        s_d=_out(s_d.reshape(shape)),
        s_c=_out(s_c.reshape(shape)),
        k=_out(k.reshape(shape)),
        degenerate=_out(degenerate.reshape(shape)),
    )


def _parts(s2, geom):
    s2 = np.asarray(s2, dtype=float)
    s1, t, s_d, s_c, k, deg = np.broadcast_arrays(
        geom.s1, geom.t, geom.s_d, geom.s_c, geom.k, np.asarray(geom.degenerate, dtype=bool)
    )
    s2, s1, t, s_d, s_c, k, deg = np.broadcast_arrays(s2, s1, t, s_d, s_c, k, deg)
    return s2, s1, t, s_d, s_c, k, deg


def envelope_rate(s2, geom: EnvelopeGeometry, s1=None, t=None):
    """Evaluate the concave envelope at ``s2``."""
    geom.check(s1, t)
    s2, s1, t, s_d, s_c, k, deg = _parts(_checked(s2, "s2"), geom)
    cf_piece = _rate_cf(s1, t, s2)
    # off the bridge the envelope is the hybrid rate itself
    hybrid = np.maximum(_rate_df(s1, t, s2), cf_piece)
    with np.errstate(invalid="ignore"):
        bridge = _rate_df(s1, t, np.nan_to_num(s_d)) + k * (s2 - s_d)
        out = np.where((s2 <= s_d) | (s2 >= s_c), hybrid, bridge)
    return _out(np.where(deg, cf_piece, out))


def envelope_derivative(s2, geom: EnvelopeGeometry, s1=None, t=None, side: str = "right"):
    """One-sided derivative of the envelope; equals ``k`` across the bridge."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    geom.check(s1, t)
    s2, s1, t, s_d, s_c, k, deg = _parts(_checked(s2, "s2"), geom)
    d_df = _d_rate_df(s1, t, s2, side)
    d_cf = _d_rate_cf(s1, t, s2)
    with np.errstate(invalid="ignore"):
        if side == "right":
            on_df = s2 < s_d
            on_cf = s2 >= s_c
        else:
            on_df = s2 <= s_d
            on_cf = s2 > s_c
    out = np.where(on_df, d_df, np.where(on_cf, d_cf, k))
    return _out(np.where(deg, d_cf, out))


def _t_envelope(nu, s1, t, s_d, s_c, k, deg):
    nu, s1, t, s_d, s_c, k, deg = np.broadcast_arrays(nu, s1, t, s_d, s_c, k, deg)
    out = np.zeros(nu.shape)
    with np.errstate(invalid="ignore"):
        tie = ~deg & (np.abs(nu - k) <= SLOPE_TIE_RTOL * k)
        steep = ~deg & ~tie & (nu > k)
    flat = ~deg & ~tie & ~steep
    if np.any(flat & (nu == 0)):
        raise UnboundedError("the CF piece of the envelope never saturates; nu = 0 is unbounded")
    out[tie] = s_d[tie]
    if np.any(steep):
        sd, _ = _t_df_solve(nu[steep], s1[steep], t[steep])
        out[steep] = np.minimum(sd, s_d[steep])
    if np.any(flat):
        out[flat] = np.maximum(_t_cf(nu[flat], s1[flat], t[flat]), s_c[flat])
    if np.any(deg):
        out[deg] = _t_cf(nu[deg], s1[deg], t[deg])
    return out


def t_envelope(nu, geom: EnvelopeGeometry, s1=None, t=None):
    """Least ``s2`` whose envelope sub-gradient interval contains ``nu``.

    A slope equal to the bridge slope returns ``s_d``, the smallest relay
    power among all maximisers, so the answer never lies strictly inside the
    bridge.

    Raises
    ------
    UnboundedError
        For ``nu == 0``: the CF piece keeps increasing.
    """
    geom.check(s1, t)
    nu = _checked(nu, "nu")
    _, s1_, t_, s_d, s_c, k, deg = _parts(np.zeros_like(nu), geom)
    nu = np.broadcast_to(nu, s1_.shape)
    return _out(_t_envelope(nu, s1_, t_, s_d, s_c, k, deg))
