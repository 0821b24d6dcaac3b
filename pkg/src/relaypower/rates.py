"""Static-channel achievable rates of the half-duplex relay channel.

Every function here is a pure, vectorised map of the operating point
``(s1, t, s2)``:

* ``s1`` -- receive SNR of the source-destination link, ``|h31|^2 P1``
* ``t``  -- link-quality ratio ``|h21|^2 / |h31|^2``
* ``s2`` -- receive SNR of the relay-destination link, ``2 |h32|^2 P2``

Inputs broadcast like numpy arrays. Scalar inputs give numpy scalars back.
Rates are in bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

LN2 = math.log(2.0)
BOUNDARY_TOL = 1e-12


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a rate function."""


class Regime(IntEnum):
    """Branch of the piecewise DF rate."""

    DF_SQRT = 0  # rho* > 1, full coherent combining
    DF_CORRELATED = 1  # rho* in [0, 1], both DF constraints tight
    DF_SATURATED = 2  # rho* < 0, relay decoding limits the rate


@dataclass(frozen=True)
class SnrState:
    s1: float
    t: float
    s2: float

    def __post_init__(self):
        for name in ("s1", "t", "s2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {value!r}")

    def __iter__(self):
        return iter((self.s1, self.t, self.s2))


def _checked(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and nonnegative")
    return arr


def _out(arr):
    arr = np.asarray(arr)
    return arr[()] if arr.ndim == 0 else arr


def shannon(x):
    """``log2(1 + x)``, the capacity of a unit-bandwidth complex AWGN link."""
    return _out(np.log2(1.0 + _checked(x, "x")))


def eta(s1, t):
    """Ratio ``(1 + t s1) / (1 + s1)``."""
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    return _out((1.0 + t * s1) / (1.0 + s1))


def f2(s1, t):
    """S2 beyond which DF is limited by relay decoding: ``(t - 1) s1``.

    Negative when ``t < 1``, meaning DF is saturated for every ``s2 >= 0``.
    """
    return _out((np.asarray(t, dtype=float) - 1.0) * np.asarray(s1, dtype=float))


def _f1(s1, t):
    s1, t = np.broadcast_arrays(np.asarray(s1, dtype=float), np.asarray(t, dtype=float))
    exists = t > s1 + 2.0
    with np.errstate(invalid="ignore"):
        # t - eta simplifies to (t - 1) / (1 + s1)
        root = np.sqrt(np.where(exists, (t - 1.0) / (1.0 + s1), 1.0))
    return np.where(exists, s1 * (root - 1.0) ** 2, np.nan)


def f1(s1, t):
    """S2 below which the coherent-combining branch is active.

    Returns ``nan`` when ``t <= s1 + 2``: the branch is empty there.
    """
    return _out(_f1(_checked(s1, "s1"), _checked(t, "t")))


def crossover_f(s1, t):
    """S2 at which CF overtakes DF, ``(t - 1)(1 + (t + 1) s1)``; ``nan`` for ``t <= 1``."""
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    return _out(np.where(t > 1.0, (t - 1.0) * (1.0 + (t + 1.0) * s1), np.nan))


def _radicand(s1, t, s2):
    e = (1.0 + t * s1) / (1.0 + s1)
    return s2 + e * (t * s1 - s1 - s2)


def _rho(s1, t, s2):
    # (sqrt(rad) - sqrt(s2)) rewritten as (rad - s2) / (sqrt(rad) + sqrt(s2))
    # and rad - s2 = eta (f2 - s2); keeps rho* exact at f2.
    rad = _radicand(s1, t, s2)
    scale = np.maximum(1.0, np.abs(s2) + np.abs(t * s1))
    rad = np.where((rad < 0) & (rad >= -BOUNDARY_TOL * scale), 0.0, rad)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = ((t - 1.0) * s1 - s2) / (np.sqrt(s1) * (np.sqrt(rad) + np.sqrt(s2)))
    return np.where(rad < 0, np.nan, rho)


def rho_star(s1, t, s2):
    """Correlation coefficient that equalises the two DF constraints.

    Returned unclamped. ``nan`` means the equal-rate crossing does not exist
    (negative radicand); use :func:`regime` in that case.
    """
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    s2 = _checked(s2, "s2")
    if np.any(s1 == 0):
        raise DomainError("rho_star needs s1 > 0")
    return _out(_rho(s1, t, s2))


def _regimes(s1, t, s2, side: str = "right"):
    """Integer regime codes.

    With ``side="right"`` the thresholds are closed from above (s2 == f1 is
    correlated, s2 == f2 saturated), i.e. the branch of ``(s2, s2 + eps)``.
    ``side="left"`` gives the branch of ``(s2 - eps, s2)``.
    """
    s1, t, s2 = np.broadcast_arrays(s1, t, s2)
    lower = _f1(s1, t)
    upper = (t - 1.0) * s1
    if side == "right":
        sat = s2 >= upper - BOUNDARY_TOL
        sq = ~sat & (s2 < lower - BOUNDARY_TOL)
    elif side == "left":
        sat = (s2 > upper + BOUNDARY_TOL) | (upper <= 0)
        sq = ~sat & (s2 <= lower + BOUNDARY_TOL)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    codes = np.full(s2.shape, int(Regime.DF_CORRELATED))
    codes[sat] = int(Regime.DF_SATURATED)
    codes[sq] = int(Regime.DF_SQRT)
    return codes


def regime(s1, t, s2):
    """Classify ``s2`` into a :class:`Regime` for fixed ``(s1, t)``."""
    codes = _regimes(_checked(s1, "s1"), _checked(t, "t"), _checked(s2, "s2"))
    if codes.ndim == 0:
        return Regime(int(codes))
    return codes


def _rate_df(s1, t, s2):
    s1, t, s2 = np.broadcast_arrays(s1, t, s2)
    codes = _regimes(s1, t, s2)
    sqrt_term = (np.sqrt(s1) + np.sqrt(s2)) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.clip(_rho(s1, t, s2), 0.0, 1.0)
    corr_term = s1 + s2 + 2.0 * np.nan_to_num(rho) * np.sqrt(s1 * s2)
    term = np.select(
        [codes == Regime.DF_SQRT, codes == Regime.DF_CORRELATED],
        [sqrt_term, corr_term],
        default=t * s1,
    )
    return 0.5 * np.log2(1.0 + s1) + 0.5 * np.log2(1.0 + term)


def rate_df(s1, t, s2):
    """Decode-and-forward rate with the optimal source/relay correlation."""
    return _out(_rate_df(_checked(s1, "s1"), _checked(t, "t"), _checked(s2, "s2")))


def _rate_cf(s1, t, s2):
    a = 1.0 + (t + 1.0) * s1
    return 0.5 * np.log2(1.0 + s1) + 0.5 * np.log2(1.0 + s1 + t * s1 * s2 / (a + s2))


def rate_cf(s1, t, s2):
    """Compress-and-forward rate."""
    return _out(_rate_cf(_checked(s1, "s1"), _checked(t, "t"), _checked(s2, "s2")))


def rate_hybrid(s1, t, s2):
    """Rate of the scheme that picks the better of DF and CF per state."""
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    s2 = _checked(s2, "s2")
    return _out(np.maximum(_rate_df(s1, t, s2), _rate_cf(s1, t, s2)))


def _d_sqrt(s1, s2):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        num = 1.0 + np.sqrt(s1 / s2)
        return num / (2.0 * (1.0 + (np.sqrt(s1) + np.sqrt(s2)) ** 2) * LN2)


def _gd_prime(s1, t, s2):
    """Derivative of ``s1 + s2 + 2 rho* sqrt(s1 s2)`` with respect to ``s2``.

    The textbook form ``1 - 2/eta + Q'/(eta sqrt(Q))`` cancels badly as s2
    approaches f2; the conjugate form is used wherever it is the better
    conditioned of the two.
    """
    e = (1.0 + t * s1) / (1.0 + s1)
    upper = (t - 1.0) * s1
    q = (1.0 - e) * s2 ** 2 + e * upper * s2
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.sqrt(np.maximum(q, 0.0))
        dq = 2.0 * (1.0 - e) * s2 + e * upper
        plus = dq + (2.0 - e) * u
        minus = dq - (2.0 - e) * u
        direct = minus / (e * u)
        conj = e * (upper - s2) * (upper + (1.0 - e) * s2) / (u * plus)
        value = np.where(np.abs(plus) >= np.abs(minus), conj, direct)
    return np.where(s2 == 0, np.inf, value)


def _d_corr(s1, t, s2):
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.clip(_rho(s1, t, s2), 0.0, 1.0)
    g = s1 + s2 + 2.0 * np.nan_to_num(rho) * np.sqrt(s1 * s2)
    return _gd_prime(s1, t, s2) / (2.0 * (1.0 + g) * LN2)


def _d_rate_df(s1, t, s2, side="right"):
    s1, t, s2 = np.broadcast_arrays(s1, t, s2)
    codes = _regimes(s1, t, s2, side)
    out = np.zeros(s2.shape)
    sq = codes == Regime.DF_SQRT
    co = codes == Regime.DF_CORRELATED
    if np.any(sq):
        out[sq] = _d_sqrt(s1[sq], s2[sq])
    if np.any(co):
        out[co] = _d_corr(s1[co], t[co], s2[co])
    return out


def d_rate_df(s1, t, s2, side: str = "right"):
    """One-sided derivative of :func:`rate_df` with respect to ``s2``.

    The DF rate has a kink at ``f1`` where the left derivative exceeds the
    right one; ``side`` selects which limit to return. ``inf`` is returned at
    ``s2 = 0`` when the rate has a vertical tangent there.
    """
    s1 = _checked(s1, "s1")
    t = _checked(t, "t")
    s2 = _checked(s2, "s2")
    return _out(_d_rate_df(s1, t, s2, side))


def _d_rate_cf(s1, t, s2):
    a = 1.0 + (t + 1.0) * s1
    g = 1.0 + s1 + t * s1 * s2 / (a + s2)
    dg = t * s1 * a / (a + s2) ** 2
    return dg / (2.0 * g * LN2)


def d_rate_cf(s1, t, s2):
    """Derivative of :func:`rate_cf` with respect to ``s2``."""
    return _out(_d_rate_cf(_checked(s1, "s1"), _checked(t, "t"), _checked(s2, "s2")))
