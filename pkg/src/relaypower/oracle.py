"""Brute-force reference computations.

These are deliberately slow and simple: sampled grids, exhaustive scans and
difference quotients. They share nothing with the closed forms except the
Shannon function and (where a rate curve is the input) the rate functions
themselves, so they can be used to check the analytic machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .rates import rate_cf, rate_df, rate_hybrid, shannon


@dataclass(frozen=True)
class GridSpec:
    s2_max: float
    n_points: int
    spacing: str = "linear"
    # first nonzero point of a logarithmic grid; defaults to s2_max * 1e-9
    s2_min: Optional[float] = None

    def __post_init__(self):
        if self.n_points < 2 or not self.s2_max > 0:
            raise ValueError("grid needs n_points >= 2 and s2_max > 0")
        if self.spacing not in ("linear", "logarithmic", "log"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    def points(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(0.0, self.s2_max, self.n_points)
        lo = self.s2_min if self.s2_min is not None else self.s2_max * 1e-9
        return np.concatenate([[0.0], np.geomspace(lo, self.s2_max, self.n_points - 1)])


def upper_hull(x, y) -> np.ndarray:
    """Indices of the upper concave hull of points sorted by ``x``.

    Andrew's monotone chain; collinear points are dropped.
    """
    x = np.asarray(x, dtype=float).tolist()
    y = np.asarray(y, dtype=float).tolist()
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


class HullOracle(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    vertices: np.ndarray
    s_d: float
    s_c: float
    k: float
    warn: bool

    def value(self, s2):
        """Piecewise-linear hull evaluated at ``s2``."""
        return np.interp(s2, self.x[self.vertices], self.y[self.vertices])


def hull_oracle(s1, t, grid: GridSpec, *, samples=None) -> HullOracle:
    """Upper concave hull of sampled hybrid rates and the bridge it implies.

    The bridge is the hull edge under which the sampled curve dips furthest.
    ``warn`` is set when no edge dips by more than rounding noise, i.e. the
    grid saw no bridge.
    """
    x = grid.points()
    y = np.asarray(samples if samples is not None else rate_hybrid(s1, t, x), dtype=float)
    verts = upper_hull(x, y)
    dip = np.interp(x, x[verts], y[verts]) - y
    edge = np.clip(np.searchsorted(verts, np.arange(x.size), side="right") - 1, 0, verts.size - 2)
    worst = np.zeros(verts.size - 1)
    np.maximum.at(worst, edge, dip)
    j = int(np.argmax(worst))
    warn = worst[j] <= 1e-12 * max(1.0, float(np.max(np.abs(y))))
    a, b = verts[j], verts[j + 1]
    k = (y[b] - y[a]) / (x[b] - x[a])
    if warn:
        return HullOracle(x, y, verts, math.nan, math.nan, math.nan, True)
    return HullOracle(x, y, verts, float(x[a]), float(x[b]), float(k), False)


def df_rate_oracle(s1, t, s2, n_rho: int = 1000, levels: int = 4) -> float:
    """DF rate by maximising the min of the two DF constraints over a rho grid.

    Each level re-grids the neighbourhood of the previous best point, so the
    effective resolution is ``n_rho ** -levels``.
    """
    if n_rho < 1000:
        raise ValueError("n_rho must be at least 1000")
    s1, t, s2 = float(s1), float(t), float(s2)

    def objective(rho):
        relay = shannon(t * s1) + shannon((1.0 - rho ** 2) * s1)
        dest = shannon(s1) + shannon(s1 + s2 + 2.0 * rho * math.sqrt(s1 * s2))
        return 0.5 * np.minimum(relay, dest)

    lo, hi = 0.0, 1.0
    best = -math.inf
    for _ in range(levels):
        rho = np.linspace(lo, hi, n_rho + 1)
        vals = objective(rho)
        i = int(np.argmax(vals))
        best = max(best, float(vals[i]))
        step = (hi - lo) / n_rho
        lo, hi = max(0.0, rho[i] - step), min(1.0, rho[i] + step)
    return best


def fd_derivative(f: Callable[[float], float], x: float, h: float = 1e-6, side: str = "central") -> float:
    """Difference quotient of ``f`` at ``x`` with one Richardson step.

    One-sided quotients only sample ``f`` on the requested side of ``x``,
    which is what is needed at a kink.
    """
    if side == "central":
        d1 = (f(x + h) - f(x - h)) / (2 * h)
        d2 = (f(x + h / 2) - f(x - h / 2)) / h
        return (4 * d2 - d1) / 3
    if side == "right":
        d1 = (f(x + h) - f(x)) / h
        d2 = (f(x + h / 2) - f(x)) / (h / 2)
    elif side == "left":
        d1 = (f(x) - f(x - h)) / h
        d2 = (f(x) - f(x - h / 2)) / (h / 2)
    else:
        raise ValueError(f"side must be central, left or right, got {side!r}")
    return 2 * d2 - d1


class OracleAllocation(NamedTuple):
    rate: float
    s2: np.ndarray
    power: float
    mu: float
    cell: float  # widest relative grid step, a bound on budget resolution


_RATES = {"df": rate_df, "cf": rate_cf, "hybrid": rate_hybrid}


def discrete_allocation_oracle(states, budget, protocol, n_grid: int = 4000) -> OracleAllocation:
    """Best average rate found by exhaustive per-state scans over a dual sweep.

    ``states`` is ``[((a31, a21, a32), prob), ...]`` with at most 8 entries.
    For each multiplier every state independently picks the grid point that
    maximises ``R(S2) - mu S2 / (2 a32^2)``; this handles the non-concave
    hybrid rate since nothing but enumeration is involved. The smallest
    multiplier whose allocation fits the budget wins.
    """
    if len(states) > 8:
        raise ValueError("the exhaustive oracle handles at most 8 states")
    if n_grid > 4000:
        raise ValueError("per-state grids are limited to 4000 points")
    rate = _RATES[str(getattr(protocol, "value", protocol))]
    p1, p2 = budget.p1_bar, budget.p2_bar

    probs, grids, values, costs = [], [], [], []
    for (a31, a21, a32), p in states:
        s1 = a31 * a31 * p1
        factor = 2.0 * a32 * a32
        probs.append(p)
        if factor == 0 or s1 == 0 or p == 0:
            grid = np.zeros(1)
            cost = np.zeros(1)
            t = 0.0
        else:
            t = (a21 * a21) / (a31 * a31)
            top = factor * p2 / p
            grid = np.concatenate([[0.0], np.geomspace(top * 1e-7, top, n_grid - 1)])
            cost = grid / factor
        grids.append(grid)
        values.append(np.asarray(rate(s1, t, grid), dtype=float) if s1 > 0 else np.zeros(grid.size))
        costs.append(cost)
    probs = np.asarray(probs, dtype=float)

    def pick(mu):
        return [int(np.argmax(v - mu * c)) for v, c in zip(values, costs)]

    def power(idx):
        return float(sum(p * c[i] for p, c, i in zip(probs, costs, idx)))

    def result(mu, idx):
        r = float(sum(p * v[i] for p, v, i in zip(probs, values, idx)))
        s2 = np.array([g[i] for g, i in zip(grids, idx)])
        return OracleAllocation(r, s2, power(idx), mu, math.expm1(math.log(1e7) / (n_grid - 2)))

    idx = pick(0.0)
    if power(idx) <= p2:
        return result(0.0, idx)
    hi = 1.0
    while power(pick(hi)) > p2:
        hi *= 2.0
    lo = hi
    while power(pick(lo)) <= p2:
        lo *= 0.5
        if lo < 1e-300:
            break
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if power(pick(mid)) > p2:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-14:
            break
    return result(hi, pick(hi))
