"""Vectorised bracketed bisection for monotone decreasing functions."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

MAX_ITER = 200


class BisectResult(NamedTuple):
    root: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    iterations: int


def bisect_decreasing(
    func: Callable[[np.ndarray], np.ndarray],
    target,
    lo,
    hi,
    *,
    rtol: float = 2e-15,
    maxiter: int = MAX_ITER,
) -> BisectResult:
    """Solve ``func(x) == target`` elementwise on ``[lo, hi]``.

    ``func`` must be nonincreasing on each bracket and ``lo`` strictly
    positive; halving happens in log space so brackets spanning many decades
    still close in relative terms. Targets outside ``[func(hi), func(lo)]`` are
    clamped to the nearer endpoint rather than extrapolated.
    """
    target = np.asarray(target, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    target, lo, hi = np.broadcast_arrays(target, lo, hi)
    if np.any(lo <= 0) or np.any(hi < lo):
        raise ValueError("bisection bracket must satisfy 0 < lo <= hi")

    x_lo = np.log(lo)
    x_hi = np.log(hi)
    above_lo = func(lo) < target
    below_hi = func(hi) > target

    def open_(a, b):
        # a bracket narrower than a few ulps of log(x) cannot shrink further
        return (b - a) > np.maximum(rtol, 4.0 * np.spacing(np.maximum(np.abs(a), np.abs(b))))

    it = 0
    active = open_(x_lo, x_hi)
    while np.any(active) and it < maxiter:
        it += 1
        mid = 0.5 * (x_lo + x_hi)
        go_right = func(np.exp(mid)) >= target
        x_lo = np.where(active & go_right, mid, x_lo)
        x_hi = np.where(active & ~go_right, mid, x_hi)
        active = open_(x_lo, x_hi)

    root = np.exp(0.5 * (x_lo + x_hi))
    root = np.where(above_lo, lo, root)
    root = np.where(below_hi, hi, root)
    return BisectResult(root, np.exp(x_lo), np.exp(x_hi), it)


def illinois_decreasing(
    func: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    *,
    rtol: float = 1e-15,
    maxiter: int = MAX_ITER,
) -> BisectResult:
    """Root of a decreasing ``func`` with ``func(lo) > 0 > func(hi)``.

    Regula falsi with the Illinois weight halving, vectorised. Every step
    keeps a sign-changing bracket, so convergence is guaranteed; on smooth
    functions it needs a handful of evaluations instead of ~50 halvings.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    fa = np.asarray(func(a), dtype=float).copy()
    fb = np.asarray(func(b), dtype=float).copy()
    if np.any(fa <= 0) or np.any(fb >= 0):
        raise ValueError("illinois_decreasing needs func(lo) > 0 > func(hi)")
    last = np.zeros(a.shape, dtype=int)  # which end moved last: -1 lo, +1 hi
    it = 0
    active = (b - a) > rtol * np.abs(b)
    while np.any(active) and it < maxiter:
        it += 1
        x = (a * fb - b * fa) / (fb - fa)
        # fall back to the midpoint if the secant leaves the open bracket
        bad = ~((x > a) & (x < b))
        x = np.where(bad, 0.5 * (a + b), x)
        fx = np.asarray(func(x), dtype=float)
        right = active & (fx > 0)
        left = active & (fx < 0)
        hit = active & (fx == 0)
        fb = np.where(right & (last == -1), 0.5 * fb, fb)
        fa = np.where(left & (last == 1), 0.5 * fa, fa)
        a = np.where(right | hit, x, a)
        fa = np.where(right, fx, fa)
        b = np.where(left | hit, x, b)
        fb = np.where(left, fx, fb)
        last = np.where(right, -1, np.where(left, 1, last))
        active &= ~hit & ((b - a) > rtol * np.abs(b))
    return BisectResult(0.5 * (a + b), a, b, it)
