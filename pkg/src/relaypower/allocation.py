"""Relay power allocation over fading states.

The relay maximises the average rate ``E[R(S2(h))]`` subject to the average
power constraint ``E[S2(h) / (2 |h32|^2)] = P2_bar``. With one multiplier
``mu`` shared by all states, each state runs at ``S2 = T(mu / (2 |h32|^2))``
where ``T`` is the inverse marginal-rate map of the protocol (the envelope's
for the hybrid scheme). ``mu`` is found by bisection on the expected power.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .envelope import _build, _t_envelope
from .fading import FadingModel, IntegratorSpec, StateSet, states_from_fading
from .inverse import _t_cf, _t_df_solve
from .rates import _rate_cf, _rate_df

logger = logging.getLogger(__name__)

# a31 is floored at this when forming t; such states have s1 = 0 and carry no rate
_A31_FLOOR_SQ = 1e-30


class Protocol(str, Enum):
    DF = "df"
    CF = "cf"
    HYBRID = "hybrid"


class ChannelRealization(NamedTuple):
    a31: float
    a21: float
    a32: float


class Estimate(NamedTuple):
    value: float
    stderr: Optional[float] = None


class RateReport(NamedTuple):
    value: float
    stderr: Optional[float] = None
    # hybrid only: the same allocation scored with the concave envelope
    envelope_value: Optional[float] = None


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerBudget:
    p1_bar: float
    p2_bar: float

    def __post_init__(self):
        for name in ("p1_bar", "p2_bar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def snr_of(realization, p1_bar):
    """Map amplitudes to ``(s1, t, 2 a32^2)``; works on arrays too."""
    a31, a21, a32 = (np.asarray(x, dtype=float) for x in realization)
    a31_sq = a31 ** 2
    s1 = a31_sq * p1_bar
    t = a21 ** 2 / np.maximum(a31_sq, _A31_FLOOR_SQ)
    factor = 2.0 * a32 ** 2
    if s1.ndim == 0:
        return float(s1), float(t), float(factor)
    return s1, t, factor


class EnvelopeCache:
    """Memo of envelope bridges keyed on ``(s1, t)`` rounded to 1e-9."""

    def __init__(self, decimals: int = 9):
        self.decimals = decimals
        self._store: dict = {}

    def __len__(self):
        return len(self._store)

    def lookup(self, s1, t):
        s1 = np.atleast_1d(np.asarray(s1, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        keys = np.round(np.column_stack([s1, t]), self.decimals)
        uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.ravel()
        rows = [tuple(r) for r in uniq]
        missing = [i for i, r in enumerate(rows) if r not in self._store]
        if missing:
            idx = first[missing]
            ms1, mt = s1[idx], t[idx]
            usable = ms1 > 0
            s_d = np.full(len(idx), np.nan)
            s_c = np.full(len(idx), np.nan)
            k = np.full(len(idx), np.nan)
            deg = np.ones(len(idx), dtype=bool)
            if np.any(usable):
                s_d[usable], s_c[usable], k[usable], deg[usable] = _build(ms1[usable], mt[usable])
            for j, i in enumerate(missing):
                self._store[rows[i]] = (s_d[j], s_c[j], k[j], bool(deg[j]))
        table = np.array([self._store[r] for r in rows], dtype=float).reshape(-1, 4)
        per_state = table[inverse]
        return per_state[:, 0], per_state[:, 1], per_state[:, 2], per_state[:, 3].astype(bool)


class _Problem:
    """Per-state quantities that do not depend on ``mu``."""

    def __init__(self, states: StateSet, protocol: Protocol, p1_bar: float, cache=None):
        self.states = states
        self.protocol = Protocol(protocol)
        a = states.amplitudes
        self.s1, self.t, self.factor = snr_of((a[:, 0], a[:, 1], a[:, 2]), p1_bar)
        self.active = (self.factor > 0) & (self.s1 > 0)
        if self.protocol is Protocol.HYBRID:
            cache = cache if cache is not None else EnvelopeCache()
            geo = cache.lookup(self.s1[self.active], self.t[self.active])
            self.geometry = geo

    def s2_at(self, mu: float) -> np.ndarray:
        s2 = np.zeros(self.s1.shape)
        act = self.active
        if not np.any(act):
            return s2
        nu = mu / self.factor[act]
        s1, t = self.s1[act], self.t[act]
        if self.protocol is Protocol.DF:
            s2[act], _ = _t_df_solve(nu, s1, t)
        elif self.protocol is Protocol.CF:
            s2[act] = _t_cf(nu, s1, t)
        else:
            s_d, s_c, k, deg = self.geometry
            s2[act] = _t_envelope(nu, s1, t, s_d, s_c, k, deg)
        return s2

    def power_terms(self, s2: np.ndarray) -> np.ndarray:
        out = np.zeros(s2.shape)
        act = self.factor > 0
        out[act] = s2[act] / self.factor[act]
        return out

    def expected_power(self, mu: float) -> Estimate:
        return Estimate(*self.states.expect(self.power_terms(self.s2_at(mu))))

    def rate_terms(self, s2: np.ndarray, protocol: Optional[Protocol] = None) -> np.ndarray:
        protocol = self.protocol if protocol is None else Protocol(protocol)
        if protocol is Protocol.DF:
            return _rate_df(self.s1, self.t, s2)
        if protocol is Protocol.CF:
            return _rate_cf(self.s1, self.t, s2)
        return np.maximum(_rate_df(self.s1, self.t, s2), _rate_cf(self.s1, self.t, s2))

    def envelope_terms(self, s2: np.ndarray) -> np.ndarray:
        out = self.rate_terms(s2, Protocol.HYBRID)
        act = self.active
        s_d, s_c, k, deg = self.geometry
        s1, t, x = self.s1[act], self.t[act], s2[act]
        inside = ~deg & (x > s_d) & (x < s_c)
        bridge = _rate_df(s1, t, np.nan_to_num(s_d)) + k * (x - s_d)
        out[act] = np.where(inside, bridge, out[act])
        return out


@dataclass(frozen=True)
class AllocationPolicy:
    """Solved relay power allocation.

    ``budget_slack`` is the unspent average power. It is nonzero when DF
    saturates, or when the hybrid budget falls inside a power jump caused by
    a state whose slope ties with its envelope bridge; the least-power rule
    then leaves that power unused rather than entering the bridge.
    """

    protocol: Protocol
    mu_star: float
    budget: PowerBudget
    states: StateSet = field(repr=False)
    achieved_power: Estimate
    saturated: bool = False
    budget_slack: float = 0.0
    iterations: int = 0
    fading: Optional[FadingModel] = None
    integrator: Optional[IntegratorSpec] = None
    trace: tuple = field(default=(), repr=False)
    _problem: object = field(default=None, repr=False, compare=False)

    @property
    def residual(self) -> float:
        """Relative budget mismatch ``|E[P2] - P2_bar| / P2_bar``."""
        return abs(self.achieved_power.value - self.budget.p2_bar) / self.budget.p2_bar

    def allocate(self, a31, a21, a32, cache=None):
        """Relay power and SNR ``(P2, S2)`` for arbitrary realisations."""
        amps = np.column_stack([np.atleast_1d(np.asarray(x, dtype=float)) for x in (a31, a21, a32)])
        states = StateSet(amps, np.full(len(amps), 1.0 / len(amps)))
        prob = _Problem(states, self.protocol, self.budget.p1_bar, cache)
        s2 = prob.s2_at(self.mu_star)
        return prob.power_terms(s2), s2


def _problem(states, protocol, budget, cache=None) -> _Problem:
    return _Problem(states, Protocol(protocol), budget.p1_bar, cache)


def allocate_state(realization, mu, protocol, budget: PowerBudget, envelope_cache=None):
    """Relay power and SNR for one realisation at multiplier ``mu``.

    A dead relay-destination link (``a32 == 0``) gets no power.
    """
    r = ChannelRealization(*realization)
    states = StateSet(np.array([r], dtype=float), np.array([1.0]))
    prob = _problem(states, protocol, budget, envelope_cache)
    s2 = prob.s2_at(mu)
    return float(prob.power_terms(s2)[0]), float(s2[0])


def expected_relay_power(mu, protocol, budget: PowerBudget, fading: FadingModel,
                         integrator: IntegratorSpec = IntegratorSpec(), *, states=None,
                         cache=None) -> Estimate:
    """``E[P2(h)]`` at multiplier ``mu`` (with a standard error for Monte Carlo)."""
    states = states if states is not None else states_from_fading(fading, integrator)
    return _problem(states, protocol, budget, cache).expected_power(mu)


def solve_mu(protocol, budget: PowerBudget, fading: Optional[FadingModel] = None,
             integrator: IntegratorSpec = IntegratorSpec(), *, states: Optional[StateSet] = None,
             rel_tol: float = 1e-4, cache=None) -> AllocationPolicy:
    """Find the multiplier that spends the average relay power budget.

    Either ``fading`` (expanded by ``integrator``) or an explicit ``states``
    set must be given. For DF a budget beyond the saturation power returns a
    policy with ``mu_star = 0`` and ``saturated=True``.
    """
    if states is None:
        if fading is None:
            raise ValueError("solve_mu needs a fading model or a state set")
        states = states_from_fading(fading, integrator)
    protocol = Protocol(protocol)
    prob = _problem(states, protocol, budget, cache)
    target = budget.p2_bar
    trace = []

    def power(mu):
        est = prob.expected_power(mu)
        trace.append((mu, est.value))
        return est

    def policy(mu, est, **kw):
        _check_monotone(trace)
        return AllocationPolicy(
            protocol=protocol, mu_star=mu, budget=budget, states=states, achieved_power=est,
            fading=fading, integrator=integrator, trace=tuple(trace), _problem=prob, **kw,
        )

    if protocol is Protocol.DF:
        sat = power(0.0)
        if sat.value <= target:
            return policy(0.0, sat, saturated=True, budget_slack=target - sat.value)
    elif not np.any(prob.active & (prob.t * prob.s1 > 0)):
        raise SolverError("no channel state can convert relay power into rate")

    mu_hi = 1.0
    est_hi = power(mu_hi)
    for _ in range(2000):
        if est_hi.value <= target:
            break
        mu_hi *= 2.0
        est_hi = power(mu_hi)
    else:
        raise SolverError("could not find mu with expected power below the budget")
    mu_lo = mu_hi
    est_lo = est_hi
    for _ in range(2000):
        if est_lo.value >= target:
            break
        mu_lo *= 0.5
        if mu_lo < 1e-300:
            raise SolverError("could not find mu with expected power above the budget")
        est_lo = power(mu_lo)

    for mu, est in ((mu_lo, est_lo), (mu_hi, est_hi)):
        if abs(est.value - target) <= rel_tol * target:
            return policy(mu, est, iterations=len(trace))

    for _ in range(400):
        mid = math.sqrt(mu_lo * mu_hi)
        est = power(mid)
        if abs(est.value - target) <= rel_tol * target:
            return policy(mid, est, iterations=len(trace))
        if est.value > target:
            mu_lo = mid
        else:
            mu_hi, est_hi = mid, est
        if mu_hi / mu_lo - 1.0 < 1e-12:
            break
    slack = target - est_hi.value
    logger.info("expected power jumps across mu=%.12g; %.6g of the budget is left unused", mu_hi, slack)
    return policy(mu_hi, est_hi, iterations=len(trace), budget_slack=slack)


def _check_monotone(trace):
    pts = sorted(trace)
    for (m0, p0), (m1, p1) in zip(pts, pts[1:]):
        if p1 > p0 * (1.0 + 1e-12) + 1e-300:
            raise SolverError(f"expected power increased with mu: P({m0:.6g})={p0:.6g} < P({m1:.6g})={p1:.6g}")


def average_rate(policy: AllocationPolicy, integrator: Optional[IntegratorSpec] = None) -> RateReport:
    """Average rate achieved by ``policy``.

    Hybrid policies are scored with the true best-of-DF/CF rate; the envelope
    score of the same allocation is reported alongside so the two can be
    compared.
    """
    if integrator is None or integrator == policy.integrator:
        prob = policy._problem or _problem(policy.states, policy.protocol, policy.budget)
    else:
        if policy.fading is None:
            raise ValueError("re-integration needs the policy's fading model")
        prob = _problem(states_from_fading(policy.fading, integrator), policy.protocol, policy.budget)
    s2 = prob.s2_at(policy.mu_star)
    value, stderr = prob.states.expect(prob.rate_terms(s2))
    envelope_value = None
    if policy.protocol is Protocol.HYBRID:
        envelope_value, _ = prob.states.expect(prob.envelope_terms(s2))
    return RateReport(value, stderr, envelope_value)


def fixed_power_baseline(budget: PowerBudget, fading: Optional[FadingModel], protocol,
                         integrator: IntegratorSpec = IntegratorSpec(), *,
                         states: Optional[StateSet] = None) -> Estimate:
    """Average rate when the relay always transmits at ``P2_bar``."""
    states = states if states is not None else states_from_fading(fading, integrator)
    prob = _Problem(states, Protocol.CF if Protocol(protocol) is Protocol.HYBRID else protocol,
                    budget.p1_bar)
    s2 = prob.factor * budget.p2_bar
    return Estimate(*states.expect(prob.rate_terms(s2, protocol)))
