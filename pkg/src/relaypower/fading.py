"""Per-link amplitude distributions and the integrators that turn a fading
model into a weighted set of channel states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

# Rayleigh quadrature truncates the amplitude at this many scale units
RAYLEIGH_TRUNCATION = 6.0

LINKS = ("h31", "h21", "h32")


@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh amplitude with density ``(a / s^2) exp(-a^2 / (2 s^2))``."""

    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Rayleigh scale must be positive, got {self.scale!r}")

    @property
    def mean_power(self) -> float:
        return 2.0 * self.scale ** 2

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.rayleigh(self.scale, size=n)

    def nodes(self, n: int):
        x, w = np.polynomial.legendre.leggauss(n)
        upper = RAYLEIGH_TRUNCATION * self.scale
        a = 0.5 * upper * (x + 1.0)
        pdf = a / self.scale ** 2 * np.exp(-(a ** 2) / (2.0 * self.scale ** 2))
        weights = 0.5 * upper * w * pdf
        # truncated tail mass (~1.5e-8) is folded back in by renormalising
        return a, weights / weights.sum()


@dataclass(frozen=True)
class Fixed:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"fixed amplitude must be finite and >= 0, got {self.value!r}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.value))

    def nodes(self, n: int = 1):
        return np.array([float(self.value)]), np.array([1.0])


@dataclass(frozen=True)
class Empirical:
    values: tuple
    probs: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
            raise ValueError("empirical distribution needs equally long, nonempty values and probs")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("empirical amplitudes must be finite and >= 0")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"empirical probabilities must be >= 0 and sum to 1, got sum {probs.sum()!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(np.asarray(self.values), size=n, p=np.asarray(self.probs))

    def nodes(self, n: int = 1):
        return np.asarray(self.values), np.asarray(self.probs)


LinkDistribution = Union[Rayleigh, Fixed, Empirical]


@dataclass(frozen=True)
class FadingModel:
    """Independent amplitude distributions of the three links."""

    h31: LinkDistribution
    h21: LinkDistribution
    h32: LinkDistribution

    @property
    def links(self):
        return (self.h31, self.h21, self.h32)

    @property
    def is_discrete(self) -> bool:
        return not any(isinstance(d, Rayleigh) for d in self.links)

    @classmethod
    def rayleigh(cls, s31=1.0, s21=1.0, s32=1.0) -> "FadingModel":
        return cls(Rayleigh(s31), Rayleigh(s21), Rayleigh(s32))

    @classmethod
    def fixed(cls, a31, a21, a32) -> "FadingModel":
        return cls(Fixed(a31), Fixed(a21), Fixed(a32))


@dataclass(frozen=True)
class IntegratorSpec:
    """How expectations over the fading model are computed.

    kind
        ``"exact"`` enumerates discrete supports, ``"quad"`` uses tensor
        Gauss-Legendre nodes for Rayleigh links (``nodes`` per link) and exact
        supports for the rest, ``"mc"`` draws ``samples`` i.i.d. states from
        ``seed``.
    """

    kind: str = "quad"
    samples: int = 10_000
    seed: int = 0
    nodes: int = 16
    max_states: int = 2_000_000

    def __post_init__(self):
        if self.kind not in ("exact", "quad", "mc"):
            raise ValueError(f"integrator kind must be exact, quad or mc, got {self.kind!r}")
        if self.samples < 1 or self.nodes < 1:
            raise ValueError("integrator sizes must be positive")


@dataclass(frozen=True)
class StateSet:
    """Weighted channel states: amplitudes ``(n, 3)`` and weights summing to 1.

    ``iid`` marks Monte Carlo draws, for which standard errors are meaningful.
    """

    amplitudes: np.ndarray
    weights: np.ndarray
    iid: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if amps.ndim != 2 or amps.shape[1] != 3 or w.shape != (amps.shape[0],):
            raise ValueError("amplitudes must be (n, 3) with n matching weights")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def expect(self, values) -> tuple:
        """Weighted mean of per-state ``values`` and its standard error.

        The standard error is ``None`` unless the states are i.i.d. draws.
        """
        values = np.asarray(values, dtype=float)
        mean = float(np.dot(self.weights, values))
        if not self.iid or values.size < 2:
            return mean, None
        return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


class IntegratorBudgetError(RuntimeError):
    pass


def states_from_fading(fading: FadingModel, integrator: IntegratorSpec) -> StateSet:
    """Materialise the states an integrator sums over."""
    if integrator.kind == "mc":
        rng = np.random.default_rng(integrator.seed)
        cols = [d.sample(integrator.samples, rng) for d in fading.links]
        n = integrator.samples
        return StateSet(np.column_stack(cols), np.full(n, 1.0 / n), iid=True, meta={"kind": "mc"})

    if integrator.kind == "exact" and not fading.is_discrete:
        raise ValueError("exact integration needs fixed or empirical links; use quad or mc for Rayleigh")
    supports = [d.nodes(integrator.nodes) for d in fading.links]
    size = math.prod(len(a) for a, _ in supports)
    if size > integrator.max_states:
        raise IntegratorBudgetError(f"tensor grid has {size} states, above max_states={integrator.max_states}")
    grids = np.meshgrid(*(a for a, _ in supports), indexing="ij")
    wgrids = np.meshgrid(*(w for _, w in supports), indexing="ij")
    amps = np.column_stack([g.ravel() for g in grids])
    weights = wgrids[0].ravel() * wgrids[1].ravel() * wgrids[2].ravel()
    return StateSet(amps, weights / weights.sum(), iid=False, meta={"kind": integrator.kind})


def states_from_list(states) -> StateSet:
    """Build a state set from ``[((a31, a21, a32), prob), ...]``."""
    amps = np.array([tuple(r) for r, _ in states], dtype=float)
    probs = np.array([p for _, p in states], dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0):
        raise ValueError("state probabilities must be >= 0 and sum to 1")
    return StateSet(amps, probs)
