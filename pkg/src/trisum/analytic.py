"""Closed-form numeric layer driving the randomized weighting rule.

Vertex variables live on [1.1, 2.9] with density proportional to 1/x; the
rule weighting an inner edge 3 combines a deterministic threshold (when the
larger endpoint value is at least 1.9) with a coin comparison against
r(x) * r(y) / dbar (when it is below). The piecewise function r and the
constant dbar are calibrated so that the marginal probability of weight 3
given one endpoint value a is exactly (a - 1) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DomainConstants:
    beta_lo: float = 1.1
    beta_hi: float = 2.9
    beta_mid: float = 1.9
    log_ratio: float = math.log(2.9 / 1.1)

    def __post_init__(self):
        if not (self.beta_lo < self.beta_mid < self.beta_hi):
            raise ValueError("domain endpoints out of order")
        if self.log_ratio <= 0:
            raise ValueError("log_ratio must be positive")


DOMAIN = DomainConstants()

X_LO = DOMAIN.beta_lo
X_HI = DOMAIN.beta_hi
X_MID = DOMAIN.beta_mid
LOG_RATIO = DOMAIN.log_ratio


@dataclass(frozen=True)
class RBreakpoints:
    a1: float
    a2: float

    def __post_init__(self):
        if not (0.0 < self.a1 < self.a2 < X_MID):
            raise ValueError("breakpoints must satisfy 0 < a1 < a2 < 1.9")


@dataclass(frozen=True)
class DBar:
    value: float

    def __post_init__(self):
        if not (0.023 < self.value < 0.024):
            raise ValueError(f"dbar out of its certified range: {self.value}")


def breakpoints() -> RBreakpoints:
    """The two knots of r: hi / ratio**0.95 and hi / ratio**0.45."""
    ratio = X_HI / X_LO
    return RBreakpoints(a1=X_HI / ratio**0.95, a2=X_HI / ratio**0.45)


_BP = breakpoints()
A1 = _BP.a1
A2 = _BP.a2


def density_g(x: float) -> float:
    """Density of the vertex variable: 1 / (ln(hi/lo) * x) on [1.1, 2.9]."""
    if not X_LO <= x <= X_HI:
        raise ValueError(f"x={x} outside [{X_LO}, {X_HI}]")
    return 1.0 / (LOG_RATIO * x)


def x_cdf(x):
    """CDF of the vertex variable, clamped outside the domain; vectorized."""
    arr = np.clip(np.asarray(x, dtype=np.float64), X_LO, X_HI)
    out = np.log(arr / X_LO) / LOG_RATIO
    return float(out) if out.ndim == 0 else out


def x_from_uniform(t):
    """Inverse CDF: lo * (hi/lo)**t. t may be a scalar or an array."""
    return X_LO * (X_HI / X_LO) ** np.asarray(t, dtype=np.float64)


def sample_x(rng: np.random.Generator) -> float:
    """Draw one vertex variable by inverse-CDF sampling."""
    return float(x_from_uniform(rng.random()))


def sample_x_many(rng: np.random.Generator, size: int) -> np.ndarray:
    return x_from_uniform(rng.random(size))


def _r_unchecked(x: np.ndarray) -> np.ndarray:
    """Vectorized r on [1.1, 1.9]; caller guarantees the domain."""
    x = np.asarray(x, dtype=np.float64)
    out = (x - 1.0) / 2.0
    mid = (x >= A1) & (x <= A2)
    if mid.any():
        xm = x[mid]
        out[mid] -= np.log(X_HI / (1.0 + 2.0 * np.log(X_HI / xm) / LOG_RATIO)) / LOG_RATIO
    top = x > A2
    if top.any():
        out[top] -= math.log(X_HI / X_MID) / LOG_RATIO
    return out


def r_value(x: float) -> float:
    """The three-branch piecewise function on [1.1, 1.9]."""
    if not X_LO <= x <= X_MID:
        raise ValueError(f"x={x} outside [{X_LO}, {X_MID}]")
    return float(_r_unchecked(np.asarray([x]))[0])


def dbar_closed_form() -> DBar:
    """Closed form of the integral of r * g over [1.1, 1.9]."""
    q = math.log(X_HI / X_MID) / LOG_RATIO
    return DBar(value=(q + 0.5) ** 2 - 0.1 / LOG_RATIO - 0.75)


DBAR = dbar_closed_form().value


def composite_simpson(f, a: float, b: float, panels: int) -> float:
    """Composite Simpson rule with an even number of panels (rounded up)."""
    panels = max(2, panels + (panels % 2))
    xs = np.linspace(a, b, panels + 1)
    ys = np.asarray([f(x) for x in xs], dtype=np.float64)
    h = (b - a) / panels
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-2:2].sum()))


def dbar_quadrature(subintervals: int) -> float:
    """Quadrature of r * g, split at the knots where r is not smooth."""
    if subintervals < 1:
        raise ValueError("subintervals must be >= 1")
    pieces = [(X_LO, A1), (A1, A2), (A2, X_MID)]
    span = X_MID - X_LO
    total = 0.0
    for a, b in pieces:
        panels = max(2, int(round(subintervals * (b - a) / span)))
        total += composite_simpson(
            lambda x: float(_r_unchecked(np.asarray([x]))[0]) / (LOG_RATIO * x),
            a, b, panels,
        )
    return total


def weight3_threshold(x_big) -> np.ndarray | float:
    """Deterministic cutoff for the smaller endpoint: hi / ratio**((x-1)/2)."""
    x_big = np.asarray(x_big, dtype=np.float64)
    out = X_HI * np.exp(-LOG_RATIO * (x_big - 1.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def weight3_probability(alpha: float) -> float:
    """Probability that an inner edge gets weight 3 given one endpoint value.

    Evaluates the rule's marginal case by case (threshold mass of the
    density above/below the knots plus the r contribution). Every branch
    collapses to (alpha - 1) / 2.
    """
    if not X_LO <= alpha <= X_HI:
        raise ValueError(f"alpha={alpha} outside [{X_LO}, {X_HI}]")
    if alpha >= X_MID:
        t = weight3_threshold(alpha)
        return (math.log(X_HI) - math.log(t)) / LOG_RATIO
    r_a = r_value(alpha)
    if alpha > A2:
        return math.log(X_HI / X_MID) / LOG_RATIO + r_a
    if alpha >= A1:
        upper = 1.0 + 2.0 * math.log(X_HI / alpha) / LOG_RATIO
        return math.log(X_HI / upper) / LOG_RATIO + r_a
    return r_a


def edge_weight3_mask(x_a, x_b, x_e) -> np.ndarray:
    """Vectorized weighting rule; True where the edge receives weight 3.

    Endpoint roles are by value (the rule is symmetric), so id tie-breaks
    do not change the outcome.
    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    x_e = np.asarray(x_e, dtype=np.float64)
    small = np.minimum(x_a, x_b)
    big = np.maximum(x_a, x_b)
    out = np.zeros(small.shape, dtype=bool)
    hi = big >= X_MID
    if hi.any():
        out[hi] = small[hi] >= weight3_threshold(big[hi])
    lo = ~hi
    if lo.any():
        prob = _r_unchecked(small[lo]) * _r_unchecked(big[lo]) / DBAR
        out[lo] = x_e[lo] <= prob
    return out


def simulate_weight3_frequency(alpha: float, trials: int, rng: np.random.Generator) -> float:
    """Monte Carlo frequency of weight 3 at a pinned endpoint value."""
    x_u = sample_x_many(rng, trials)
    x_e = rng.random(trials)
    mask = edge_weight3_mask(np.full(trials, alpha), x_u, x_e)
    return float(mask.mean())


def constants_report(r_grid: int = 9) -> dict:
    """Summary of the derived constants plus a small r table."""
    xs = np.linspace(X_LO, X_MID, r_grid)
    return {
        "beta_lo": X_LO,
        "beta_hi": X_HI,
        "beta_mid": X_MID,
        "log_ratio": LOG_RATIO,
        "a1": A1,
        "a2": A2,
        "dbar_closed_form": DBAR,
        "dbar_quadrature": dbar_quadrature(10_000),
        "r_table": [{"x": float(x), "r": r_value(float(x))} for x in xs],
    }
