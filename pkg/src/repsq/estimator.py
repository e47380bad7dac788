"""Online weighted-measure estimator and its two termination radii.

The estimator ingests one weighted measure psi(x)*w(x) per test and keeps
(n, mean, m2) in Welford form, so the running estimate and its population
variance sigma_hat = m2/n are both O(1) per update. A campaign stops once
either confidence radius falls to gamma:

- the variance-adaptive radius
      sqrt(2 sigma_hat ln(2/c) / n) + 7 R ln(2/c) / (3 (n-1)),
  where R is (m*w_bar)^2 under the default mode "paper-exact" or m*w_bar
  under mode "linear-range" (the dimensionally linear variant); and
- the fixed-range radius
      (m*w_bar) sqrt(ln(2/c) / (2 n)).

Both are always evaluated and the smaller one decides (each is a valid
confidence radius, so their minimum is too). The variance-adaptive radius
wins by orders of magnitude on low-variance campaigns; the fixed-range
radius wins near maximal variance.

Expression order in this module is pinned: the scan kernels replicate
these formulas operation for operation so that scalar and array paths
terminate at identical n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InsufficientSamples

__all__ = [
    "EstimatorState",
    "BoundSpec",
    "RANGE_TERM_MODES",
    "update",
    "bernstein_radius",
    "hoeffding_radius",
    "required_n_hoeffding",
    "should_terminate",
]

RANGE_TERM_MODES = ("paper-exact", "linear-range")


@dataclass(frozen=True)
class EstimatorState:
    """Running count, mean, and sum of squared deviations.

    variance() is the population variance m2/n (division by n, not n-1),
    matching the termination radius definition.
    """

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise DomainError(f"negative count {self.n}")
        if self.n == 0 and (self.mean != 0.0 or self.m2 != 0.0):
            raise DomainError("empty state must have mean = m2 = 0")
        if self.m2 < 0.0:
            raise DomainError(f"negative m2 {self.m2}")

    @property
    def variance(self) -> float:
        return self.m2 / self.n if self.n > 0 else 0.0


def update(state: EstimatorState, weighted_measure: float) -> EstimatorState:
    """Fold one weighted measure into the state (Welford recurrence)."""
    if not math.isfinite(weighted_measure):
        raise DomainError(f"non-finite weighted measure {weighted_measure}")
    n = state.n + 1
    delta = weighted_measure - state.mean
    mean = state.mean + delta / n
    m2 = state.m2 + delta * (weighted_measure - mean)
    return EstimatorState(n, mean, m2)


@dataclass(frozen=True)
class BoundSpec:
    """Declared range and weight bounds entering the radii.

    m is the measure range m_high - m_low; w_bar caps the importance
    weight p/q. ``joint`` optionally overrides the product m*w_bar with a
    tighter empirical or conditional bound on psi*w (declaring it is the
    campaign author's responsibility; radii are only valid if the bound
    actually holds for the sampled values).
    """

    m: float
    w_bar: float
    c: float
    joint: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.m) and self.m > 0.0):
            raise DomainError(f"m must be finite and positive, got {self.m}")
        if not (math.isfinite(self.w_bar) and self.w_bar >= 1.0):
            raise DomainError(f"w_bar must be >= 1 (p=q somewhere), got {self.w_bar}")
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"c must lie in (0, 1), got {self.c}")
        if self.joint is not None and not (math.isfinite(self.joint) and self.joint > 0.0):
            raise DomainError(f"joint bound must be finite and positive, got {self.joint}")

    @property
    def product(self) -> float:
        """The effective bound on psi*w used by both radii."""
        return self.joint if self.joint is not None else self.m * self.w_bar

    @property
    def log_term(self) -> float:
        return math.log(2.0 / self.c)


def _range_coef(bounds: BoundSpec, range_term_mode: str) -> float:
    if range_term_mode == "paper-exact":
        return bounds.product * bounds.product
    if range_term_mode == "linear-range":
        return bounds.product
    raise DomainError(
        f"range_term_mode must be one of {RANGE_TERM_MODES}, got {range_term_mode!r}"
    )


def bernstein_second_coef(bounds: BoundSpec, range_term_mode: str = "paper-exact") -> float:
    """The constant C in the deterministic radius term C / (n-1).

    Shared with the scan kernels so every code path evaluates the same
    float.
    """
    return 7.0 * _range_coef(bounds, range_term_mode) * bounds.log_term / 3.0


def bernstein_radius(
    state: EstimatorState, bounds: BoundSpec, range_term_mode: str = "paper-exact"
) -> float:
    """Variance-adaptive two-sided confidence radius at the current n."""
    if state.n < 2:
        raise InsufficientSamples(f"radius needs n >= 2, have n = {state.n}")
    n = float(state.n)
    sigma = state.m2 / n
    c2 = bernstein_second_coef(bounds, range_term_mode)
    return math.sqrt(2.0 * sigma * bounds.log_term / n) + c2 / (n - 1.0)


def hoeffding_radius(n: int, bounds: BoundSpec) -> float:
    """Fixed-range confidence radius at sample count n."""
    if n < 1:
        raise InsufficientSamples(f"radius needs n >= 1, have n = {n}")
    return bounds.product * math.sqrt(bounds.log_term / (2.0 * float(n)))


def required_n_hoeffding(gamma: float, bounds: BoundSpec) -> int:
    """Smallest n whose fixed-range radius is <= gamma."""
    if not (math.isfinite(gamma) and gamma > 0.0):
        raise DomainError(f"gamma must be finite and positive, got {gamma}")
    p = bounds.product
    n = max(1, math.ceil(p * p * bounds.log_term / (2.0 * gamma * gamma)))
    # The closed form can land one off after rounding; settle it exactly.
    while hoeffding_radius(n, bounds) > gamma:
        n += 1
    while n > 1 and hoeffding_radius(n - 1, bounds) <= gamma:
        n -= 1
    return n


def should_terminate(
    state: EstimatorState,
    gamma: float,
    bounds: BoundSpec,
    range_term_mode: str = "paper-exact",
    n_min: int = 2,
) -> bool:
    """True once the smaller of the two radii has reached gamma.

    Never true before n = max(2, n_min); n_min guards against a huge
    gamma terminating a campaign on its first samples.
    """
    if state.n < max(2, n_min):
        return False
    radius = min(
        bernstein_radius(state, bounds, range_term_mode),
        hoeffding_radius(state.n, bounds),
    )
    return radius <= gamma
