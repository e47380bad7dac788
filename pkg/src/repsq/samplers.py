"""Target distributions, importance proposals, and the adaptive Beta
mixture.

Every distribution here exposes ``sample(rng)`` / ``density(x)`` plus
vectorized ``sample_many(rng, size)`` / ``density_many(points)``
counterparts. The scalar and vectorized paths consume the underlying
rng stream in different orders; each path is individually deterministic
under a fixed stream, and a campaign commits to one path throughout.

Continuous proposals are per-dimension Beta densities mapped linearly
onto an axis-aligned box; the 1/(hi-lo) Jacobian is part of the density,
so all densities are with respect to Lebesgue measure on the box.
Importance weights are p(x)/q(x); when q is a mix_p:p mixture of the
target and an adapted Beta proposal the denominator is the mixture
density, which caps every weight at 1/mix_p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy import special

from .errors import (
    ClampWarning,
    DegenerateBatch,
    DomainError,
    WeightCapExceeded,
    ZeroProposalDensity,
)

__all__ = [
    "SHAPE_MIN",
    "SHAPE_MAX",
    "BoxDomain",
    "SamplableDistribution",
    "DiscreteDistribution",
    "BoxUniform",
    "BetaProposal",
    "AisPolicy",
    "beta_density",
    "beta_sample",
    "fit_beta",
    "ais_update",
    "mixture_sample",
    "mixture_sample_many",
    "importance_weight",
    "proposal_snapshot",
]

SHAPE_MIN = 0.05
SHAPE_MAX = 100.0


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box; the sample space of continuous testbeds."""

    lo: tuple
    hi: tuple

    def __init__(self, lo: Sequence[float], hi: Sequence[float]) -> None:
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise DomainError("lo and hi must be equal-length, non-empty vectors")
        for k, (a, b) in enumerate(zip(self.lo, self.hi)):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise DomainError(f"dimension {k}: need finite lo < hi, got [{a}, {b}]")

    @property
    def dims(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, point) -> bool:
        x = np.asarray(point, dtype=np.float64)
        if x.shape != (self.dims,):
            raise DomainError(f"point has shape {x.shape}, domain has {self.dims} dims")
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@runtime_checkable
class SamplableDistribution(Protocol):
    """Duck type shared by targets and proposals.

    density returns probability mass on discrete domains and Lebesgue
    density on boxes; both must normalize to 1 over the domain.
    """

    def sample(self, rng): ...

    def density(self, point) -> float: ...

    def sample_many(self, rng, size: int): ...

    def density_many(self, points): ...


class DiscreteDistribution:
    """Finite distribution over cells 0..K-1 given by explicit masses."""

    def __init__(self, masses: Sequence[float]) -> None:
        m = np.asarray(masses, dtype=np.float64)
        if m.ndim != 1 or m.size < 1:
            raise DomainError("masses must be a non-empty vector")
        if not np.all(np.isfinite(m)) or np.any(m < 0.0):
            raise DomainError("masses must be finite and nonnegative")
        total = float(math.fsum(m.tolist()))
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"masses sum to {total!r}, expected 1 within 1e-12")
        self.masses = m
        self._cum = np.cumsum(m)
        self._cum[-1] = 1.0

    @property
    def n_cells(self) -> int:
        return int(self.masses.size)

    def sample(self, rng) -> int:
        return int(np.searchsorted(self._cum, rng.random(), side="right"))

    def sample_many(self, rng, size: int):
        return np.searchsorted(self._cum, rng.random(size), side="right")

    def density(self, point) -> float:
        k = int(point)
        if not 0 <= k < self.n_cells:
            raise DomainError(f"cell {k} outside 0..{self.n_cells - 1}")
        return float(self.masses[k])

    def density_many(self, points):
        idx = np.asarray(points, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_cells):
            raise DomainError("cell index outside the distribution's support")
        return self.masses[idx]


class BoxUniform:
    """Uniform target over a box: density 1/volume inside, 0 outside."""

    def __init__(self, domain: BoxDomain) -> None:
        self.domain = domain
        self._density = 1.0 / domain.volume
        self._lo = np.asarray(domain.lo)
        self._hi = np.asarray(domain.hi)

    def sample(self, rng):
        return rng.uniform(self._lo, self._hi)

    def sample_many(self, rng, size: int):
        return rng.uniform(self._lo, self._hi, size=(size, self.domain.dims))

    def density(self, point) -> float:
        return self._density if self.domain.contains(point) else 0.0

    def density_many(self, points):
        x = np.asarray(points, dtype=np.float64)
        inside = np.all((x >= self._lo) & (x <= self._hi), axis=-1)
        return np.where(inside, self._density, 0.0)


def beta_density(x: float, a: float, b: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Beta(a, b) density mapped linearly onto [lo, hi].

    The Jacobian factor 1/(hi - lo) is included; omitting it would break
    normalization on any interval other than [0, 1].
    """
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"shapes must be positive, got a={a}, b={b}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if not lo <= x <= hi:
        raise DomainError(f"x={x} outside [{lo}, {hi}]")
    width = hi - lo
    t = (x - lo) / width
    if t in (0.0, 1.0):
        # Edge values: finite only when the touching shape is >= 1.
        shape = a if t == 0.0 else b
        if shape > 1.0:
            return 0.0
        if shape == 1.0:
            other = b if t == 0.0 else a
            return float(other) / width
        return math.inf
    log_pdf = (a - 1.0) * math.log(t) + (b - 1.0) * math.log1p(-t) - special.betaln(a, b)
    return math.exp(log_pdf) / width


def beta_sample(a: float, b: float, lo: float, hi: float, rng) -> float:
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"shapes must be positive, got a={a}, b={b}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    return lo + (hi - lo) * float(rng.beta(a, b))


class BetaProposal:
    """Product of per-dimension Betas on a box; the adapted proposal."""

    def __init__(self, domain: BoxDomain, a: Sequence[float], b: Sequence[float]) -> None:
        av = np.asarray(a, dtype=np.float64)
        bv = np.asarray(b, dtype=np.float64)
        if av.shape != (domain.dims,) or bv.shape != (domain.dims,):
            raise DomainError(
                f"shape vectors must have length {domain.dims}, "
                f"got {av.shape} and {bv.shape}"
            )
        if np.any(av < SHAPE_MIN) or np.any(av > SHAPE_MAX) or np.any(
            bv < SHAPE_MIN
        ) or np.any(bv > SHAPE_MAX):
            raise DomainError(f"shapes must lie in [{SHAPE_MIN}, {SHAPE_MAX}]")
        self.domain = domain
        self.a = av
        self.b = bv
        self._lo = np.asarray(domain.lo)
        self._width = np.asarray(domain.hi) - self._lo
        self._log_norm = float(
            np.sum(special.betaln(av, bv)) + np.sum(np.log(self._width))
        )

    def sample(self, rng):
        t = rng.beta(self.a, self.b)
        return self._lo + self._width * t

    def sample_many(self, rng, size: int):
        t = rng.beta(self.a, self.b, size=(size, self.domain.dims))
        return self._lo + self._width * t

    def density(self, point) -> float:
        return float(self.density_many(np.asarray(point, dtype=np.float64)[None, :])[0])

    def density_many(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        t = (x - self._lo) / self._width
        out = np.zeros(x.shape[0])
        inside = np.all((t >= 0.0) & (t <= 1.0), axis=1)
        interior = inside & np.all((t > 0.0) & (t < 1.0), axis=1)
        ti = t[interior]
        with np.errstate(divide="ignore"):
            log_pdf = (
                np.sum((self.a - 1.0) * np.log(ti), axis=1)
                + np.sum((self.b - 1.0) * np.log1p(-ti), axis=1)
                - self._log_norm
            )
        out[interior] = np.exp(log_pdf)
        on_edge = inside & ~interior
        for i in np.nonzero(on_edge)[0]:
            out[i] = math.prod(
                beta_density(
                    float(x[i, k]),
                    float(self.a[k]),
                    float(self.b[k]),
                    self.domain.lo[k],
                    self.domain.hi[k],
                )
                for k in range(self.domain.dims)
            )
        return out


@dataclass(frozen=True)
class AisPolicy:
    """How the adaptive proposal mixes, batches, and learns."""

    mix_p: float = 0.1
    d: int = 10
    l_r: float = 0.1
    init_shape: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 <= self.mix_p <= 1.0:
            raise DomainError(f"mix_p must lie in [0, 1], got {self.mix_p}")
        if self.d < 2:
            raise DomainError(f"batch size d must be >= 2 (a Beta fit needs 2 points), got {self.d}")
        if not 0.0 < self.l_r <= 1.0:
            raise DomainError(f"learning rate must lie in (0, 1], got {self.l_r}")
        if not SHAPE_MIN <= self.init_shape <= SHAPE_MAX:
            raise DomainError(f"init_shape must lie in [{SHAPE_MIN}, {SHAPE_MAX}]")

    def initial_proposal(self, domain: BoxDomain) -> BetaProposal:
        shapes = [self.init_shape] * domain.dims
        return BetaProposal(domain, shapes, shapes)


def fit_beta(samples: Sequence[float], lo: float = 0.0, hi: float = 1.0):
    """Method-of-moments Beta fit on samples from [lo, hi].

    Raises DegenerateBatch when the batch carries no usable shape
    information (zero variance, or mean pinned to an endpoint); the
    caller keeps its previous shapes in that case. Estimates landing
    outside [SHAPE_MIN, SHAPE_MAX] are clamped with a ClampWarning.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise DomainError(f"need >= 2 samples, got shape {x.shape}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError("samples outside [lo, hi]")
    u = (x - lo) / (hi - lo)
    mean = float(np.mean(u))
    var = float(np.mean((u - mean) ** 2))
    if var <= 1e-12 or mean <= 1e-12 or mean >= 1.0 - 1e-12:
        raise DegenerateBatch(f"batch mean {mean}, variance {var}")
    k = mean * (1.0 - mean) / var - 1.0
    a = mean * k
    b = (1.0 - mean) * k
    clamped_a = min(max(a, SHAPE_MIN), SHAPE_MAX)
    clamped_b = min(max(b, SHAPE_MIN), SHAPE_MAX)
    if clamped_a != a or clamped_b != b:
        warnings.warn(
            f"Beta fit ({a:.4g}, {b:.4g}) clamped to [{SHAPE_MIN}, {SHAPE_MAX}]",
            ClampWarning,
            stacklevel=2,
        )
    return clamped_a, clamped_b


def ais_update(current: BetaProposal, batch, policy: AisPolicy) -> BetaProposal:
    """Refit on the batch and move shapes by an exponential moving
    average; dimensions whose batch is degenerate keep their shapes."""
    pts = np.asarray(batch, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape != (policy.d, current.domain.dims):
        raise DomainError(
            f"batch must be {policy.d} points of dim {current.domain.dims}, "
            f"got shape {pts.shape}"
        )
    new_a = current.a.copy()
    new_b = current.b.copy()
    for k in range(current.domain.dims):
        try:
            fit_a, fit_b = fit_beta(pts[:, k], current.domain.lo[k], current.domain.hi[k])
        except DegenerateBatch:
            continue
        new_a[k] = (1.0 - policy.l_r) * new_a[k] + policy.l_r * fit_a
        new_b[k] = (1.0 - policy.l_r) * new_b[k] + policy.l_r * fit_b
    return BetaProposal(current.domain, new_a, new_b)


def _mixture_density_many(p, q: BetaProposal, mix_p: float, points):
    return mix_p * p.density_many(points) + (1.0 - mix_p) * q.density_many(points)


def mixture_sample(p, q: BetaProposal, mix_p: float, rng):
    """One draw from the mix_p:p / (1-mix_p):q mixture and its weight.

    The weight divides by the mixture density, never by q alone: that
    keeps the weighted estimator unbiased and caps the weight at
    1/mix_p whenever mix_p > 0.
    """
    if not 0.0 <= mix_p <= 1.0:
        raise DomainError(f"mix_p must lie in [0, 1], got {mix_p}")
    if getattr(p, "domain", None) is not None and p.domain != q.domain:
        raise DomainError("target and proposal must share one domain")
    if rng.random() < mix_p:
        x = p.sample(rng)
    else:
        x = q.sample(rng)
    p_x = p.density(x)
    q_mix = mix_p * p_x + (1.0 - mix_p) * q.density(x)
    if q_mix <= 0.0:
        if p_x > 0.0:
            raise DomainError(
                "mixture density vanished where the target is positive "
                "(mix_p = 0 with a proposal that misses target support)"
            )
        return x, 0.0
    return x, p_x / q_mix


def mixture_sample_many(p, q: BetaProposal, mix_p: float, rng, size: int):
    """Vectorized mixture draws; returns (points, weights)."""
    if not 0.0 <= mix_p <= 1.0:
        raise DomainError(f"mix_p must lie in [0, 1], got {mix_p}")
    if getattr(p, "domain", None) is not None and p.domain != q.domain:
        raise DomainError("target and proposal must share one domain")
    from_p = rng.random(size) < mix_p
    n_p = int(np.count_nonzero(from_p))
    points = np.empty((size, q.domain.dims))
    if n_p:
        points[from_p] = np.atleast_2d(p.sample_many(rng, n_p))
    if size - n_p:
        points[~from_p] = q.sample_many(rng, size - n_p)
    p_x = np.asarray(p.density_many(points), dtype=np.float64)
    q_mix = mix_p * p_x + (1.0 - mix_p) * q.density_many(points)
    bad = (q_mix <= 0.0) & (p_x > 0.0)
    if np.any(bad):
        raise DomainError("mixture density vanished where the target is positive")
    weights = np.divide(p_x, q_mix, out=np.zeros(size), where=q_mix > 0.0)
    return points, weights


def importance_weight(p, q, x, w_bar: float | None = None) -> float:
    """p(x)/q(x), with an advisory check against the declared cap."""
    q_x = q.density(x)
    p_x = p.density(x)
    if q_x == 0.0:
        if p_x > 0.0:
            raise ZeroProposalDensity(
                f"proposal density is 0 at {x!r} where target density is {p_x}"
            )
        return 0.0
    w = p_x / q_x
    if w_bar is not None and w > w_bar:
        warnings.warn(
            f"importance weight {w:.6g} exceeds declared bound {w_bar:.6g}",
            WeightCapExceeded,
            stacklevel=2,
        )
    return w


def proposal_snapshot(
    q: BetaProposal, policy: AisPolicy, rng_algorithm: str, rng_seed
) -> dict:
    """JSON-ready snapshot of an adapted proposal and its policy."""
    return {
        "shapes_a": [float(v) for v in q.a],
        "shapes_b": [float(v) for v in q.b],
        "domain": {"lo": list(q.domain.lo), "hi": list(q.domain.hi)},
        "mix_p": policy.mix_p,
        "d": policy.d,
        "l_r": policy.l_r,
        "rng_algorithm": rng_algorithm,
        "rng_seed": rng_seed,
    }
