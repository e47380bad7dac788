"""Synthetic testing systems with knowable ground truth.

Each testbed bundles a sample space, a target distribution p, an
evaluator psi mapping a test case to a measure in [m_low, m_high], and
an oracle for the true mean r_star = E_p[psi]:

- cellular rare-event testbeds: finitely many scenario cells with
  Bernoulli failure indicators, r_star exact by enumeration;
- a displacement field: uniform targets on a planar workspace, a
  position-dependent mean displacement plus bounded noise, r_star by
  large fixed-seed Monte Carlo;
- a command-tracking simulator: 150-step trajectories whose deviation
  grows with command magnitude, scored by an exponential loss, r_star
  by large fixed-seed Monte Carlo over an exact sufficient-statistic
  reduction of the trajectory draw.

Evaluator noise always comes from a caller-supplied stream, kept
separate from the sampler's stream, so switching sampling strategies
never perturbs the noise sequence.

Continuous oracles report a standard error; campaigns refuse accuracy
grading when that error is not well under the accuracy target.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError
from .samplers import BoxDomain, BoxUniform, DiscreteDistribution

__all__ = [
    "TRAJECTORY_STEPS",
    "CellularTestbed",
    "DisplacementTestbed",
    "TrackingTestbed",
    "tracking_loss",
    "rare_event_testbed",
    "rare_event_acceptance_testbed",
    "moderate_cellular_testbed",
    "convergence_study_testbed",
    "displacement_testbed",
    "tracking_testbed",
    "testbed_from_spec",
]

TRAJECTORY_STEPS = 150
_ORACLE_DRAWS = 10_000_000
_oracle_cache: dict = {}


def tracking_loss(observed, commanded) -> float:
    """Exponential loss on total squared tracking deviation.

    1 - exp(-6 * sum over 150 steps of ||observed_i - commanded||^2):
    zero only for perfect tracking, below 1 for any finite trajectory
    (up to float rounding once the exponent underflows), and
    increasing in every per-step deviation.
    """
    obs = np.asarray(observed, dtype=np.float64)
    cmd = np.asarray(commanded, dtype=np.float64)
    if obs.shape != (TRAJECTORY_STEPS, 3):
        raise DomainError(
            f"trajectory must be {TRAJECTORY_STEPS} state 3-vectors, got {obs.shape}"
        )
    if cmd.shape != (3,):
        raise DomainError(f"commanded state must be a 3-vector, got {cmd.shape}")
    if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(cmd))):
        raise DomainError("non-finite trajectory entries")
    total = float(np.sum((obs - cmd) ** 2))
    return -math.expm1(-6.0 * total)


class CellularTestbed:
    """Finite scenario cells with Bernoulli failure indicators.

    psi(cell) ~ Bernoulli(failure_probs[cell]); r_star is the exact
    enumerated sum of mass * failure probability. Ships a companion
    proposal with provably bounded target/proposal mass ratio.
    """

    kind = "cellular-bernoulli"

    def __init__(
        self,
        masses: Sequence[float],
        failure_probs: Sequence[float],
        proposal_masses: Sequence[float],
        w_bar: float,
    ) -> None:
        p = np.asarray(masses, dtype=np.float64)
        f = np.asarray(failure_probs, dtype=np.float64)
        q = np.asarray(proposal_masses, dtype=np.float64)
        if not (p.shape == f.shape == q.shape) or p.ndim != 1:
            raise DomainError("masses, failure_probs, proposal_masses must align")
        if np.any(f < 0.0) or np.any(f > 1.0):
            raise DomainError("failure probabilities must lie in [0, 1]")
        self.target = DiscreteDistribution(p)
        self.proposal = DiscreteDistribution(q)
        self.failure_probs = f
        ratios = np.divide(p, q, out=np.zeros_like(p), where=q > 0.0)
        if np.any((q == 0.0) & (p > 0.0)):
            raise DomainError("proposal must cover every cell with target mass")
        max_ratio = float(np.max(ratios))
        if max_ratio > w_bar:
            raise DomainError(
                f"declared w_bar {w_bar} below actual max mass ratio {max_ratio}"
            )
        self.w_bar = float(w_bar)
        self.m_low = 0.0
        self.m_high = 1.0
        self.oracle_se = 0.0

    @property
    def n_cells(self) -> int:
        return self.target.n_cells

    @property
    def domain(self):
        return None

    @property
    def oracle_r_star(self) -> float:
        return float(math.fsum(self.target.masses * self.failure_probs))

    def evaluate_many(self, cells, rng):
        idx = np.asarray(cells, dtype=np.int64)
        return (rng.random(idx.shape[0]) < self.failure_probs[idx]).astype(np.float64)

    def max_weighted_measure(self) -> float:
        """Largest possible psi * (p/q) over cells that can fail."""
        can_fail = self.failure_probs > 0.0
        if not np.any(can_fail):
            return 0.0
        ratios = self.target.masses[can_fail] / self.proposal.masses[can_fail]
        return float(np.max(ratios))

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "masses": [float(v) for v in self.target.masses],
            "failure_probs": [float(v) for v in self.failure_probs],
            "proposal_masses": [float(v) for v in self.proposal.masses],
            "w_bar": self.w_bar,
            "m_low": self.m_low,
            "m_high": self.m_high,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "CellularTestbed":
        return cls(
            spec["masses"], spec["failure_probs"], spec["proposal_masses"], spec["w_bar"]
        )


def _power_law_masses(count: int, total: float) -> np.ndarray:
    weights = 1.0 / (np.arange(1, count + 1, dtype=np.float64) ** 2)
    return total * weights / math.fsum(weights.tolist())


def rare_event_testbed(K: int, seed, *,
                       masses: Sequence[float] | None = None,
                       failure_probs: Sequence[float] | None = None,
                       r_target: float = 3.2e-8,
                       proposal_mass_on_risky: float = 0.5) -> CellularTestbed:
    """Seeded generator of rare-failure cellular testbeds.

    Masses are heavy-tailed; the lowest-mass fifth of the cells are the
    risky ones, with failure probabilities scaled so the enumerated
    r_star lands on r_target. Passing explicit masses and failure_probs
    bypasses generation (the proposal then splits its mass evenly
    between the can-fail and safe groups, proportionally within each).
    """
    if K < 2:
        raise DomainError(f"need at least 2 cells, got {K}")
    if masses is not None or failure_probs is not None:
        if masses is None or failure_probs is None:
            raise DomainError("masses and failure_probs must be given together")
        p = np.asarray(masses, dtype=np.float64)
        f = np.asarray(failure_probs, dtype=np.float64)
        if p.shape != (K,) or f.shape != (K,):
            raise DomainError(f"explicit vectors must have length K={K}")
    else:
        rng = np.random.default_rng(seed)
        raw = 1.0 + rng.pareto(1.5, size=K)
        p = raw / math.fsum(raw.tolist())
        n_risky = max(1, K // 5)
        risky = np.argsort(p)[:n_risky]
        f = np.zeros(K)
        u = rng.uniform(0.5, 1.0, size=n_risky)
        scale = r_target / math.fsum((p[risky] * u).tolist())
        f[risky] = scale * u
        if np.any(f > 1.0):
            raise DomainError(
                f"r_target {r_target} unreachable: risky cells carry too little mass"
            )
    q = _companion_proposal(p, f, proposal_mass_on_risky)
    ratios = p[q > 0] / q[q > 0]
    w_bar = float(2.0 ** math.ceil(math.log2(max(float(np.max(ratios)), 1.0))))
    return CellularTestbed(p, f, q, w_bar)


def _companion_proposal(p: np.ndarray, f: np.ndarray, q_risky: float) -> np.ndarray:
    """Put q_risky proposal mass on the can-fail cells, spread
    proportionally to mass * failure probability (the variance-optimal
    tilt), and the rest on the safe cells proportionally to mass."""
    can_fail = f > 0.0
    if not np.any(can_fail):
        raise DomainError("at least one cell must be able to fail")
    q = np.zeros_like(p)
    pf = p[can_fail] * f[can_fail]
    q[can_fail] = q_risky * pf / pf.sum()
    safe_mass = float(p[~can_fail].sum())
    if safe_mass > 0.0:
        q[~can_fail] = (1.0 - q_risky) * p[~can_fail] / safe_mass
    else:
        q[can_fail] /= q_risky
    total = math.fsum(q.tolist())
    q /= total
    return q


def rare_event_acceptance_testbed() -> CellularTestbed:
    """The fixed 40-cell configuration used by the bundled rare-event
    campaign config.

    Five risky cells share total target mass 3.2e-8 and always fail;
    the proposal concentrates 0.998 of its mass there, so importance-
    weighted measures are either 0 or r_star/0.998 and campaigns
    terminate in tens of samples with estimates tightly packed around
    r_star. The safe-cell mass ratio is just under 500, hence the
    declared ratio cap 512.
    """
    risky = _power_law_masses(5, 3.2e-8)
    safe = _power_law_masses(35, 1.0 - 3.2e-8)
    p = np.concatenate([risky, safe])
    f = np.concatenate([np.ones(5), np.zeros(35)])
    q = np.concatenate([0.998 * risky / risky.sum(), 0.002 * safe / safe.sum()])
    q /= math.fsum(q.tolist())
    return CellularTestbed(p, f, q, 512.0)


def moderate_cellular_testbed() -> CellularTestbed:
    """Fixed 30-cell configuration with r_star = 0.05: ten risky cells
    of total mass 0.1 failing half the time. Used for cross-sampler
    studies where a non-negligible failure rate keeps plain Monte
    Carlo informative."""
    risky = _power_law_masses(10, 0.1)
    safe = _power_law_masses(20, 0.9)
    p = np.concatenate([risky, safe])
    f = np.concatenate([np.full(10, 0.5), np.zeros(20)])
    q = np.concatenate([0.5 * risky / risky.sum(), 0.5 * safe / safe.sum()])
    q /= math.fsum(q.tolist())
    return CellularTestbed(p, f, q, 2.0)


def convergence_study_testbed() -> CellularTestbed:
    """Fixed 13-cell configuration for running-mean convergence checks.

    Cell 0 always fails, carries target mass 0.256, and is proposed
    with probability only 5e-4, so its importance weight is 512. At
    n = 1e3 the expected number of heavy draws is 0.5: the integer
    draw count leaves the running mean offset from r_star by at least
    256/1000 on every run, far above the light-cell noise (sd ~ 0.01).
    At n = 1e6 the heavy count concentrates (sd ~ 22 draws around 500)
    and the error collapses to the CLT scale ~ 0.011. The n=1e3 vs
    n=1e6 error decrease is therefore decisive on every seed, not a
    coin flip riding the tail of two overlapping error distributions;
    a bed whose checkpoint errors are both plain CLT noise passes a
    per-seed decrease check only ~98% of the time, which no 100-seed
    registry can certify at a 99/100 bar.
    """
    q_heavy = 5e-4
    p_heavy = 512.0 * q_heavy
    light = _power_law_masses(12, 1.0 - p_heavy)
    p = np.concatenate([[p_heavy], light])
    # Heterogeneous light failure rates keep the value distribution off
    # any two-atom lattice that could tie the checkpoint errors.
    f = np.concatenate([[1.0], 0.2 + 0.05 * np.arange(1, 13) / 12.0])
    # Scale only the light block; renormalizing the whole vector would
    # nudge q_heavy off the exact power-of-two relation with p_heavy.
    q_light = light * ((1.0 - q_heavy) / math.fsum(light.tolist()))
    q = np.concatenate([[q_heavy], q_light])
    return CellularTestbed(p, f, q, 512.0)


class DisplacementTestbed:
    """Planar workspace with a stochastic displacement measure in
    [0, 6].

    The mean field is 1.75 + 0.2 * x * y over the unit square (so the
    target mean is exactly 1.8); noise is uniform on [-0.6, 0.6].
    Values stay well inside the declared range; clipping is a hard
    safety net, not an operating regime.
    """

    kind = "displacement-field"

    def __init__(self, oracle_seed=0, *, noise: bool = True,
                 mean_constant: float | None = None) -> None:
        if mean_constant is not None and not 0.0 <= mean_constant <= 6.0:
            raise DomainError(f"mean_constant must lie in [0, 6], got {mean_constant}")
        self.oracle_seed = oracle_seed
        self.noise = bool(noise)
        self.mean_constant = mean_constant
        self.domain = BoxDomain([0.0, 0.0], [1.0, 1.0])
        self.target = BoxUniform(self.domain)
        self.proposal = None
        self.w_bar = 1.0
        self.m_low = 0.0
        self.m_high = 6.0

    def _mean_field(self, points: np.ndarray) -> np.ndarray:
        if self.mean_constant is not None:
            return np.full(points.shape[0], self.mean_constant)
        return 1.75 + 0.2 * points[:, 0] * points[:, 1]

    def evaluate_many(self, points, rng):
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        mu = self._mean_field(x)
        if self.noise:
            mu = mu + rng.uniform(-0.6, 0.6, size=x.shape[0])
        return np.clip(mu, self.m_low, self.m_high)

    def _oracle(self):
        if not self.noise and self.mean_constant is not None:
            return float(self.mean_constant), 0.0
        key = (self.kind, self.oracle_seed, self.noise, self.mean_constant)
        if key not in _oracle_cache:
            rng = np.random.default_rng(self.oracle_seed)
            total = 0.0
            total_sq = 0.0
            chunk = 1_000_000
            for _ in range(_ORACLE_DRAWS // chunk):
                pts = self.target.sample_many(rng, chunk)
                vals = self.evaluate_many(pts, rng)
                total += float(np.sum(vals))
                total_sq += float(np.sum(vals * vals))
            mean = total / _ORACLE_DRAWS
            var = total_sq / _ORACLE_DRAWS - mean * mean
            _oracle_cache[key] = (mean, math.sqrt(var / _ORACLE_DRAWS))
        return _oracle_cache[key]

    @property
    def oracle_r_star(self) -> float:
        return self._oracle()[0]

    @property
    def oracle_se(self) -> float:
        return self._oracle()[1]

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "oracle_seed": self.oracle_seed,
            "noise": self.noise,
            "mean_constant": self.mean_constant,
            "m_low": self.m_low,
            "m_high": self.m_high,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "DisplacementTestbed":
        return cls(
            spec["oracle_seed"],
            noise=spec["noise"],
            mean_constant=spec["mean_constant"],
        )


def displacement_testbed(seed=0, *, noise: bool = True,
                         mean_constant: float | None = None) -> DisplacementTestbed:
    return DisplacementTestbed(seed, noise=noise, mean_constant=mean_constant)


class TrackingTestbed:
    """Command-tracking simulator over the [-0.3, 0.3]^3 command box.

    A commanded state held for 150 steps picks up a proportional bias
    plus Gaussian per-step noise whose scale grows with the command
    magnitude, so larger commands track worse. The measure is
    tracking_loss of the simulated trajectory.

    The oracle draws the total squared deviation directly from its
    exact law (a scaled noncentral chi-square over 450 degrees of
    freedom) instead of materializing trajectories, which makes the
    10^7-sample oracle cheap while staying an independent route from
    the step-by-step simulation used in evaluate_many.
    """

    kind = "tracking-sim"

    def __init__(self, sim_gap: float = 0.0, oracle_seed=0, *,
                 bias_gain: float = 0.05, noise_base: float = 0.005,
                 noise_slope: float = 0.02, zero_noise: bool = False) -> None:
        if sim_gap < 0.0:
            raise DomainError(f"sim_gap must be nonnegative, got {sim_gap}")
        self.sim_gap = float(sim_gap)
        self.oracle_seed = oracle_seed
        self.zero_noise = bool(zero_noise)
        self.bias_gain = 0.0 if zero_noise else float(bias_gain)
        self.noise_base = 0.0 if zero_noise else float(noise_base)
        self.noise_slope = 0.0 if zero_noise else float(noise_slope)
        self.domain = BoxDomain([-0.3] * 3, [0.3] * 3)
        self.target = BoxUniform(self.domain)
        self.proposal = None
        self.w_bar = 1.0
        self.m_low = 0.0
        self.m_high = 1.0

    def _noise_scale(self, cmd_norm: np.ndarray) -> np.ndarray:
        return (self.noise_base + self.noise_slope * cmd_norm) * (1.0 + self.sim_gap)

    def simulate(self, commanded, rng) -> np.ndarray:
        """One observed 150-step trajectory for a single command."""
        cmd = np.asarray(commanded, dtype=np.float64)
        norm = float(np.linalg.norm(cmd))
        sigma = float(self._noise_scale(np.array([norm]))[0])
        drift = (1.0 + self.bias_gain) * cmd
        return drift + sigma * rng.standard_normal((TRAJECTORY_STEPS, 3))

    def evaluate_many(self, points, rng):
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = x.shape[0]
        norms = np.linalg.norm(x, axis=1)
        sigma = self._noise_scale(norms)[:, None, None]
        bias = (self.bias_gain * x)[:, None, :]
        dev = bias + sigma * rng.standard_normal((n, TRAJECTORY_STEPS, 3))
        total = np.sum(dev * dev, axis=(1, 2))
        return -np.expm1(-6.0 * total)

    def _oracle(self):
        if self.zero_noise:
            return 0.0, 0.0
        key = (self.kind, self.oracle_seed, self.sim_gap, self.bias_gain,
               self.noise_base, self.noise_slope, self.zero_noise)
        if key not in _oracle_cache:
            rng = np.random.default_rng(self.oracle_seed)
            dof = 3 * TRAJECTORY_STEPS
            total = 0.0
            total_sq = 0.0
            chunk = 1_000_000
            for _ in range(_ORACLE_DRAWS // chunk):
                pts = self.target.sample_many(rng, chunk)
                norms = np.linalg.norm(pts, axis=1)
                sigma = self._noise_scale(norms)
                bias_sq = (self.bias_gain * norms) ** 2
                with np.errstate(divide="ignore", invalid="ignore"):
                    lam = np.where(sigma > 0.0, TRAJECTORY_STEPS * bias_sq / sigma**2, 0.0)
                dev_sq = np.where(
                    sigma > 0.0,
                    sigma**2 * rng.noncentral_chisquare(dof, lam),
                    TRAJECTORY_STEPS * bias_sq,
                )
                vals = -np.expm1(-6.0 * dev_sq)
                total += float(np.sum(vals))
                total_sq += float(np.sum(vals * vals))
            mean = total / _ORACLE_DRAWS
            var = total_sq / _ORACLE_DRAWS - mean * mean
            _oracle_cache[key] = (mean, math.sqrt(max(var, 0.0) / _ORACLE_DRAWS))
        return _oracle_cache[key]

    @property
    def oracle_r_star(self) -> float:
        return self._oracle()[0]

    @property
    def oracle_se(self) -> float:
        return self._oracle()[1]

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "sim_gap": self.sim_gap,
            "oracle_seed": self.oracle_seed,
            "bias_gain": self.bias_gain,
            "noise_base": self.noise_base,
            "noise_slope": self.noise_slope,
            "zero_noise": self.zero_noise,
            "m_low": self.m_low,
            "m_high": self.m_high,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "TrackingTestbed":
        bed = cls(
            spec["sim_gap"],
            spec["oracle_seed"],
            zero_noise=spec["zero_noise"],
        )
        if not spec["zero_noise"]:
            bed.bias_gain = spec["bias_gain"]
            bed.noise_base = spec["noise_base"]
            bed.noise_slope = spec["noise_slope"]
        return bed


def tracking_testbed(sim_gap: float = 0.0, seed=0, *, zero_noise: bool = False) -> TrackingTestbed:
    return TrackingTestbed(sim_gap, seed, zero_noise=zero_noise)


_KINDS = {
    CellularTestbed.kind: CellularTestbed,
    DisplacementTestbed.kind: DisplacementTestbed,
    TrackingTestbed.kind: TrackingTestbed,
}


def testbed_from_spec(spec: dict):
    """Rebuild a testbed from its JSON descriptor."""
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise DomainError(f"unknown testbed kind {kind!r}")
    bed = _KINDS[kind].from_spec(spec)
    for bound in ("m_low", "m_high"):
        if bound in spec and spec[bound] != getattr(bed, bound):
            raise DomainError(f"descriptor {bound} disagrees with testbed definition")
    return bed
