"""Quantitative acceptance gate: one test per shipping criterion.

Each test checks a single end-to-end bar at its stated tolerance, so a
verbose run prints one pass/fail line per criterion. Statistical floors
are set three standard errors below their targets; the seeds are fixed,
so every run grades the same campaigns.

Criterion 8 is marked strict-xfail: the advertised same-cell floor for
two independent uniform estimates with a random grid offset overstates
what offset averaging can deliver (the attainable probability is
(2*gamma*alpha - alpha^2/3) / (4*gamma^2), strictly below the
advertised (4*gamma*alpha - alpha^2) / (4*gamma^2) for every positive
cell width). The test implements the advertised floor faithfully and is
expected to fail; the geometry that IS attainable is pinned in the
quantization suite.
"""

import json
import math
from importlib import resources

import numpy as np
import pytest

from repsq.errors import NonTerminated
from repsq.harness import (
    CampaignConfig,
    convergence_study,
    effort_comparison,
    pairwise_experiment,
)
from repsq.quantize import (
    AccuracySpec,
    collision_probability_lower_bound,
    compute_alpha,
)
from repsq.samplers import (
    AisPolicy,
    BetaProposal,
    BoxDomain,
    BoxUniform,
    ais_update,
    fit_beta,
    mixture_sample_many,
)
from repsq.testbeds import (
    TRAJECTORY_STEPS,
    convergence_study_testbed,
    tracking_loss,
)


def bundled_config(name: str) -> CampaignConfig:
    text = (resources.files("repsq") / "configs" / f"{name}.json").read_text()
    return CampaignConfig.from_dict(json.loads(text))


@pytest.fixture(scope="module")
def rare_pairwise_report():
    # shared by the repeatability and accuracy criteria: 500 pairs,
    # 1000 graded campaigns on the rare-event bed
    return pairwise_experiment(bundled_config("rare_event_acceptance"), 500)


def test_criterion_01_alpha_formula_reproduces_published_tolerances():
    cases = [
        ((0.1, 0.05, 0.1), 0.195),
        ((3e-9, 0.01, 0.1), 5.14e-9),
        ((0.04, 0.05, 0.1), 0.078),
    ]
    for (gamma, c, beta), published in cases:
        alpha = compute_alpha(AccuracySpec(gamma, c, beta))
        tolerance = gamma + alpha / 2.0
        assert abs(tolerance - published) / published <= 0.005


def test_criterion_02_cell_width_satisfies_the_defining_quadratic():
    rng = np.random.default_rng(20260821)
    n = 10_000
    gamma = 10.0 ** rng.uniform(-9, 0, n)
    c = rng.uniform(0.005, 0.3, n)
    # beta drawn above the feasibility threshold 1 - (1-c)^2
    beta = 1.0 - (1.0 - c) ** 2 * rng.uniform(0.2, 0.999, n)
    for g, cc, b in zip(gamma, c, beta):
        alpha = compute_alpha(AccuracySpec(g, cc, b))
        assert 0.0 < alpha <= 2.0 * g * (1.0 + 1e-12)
        lhs = (1.0 - cc) ** 2 * (4.0 * g * alpha - alpha * alpha)
        rhs = 4.0 * g * g * (1.0 - b)
        assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs))


def test_criterion_03_repeatability_floor_over_500_pairs(rare_pairwise_report):
    # floor = 0.90 - 3 * sqrt(0.9 * 0.1 / 500) = 0.86; the engineered
    # margin puts the expected rate at ~1 - 1e-5
    assert rare_pairwise_report.n_pairs == 500
    assert rare_pairwise_report.repeat_rate >= 0.86


def test_criterion_04_accuracy_floor_over_the_same_1000_trials(rare_pairwise_report):
    assert rare_pairwise_report.n_trials == 1000
    assert rare_pairwise_report.accuracy_hit_rate >= 0.965


def test_criterion_05_cross_sampler_pairs_meet_the_same_floor():
    report = pairwise_experiment(
        bundled_config("moderate_cellular"),
        200,
        replicator_sampler={"kind": "importance"},
    )
    floor = 0.9 - 3.0 * math.sqrt(0.9 * 0.1 / 200.0)
    assert report.sampler_initiator == "monte_carlo"
    assert report.sampler_replicator == "importance"
    assert report.repeat_rate >= floor


def test_criterion_06_variance_adaptive_stopping_beats_the_range_bound():
    comp = effort_comparison(bundled_config("rare_event_acceptance"))
    assert comp.terminated_by == "bernstein"
    assert comp.effort_ratio <= 0.25


def test_criterion_07_zero_variance_campaign_stops_at_exactly_88():
    comp = effort_comparison(bundled_config("zero_variance"))
    assert comp.n_terminated == 88
    assert comp.required_n_hoeffding == 185


@pytest.mark.xfail(
    strict=True,
    reason="advertised same-cell floor exceeds the offset-averaged "
    "collision probability of two independent uniform estimates; "
    "see the attainable-geometry checks in the quantization suite",
)
def test_criterion_08_advertised_collision_floor_for_uniform_estimates():
    rng = np.random.default_rng(8)
    pairs = 100_000
    for _ in range(20):
        gamma = 10.0 ** rng.uniform(-3, 0)
        c = rng.uniform(0.01, 0.2)
        beta = 1.0 - (1.0 - c) ** 2 * rng.uniform(0.3, 0.99)
        alpha = compute_alpha(AccuracySpec(gamma, c, beta))
        r_star = rng.uniform(2.0, 3.0) * gamma
        offsets = rng.uniform(0.0, alpha, pairs)
        x = rng.uniform(r_star - gamma, r_star + gamma, pairs)
        y = rng.uniform(r_star - gamma, r_star + gamma, pairs)
        same = np.floor((x - offsets) / alpha) == np.floor((y - offsets) / alpha)
        p_hat = float(np.mean(same))
        se = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / pairs)
        floor = collision_probability_lower_bound(gamma, alpha)
        assert p_hat >= floor - 3.0 * se


def test_criterion_09_running_mean_error_decreases_for_99_of_100_seeds():
    study = convergence_study(
        convergence_study_testbed(),
        seeds=range(100),
        checkpoints=(10**3, 10**6),
    )
    assert study.decrease_count >= 99


def test_criterion_10_weighted_estimator_is_unbiased_by_enumeration():
    rng = np.random.default_rng(1003)
    for _ in range(50):
        k = int(rng.integers(3, 41))
        p = rng.exponential(size=k)
        p /= math.fsum(p.tolist())
        f = rng.uniform(0.0, 1.0, k)
        q = 0.5 * p + 0.5 / k
        q /= math.fsum(q.tolist())
        ratios = np.divide(p, q, out=np.zeros_like(p), where=q > 0.0)
        expectation = math.fsum((q * ratios * f).tolist())
        r_star = math.fsum((p * f).tolist())
        assert abs(expectation - r_star) <= 1e-12 * max(r_star, 1e-300)


def test_criterion_11_adaptive_proposal_mechanics():
    rng = np.random.default_rng(1107)
    # shape recovery from a large batch
    draws = rng.beta(2.0, 5.0, 100_000)
    a_hat, b_hat = fit_beta(draws)
    assert abs(a_hat - 2.0) <= 0.1
    assert abs(b_hat - 5.0) <= 0.1

    # learning rate 1 reproduces the fresh fit; refitting the fit moves nothing
    box = BoxDomain([0.0], [1.0])
    batch = rng.beta(2.0, 5.0, (16, 1))
    policy = AisPolicy(mix_p=0.1, d=16, l_r=1.0)
    updated = ais_update(BetaProposal(box, [0.99], [0.99]), batch, policy)
    fresh_a, fresh_b = fit_beta(batch[:, 0])
    assert updated.a[0] == pytest.approx(fresh_a, rel=1e-12)
    assert updated.b[0] == pytest.approx(fresh_b, rel=1e-12)
    fixed = ais_update(BetaProposal(box, [fresh_a], [fresh_b]), batch, policy)
    assert fixed.a[0] == pytest.approx(fresh_a, rel=1e-12)
    assert fixed.b[0] == pytest.approx(fresh_b, rel=1e-12)

    # the mixture's importance weights never exceed 1 / mix_p
    target = BoxUniform(box)
    proposal = BetaProposal(box, [6.0], [1.5])  # sharply off-target
    mix_p = 0.1
    _, weights = mixture_sample_many(target, proposal, mix_p, rng, 1_000_000)
    assert float(np.max(weights)) <= 1.0 / mix_p + 1e-9


def test_criterion_12_tracking_loss_reference_points():
    cmd = np.array([0.1, -0.2, 0.05])
    perfect = np.tile(cmd, (TRAJECTORY_STEPS, 1))
    assert tracking_loss(perfect, cmd) == 0.0

    half = perfect.copy()
    half[0, 0] += math.sqrt(math.log(2.0) / 6.0)
    assert abs(tracking_loss(half, cmd) - 0.5) <= 1e-12

    nine = perfect.copy()
    nine[0, 0] += math.sqrt(1.5)
    assert abs(tracking_loss(nine, cmd) - (-math.expm1(-9.0))) <= 1e-12
