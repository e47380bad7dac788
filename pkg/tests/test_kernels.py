"""Scan kernels against the scalar estimator, and against each other.

The sequential scan is the reference semantics (identical recurrence to
estimator.update); the vectorized scan merges chunk prefixes and may
differ in the last ulps, never in the termination decision for radii
that do not graze gamma.
"""

import math

import numpy as np
import pytest

from repsq import _kernels
from repsq.estimator import (
    BoundSpec,
    EstimatorState,
    bernstein_radius,
    bernstein_second_coef,
    hoeffding_radius,
    should_terminate,
    update,
)


def scalar_reference_run(values, gamma, bounds, n_min=2):
    """Feed values one at a time through the public scalar API."""
    state = EstimatorState()
    for v in values:
        state = update(state, float(v))
        if should_terminate(state, gamma, bounds, n_min=n_min):
            return state.n, state
    return None, state


def kernel_run(scan, values, gamma, bounds, n_min=2, chunk=64):
    c2 = bernstein_second_coef(bounds)
    lg = bounds.log_term
    n, mean, m2 = 0, 0.0, 0.0
    for start in range(0, len(values), chunk):
        block = np.asarray(values[start : start + chunk], dtype=np.float64)
        i, n, mean, m2 = scan(block, n, mean, m2, gamma, lg, c2, bounds.product, n_min)
        if i >= 0:
            return n, (n, mean, m2)
    return None, (n, mean, m2)


SCANS = [
    pytest.param(_kernels.scan_terminate_sequential, id="sequential"),
    pytest.param(_kernels.scan_terminate_vectorized, id="vectorized"),
]


class TestBackendSelection:
    def test_active_backend_is_known(self):
        assert _kernels.ACTIVE_BACKEND in ("numba", "numpy")

    def test_dispatch_matches_sequential(self):
        rng = np.random.default_rng(31)
        values = rng.uniform(0.0, 1.0, size=500)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        got = _kernels.scan_terminate(
            values, 0, 0.0, 0.0, 0.05, bounds.log_term,
            bernstein_second_coef(bounds), bounds.product, 2,
        )
        want = _kernels.scan_terminate_sequential(
            values, 0, 0.0, 0.0, 0.05, bounds.log_term,
            bernstein_second_coef(bounds), bounds.product, 2,
        )
        assert got[0] == want[0] and got[1] == want[1]
        assert got[2] == pytest.approx(want[2], rel=1e-12)
        assert got[3] == pytest.approx(want[3], rel=1e-10)


class TestAgainstScalarReference:
    @pytest.mark.parametrize("scan", SCANS)
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_same_termination_n_and_state(self, scan, seed):
        rng = np.random.default_rng(seed)
        # Bounded stream with modest variance so the variance-adaptive
        # radius decides termination at a few hundred samples.
        values = 0.5 + 0.05 * rng.standard_normal(5_000)
        np.clip(values, 0.0, 1.0, out=values)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        gamma = 0.02
        n_ref, state_ref = scalar_reference_run(values, gamma, bounds)
        n_got, (n2, mean, m2) = kernel_run(scan, values, gamma, bounds)
        assert n_ref is not None
        assert n_got == n_ref
        assert mean == pytest.approx(state_ref.mean, rel=1e-12)
        assert m2 == pytest.approx(state_ref.m2, rel=1e-9)

    @pytest.mark.parametrize("scan", SCANS)
    def test_zero_variance_stops_at_88(self, scan):
        values = np.full(200, 0.02)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        n_got, _ = kernel_run(scan, values, 0.1, bounds, chunk=13)
        assert n_got == 88

    @pytest.mark.parametrize("scan", SCANS)
    def test_non_terminating_returns_full_state(self, scan):
        rng = np.random.default_rng(40)
        values = rng.uniform(0.0, 1.0, size=300)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        n_got, (n, mean, m2) = kernel_run(scan, values, 1e-9, bounds)
        assert n_got is None
        assert n == 300
        assert mean == pytest.approx(float(np.mean(values)), rel=1e-12)
        assert m2 == pytest.approx(float(np.var(values) * 300), rel=1e-9)

    @pytest.mark.parametrize("scan", SCANS)
    def test_n_min_respected_within_chunk(self, scan):
        values = np.full(50, 0.3)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        n_got, _ = kernel_run(scan, values, 1e9, bounds, n_min=17, chunk=50)
        assert n_got == 17


class TestChunkingInvariance:
    @pytest.mark.parametrize("scan", SCANS)
    @pytest.mark.parametrize("chunk", [1, 7, 64, 997, 5_000])
    def test_chunk_size_does_not_change_answer(self, scan, chunk):
        rng = np.random.default_rng(50)
        values = rng.beta(2.0, 5.0, size=5_000)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        gamma = 0.015
        n_base, (nb, mean_b, m2_b) = kernel_run(
            _kernels.scan_terminate_sequential, values, gamma, bounds, chunk=64
        )
        n_got, (n, mean, m2) = kernel_run(scan, values, gamma, bounds, chunk=chunk)
        assert n_got == n_base
        assert mean == pytest.approx(mean_b, rel=1e-12)
        assert m2 == pytest.approx(m2_b, rel=1e-9)

    def test_empty_chunk_is_identity(self):
        got = _kernels.scan_terminate(
            np.empty(0), 7, 1.5, 0.25, 0.1, 3.0, 1.0, 1.0, 2
        )
        assert got == (-1, 7, 1.5, 0.25)


class TestTraceRadii:
    def test_matches_scalar_radii(self):
        rng = np.random.default_rng(60)
        values = rng.uniform(0.2, 0.8, size=400)
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.05)
        n_arr, mean_arr, sigma, bern, hoef = _kernels.trace_radii(
            values, 0, 0.0, 0.0, bounds.log_term,
            bernstein_second_coef(bounds), bounds.product, 2,
        )
        assert n_arr[0] == 1 and n_arr[-1] == 400
        assert math.isnan(bern[0]) and math.isnan(hoef[0])
        state = EstimatorState()
        for idx, v in enumerate(values):
            state = update(state, float(v))
            if state.n < 2:
                continue
            assert mean_arr[idx] == pytest.approx(state.mean, rel=1e-12)
            assert sigma[idx] == pytest.approx(state.variance, rel=1e-9)
            assert bern[idx] == pytest.approx(bernstein_radius(state, bounds), rel=1e-9)
            assert hoef[idx] == pytest.approx(hoeffding_radius(state.n, bounds), rel=1e-12)

    def test_carries_prior_state(self):
        values = np.array([0.1, 0.9, 0.4, 0.6])
        bounds = BoundSpec(m=1.0, w_bar=1.0, c=0.1)
        state = EstimatorState()
        for v in [0.5, 0.2, 0.7]:
            state = update(state, v)
        n_arr, _, sigma, bern, _ = _kernels.trace_radii(
            values, state.n, state.mean, state.m2, bounds.log_term,
            bernstein_second_coef(bounds), bounds.product, 2,
        )
        assert list(n_arr) == [4, 5, 6, 7]
        check = state
        for idx, v in enumerate(values):
            check = update(check, float(v))
            assert sigma[idx] == pytest.approx(check.variance, rel=1e-9)
            assert bern[idx] == pytest.approx(bernstein_radius(check, bounds), rel=1e-9)
