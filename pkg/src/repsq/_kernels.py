"""Termination-scan kernels: numba-jitted sequential loop with a
vectorized numpy fallback.

Campaigns feed weighted measures to the estimator in chunks; the scan
consumes one chunk and reports where (if anywhere) the termination rule
fired. Two implementations:

- ``scan_terminate_sequential``: a straight Welford loop, jitted when
  numba is importable. This is the reference semantics.
- ``scan_terminate_vectorized``: pure numpy. Prefix means and M2 for the
  chunk come from shifted cumulative sums (deviations are taken against
  the chunk's first element to keep the sums conditioned), then the
  chunk prefixes are merged with the carried-in state by the pairwise
  combination rule. Radii for all prefixes are evaluated at once.

Backend choice: REPSQ_BACKEND=numba|numpy forces one; unset prefers
numba when importable. The choice changes performance and last-ulp
float dust only, never the estimator contract; the two backends must
agree on termination n for any chunk whose radius does not graze gamma
within a few ulps.

Radius expressions here mirror estimator.bernstein_radius and
estimator.hoeffding_radius operation for operation. Callers precompute
the second-coefficient constant with estimator.bernstein_second_coef so
every path divides the same float by (n - 1).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "ACTIVE_BACKEND",
    "HAVE_NUMBA",
    "scan_terminate",
    "scan_terminate_sequential",
    "scan_terminate_vectorized",
    "trace_radii",
]

_requested = os.environ.get("REPSQ_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ImportError(
        f"REPSQ_BACKEND must be 'numba' or 'numpy' if set, got {_requested!r}"
    )

HAVE_NUMBA = False
if _requested != "numpy":
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise ImportError("REPSQ_BACKEND=numba but numba is not importable")

ACTIVE_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def _scan_sequential_impl(values, n0, mean0, m2_0, gamma, log_term, c2, product, n_min):
    n = n0
    mean = mean0
    m2 = m2_0
    for i in range(values.shape[0]):
        x = values[i]
        n += 1
        delta = x - mean
        mean = mean + delta / n
        m2 = m2 + delta * (x - mean)
        if n >= n_min:
            nf = float(n)
            sigma = m2 / nf
            bern = np.sqrt(2.0 * sigma * log_term / nf) + c2 / (nf - 1.0)
            hoef = product * np.sqrt(log_term / (2.0 * nf))
            if bern <= gamma or hoef <= gamma:
                return i, n, mean, m2
    return -1, n, mean, m2


if HAVE_NUMBA:
    scan_terminate_sequential = njit(cache=True, fastmath=False)(_scan_sequential_impl)
else:
    scan_terminate_sequential = _scan_sequential_impl


def _chunk_prefixes(values, n0, mean0, m2_0):
    """Prefix (n, mean, m2) after each element of the chunk, merged with
    the carried-in state."""
    cnt = np.arange(1, values.shape[0] + 1, dtype=np.float64)
    n_arr = n0 + cnt
    # Chunk-local prefix stats, deviations against the first element.
    pivot = values[0]
    dev = values - pivot
    s_dev = np.cumsum(dev)
    s_dev2 = np.cumsum(dev * dev)
    chunk_mean = pivot + s_dev / cnt
    chunk_m2 = s_dev2 - s_dev * s_dev / cnt
    if n0 == 0:
        mean_arr = chunk_mean
        m2_arr = chunk_m2
    else:
        gap = mean0 - chunk_mean
        mean_arr = (n0 * mean0 + cnt * chunk_mean) / n_arr
        m2_arr = m2_0 + chunk_m2 + (n0 * cnt / n_arr) * gap * gap
    np.maximum(m2_arr, 0.0, out=m2_arr)
    return n_arr, mean_arr, m2_arr


def scan_terminate_vectorized(values, n0, mean0, m2_0, gamma, log_term, c2, product, n_min):
    n_arr, mean_arr, m2_arr = _chunk_prefixes(values, n0, mean0, m2_0)
    eligible = n_arr >= n_min
    sigma = m2_arr / n_arr
    nm1 = np.maximum(n_arr - 1.0, 1.0)
    bern = np.sqrt(2.0 * sigma * log_term / n_arr) + c2 / nm1
    hoef = product * np.sqrt(log_term / (2.0 * n_arr))
    hit = eligible & ((bern <= gamma) | (hoef <= gamma))
    if not hit.any():
        last = values.shape[0] - 1
        return -1, int(n_arr[last]), float(mean_arr[last]), float(m2_arr[last])
    i = int(np.argmax(hit))
    return i, int(n_arr[i]), float(mean_arr[i]), float(m2_arr[i])


def scan_terminate(values, n0, mean0, m2_0, gamma, log_term, c2, product, n_min):
    """Scan one chunk; returns (stop_index, n, mean, m2).

    stop_index is the 0-based chunk index of the terminating sample, or
    -1 if the chunk was exhausted. The returned state includes every
    chunk element up to and including stop_index (the whole chunk when
    -1). Termination is evaluated only at n >= n_min; callers pass
    n_min >= 2.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        return -1, int(n0), float(mean0), float(m2_0)
    if ACTIVE_BACKEND == "numba":
        i, n, mean, m2 = scan_terminate_sequential(
            values, n0, mean0, m2_0, gamma, log_term, c2, product, n_min
        )
        return int(i), int(n), float(mean), float(m2)
    return scan_terminate_vectorized(
        values, n0, mean0, m2_0, gamma, log_term, c2, product, n_min
    )


def trace_radii(values, n0, mean0, m2_0, log_term, c2, product, n_min):
    """Per-prefix state and radii over the chunk, for diagnostics export.

    Returns (n, mean, sigma_hat, bernstein, hoeffding) arrays; entries
    with n < n_min carry NaN radii (the rule never consults them).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    n_arr, mean_arr, m2_arr = _chunk_prefixes(values, n0, mean0, m2_0)
    sigma = m2_arr / n_arr
    nm1 = np.maximum(n_arr - 1.0, 1.0)
    bern = np.sqrt(2.0 * sigma * log_term / n_arr) + c2 / nm1
    hoef = product * np.sqrt(log_term / (2.0 * n_arr))
    young = n_arr < n_min
    bern[young] = np.nan
    hoef[young] = np.nan
    return n_arr.astype(np.int64), mean_arr, sigma, bern, hoef
