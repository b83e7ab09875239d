"""Percentile bootstrap of the median, for success-rate intervals."""

from __future__ import annotations

import itertools

import numpy as np


def bootstrap_ci(samples, level: float = 0.90, n_resamples: int = 10_000, seed: int = 0):
    """(lo, hi) percentile bootstrap interval of the median.

    Resample with replacement, take the median of each resample, and read
    the (1-level)/2 and (1+level)/2 percentiles.  Deterministic per seed;
    a single sample yields the degenerate interval (x, x).  Intervals may
    be asymmetric around the point median.
    """
    samples = np.asarray(samples, dtype=float)
    assert samples.size > 0, "bootstrap over empty samples"
    if samples.size == 1:
        x = float(samples[0])
        return x, x
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, samples.size, size=(n_resamples, samples.size))
    medians = np.median(samples[idx], axis=1)
    alpha = 100.0 * (1.0 - level) / 2.0
    return float(np.percentile(medians, alpha)), float(np.percentile(medians, 100.0 - alpha))


def exhaustive_median_ci(samples, level: float = 0.90):
    """Exact version of bootstrap_ci by full enumeration of all n^n
    resamples (test oracle for tiny n)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    assert n**n <= 1_000_000, "enumeration only feasible for tiny samples"
    medians = np.array(
        [np.median(samples[list(tup)]) for tup in itertools.product(range(n), repeat=n)]
    )
    alpha = 100.0 * (1.0 - level) / 2.0
    return float(np.percentile(medians, alpha)), float(np.percentile(medians, 100.0 - alpha))
