"""Wasserstein-2 distances between sample sets and against reference laws."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import InputError, SizeError

ASSIGNMENT_MAX_N = 2048
METHODS = ("quantile-1d", "exact-assignment", "gaussian-closed-form")


@dataclass(frozen=True)
class W2Report:
    value: float
    n: int
    method: str
    stderr: float = float("nan")

    def __post_init__(self):
        if not self.value >= 0:
            raise InputError(f"W2 must be nonnegative, got {self.value}")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")

    def to_dict(self):
        return asdict(self)


def _as_samples(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0:
        raise InputError(f"{name} must be a non-empty (n,) or (n, d) array")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite values")
    return a


def _equalize(a, b, rng):
    """Resample the larger set without replacement down to the smaller size."""
    if len(a) == len(b):
        return a, b
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = min(len(a), len(b))
    if len(a) > n:
        a = a[rng.choice(len(a), n, replace=False)]
    else:
        b = b[rng.choice(len(b), n, replace=False)]
    return a, b


def _w2_sorted(a, b):
    return math.sqrt(float(np.mean((np.sort(a) - np.sort(b)) ** 2)))


def w2_1d(a, b, n_boot=0, seed=0):
    """Monotone (sorted) coupling.  Unequal sizes are equalised by subsampling."""
    a, b = _as_samples(a, "a"), _as_samples(b, "b")
    if a.shape[1] != 1 or b.shape[1] != 1:
        raise InputError("w2_1d needs one-dimensional samples")
    a, b = _equalize(a[:, 0], b[:, 0], seed)
    value = _w2_sorted(a, b)
    stderr = _bootstrap(lambda i, j: _w2_sorted(a[i], b[j]), len(a), n_boot, seed)
    return W2Report(value, len(a), "quantile-1d", stderr)


def _w2_match(a, b):
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(float(cost[rows, cols].mean()))


def w2_assignment(a, b, n_boot=0, seed=0):
    """Exact empirical W2 by minimum-cost perfect matching on squared distances."""
    a, b = _as_samples(a, "a"), _as_samples(b, "b")
    if a.shape[1] != b.shape[1]:
        raise InputError("sample dimensions differ")
    a, b = _equalize(a, b, seed)
    if len(a) > ASSIGNMENT_MAX_N:
        raise SizeError(f"assignment W2 limited to n <= {ASSIGNMENT_MAX_N}, got {len(a)}")
    value = _w2_match(a, b)
    stderr = _bootstrap(lambda i, j: _w2_match(a[i], b[j]), len(a), n_boot, seed)
    return W2Report(value, len(a), "exact-assignment", stderr)


def _bootstrap(stat, n, n_boot, seed):
    if n_boot <= 0:
        return float("nan")
    rng = np.random.default_rng([int(seed), 0xB007])
    vals = [stat(rng.integers(0, n, n), rng.integers(0, n, n)) for _ in range(n_boot)]
    return float(np.std(vals, ddof=1))


def w2_gaussian(m1, s1, m2, s2, d=None):
    """``sqrt(|m1 - m2|^2 + d (s1 - s2)^2)`` for isotropic Gaussians N(m, s^2 I_d)."""
    m1 = np.atleast_1d(np.asarray(m1, dtype=float))
    m2 = np.atleast_1d(np.asarray(m2, dtype=float))
    if m1.shape != m2.shape:
        raise InputError("mean vectors differ in shape")
    if s1 < 0 or s2 < 0:
        raise InputError("standard deviations must be nonnegative")
    d = m1.size if d is None else int(d)
    return math.sqrt(float(np.sum((m1 - m2) ** 2)) + d * (s1 - s2) ** 2)


def w2(a, b, n_boot=0, seed=0):
    """Quantile coupling in one dimension, exact matching otherwise."""
    a = _as_samples(a, "a")
    if a.shape[1] == 1:
        return w2_1d(a, b, n_boot, seed)
    return w2_assignment(a, b, n_boot, seed)


def baseline_corrected(samples, reference_sampler, n_ref_seeds=(1, 2), seed=0):
    """``W2(samples, ref) - W2(ref', ref)`` at equal n, in one dimension.

    ``reference_sampler(n, seed)`` draws from the target.  The same-law
    baseline removes the empirical floor of the estimator.
    """
    samples = _as_samples(samples, "samples")
    n = len(samples)
    ref = reference_sampler(n, [int(seed), n_ref_seeds[0]])
    ref2 = reference_sampler(n, [int(seed), n_ref_seeds[1]])
    raw = w2(samples, ref).value
    base = w2(ref2, ref).value
    return raw - base, raw, base
