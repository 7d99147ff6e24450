"""Property suite for the target potentials.

Each check draws random pairs and compares the normalised monotonicity
``<h(x) - h(y), x - y> / |x - y|^2`` with the family's (K, mu, R).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .convexity import profile_lower_bound
from .potentials import Potential, monotonicity_ratio, random_pairs

TOL = 1e-12
PROXY_FAMILIES = ("gaussian_mixture", "symmetric_modified_half_normal", "elastic_net", "double_well")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    bound: float
    n_pairs: int

    def to_dict(self):
        return asdict(self)


def _pairs(p, dist, seed):
    return random_pairs(p, dist, seed)


def check_semiconvex_inside(p: Potential, n_pairs=10_000, seed=0) -> CheckResult:
    """``ratio >= -K`` for pairs closer than R (vacuous when R = 0)."""
    sc = p.semiconvexity()
    if sc.R <= 0:
        return CheckResult("semiconvex_inside_R", True, float("nan"), -sc.K, 0)
    rng = np.random.default_rng([seed, 1])
    x, y = _pairs(p, rng.uniform(1e-3, sc.R, n_pairs) * (1 - 1e-9), rng)
    worst = float(monotonicity_ratio(p, x, y).min())
    return CheckResult("semiconvex_inside_R", worst >= -sc.K - TOL, worst, -sc.K, n_pairs)


def check_convex_outside(p: Potential, n_pairs=10_000, seed=0, r_extra=6.0) -> CheckResult:
    """``ratio >= mu`` for pairs at distance at least R."""
    sc = p.semiconvexity()
    rng = np.random.default_rng([seed, 2])
    lo = max(sc.R, 1e-3)
    x, y = _pairs(p, rng.uniform(lo, lo + r_extra, n_pairs), rng)
    worst = float(monotonicity_ratio(p, x, y).min())
    return CheckResult("convex_outside_R", worst >= sc.mu - TOL, worst, sc.mu, n_pairs)


def check_global_semiconvex(p: Potential, n_pairs=10_000, seed=0, r_max=8.0) -> CheckResult:
    """``ratio >= -K`` at every distance."""
    sc = p.semiconvexity()
    rng = np.random.default_rng([seed, 3])
    x, y = _pairs(p, rng.uniform(1e-3, r_max, n_pairs), rng)
    worst = float(monotonicity_ratio(p, x, y).min())
    return CheckResult("global_minus_K", worst >= -sc.K - TOL, worst, -sc.K, n_pairs)


def check_subgradient_fd(p: Potential, n_points=1000, seed=0, h=1e-5, tol=1e-6, margin=1e-2) -> CheckResult:
    """Centred finite differences of U against the subgradient, away from kinks.

    Points within ``margin`` of a coordinate hyperplane, the unit sphere or the
    origin are skipped: near the origin the truncation error of the radial
    families grows like ``h^2 / r^2``.
    """
    rng = np.random.default_rng([seed, 4])
    x = p.sample(n_points, rng)
    r = np.linalg.norm(x, axis=1)
    keep = np.all(np.abs(x) > margin, axis=1) & (np.abs(r - 1) > margin)
    x = x[keep]
    g = p._grad(x)
    fd = np.empty_like(x)
    for j in range(p.dim):
        e = np.zeros(p.dim)
        e[j] = h
        fd[:, j] = (p._value(x + e) - p._value(x - e)) / (2 * h)
    err = float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))))
    return CheckResult("subgradient_fd", err <= tol, err, tol, len(x))


def check_proxy_profile(p: Potential, radii=None, n_pairs=10_000, seed=0) -> CheckResult:
    """``empirical kappa(r) >= mu - f_{K+mu}(r)/r`` on a dyadic radius grid."""
    sc = p.semiconvexity()
    radii = 0.05 * 2.0 ** np.arange(8) if radii is None else np.asarray(radii)
    rng = np.random.default_rng([seed, 5])
    margin = np.inf
    for r in radii:
        x = p.sample(n_pairs, rng)
        u = rng.standard_normal((n_pairs, p.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        kap = monotonicity_ratio(p, x, x + r * u).min()
        margin = min(margin, kap - float(profile_lower_bound(r, sc.mu, sc.K + sc.mu)))
    return CheckResult("proxy_profile", bool(margin >= -1e-9), float(margin), 0.0, n_pairs * len(radii))


def empirical_K(p: Potential, n_pairs=10_000, seed=0, r_max=8.0):
    """``max(0, -min ratio)`` over random pairs, a lower estimate of K."""
    rng = np.random.default_rng([seed, 6])
    x, y = _pairs(p, rng.uniform(1e-3, r_max, n_pairs), rng)
    return max(0.0, -float(monotonicity_ratio(p, x, y).min()))


def assumption2_suite(p: Potential, n_pairs=10_000, seed=0):
    checks = [
        check_semiconvex_inside(p, n_pairs, seed),
        check_convex_outside(p, n_pairs, seed),
        check_global_semiconvex(p, n_pairs, seed),
        check_subgradient_fd(p, min(n_pairs, 1000), seed),
    ]
    if p.family in PROXY_FAMILIES:
        checks.append(check_proxy_profile(p, n_pairs=n_pairs, seed=seed))
    return checks
