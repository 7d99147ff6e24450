"""Weak-convexity machinery: profile bounds, one-sided score monotonicity, critical times.

All functions are scalar and pure.  Root finding is plain bisection
(``scipy.optimize.bisect``) on brackets where the function is monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import BracketError, InputError
from .potentials import Potential, _unit_directions, monotonicity_ratio

ROOT_TOL = 1e-10
T_STAR_BRACKET = 60.0


@dataclass(frozen=True)
class ConvexityParams:
    """``(mu, K, L, R)`` plus the profile constant ``beta`` (equal to mu).

    ``L`` defaults to the proxy ``K + mu``.
    """

    mu: float
    K: float
    R: float = 0.0
    L: float | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise InputError(f"mu must be positive, got {self.mu}")
        if not self.K >= 0:
            raise InputError(f"K must be nonnegative, got {self.K}")
        if self.L is None:
            object.__setattr__(self, "L", self.K + self.mu)
        if not self.L > 0:
            raise InputError(f"L must be positive, got {self.L}")

    @property
    def beta(self):
        return self.mu

    @property
    def uses_proxy(self):
        return self.L == self.K + self.mu

    @classmethod
    def from_potential(cls, p: Potential, L=None):
        sc = p.semiconvexity()
        return cls(mu=sc.mu, K=sc.K, R=sc.R, L=L)


def f_L(r, L):
    """``2 sqrt(L) tanh(r sqrt(L) / 2)``; nondecreasing in r, bounded by ``2 sqrt(L)``."""
    if L <= 0:
        raise InputError(f"L must be positive, got {L}")
    sl = math.sqrt(L)
    return 2 * sl * np.tanh(np.asarray(r, dtype=float) * sl / 2)


def _denominator(t, mu):
    e = np.exp(-2 * np.asarray(t, dtype=float))
    den = mu + (1 - mu) * e
    if np.any(den <= 0):
        raise InputError(f"mu + (1 - mu) e^(-2t) <= 0 for mu={mu}")
    return e, den


def beta_os(t, mu, L):
    """One-sided monotonicity constant of the score with weak-convexity scale ``L``."""
    if np.any(np.asarray(t) < 0):
        raise InputError("time must be nonnegative")
    e, den = _denominator(t, mu)
    return mu / den - e / den**2 * L


def beta_os_kmu(t, mu, K):
    """``beta_os`` with the proxy ``L = K + mu``; equals ``-K`` at t = 0 and tends to 1."""
    return beta_os(t, mu, K + mu)


def B_integral(t, mu, K):
    """Closed form of ``∫_0^t beta_os_kmu(s) ds``.

    ``1/2 [ log(mu (e^{2t} - 1) + 1) + (K/mu + 1) (1 / (mu (e^{2t} - 1) + 1) - 1) ]``
    """
    if not mu > 0:
        raise InputError(f"mu must be positive, got {mu}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("time must be nonnegative")
    with np.errstate(over="ignore"):
        a = mu * np.expm1(2 * t)
    big = ~np.isfinite(a) | (a > 1e300)
    # log(1 + a) and 1/(1 + a); for huge a use log(mu) + 2t + log1p((1 - mu) e^{-2t} / mu)
    log_u = np.where(big, 0.0, np.log1p(np.where(big, 0.0, a)))
    if np.any(big):
        tb = np.where(big, t, 0.0)
        log_u = np.where(big, math.log(mu) + 2 * tb + np.log1p((1 - mu) / mu * np.exp(-2 * tb)), log_u)
    inv_u = np.exp(-log_u)
    out = 0.5 * (log_u + (K / mu + 1) * (inv_u - 1))
    return float(out) if out.ndim == 0 else out


def integral_beta(t0, t1, mu, K):
    """``∫_{t0}^{t1} beta_os_kmu``."""
    return B_integral(t1, mu, K) - B_integral(t0, mu, K)


def t_bar(mu, K):
    """``ln sqrt(1 + K / mu^2)``."""
    if not mu > 0 or K < 0:
        raise InputError("need mu > 0 and K >= 0")
    return 0.5 * math.log1p(K / mu**2)


def t_star(mu, K, bracket=T_STAR_BRACKET, tol=ROOT_TOL):
    """First time after which ``B(t, 0, mu, K)`` is positive.

    Bisection on ``[t_bar, t_bar + bracket]``; ``B`` is decreasing before
    ``t_bar`` and increasing after it.
    """
    if not mu > 0 or K < 0:
        raise InputError("need mu > 0 and K >= 0")
    if K == 0:
        return 0.0
    lo = t_bar(mu, K)
    hi = lo + bracket
    b_lo, b_hi = B_integral(lo, mu, K), B_integral(hi, mu, K)
    if not (b_lo <= 0 < b_hi):
        raise BracketError(
            f"B has no sign change on [{lo}, {hi}]: B={b_lo}, {b_hi}", lo, hi, (b_lo, b_hi)
        )
    if b_lo == 0:
        return lo
    return optimize.bisect(lambda s: B_integral(s, mu, K), lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def r0_threshold(mu, L):
    """``R_0 = 2 z_0 / sqrt(L)`` with ``tanh(z_0) / z_0 = mu / L``; 0 when mu >= L."""
    if not mu > 0:
        raise InputError(f"mu must be positive, got {mu}")
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    ratio = mu / L
    if ratio >= 1:
        return 0.0
    z0 = solve_tanh_ratio(ratio)
    return 2 * z0 / math.sqrt(L)


def solve_tanh_ratio(ratio):
    """Unique positive root of ``tanh(z)/z = ratio`` for ``0 < ratio < 1``."""

    def g(z):
        return math.tanh(z) / z - ratio

    hi = 1.0 / ratio + 1.0  # tanh(z)/z <= 1/z
    lo = 1e-8
    if not g(lo) > 0 > g(hi):
        raise BracketError("tanh(z)/z bracket failed", lo, hi, (g(lo), g(hi)))
    return optimize.bisect(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def mu_tilde(mu, L, R):
    """``mu - f_L(R) / R``; its sign is reported by the caller, not enforced."""
    if not R > 0:
        raise InputError(f"R must be positive, got {R}")
    return mu - float(f_L(R, L)) / R


def profile_lower_bound(r, mu, L):
    """``mu - f_L(r) / r``."""
    r = np.asarray(r, dtype=float)
    return mu - f_L(r, L) / r


def empirical_kappa(p: Potential, r, n_pairs=10_000, seed=None):
    """Minimum of ``<h(x)-h(y), x-y>/r^2`` over random pairs at distance ``r``.

    ``x ~ pi_D``, ``y = x + r u`` with ``u`` uniform on the sphere.  This is an
    upper estimate of the profile ``kappa_U(r)``.
    """
    if not r > 0:
        raise InputError(f"r must be positive, got {r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = p.sample(n_pairs, rng)
    y = x + r * _unit_directions(rng, n_pairs, p.dim)
    return float(monotonicity_ratio(p, x, y).min())


def fitted_weak_convexity_scale(p: Potential, mu, radii, n_pairs=4000, seed=0):
    """Smallest L (bisection) with ``empirical_kappa(r) >= mu - f_L(r)/r`` on ``radii``."""
    kap = np.array([empirical_kappa(p, r, n_pairs, seed=[seed, k]) for k, r in enumerate(radii)])
    radii = np.asarray(radii, dtype=float)

    def worst(L):
        return float(np.min(kap - profile_lower_bound(radii, mu, L)))

    lo, hi = 1e-6, 1.0
    while worst(hi) < 0:
        hi *= 2
        if hi > 1e8:
            raise BracketError("no weak-convexity scale below 1e8", lo, hi)
    return optimize.bisect(worst, lo, hi, xtol=1e-8) if worst(lo) < 0 else lo
