"""Forward Ornstein-Uhlenbeck marginals and score oracles.

``X_t = m_t X_0 + sigma_t Z`` with ``m_t = e^{-t}`` and ``sigma_t^2 = 1 - e^{-2t}``.
For a Gaussian mixture target the law of ``X_t`` is again a mixture and its
score is available in closed form; for other one-dimensional targets the
score is computed by Gauss-Legendre quadrature of the OU convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InputError
from .potentials import GaussianMixture, Potential, _as_points, _restore_vector, mixture_grad_log

GL_NODES_PER_PANEL = 16
GL_PANELS = 256  # 2**12 nodes in total
_X_CHUNK = 1024


@dataclass(frozen=True)
class OUMarginal:
    t: float
    m: float
    sigma2: float

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


def ou_coeffs(t) -> OUMarginal:
    t = float(t)
    if not t >= 0:
        raise InputError(f"time must be nonnegative, got {t}")
    return OUMarginal(t=t, m=math.exp(-t), sigma2=-math.expm1(-2 * t))


def sample_forward(p: Potential, t, n, seed=None):
    """Draw ``m_t X_0 + sigma_t Z`` with ``X_0 ~ pi_D``."""
    oc = ou_coeffs(t)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x0 = p.sample(n, rng)
    z = rng.standard_normal(x0.shape)
    return oc.m * x0 + oc.sigma * z


def mixture_marginal(mix: GaussianMixture, t):
    """Component means and variances of ``L(X_t)`` for a mixture target."""
    oc = ou_coeffs(t)
    return mix.means * oc.m, oc.m**2 * mix.stds**2 + oc.sigma2


def mixture_score(mix: GaussianMixture, t, x):
    """``grad log p_t(x)`` for a mixture target; x may be a point or an (n, d) batch."""
    pts, kind = _as_points(x, mix.dim)
    means, var = mixture_marginal(mix, t)
    return _restore_vector(kind, mixture_grad_log(pts, mix._log_w, means, var))


def mixture_log_density(mix: GaussianMixture, t, x):
    from .potentials import mixture_log_terms

    pts, kind = _as_points(x, mix.dim)
    means, var = mixture_marginal(mix, t)
    out = special.logsumexp(mixture_log_terms(pts, mix._log_w, means, var), axis=1)
    return float(out[0]) if kind in ("scalar", "single") else out


# ---------------------------------------------------------------------------
# Quadrature oracle (d = 1)
# ---------------------------------------------------------------------------


def quadrature_bound(p: Potential) -> float:
    return max(10.0, 8.0 * math.sqrt(p.second_moment()))


def gauss_legendre_grid(p: Potential, panels=GL_PANELS, nodes=GL_NODES_PER_PANEL):
    """Composite Gauss-Legendre nodes and log-weights on [-B, B], panel edges at the kinks."""
    B = quadrature_bound(p)
    edges = np.linspace(-B, B, panels + 1)
    edges = np.unique(np.concatenate([edges, [k for k in p.kinks if -B < k < B]]))
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    y = 0.5 * (hi - lo) * xi[None] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * wi[None]
    return y.ravel(), np.log(w.ravel())


def _check_quad_args(p, t):
    if p.dim != 1:
        raise InputError("quadrature oracles are one-dimensional")
    t = float(t)
    if not t > 0:
        raise InputError(f"quadrature score needs t > 0 (the score may diverge at t = 0), got {t}")
    return ou_coeffs(t)


def _quad_core(p, oc, x, grid):
    y, logw = grid
    base = p.log_density_1d(y) + logw
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    logp = np.empty(len(x))
    score = np.empty(len(x))
    for s in range(0, len(x), _X_CHUNK):
        xc = x[s : s + _X_CHUNK, None]
        resid = xc - oc.m * y[None]
        lt = base[None] - resid**2 / (2 * oc.sigma2)
        lse = special.logsumexp(lt, axis=1)
        resp = np.exp(lt - lse[:, None])
        score[s : s + _X_CHUNK] = -(resp * resid).sum(axis=1) / oc.sigma2
        logp[s : s + _X_CHUNK] = lse - 0.5 * math.log(2 * math.pi * oc.sigma2)
    return logp, score


def quadrature_score_1d(p: Potential, t, x, return_error=False):
    """``d/dx log p_t(x)`` from ``p_t(x) = ∫ p_0(y) N(x; m_t y, sigma_t^2) dy``.

    With ``return_error`` the difference to a half-resolution rule is returned
    as a second value (a conservative error estimate).
    """
    oc = _check_quad_args(p, t)
    scalar = np.ndim(x) == 0
    _, score = _quad_core(p, oc, x, gauss_legendre_grid(p))
    if return_error:
        _, coarse = _quad_core(p, oc, x, gauss_legendre_grid(p, panels=GL_PANELS // 2))
        err = np.abs(score - coarse)
        return (float(score[0]), float(err[0])) if scalar else (score, err)
    return float(score[0]) if scalar else score


def quadrature_log_density_1d(p: Potential, t, x):
    oc = _check_quad_args(p, t)
    logp, _ = _quad_core(p, oc, x, gauss_legendre_grid(p))
    return float(logp[0]) if np.ndim(x) == 0 else logp


def exact_score(p: Potential):
    """Score oracle ``(t, x[n, d]) -> array[n, d]`` for the sampler and the fitting code."""
    if isinstance(p, GaussianMixture):
        means0, log_w, stds2 = p.means, p._log_w, p.stds**2
        eta = p.two_mode_half_distance()
        if p.dim == 1 and p.n_components == 2 and eta and np.allclose(means0[0], -means0[1]):
            # symmetric pair: -x/v + (m eta/v) tanh(m eta x / v)
            e0 = float(means0[0, 0])

            def score(t, x):
                oc = ou_coeffs(t)
                v = oc.m**2 * stds2[0] + oc.sigma2
                a = oc.m * e0 / v
                return a * np.tanh(a * x) - x / v

            return score

        def score(t, x):
            oc = ou_coeffs(t)
            return mixture_grad_log(x, log_w, means0 * oc.m, oc.m**2 * stds2 + oc.sigma2)

        return score
    if p.dim == 1:
        grid = gauss_legendre_grid(p)

        def score(t, x):
            oc = _check_quad_args(p, t)
            return _quad_core(p, oc, x[:, 0], grid)[1].reshape(-1, 1)

        return score
    raise InputError(f"no exact score oracle for {p.family} in dimension {p.dim}")


def exact_score_at_times(p: Potential, t, x):
    """Exact score at per-row times ``t[n]`` (used to build regression targets)."""
    t = np.asarray(t, dtype=float)
    if isinstance(p, GaussianMixture):
        m = np.exp(-t)
        s2 = -np.expm1(-2 * t)
        var = m[:, None] ** 2 * p.stds[None] ** 2 + s2[:, None]  # (n, I)
        d = p.dim
        diff = x[:, None, :] - m[:, None, None] * p.means[None]  # (n, I, d)
        sq = np.einsum("nid,nid->ni", diff, diff)
        lt = p._log_w[None] - 0.5 * d * np.log(2 * np.pi * var) - sq / (2 * var)
        lt -= lt.max(axis=1, keepdims=True)
        r = np.exp(lt)
        r /= r.sum(axis=1, keepdims=True)
        return -np.einsum("ni,nid->nd", r / var, diff)
    if p.dim != 1:
        raise InputError(f"no exact score oracle for {p.family} in dimension {p.dim}")
    if np.any(t <= 0):
        raise InputError("quadrature score needs t > 0")
    y, logw = gauss_legendre_grid(p)
    base = p.log_density_1d(y) + logw
    out = np.empty(len(t))
    xs = x[:, 0]
    for s in range(0, len(t), _X_CHUNK):
        m = np.exp(-t[s : s + _X_CHUNK, None])
        s2 = -np.expm1(-2 * t[s : s + _X_CHUNK, None])
        resid = xs[s : s + _X_CHUNK, None] - m * y[None]
        lt = base[None] - resid**2 / (2 * s2)
        lt -= lt.max(axis=1, keepdims=True)
        r = np.exp(lt)
        out[s : s + _X_CHUNK] = -(r * resid).sum(axis=1) / r.sum(axis=1) / s2[:, 0]
    return out.reshape(-1, 1)
