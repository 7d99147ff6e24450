"""Target distributions pi_D ∝ exp(-U) with subgradients, constants and samplers.

Every family is an immutable dataclass.  The module-level functions
(:func:`potential_value`, :func:`subgradient`, ...) are thin dispatchers kept
for callers that prefer a functional style.

Subgradient convention at kinks: the minimal-norm element of the
subdifferential (``sign(0) = 0`` for ``|.|`` terms, ``x/|x|`` on the unit
sphere for the max-norm families).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import InputError, NumericalError, SamplerFailure, UnsupportedParametersError

FAMILIES = (
    "gaussian_mixture",
    "symmetric_modified_half_normal",
    "double_well",
    "elastic_net",
    "max_norm",
    "max_norm_nonconvex",
)

INV_CDF_POINTS = 2**14
TAIL_MASS = 1e-12
MAX_REJECTION_ATTEMPTS = 10_000


@dataclass(frozen=True)
class SemiconvexityParams:
    """Constants of Assumption 2: K-semiconvex on balls of radius R, mu-strongly convex beyond R."""

    K: float
    mu: float
    R: float

    def __post_init__(self):
        if not (self.K >= 0 and self.mu > 0 and self.R >= 0):
            raise UnsupportedParametersError(
                f"need K >= 0, mu > 0, R >= 0; got K={self.K}, mu={self.mu}, R={self.R}"
            )


def _as_points(x, dim):
    """Return ``(points[n, dim], kind)`` with kind in {"scalar", "single", "batch"}."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise InputError(f"scalar input given for dim={dim}")
        return arr.reshape(1, 1), "scalar"
    if arr.ndim == 1:
        if arr.shape[0] == dim:
            return arr.reshape(1, dim), "single"
        if dim == 1:
            return arr.reshape(-1, 1), "batch1"
        raise InputError(f"expected a vector of length {dim}, got shape {arr.shape}")
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, "batch"
    raise InputError(f"expected points of dimension {dim}, got shape {arr.shape}")


def _restore_vector(kind, v):
    if kind == "scalar":
        return float(v[0, 0])
    if kind == "single":
        return v[0]
    if kind == "batch1":
        return v[:, 0]
    return v


def _restore_scalar(kind, v):
    if kind in ("scalar", "single"):
        return float(v[0])
    return v


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _unit_directions(rng, n, dim):
    u = rng.standard_normal((n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class Potential:
    """Base class.  Subclasses define ``_value``, ``_grad`` on (n, d) arrays."""

    family: str = ""
    dim: int = 1
    #: 1-D breakpoints of the density (used to align quadrature panels)
    kinks: tuple = ()

    # -- evaluation ---------------------------------------------------------
    def value(self, x):
        pts, kind = _as_points(x, self.dim)
        if not np.all(np.isfinite(pts)):
            raise InputError("potential evaluated at a non-finite point")
        return _restore_scalar(kind, self._value(pts))

    def grad(self, x):
        pts, kind = _as_points(x, self.dim)
        if not np.all(np.isfinite(pts)):
            raise InputError("subgradient evaluated at a non-finite point")
        return _restore_vector(kind, self._grad(pts))

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError

    # -- constants ------------------------------------------------------------
    def semiconvexity(self) -> SemiconvexityParams:
        raise NotImplementedError

    # -- sampling / moments -----------------------------------------------------
    def sample(self, n, seed=None):
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    # 1-D helpers for quadrature oracles (normalised log density)
    def log_density_1d(self, y):
        if self.dim != 1:
            raise InputError("log_density_1d requires dim=1")
        return -self._value(np.asarray(y, dtype=float).reshape(-1, 1)) - self.log_normalizer

    @cached_property
    def log_normalizer(self) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Gaussian mixture
# ---------------------------------------------------------------------------


def mixture_log_terms(x, log_weights, means, variances):
    """Per-component log of ``w_i N(x; means_i, variances_i I)`` for x of shape (n, d)."""
    d = x.shape[1]
    sq = np.einsum("nid,nid->ni", x[:, None, :] - means[None], x[:, None, :] - means[None])
    return log_weights[None] - 0.5 * d * np.log(2 * np.pi * variances)[None] - sq / (2 * variances[None])


def mixture_grad_log(x, log_weights, means, variances):
    """Gradient of the log mixture density, stabilised by max-subtraction.

    Responsibilities are laid out component-major, (I, n), so the reductions
    run along the long axis.
    """
    d = x.shape[1]
    xx = x[:, 0] ** 2 if d == 1 else np.einsum("nd,nd->n", x, x)
    mm = np.einsum("id,id->i", means, means)
    const = log_weights - 0.5 * d * np.log(2 * np.pi * variances) - mm / (2 * variances)
    terms = const[:, None] + (means @ x.T - 0.5 * xx[None]) / variances[:, None]
    terms -= terms.max(axis=0)
    resp = np.exp(terms)
    resp /= resp.sum(axis=0)
    # sum_i r_i (means_i - x) / var_i
    a = resp / variances[:, None]
    return a.T @ means - a.sum(axis=0)[:, None] * x


@dataclass(frozen=True, eq=False)
class GaussianMixture(Potential):
    """Isotropic mixture ``sum_i w_i N(means_i, stds_i^2 I)``.

    ``overrides`` supplies (K, mu, R) when no closed form exists (more than
    two modes or unequal components).  ``R`` is the free radius of the
    symmetric two-mode case.
    """

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    R: float = 0.0
    overrides: SemiconvexityParams | None = None
    family: str = field(default="gaussian_mixture", init=False)

    def __post_init__(self):
        w = np.atleast_1d(np.array(self.weights, dtype=float))
        m = np.array(self.means, dtype=float)
        if m.ndim == 1:
            m = m.reshape(len(w), -1) if m.size != len(w) else m.reshape(-1, 1)
        s = np.atleast_1d(np.array(self.stds, dtype=float))
        if s.size == 1 and len(w) > 1:
            s = np.full(len(w), float(s[0]))
        if not (len(w) == m.shape[0] == len(s)) or len(w) < 1:
            raise InputError("weights, means and stds must describe the same number of components")
        if np.any(w < 0) or w.sum() <= 0:
            raise InputError("mixture weights must be nonnegative with positive sum")
        if np.any(s <= 0):
            raise InputError("component standard deviations must be positive")
        w = w / w.sum()
        for name, val in (("weights", w), ("means", m), ("stds", s)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "dim", int(m.shape[1]))

    @property
    def n_components(self):
        return len(self.weights)

    @cached_property
    def _log_w(self):
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def _value(self, x):
        terms = mixture_log_terms(x, self._log_w, self.means, self.stds**2)
        return -special.logsumexp(terms, axis=1)

    def _grad(self, x):
        return -mixture_grad_log(x, self._log_w, self.means, self.stds**2)

    def two_mode_half_distance(self):
        """``|eta|`` when the mixture is two equal-weight, equal-width modes, else None."""
        if self.n_components == 1:
            return 0.0
        if (
            self.n_components == 2
            and math.isclose(self.weights[0], self.weights[1], rel_tol=1e-12)
            and math.isclose(self.stds[0], self.stds[1], rel_tol=1e-12)
        ):
            return float(np.linalg.norm(self.means[0] - self.means[1]) / 2)
        return None

    def semiconvexity(self):
        if self.overrides is not None:
            return self.overrides
        eta = self.two_mode_half_distance()
        if eta is None:
            raise UnsupportedParametersError(
                "no closed-form (K, mu) for this mixture; pass overrides=SemiconvexityParams(...)"
            )
        s2 = float(self.stds[0] ** 2)
        mu = (s2 - 2 * eta**2) / s2**2
        if mu <= 0:
            raise UnsupportedParametersError(
                f"two-mode mixture needs s^2 > 2 eta^2 (s^2={s2}, eta={eta}); mu={mu} <= 0"
            )
        return SemiconvexityParams(K=2 * eta**2 / s2**2, mu=mu, R=float(self.R))

    def sample(self, n, seed=None):
        n = _check_count(n)
        rng = _rng(seed)
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + self.stds[comp, None] * z

    def second_moment(self):
        sq_means = np.einsum("id,id->i", self.means, self.means)
        return float(np.sum(self.weights * (sq_means + self.dim * self.stds**2)))

    @cached_property
    def log_normalizer(self):
        return 0.0

    def to_config(self):
        cfg = {
            "family": self.family,
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "R": self.R,
        }
        if self.overrides is not None:
            cfg["overrides"] = {"K": self.overrides.K, "mu": self.overrides.mu, "R": self.overrides.R}
        return cfg


def two_mode_mixture(eta=2.0, s2=9.0, dim=1, R=0.0):
    """Equal-weight modes at ``±eta`` (times the all-ones direction when dim > 1)."""
    direction = np.ones(dim) / math.sqrt(dim)
    mean = eta * direction
    return GaussianMixture(
        weights=np.array([0.5, 0.5]),
        means=np.stack([mean, -mean]),
        stds=np.full(2, math.sqrt(s2)),
        R=R,
    )


# ---------------------------------------------------------------------------
# Symmetric modified half-normal:  U(x) = xi x^2 + |x|
# ---------------------------------------------------------------------------


def _halfnormal_log_norm(xi):
    # log ∫ exp(-xi x^2 - |x|) dx = log( sqrt(pi/xi) e^{1/(4 xi)} erfc(1/(2 sqrt(xi))) )
    a = 1.0 / (2.0 * math.sqrt(xi))
    return 0.5 * math.log(math.pi / xi) + math.log(special.erfcx(a))


def fox_wright_psi(xi, terms=200):
    """Series ``sum_n Gamma(1/2 + n/2) (-1/sqrt(xi))^n / n!`` (the half-normal normaliser)."""
    z = -1.0 / math.sqrt(xi)
    total = 0.0
    for n in range(terms):
        log_mag = special.gammaln(0.5 + n / 2) + n * math.log(abs(z)) - special.gammaln(n + 1)
        total += (-1) ** n * math.exp(log_mag)
    return total


def _sample_halfnormal(rng, xi, n):
    """Rejection from N(0, 1/(2 xi)) with acceptance exp(-|x|)."""
    out = np.empty(n)
    filled = 0
    proposals = 0
    scale = 1.0 / math.sqrt(2 * xi)
    cap = MAX_REJECTION_ATTEMPTS * n
    while filled < n:
        # expected acceptance is at least P(|Z| small); draw with head-room
        m = max(64, 2 * (n - filled))
        y = rng.normal(0.0, scale, size=m)
        keep = y[rng.random(m) < np.exp(-np.abs(y))]
        take = min(len(keep), n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        proposals += m
        if proposals > cap and filled < n:
            raise SamplerFailure(f"half-normal rejection sampler exceeded {cap} proposals")
    return out


@dataclass(frozen=True, eq=False)
class SymmetricModifiedHalfNormal(Potential):
    xi: float = 1.0
    family: str = field(default="symmetric_modified_half_normal", init=False)
    dim: int = field(default=1, init=False)
    kinks: tuple = field(default=(0.0,), init=False)

    def __post_init__(self):
        if not self.xi > 0:
            raise InputError(f"xi must be positive, got {self.xi}")

    def _value(self, x):
        return self.xi * x[:, 0] ** 2 + np.abs(x[:, 0])

    def _grad(self, x):
        return 2 * self.xi * x + np.sign(x)

    def semiconvexity(self):
        # <h(x)-h(y), x-y> >= 2 xi |x-y|^2 for every pair
        return SemiconvexityParams(K=0.0, mu=2 * self.xi, R=0.0)

    def sample(self, n, seed=None):
        n = _check_count(n)
        return _sample_halfnormal(_rng(seed), self.xi, n).reshape(n, 1)

    @cached_property
    def log_normalizer(self):
        return _halfnormal_log_norm(self.xi)

    def second_moment(self):
        val, err = integrate.quad(
            lambda y: y * y * math.exp(-self.xi * y * y - y - self.log_normalizer), 0, np.inf, limit=200
        )
        if not np.isfinite(val) or err > 1e-8 * max(1.0, val):
            raise NumericalError("half-normal second moment quadrature did not converge")
        return 2 * val

    def to_config(self):
        return {"family": self.family, "dim": 1, "xi": self.xi}


# ---------------------------------------------------------------------------
# Elastic net:  U(x) = |x|^2 + sum_i |x_i|   (product of xi=1 half-normals)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElasticNet(Potential):
    dim: int = 1
    family: str = field(default="elastic_net", init=False)
    kinks: tuple = field(default=(0.0,), init=False)

    def __post_init__(self):
        _check_dim(self.dim)

    def _value(self, x):
        return np.sum(x * x, axis=1) + np.sum(np.abs(x), axis=1)

    def _grad(self, x):
        return 2 * x + np.sign(x)

    def semiconvexity(self):
        return SemiconvexityParams(K=0.0, mu=2.0, R=0.0)

    def sample(self, n, seed=None):
        n = _check_count(n)
        return _sample_halfnormal(_rng(seed), 1.0, n * self.dim).reshape(n, self.dim)

    @cached_property
    def log_normalizer(self):
        return self.dim * _halfnormal_log_norm(1.0)

    def second_moment(self):
        return self.dim * SymmetricModifiedHalfNormal(xi=1.0).second_moment()

    def to_config(self):
        return {"family": self.family, "dim": self.dim}


# ---------------------------------------------------------------------------
# Radial families: U(x) = u(|x|)
# ---------------------------------------------------------------------------


class _Radial(Potential):
    """Potentials depending on ``|x|`` only; sampled via the radial inverse CDF."""

    def _u(self, r):
        raise NotImplementedError

    def _du_over_r(self, r):
        """``u'(r)/r`` so that the gradient is ``(u'(r)/r) x``; must handle r=0."""
        raise NotImplementedError

    def _value(self, x):
        return self._u(np.linalg.norm(x, axis=1))

    def _grad(self, x):
        r = np.linalg.norm(x, axis=1)
        return self._du_over_r(r)[:, None] * x

    def _radial_logpdf(self, r):
        if self.dim == 1:
            return -self._u(r)
        with np.errstate(divide="ignore"):
            return (self.dim - 1) * np.log(r) - self._u(r)

    @cached_property
    def radial_bound(self):
        """Radius B with radial tail mass below TAIL_MASS."""
        grid = np.linspace(1e-6, 60.0, 60001)
        lp = self._radial_logpdf(grid)
        peak = lp.max()
        # first radius past the mode where the density has dropped far enough that the tail is negligible
        cut = np.log(TAIL_MASS) - 10.0
        beyond = np.nonzero((lp - peak < cut) & (grid > grid[np.argmax(lp)]))[0]
        if len(beyond) == 0:
            raise NumericalError("could not find a radial truncation bound below r=60")
        return float(grid[beyond[0]])

    @cached_property
    def _radial_table(self):
        B = self.radial_bound
        r = np.linspace(0.0, B, INV_CDF_POINTS)
        lp = self._radial_logpdf(r)
        dens = np.exp(lp - np.max(lp[np.isfinite(lp)]))
        dens[~np.isfinite(dens)] = 0.0
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(r))])
        cdf /= cdf[-1]
        return r, cdf

    def sample(self, n, seed=None):
        n = _check_count(n)
        rng = _rng(seed)
        r_grid, cdf = self._radial_table
        radii = np.interp(rng.random(n), cdf, r_grid)
        if self.dim == 1:
            signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            return (signs * radii).reshape(n, 1)
        return radii[:, None] * _unit_directions(rng, n, self.dim)

    def _radial_quad(self, power):
        # ∫ r^power r^{d-1} e^{-u(r)} dr with the kink at r = 1 as a breakpoint
        def f(r):
            return r ** (power + self.dim - 1) * math.exp(-float(self._u(np.array([r]))[0]))

        B = self.radial_bound
        total = 0.0
        for lo, hi in ((0.0, 1.0), (1.0, B)):
            val, err = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, epsrel=1e-12)
            if not np.isfinite(val) or err > 1e-9 * max(abs(val), 1e-300):
                raise NumericalError("radial moment quadrature did not converge")
            total += val
        return total

    def second_moment(self):
        return self._radial_quad(2) / self._radial_quad(0)

    @cached_property
    def log_normalizer(self):
        # surface area of the unit sphere times the radial integral
        log_area = math.log(2) + 0.5 * self.dim * math.log(math.pi) - special.gammaln(self.dim / 2)
        return log_area + math.log(self._radial_quad(0))

    def to_config(self):
        return {"family": self.family, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class DoubleWell(_Radial):
    """``U(x) = |x|^4 - |x|^2``; 2-semiconvex, (mu, R) found by an empirical profile scan."""

    dim: int = 1
    mu_target: float = 1.0
    family: str = field(default="double_well", init=False)

    def __post_init__(self):
        _check_dim(self.dim)

    def _u(self, r):
        r2 = r * r
        return r2 * r2 - r2

    def _du_over_r(self, r):
        return 4 * r * r - 2

    def semiconvexity(self):
        return self._scanned

    @cached_property
    def _scanned(self):
        R = scan_strong_convexity_radius(self, self.mu_target)
        return SemiconvexityParams(K=2.0, mu=self.mu_target, R=R)


@dataclass(frozen=True, eq=False)
class MaxNorm(_Radial):
    """``U(x) = max(|x|, |x|^2)``; convex."""

    dim: int = 1
    family: str = field(default="max_norm", init=False)
    kinks: tuple = field(default=(-1.0, 0.0, 1.0), init=False)

    def __post_init__(self):
        _check_dim(self.dim)

    def _u(self, r):
        return np.maximum(r, r * r)

    def _du_over_r(self, r):
        # inside: x/|x| (0 at the origin); outside: 2x; on the sphere the minimal-norm x/|x|
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(r > 0, 1.0 / r, 0.0)
        return np.where(r > 1, 2.0, inner)

    def semiconvexity(self):
        # K = 0, R = 1 as published; the published mu = 2 is violated by pairs
        # straddling the unit sphere, the infimum over |x - y| >= 1 is 1.
        return SemiconvexityParams(K=0.0, mu=1.0, R=1.0)


@dataclass(frozen=True, eq=False)
class MaxNormNonconvex(_Radial):
    """``U(x) = max(|x|, |x|^2) - |x|^2 / 2``; 1-semiconvex."""

    dim: int = 1
    mu_target: float = 0.5
    family: str = field(default="max_norm_nonconvex", init=False)
    kinks: tuple = field(default=(-1.0, 0.0, 1.0), init=False)

    def __post_init__(self):
        _check_dim(self.dim)

    def _u(self, r):
        return np.maximum(r, r * r) - 0.5 * r * r

    def _du_over_r(self, r):
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(r > 0, 1.0 / r, 0.0) - 1.0
        return np.where(r > 1, 1.0, inner)

    def semiconvexity(self):
        return self._scanned

    @cached_property
    def _scanned(self):
        # U + |x|^2/2 = max(|x|, |x|^2) is convex, so K = 1
        R = scan_strong_convexity_radius(self, self.mu_target)
        return SemiconvexityParams(K=1.0, mu=self.mu_target, R=R)


# ---------------------------------------------------------------------------
# Pair scans
# ---------------------------------------------------------------------------


def monotonicity_ratio(p: Potential, x, y):
    """``<h(x) - h(y), x - y> / |x - y|^2`` row-wise."""
    dx = x - y
    num = np.einsum("nd,nd->n", p._grad(x) - p._grad(y), dx)
    return num / np.einsum("nd,nd->n", dx, dx)


def random_pairs(p: Potential, distances, seed=None, spread=3.0):
    """Pairs ``(x, x + r u)``; half anchored on target samples, half uniform in a ball.

    A quarter of the anchors are centred so that the segment straddles the
    origin, where radial potentials have their least convex region.
    """
    rng = _rng(seed)
    r = np.asarray(distances, dtype=float)
    n = len(r)
    u = _unit_directions(rng, n, p.dim)
    x = np.empty((n, p.dim))
    n_t = n // 2
    x[:n_t] = p.sample(n_t, rng)
    ball = _unit_directions(rng, n - n_t, p.dim) * (spread * rng.random((n - n_t, 1)) ** (1.0 / p.dim))
    x[n_t:] = ball
    centred = rng.random(n) < 0.25
    x[centred] = -0.5 * r[centred, None] * u[centred] + 0.05 * rng.standard_normal((centred.sum(), p.dim))
    return x, x + r[:, None] * u


def scan_strong_convexity_radius(p: Potential, mu, r_max=6.0, step=0.05, pairs_per_r=4000, seed=20240, margin=1.1):
    """Smallest radius beyond which the empirical profile stays above ``mu``, times ``margin``."""
    grid = np.arange(step, r_max + step / 2, step)
    rng = np.random.default_rng(seed)
    prof = np.empty(len(grid))
    for k, r in enumerate(grid):
        x, y = random_pairs(p, np.full(pairs_per_r, r), rng)
        prof[k] = monotonicity_ratio(p, x, y).min()
    ok = prof >= mu
    if not ok[-1]:
        raise UnsupportedParametersError(f"profile stays below mu={mu} up to r={r_max}")
    bad = np.nonzero(~ok)[0]
    first = 0 if len(bad) == 0 else bad[-1] + 1
    return float(grid[first] * margin) if len(bad) else 0.0


# ---------------------------------------------------------------------------
# Module-level operations and construction
# ---------------------------------------------------------------------------


def _check_count(n):
    if int(n) != n or n < 1:
        raise InputError(f"sample count must be a positive integer, got {n}")
    return int(n)


def _check_dim(d):
    if int(d) != d or d < 1:
        raise InputError(f"dimension must be a positive integer, got {d}")


def potential_value(p: Potential, x):
    return p.value(x)


def subgradient(p: Potential, x):
    return p.grad(x)


def semiconvexity_params(p: Potential) -> SemiconvexityParams:
    return p.semiconvexity()


def sample_target(p: Potential, n, seed=None):
    return p.sample(n, seed)


def second_moment(p: Potential) -> float:
    return p.second_moment()


def from_config(cfg: dict) -> Potential:
    """Build a potential from a JSON-style block, e.g. ``{"family": "double_well", "dim": 2}``."""
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    dim = int(cfg.pop("dim", 1))
    if family == "gaussian_mixture":
        ov = cfg.pop("overrides", None)
        means = np.asarray(cfg["means"], dtype=float)
        if means.ndim == 1:
            means = means.reshape(-1, dim)
        return GaussianMixture(
            weights=cfg["weights"],
            means=means,
            stds=cfg["stds"],
            R=float(cfg.get("R", 0.0)),
            overrides=SemiconvexityParams(**ov) if ov else None,
        )
    if family == "symmetric_modified_half_normal":
        if dim != 1:
            raise InputError("the symmetric modified half-normal family is one-dimensional")
        return SymmetricModifiedHalfNormal(xi=float(cfg.get("xi", 1.0)))
    if family == "double_well":
        return DoubleWell(dim=dim, mu_target=float(cfg.get("mu_target", 1.0)))
    if family == "elastic_net":
        return ElasticNet(dim=dim)
    if family == "max_norm":
        return MaxNorm(dim=dim)
    if family == "max_norm_nonconvex":
        return MaxNormNonconvex(dim=dim, mu_target=float(cfg.get("mu_target", 0.5)))
    raise InputError(f"unknown family {family!r}; expected one of {FAMILIES}")
