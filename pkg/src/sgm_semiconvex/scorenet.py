"""Linear-in-parameter score model with random tanh features.

    s(t, theta, x) = Theta_tanh^T tanh(W x + v t/T + c) + Theta_lin^T x

``W``, ``v`` and ``c`` are frozen.  Row ``f`` of the inner weights is drawn
from a generator keyed on ``(weight_seed, f)``, so a model with F features
is a prefix of every larger model with the same seed (nested families).
Because the model is linear in theta, fitting is a least-squares problem
against exact scores and every regularity constant has a closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import InputError
from .forward import exact_score, exact_score_at_times
from .potentials import Potential, _as_points, _restore_vector
from .sampler import SamplerConfig, simulate_aux

SCHEMA = "tanh-random-features/1"
# max |d/dz sech^2 z| = 4 / (3 sqrt 3), rounded up
TANH_CURVATURE = 0.7699
RIDGE = 1e-12
_CHUNK = 50_000


def _feature_row(seed, f, dim, x_scale, t_scale, bias_scale):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, f], dtype=np.uint64)))
    z = rng.standard_normal(dim + 2)
    return z[:dim] * x_scale, z[dim] * t_scale, z[dim + 1] * bias_scale


@dataclass(frozen=True, eq=False)
class ScoreModel:
    dim: int
    n_features: int
    T: float
    weight_seed: int = 0
    include_linear: bool = True
    x_scale: float = 0.5
    t_scale: float = 6.0
    bias_scale: float = 1.5
    alpha: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.dim < 1 or self.n_features < 0:
            raise InputError("dim must be positive and n_features nonnegative")
        if self.n_features == 0 and not self.include_linear:
            raise InputError("model has no features")
        if not self.T > 0:
            raise InputError("T must be positive")

    @cached_property
    def _inner(self):
        rows = [
            _feature_row(self.weight_seed, f, self.dim, self.x_scale, self.t_scale, self.bias_scale)
            for f in range(self.n_features)
        ]
        W = np.array([r[0] for r in rows]).reshape(self.n_features, self.dim)
        v = np.array([r[1] for r in rows])
        c = np.array([r[2] for r in rows])
        for a in (W, v, c):
            a.setflags(write=False)
        return W, v, c

    @property
    def W(self):
        return self._inner[0]

    @property
    def v(self):
        return self._inner[1]

    @property
    def c(self):
        return self._inner[2]

    @property
    def n_rows(self):
        """Rows of the parameter matrix (features)."""
        return self.n_features + (self.dim if self.include_linear else 0)

    @property
    def M(self):
        return self.n_rows * self.dim

    def theta_matrix(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.M:
            raise InputError(f"theta needs {self.M} entries, got {theta.size}")
        return theta.reshape(self.n_rows, self.dim)

    def features(self, t, x):
        """Design matrix ``(n, n_rows)``; ``t`` is a scalar or a per-row array."""
        t = np.asarray(t, dtype=float)
        tau = t / self.T if t.ndim == 0 else (t / self.T)[:, None]
        parts = []
        if self.n_features:
            parts.append(np.tanh(x @ self.W.T + tau * self.v + self.c))
        if self.include_linear:
            parts.append(x)
        return parts[0] if len(parts) == 1 else np.hstack(parts)

    def eval(self, t, theta, x):
        # same value as features(t, x) @ theta, without the hstack copy
        pts, kind = _as_points(x, self.dim)
        th = self.theta_matrix(theta)
        F = self.n_features
        out = pts @ th[F:] if self.include_linear else 0.0
        if F:
            t = np.asarray(t, dtype=float)
            z = np.multiply(pts, self.W[:, 0]) if self.dim == 1 else pts @ self.W.T
            z += (t / self.T) * self.v + self.c if t.ndim == 0 else (t / self.T)[:, None] * self.v + self.c
            np.tanh(z, out=z)
            out = z @ th[:F] + out
        return _restore_vector(kind, out)

    def grad_x(self, t, theta, x):
        """Jacobian ``d s^{(k)} / d x_j`` as ``(n, d, d)`` with index order (n, k, j)."""
        pts, _ = _as_points(x, self.dim)
        th = self.theta_matrix(theta)
        jac = np.zeros((len(pts), self.dim, self.dim))
        if self.n_features:
            z = pts @ self.W.T + (np.asarray(t) / self.T) * self.v + self.c
            sech2 = 1 - np.tanh(z) ** 2
            jac += np.einsum("nf,fk,fj->nkj", sech2, th[: self.n_features], self.W)
        if self.include_linear:
            jac += th[self.n_features :].T[None]
        return jac

    # -- regularity constants ------------------------------------------------

    def constants(self, theta):
        """K1..K4 and K_Total for ``theta`` (alpha = 1, t in [0, T]).

        K1: time-Lipschitz factor, ``|d s/dt| <= (|v|/T) |theta|``.
        K2: parameter-Lipschitz factor of the tanh block, ``sqrt(F)``.  The
            linear block adds ``|x|``, so K2 holds on bounded x only.
        K3: x-Lipschitz constant at this theta.
        K4: Lipschitz constant of each gradient row.
        """
        th = self.theta_matrix(theta)
        F = self.n_features
        th_t, th_l = th[:F], th[F:]
        K1 = float(np.linalg.norm(self.v) / self.T) if F else 0.0
        K2 = math.sqrt(F)
        K3 = (float(np.linalg.norm(th_t, 2) * np.linalg.norm(self.W, 2)) if F else 0.0) + (
            float(np.linalg.norm(th_l, 2)) if self.include_linear else 0.0
        )
        w2 = np.einsum("fj,fj->f", self.W, self.W)
        K4 = TANH_CURVATURE * float(np.max(np.abs(th_t).T @ w2)) if F else 0.0
        s000 = float(np.linalg.norm(self.eval(0.0, theta, np.zeros(self.dim))))
        return {
            "K1": K1,
            "K2": K2,
            "K3": K3,
            "K4": K4,
            "K_total": K1 + K2 + K3 + s000,
            "alpha": self.alpha,
            "K2_bounded_x_only": bool(self.include_linear),
        }

    # -- serialisation ---------------------------------------------------------

    def to_json(self, theta, extra=None):
        doc = {
            "schema": SCHEMA,
            "dim": self.dim,
            "n_features": self.n_features,
            "T": self.T,
            "weight_seed": self.weight_seed,
            "include_linear": self.include_linear,
            "x_scale": self.x_scale,
            "t_scale": self.t_scale,
            "bias_scale": self.bias_scale,
            "alpha": self.alpha,
            "W": self.W.tolist(),
            "v": self.v.tolist(),
            "c": self.c.tolist(),
            "theta": self.theta_matrix(theta).tolist(),
            "constants": self.constants(theta),
        }
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise InputError(f"unsupported model schema {doc.get('schema')!r}")
        model = cls(
            dim=doc["dim"],
            n_features=doc["n_features"],
            T=doc["T"],
            weight_seed=doc["weight_seed"],
            include_linear=doc["include_linear"],
            x_scale=doc["x_scale"],
            t_scale=doc["t_scale"],
            bias_scale=doc["bias_scale"],
        )
        W = np.asarray(doc["W"], dtype=float).reshape(model.n_features, model.dim)
        if not (np.array_equal(W, model.W) and np.array_equal(doc["v"], model.v) and np.array_equal(doc["c"], model.c)):
            raise InputError("stored frozen weights do not match the weight seed")
        return model, np.asarray(doc["theta"], dtype=float).ravel()


class ExactScoreModel:
    """Adapter exposing an exact score through the ``eval(t, theta, x)`` interface."""

    def __init__(self, p: Potential):
        self.p = p
        self.dim = p.dim
        self._score = exact_score(p)

    def eval(self, t, theta, x):
        pts, kind = _as_points(x, self.dim)
        return _restore_vector(kind, self._score(t, pts))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    residual: float
    ridge: float
    n_data: int


def regression_data(p: Potential, T, epsilon, n, seed):
    """``t ~ U[eps, T]``, ``x ~ L(X_t)``, target ``grad log p_t(x)``."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(epsilon, T, n)
    x0 = p.sample(n, rng)
    z = rng.standard_normal(x0.shape)
    m = np.exp(-t)[:, None]
    x = m * x0 + np.sqrt(-np.expm1(-2 * t))[:, None] * z
    return t, x, exact_score_at_times(p, t, x)


def _canonical_order(t, x):
    """Lexicographic order on (t, x): makes the accumulated sums permutation-invariant."""
    keys = [x[:, j] for j in range(x.shape[1] - 1, -1, -1)] + [t]
    return np.lexsort(keys)


def _normal_equations(model, t, x, y, sort=True):
    if sort:
        order = _canonical_order(t, x)
        t, x, y = t[order], x[order], y[order]
    k = model.n_rows
    G = np.zeros((k, k))
    b = np.zeros((k, model.dim))
    yy = 0.0
    for s in range(0, len(t), _CHUNK):
        phi = model.features(t[s : s + _CHUNK], x[s : s + _CHUNK])
        G += phi.T @ phi
        b += phi.T @ y[s : s + _CHUNK]
        yy += float(np.sum(y[s : s + _CHUNK] ** 2))
    return G, b, yy


def solve_ridge(G, b, ridge=RIDGE):
    """Jacobi-scaled ridge solve; ``ridge`` is relative to the unit diagonal."""
    scale = np.sqrt(np.clip(np.diag(G), 1e-300, None))
    Gs = G / np.outer(scale, scale)
    Gs[np.diag_indices_from(Gs)] += ridge
    sol = linalg.solve(Gs, b / scale[:, None], assume_a="pos")
    return sol / scale[:, None]


def fit(model: ScoreModel, p: Potential, T, epsilon, n_data, seed, ridge=RIDGE) -> FitResult:
    """Least-squares fit of ``model`` to the exact score; ``residual`` is the mean squared error."""
    if p.dim != model.dim:
        raise InputError("model and potential dimensions differ")
    t, x, y = regression_data(p, T, epsilon, n_data, seed)
    return fit_arrays(model, t, x, y, ridge)


def fit_arrays(model: ScoreModel, t, x, y, ridge=RIDGE) -> FitResult:
    G, b, _ = _normal_equations(model, t, x, y)
    theta = solve_ridge(G, b, ridge)
    resid = model.features(t, x) @ theta - y
    return FitResult(theta.ravel(), float(np.mean(np.sum(resid**2, axis=1))), ridge, len(t))


def theta_star(model: ScoreModel, p: Potential, T, epsilon, n_points=1_000_000, seed=987_654, ridge=RIDGE):
    """Large-sample ridge solution used as the population minimiser."""
    G = np.zeros((model.n_rows, model.n_rows))
    b = np.zeros((model.n_rows, model.dim))
    for k, s in enumerate(range(0, n_points, 200_000)):
        m = min(200_000, n_points - s)
        t, x, y = regression_data(p, T, epsilon, m, [seed, k])
        Gk, bk, _ = _normal_equations(model, t, x, y, sort=False)
        G += Gk
        b += bk
    return solve_ridge(G, b, ridge).ravel()


@dataclass(frozen=True)
class EstimatorSpread:
    theta_star: np.ndarray
    eps_al: float
    theta_sq_mean: float
    theta_fourth: float
    n_seeds: int


def estimator_spread(model, p, T, epsilon, n_data, seeds=range(20), theta_ref=None, **kw):
    """``E|theta_hat - theta*|^2`` and ``E|theta_hat|^4`` over refits with different data seeds."""
    ts = theta_star(model, p, T, epsilon, **kw) if theta_ref is None else np.asarray(theta_ref)
    fits = np.array([fit(model, p, T, epsilon, n_data, s).theta for s in seeds])
    sq = np.sum((fits - ts) ** 2, axis=1)
    norms2 = np.sum(fits**2, axis=1)
    return EstimatorSpread(ts, float(sq.mean()), float(norms2.mean()), float(np.mean(norms2**2)), len(fits))


# ---------------------------------------------------------------------------
# Score error along the auxiliary process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreErrorEstimate:
    value: float
    stderr: float
    n_traj: int


def epsilon_sn_estimate(model, theta_hat, p: Potential, cfg: SamplerConfig, n_traj=None) -> ScoreErrorEstimate:
    """Monte-Carlo estimate of ``E ∫_0^{T-eps} |grad log p_{T-r}(Y_r) - s(T-r, theta_hat, Y_r)|^2 dr``.

    The integral is a left Riemann sum on the sampler grid ``t_j = j gamma``
    along trajectories of the auxiliary scheme driven by ``theta_hat``.
    """
    if n_traj is not None:
        cfg = SamplerConfig(cfg.T, cfg.epsilon, cfg.gamma, int(n_traj), cfg.seed, cfg.dim)
    oracle = exact_score(p)
    acc = np.zeros(cfg.n)

    def on_step(j, t_j, start, y):
        if j == cfg.J:
            return
        t = cfg.T - t_j
        diff = oracle(t, y) - model.eval(t, theta_hat, y)
        acc[start : start + len(y)] += cfg.gamma * np.sum(diff**2, axis=1)

    simulate_aux(model, theta_hat, cfg, callback=on_step)
    se = float(acc.std(ddof=1) / math.sqrt(cfg.n)) if cfg.n > 1 else float("nan")
    return ScoreErrorEstimate(float(acc.mean()), se, cfg.n)


def score_model_from_exact(p: Potential):
    """Exact score wrapper plus a placeholder theta (ignored by ``eval``)."""
    return ExactScoreModel(p), np.zeros(0)


__all__ = [
    "ScoreModel",
    "ExactScoreModel",
    "FitResult",
    "fit",
    "fit_arrays",
    "theta_star",
    "estimator_spread",
    "epsilon_sn_estimate",
    "regression_data",
]
