"""Benchmark configurations and the end-to-end runs built on them.

The benchmark target is the one-dimensional equal-weight mixture with modes
at ±2 and variance 9 (K = 8/81, mu = 1/81).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import bounds as bd
from .forward import exact_score, ou_coeffs
from .potentials import GaussianMixture, Potential, two_mode_mixture
from .sampler import SamplerConfig, backward_em, coupled_em
from .scorenet import TANH_CURVATURE, ScoreModel, estimator_spread, fit
from .wasserstein import w2_1d

BENCH_T = 8.0
BENCH_EPS = 1e-2
RATE_GAMMAS = (0.02, 0.01, 0.005, 0.0025)
RATE_GAMMA_REF = 0.000625
MODEL_FEATURES = 32
MODEL_NDATA = 50_000


def benchmark_potential() -> GaussianMixture:
    return two_mode_mixture(eta=2.0, s2=9.0, dim=1)


# ---------------------------------------------------------------------------
# Constants of an exact mixture score (used when the sampler runs on it)
# ---------------------------------------------------------------------------


def exact_mixture_constants(p: GaussianMixture, T, x_max, n_t=801, n_x=801):
    """Regularity constants of the exact two-mode score on ``|x| <= x_max``.

    The exact score has no parameters, so K2 = 0 and theta* = 0.  K3 and K4
    are global; K1 (time-Lipschitz) grows with |x| and is measured on a grid
    over ``[0, T] x [-x_max, x_max]`` by finite differences.
    """
    eta = p.two_mode_half_distance()
    s2 = float(p.stds[0] ** 2)
    t = np.linspace(0.0, T, n_t)
    m = np.exp(-t)
    v = m**2 * s2 - np.expm1(-2 * t)
    a = m * eta / v
    # d/dx score = -1/v + a^2 sech^2  in [-1/v, -1/v + a^2]
    K3 = float(np.max(np.maximum(1 / v, np.abs(a**2 - 1 / v))))
    K4 = TANH_CURVATURE * float(np.max(a**3))
    score = exact_score(p)
    x = np.linspace(-x_max, x_max, n_x)[:, None]
    vals = np.stack([score(ti, x)[:, 0] for ti in t])
    K1 = float(np.max(np.abs(np.diff(vals, axis=0)) / np.diff(t)[:, None]))
    return {"K1": K1, "K2": 0.0, "K3": K3, "K4": K4, "K_total": K1 + K3, "alpha": 1.0, "x_max": x_max}


# ---------------------------------------------------------------------------
# Fitted benchmark model
# ---------------------------------------------------------------------------


@dataclass
class FittedBenchmark:
    model: ScoreModel
    theta: np.ndarray
    residual: float
    constants: dict
    theta_star_sq: float
    eps_al: float
    theta_fourth: float


def fitted_benchmark(
    n_features=MODEL_FEATURES, n_data=MODEL_NDATA, seed=0, n_star=1_000_000, refits=20, p=None
) -> FittedBenchmark:
    p = benchmark_potential() if p is None else p
    model = ScoreModel(dim=p.dim, n_features=n_features, T=BENCH_T)
    res = fit(model, p, BENCH_T, BENCH_EPS, n_data, seed)
    spread = estimator_spread(
        model, p, BENCH_T, BENCH_EPS, n_data, seeds=range(1000, 1000 + refits), n_points=n_star
    )
    return FittedBenchmark(
        model,
        res.theta,
        res.residual,
        model.constants(res.theta),
        float(np.sum(spread.theta_star**2)),
        spread.eps_al,
        spread.theta_fourth,
    )


def bound_inputs_for(
    p: Potential, consts: dict, T, epsilon, gamma, eps_sn=0.0, theta_star_sq=0.0, eps_al=0.0, theta_fourth=None, d=None, second_moment=None
):
    sc = p.semiconvexity()
    return bd.BoundInputs(
        d=p.dim if d is None else d,
        second_moment=p.second_moment() if second_moment is None else second_moment,
        K=sc.K,
        mu=sc.mu,
        T=T,
        epsilon=epsilon,
        gamma=gamma,
        alpha=consts.get("alpha", 1.0),
        K1=consts["K1"],
        K3=consts["K3"],
        K4=consts["K4"],
        K_total=consts["K_total"],
        theta_star_sq=theta_star_sq,
        eps_al=eps_al,
        eps_sn=eps_sn,
        theta_fourth=theta_fourth,
    )


def benchmark_bound_inputs(fb: FittedBenchmark, T=BENCH_T, epsilon=BENCH_EPS, gamma=1e-3, eps_sn=0.0):
    return bound_inputs_for(
        benchmark_potential(), fb.constants, T, epsilon, gamma, eps_sn, fb.theta_star_sq, fb.eps_al, fb.theta_fourth
    )


def dimension_ratio(base: bd.BoundInputs, log_const, d, per_coord_moment=None):
    """``C(4d) / C(d)`` with the second moment scaled linearly in d when ``per_coord_moment`` is set."""

    def at(dd):
        kw = {"d": dd, "ey0_2": None, "ey0_4": None}
        if per_coord_moment is not None:
            kw["second_moment"] = per_coord_moment * dd
        return log_const(replace(base, **kw))

    return math.exp(at(4 * d) - at(d))


def asymptotic_dimension_ratio(base, log_const, target, tol, per_coord_moment=None, d0=1, max_steps=60):
    """Scan ``d = d0 4^k`` until the ratio settles within ``tol`` of ``target``.

    Returns ``(ratio, d, history)``; ``ratio`` is the last value scanned.
    """
    hist = []
    d = d0
    for _ in range(max_steps):
        r = dimension_ratio(base, log_const, d, per_coord_moment)
        hist.append((d, r))
        if abs(r - target) <= tol and len(hist) > 1 and abs(hist[-2][1] - r) < tol:
            return r, d, hist
        d *= 4
    return hist[-1][1], hist[-1][0], hist


# ---------------------------------------------------------------------------
# Generative runs
# ---------------------------------------------------------------------------


@dataclass
class FidelityResult:
    w2_raw: float
    baseline: float
    w2_corrected: float
    n: int
    cfg: dict
    bound: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def fidelity_run(p=None, T=BENCH_T, epsilon=BENCH_EPS, gamma=1e-3, n=100_000, seed=0) -> FidelityResult:
    """Exact-score sampler against fresh target draws, with the same-law baseline and the bound."""
    p = benchmark_potential() if p is None else p
    cfg = SamplerConfig(T, epsilon, gamma, n, seed, p.dim)
    y = backward_em(exact_score(p), cfg)
    ref = p.sample(n, np.random.default_rng([seed, 11]))
    ref2 = p.sample(n, np.random.default_rng([seed, 12]))
    raw = w2_1d(y, ref).value
    base = w2_1d(ref2, ref).value
    consts = exact_mixture_constants(p, T, x_max=float(np.max(np.abs(y))) + 1.0)
    bi = bound_inputs_for(p, consts, T, epsilon, gamma)
    rep = bd.theorem_312_rhs(bi)
    return FidelityResult(raw, base, raw - base, n, cfg.to_config(), rep.to_dict(), consts)


@dataclass
class RateResult:
    gammas: list
    gamma_ref: float
    w2: np.ndarray  # (replicates, levels) discretization W2 against the fine reference
    w2_target: np.ndarray  # (replicates, levels) baseline-corrected W2 against the forward marginal
    slope: float
    slope_stderr: float
    slope_target: float
    n: int

    def to_dict(self):
        d = asdict(self)
        d["w2"] = self.w2.tolist()
        d["w2_target"] = self.w2_target.tolist()
        return d


def loglog_slope(gammas, values):
    """Least-squares slope of log(values) on log(gammas)."""
    lg = np.log(np.asarray(gammas, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(lg, lv, 1)[0])


def _marginal_sampler(p: Potential, t):
    oc = ou_coeffs(t)

    def draw(n, seed):
        rng = np.random.default_rng(seed)
        return oc.m * p.sample(n, rng) + oc.sigma * rng.standard_normal((n, p.dim))

    return draw


def rate_study(score, p=None, gammas=RATE_GAMMAS, gamma_ref=RATE_GAMMA_REF, n=100_000, replicates=5, T=BENCH_T, epsilon=BENCH_EPS, seed=0):
    """Step-size sweep with a common Brownian path per replicate.

    ``w2`` compares each step size with the fine-step reference at the same
    terminal time.  ``w2_target`` compares it with fresh draws of the law the
    exact dynamics would have at that time (the forward marginal at
    ``T - t_J``), minus the same-law baseline at equal n.
    """
    p = benchmark_potential() if p is None else p
    w2 = np.empty((replicates, len(gammas)))
    w2t = np.empty((replicates, len(gammas)))
    for r in range(replicates):
        levels = coupled_em(score, T, epsilon, list(gammas), gamma_ref, n, seed=seed + r, dim=p.dim)
        for k, lv in enumerate(levels):
            w2[r, k] = w2_1d(lv.coarse, lv.reference).value
            draw = _marginal_sampler(p, T - lv.terminal_time)
            a = draw(n, [seed + r, 21, k])
            b = draw(n, [seed + r, 22, k])
            w2t[r, k] = w2_1d(lv.coarse, a).value - w2_1d(b, a).value
    per_rep = [loglog_slope(gammas, w2[r]) for r in range(replicates)]
    se = float(np.std(per_rep, ddof=1) / math.sqrt(replicates)) if replicates > 1 else float("nan")
    mean_t = np.mean(w2t, axis=0)
    slope_t = loglog_slope(gammas, mean_t) if np.all(mean_t > 0) else float("nan")
    return RateResult(list(gammas), gamma_ref, w2, w2t, loglog_slope(gammas, w2.mean(axis=0)), se, slope_t, n)
