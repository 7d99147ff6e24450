"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from sgm_semiconvex import bounds as bd
from sgm_semiconvex.assumptions import assumption2_suite
from sgm_semiconvex.convexity import B_integral, beta_os_kmu, t_bar, t_star
from sgm_semiconvex.experiments import (
    BENCH_EPS,
    BENCH_T,
    MODEL_FEATURES,
    asymptotic_dimension_ratio,
    benchmark_bound_inputs,
    benchmark_potential,
    fidelity_run,
    fitted_benchmark,
    rate_study,
)
from sgm_semiconvex.forward import exact_score, mixture_score, ou_coeffs, quadrature_log_density_1d, quadrature_score_1d, sample_forward
from sgm_semiconvex.potentials import (
    DoubleWell,
    ElasticNet,
    MaxNorm,
    MaxNormNonconvex,
    SymmetricModifiedHalfNormal,
    two_mode_mixture,
)
from sgm_semiconvex.scorenet import ScoreModel, fit
from sgm_semiconvex.wasserstein import w2, w2_1d, w2_assignment, w2_gaussian

RESULTS = {}


def report(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    RESULTS[n] = ok
    print(f"\nCRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f}s / limit {limit:g}s]")
    return ok


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    if RESULTS:
        line = " ".join(f"{k}:{'PASS' if v else 'FAIL'}" for k, v in sorted(RESULTS.items()))
        print(f"\nACCEPTANCE SUMMARY  {sum(RESULTS.values())}/{len(RESULTS)} passed  {line}")


@pytest.fixture(scope="module")
def bench():
    return fitted_benchmark()


def random_params(rng, n):
    mu = rng.uniform(1e-3, 2, n)
    mu[mu <= 1e-3] = 2e-3
    return mu, rng.uniform(0, 5, n)


def test_criterion_01_critical_times():
    t0 = time.perf_counter()
    eta, s2 = Fraction(2), Fraction(9)
    K_exact = 2 * eta**2 / s2**2
    mu_exact = (s2 - 2 * eta**2) / s2**2
    sc = benchmark_potential().semiconvexity()
    rational = K_exact == Fraction(8, 81) and mu_exact == Fraction(1, 81)
    floats = sc.K == float(K_exact) and sc.mu == float(mu_exact)
    tb = t_bar(sc.mu, sc.K)
    ts = t_star(sc.mu, sc.K)
    bracket = B_integral(ts - 1e-6, sc.mu, sc.K) < 0 < B_integral(ts + 1e-6, sc.mu, sc.K)
    el = time.perf_counter() - t0
    ok = rational and floats and abs(tb - 3.2377) <= 5e-4 and ts > tb and bracket
    assert report(1, ok, f"K=8/81 mu=1/81 t_bar={tb:.7f} t_star={ts:.7f} bracket={bracket}", el, 1.0)


def test_criterion_02_closed_form_integral():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    ts = rng.uniform(0, 20, 200)
    ts[ts == 0] = 1e-3
    mus, Ks = random_params(rng, 200)
    worst = 0.0
    for t, mu, K in zip(ts, mus, Ks):
        pts = [x for x in (t_bar(mu, K),) if 0 < x < t]
        q = integrate.quad(lambda s: beta_os_kmu(s, mu, K), 0, t, epsabs=1e-13, epsrel=1e-13, limit=400, points=pts or None)[0]
        worst = max(worst, abs(q - B_integral(t, mu, K)))
    el = time.perf_counter() - t0
    assert report(2, worst <= 1e-8, f"max |B - quad| = {worst:.2e} over 200 draws (tol 1e-8)", el, 5.0)


def test_criterion_03_limit_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    mus, Ks = random_params(rng, 100)
    e0 = max(abs(beta_os_kmu(0.0, mu, K) + K) for mu, K in zip(mus, Ks))
    e50 = max(abs(beta_os_kmu(50.0, mu, K) - 1) for mu, K in zip(mus, Ks))
    el = time.perf_counter() - t0
    ok = e0 <= 1e-12 and e50 <= 1e-10
    assert report(3, ok, f"max |beta(0)+K| = {e0:.1e}, max |beta(50)-1| = {e50:.1e}", el, 1.0)


def displayed_two_mode_score(t, x):
    m = math.exp(-t)
    s2 = -math.expm1(-2 * t)
    v = 9 * m * m + s2
    e1 = np.exp(-((x - 2 * m) ** 2) / (2 * v))
    e2 = np.exp(-((x + 2 * m) ** 2) / (2 * v))
    return -x / v + (2 * m / v) * (e1 - e2) / (e1 + e2)


def test_criterion_04_score_formula():
    t0 = time.perf_counter()
    p = benchmark_potential()
    ts = np.linspace(0.01, 10, 100)
    xs = np.linspace(-8, 8, 100)
    closed = 0.0
    quad = 0.0
    fd = 0.0
    h = 1e-5
    for k, t in enumerate(ts):
        s = mixture_score(p, t, xs[:, None])[:, 0]
        closed = max(closed, float(np.max(np.abs(s - displayed_two_mode_score(t, xs)))))
        quad = max(quad, float(np.max(np.abs(s - quadrature_score_1d(p, t, xs)))))
        if k % 10 == 0:
            d = (quadrature_log_density_1d(p, t, xs + h) - quadrature_log_density_1d(p, t, xs - h)) / (2 * h)
            fd = max(fd, float(np.max(np.abs(s - d))))
    el = time.perf_counter() - t0
    ok = closed <= 1e-12 and quad <= 1e-5 and fd <= 1e-5
    assert report(4, ok, f"vs displayed formula {closed:.1e} (tol 1e-12); vs quadrature {quad:.1e}, vs FD {fd:.1e} (tol 1e-5)", el, 30.0)


def test_criterion_05_one_sided_monotonicity():
    t0 = time.perf_counter()
    p = benchmark_potential()
    sc = p.semiconvexity()
    score = exact_score(p)
    rng = np.random.default_rng(5)
    worst = -np.inf
    n = 100_000
    for t in (0.1, 1.0, t_bar(sc.mu, sc.K), 5.0):
        x = sample_forward(p, t, n, rng)
        # half the pairs at random separations from a forward sample, half uniform on a box
        dx = rng.uniform(1e-3, 8, (n // 2, 1)) * rng.choice([-1, 1], (n // 2, 1))
        y = np.concatenate([x[: n // 2] + dx, rng.uniform(-15, 15, (n - n // 2, 1))])
        ds = score(t, x) - score(t, y)
        dxx = x - y
        lhs = np.sum(ds * dxx, axis=1)
        rhs = -beta_os_kmu(t, sc.mu, sc.K) * np.sum(dxx**2, axis=1)
        worst = max(worst, float(np.max(lhs - rhs)))
    el = time.perf_counter() - t0
    assert report(5, worst <= 1e-9, f"max(<ds,dx> + beta |dx|^2) = {worst:.2e} over 4 x 1e5 pairs", el, 30.0)


def test_criterion_06_assumption_suite():
    t0 = time.perf_counter()
    families = [
        two_mode_mixture(),
        SymmetricModifiedHalfNormal(1.0),
        DoubleWell(1),
        DoubleWell(2),
        ElasticNet(1),
        ElasticNet(2),
        MaxNorm(1),
        MaxNorm(2),
        MaxNormNonconvex(1),
        MaxNormNonconvex(2),
    ]
    failed = []
    for p in families:
        for c in assumption2_suite(p, n_pairs=10_000, seed=0):
            if c.name in ("semiconvex_inside_R", "convex_outside_R", "global_minus_K") and not c.passed:
                failed.append((p.family, p.dim, c.name, c.worst))
    el = time.perf_counter() - t0
    assert report(6, not failed, f"{len(families)} families x 3 properties x 1e4 pairs; failures: {failed or 'none'}", el, 30.0)


def test_criterion_07_generative_fidelity():
    t0 = time.perf_counter()
    r = fidelity_run(T=8.0, epsilon=1e-2, gamma=1e-3, n=100_000, seed=0)
    el = time.perf_counter() - t0
    bound = r.bound["total"]
    ok = r.w2_corrected <= 0.05 and r.w2_raw <= bound
    sat = f" (saturated terms: {r.bound['saturated']})" if r.bound["saturated"] else ""
    detail = f"W2 raw {r.w2_raw:.4f}, same-law baseline {r.baseline:.4f}, corrected {r.w2_corrected:.4f} (<= 0.05); bound {bound:.3g}{sat}"
    assert report(7, ok, detail, el, 300.0)


def test_criterion_08_rate():
    t0 = time.perf_counter()
    p = benchmark_potential()
    exact = rate_study(exact_score(p), p, n=100_000, replicates=5, seed=0)
    model = ScoreModel(dim=1, n_features=MODEL_FEATURES, T=BENCH_T)
    res = fit(model, p, BENCH_T, BENCH_EPS, 50_000, 0)
    fitted = rate_study(lambda t, x: model.eval(t, res.theta, x), p, n=5_000, replicates=5, seed=100)
    el = time.perf_counter() - t0
    ok = exact.slope >= 0.35 and fitted.slope >= exact.slope - 0.1
    detail = (
        f"exact-score slope {exact.slope:.3f} +- {exact.slope_stderr:.3f} (>= 0.35); "
        f"fitted-model slope {fitted.slope:.3f} +- {fitted.slope_stderr:.3f} (>= {exact.slope - 0.1:.3f}); "
        f"target-marginal slopes {exact.slope_target:.3f} / {fitted.slope_target:.3f}"
    )
    assert report(8, ok, detail, el, 1200.0)


def test_criterion_09_w2_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(50):
        a = rng.normal(rng.uniform(-3, 3), rng.uniform(0.2, 3), 512)
        b = rng.standard_t(rng.uniform(2, 10), 512) * rng.uniform(0.2, 3)
        worst = max(worst, abs(w2_assignment(a, b).value - w2_1d(a, b).value))
    gauss = []
    for d in (1, 2, 4):
        m1, m2 = np.zeros(d), np.full(d, 6.0 / math.sqrt(d))
        s1, s2 = 1.0, 1.5
        a = m1 + s1 * rng.standard_normal((512, d))
        b = m2 + s2 * rng.standard_normal((512, d))
        rep = w2(a, b, n_boot=100, seed=d)
        exact = w2_gaussian(m1, s1, m2, s2)
        gauss.append((d, rep.value, exact, rep.stderr, abs(rep.value - exact) <= 2 * rep.stderr))
    el = time.perf_counter() - t0
    ok = worst <= 1e-10 and all(g[-1] for g in gauss)
    gtxt = "; ".join(f"d={d}: {v:.4f} vs {e:.4f} (2se {2 * s:.4f})" for d, v, e, s, _ in gauss)
    assert report(9, ok, f"assignment vs quantile max diff {worst:.1e}; {gtxt}", el, 120.0)


def test_criterion_10_threshold_consistency(bench):
    t0 = time.perf_counter()
    base = benchmark_bound_inputs(bench)
    out = []
    for delta in (0.5, 0.2):
        b, th = bd.threshold_schedule(base, delta)
        out.append((delta, bd.theorem_312_rhs(b).total, th.T_delta, th.log_gamma_delta))
    el = time.perf_counter() - t0
    ok = all(total < delta for delta, total, _, _ in out)
    txt = "; ".join(f"delta={d}: total {tot:.4f}, T_delta {T:.3f}, log gamma_delta {lg:.4g}" for d, tot, T, lg in out)
    assert report(10, ok, txt, el, 5.0)


def test_criterion_11_dimension_scaling(bench):
    t0 = time.perf_counter()
    base = benchmark_bound_inputs(bench)
    r1, d1, _ = asymptotic_dimension_ratio(base, lambda b: math.log(bd.c1(b)), 2.0, 0.01)
    r2, d2, _ = asymptotic_dimension_ratio(base, lambda b: math.log(bd.c2(b)), 2.0, 0.01)
    r4, d4, _ = asymptotic_dimension_ratio(base, bd.log_c4_tilde, 4.0, 0.5)
    el = time.perf_counter() - t0
    ok = abs(r1 - 2) <= 0.01 and abs(r2 - 2) <= 0.01 and abs(r4 - 4) <= 0.5
    detail = f"C1 ratio {r1:.4f} (d={d1}), C2 ratio {r2:.4f} (d={d2}), C4_tilde ratio {r4:.4f} (d={d4:.3g})"
    assert report(11, ok, detail, el, 1.0)
