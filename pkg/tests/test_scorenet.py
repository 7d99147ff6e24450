import json

import numpy as np
import pytest

from sgm_semiconvex.errors import InputError
from sgm_semiconvex.potentials import GaussianMixture
from sgm_semiconvex.sampler import SamplerConfig
from sgm_semiconvex.scorenet import (
    ScoreModel,
    epsilon_sn_estimate,
    fit,
    fit_arrays,
    regression_data,
    score_model_from_exact,
)

T, EPS = 8.0, 0.01


@pytest.fixture(scope="module")
def fitted(request):
    from sgm_semiconvex.experiments import benchmark_potential

    p = benchmark_potential()
    model = ScoreModel(dim=1, n_features=32, T=T)
    return p, model, fit(model, p, T, EPS, 20_000, 0)


def test_zero_theta_gives_zero():
    m = ScoreModel(dim=2, n_features=8, T=T)
    x = np.random.default_rng(0).normal(size=(10, 2))
    assert np.all(m.eval(1.0, np.zeros(m.M), x) == 0)


def test_regularity_constants_hold(fitted):
    p, model, res = fitted
    th = res.theta
    c = model.constants(th)
    rng = np.random.default_rng(1)
    n = 20_000
    t = rng.uniform(0, T, n)
    x = rng.normal(scale=5, size=(n, 1))
    y = rng.normal(scale=5, size=(n, 1))
    sx = np.stack([model.eval(ti, th, xi) for ti, xi in zip(t[:500], x[:500])])
    sy = np.stack([model.eval(ti, th, yi) for ti, yi in zip(t[:500], y[:500])])
    assert np.all(np.linalg.norm(sx - sy, axis=1) <= c["K3"] * np.linalg.norm(x[:500] - y[:500], axis=1) + 1e-12)
    # time Lipschitz: |s(t) - s(t')| <= K1 |theta| |t - t'|
    t2 = rng.uniform(0, T, 500)
    s1 = np.stack([model.eval(a, th, xi) for a, xi in zip(t[:500], x[:500])])
    s2 = np.stack([model.eval(b, th, xi) for b, xi in zip(t2, x[:500])])
    lhs = np.linalg.norm(s1 - s2, axis=1)
    assert np.all(lhs <= c["K1"] * np.linalg.norm(th) * np.abs(t[:500] - t2) + 1e-12)
    # gradient rows Lipschitz with K4
    gx = model.grad_x(0.7, th, x[:2000])[:, 0, :]
    gy = model.grad_x(0.7, th, y[:2000])[:, 0, :]
    assert np.all(np.linalg.norm(gx - gy, axis=1) <= c["K4"] * np.linalg.norm(x[:2000] - y[:2000], axis=1) + 1e-12)


def test_growth_bound_random_theta():
    model = ScoreModel(dim=2, n_features=16, T=T)
    rng = np.random.default_rng(2)
    for _ in range(50):
        th = rng.normal(scale=rng.uniform(0.1, 10), size=model.M)
        c = model.constants(th)
        x = rng.normal(scale=3, size=(2000, 2))
        t = rng.uniform(0, T)
        s = np.linalg.norm(model.eval(t, th, x), axis=1)
        bound = c["K_total"] * (1 + t) * (1 + np.linalg.norm(th) + np.linalg.norm(x, axis=1))
        assert np.all(s <= bound)


def test_single_gaussian_exact_fit():
    p = GaussianMixture(weights=[1.0], means=[[0.0]], stds=[1.0])
    model = ScoreModel(dim=1, n_features=8, T=T)
    res = fit(model, p, T, EPS, 5000, 3)
    assert res.residual < 1e-10
    assert res.theta[-1] == pytest.approx(-1.0, abs=1e-6)


def test_fit_deterministic_and_permutation_invariant(mix):
    model = ScoreModel(dim=1, n_features=16, T=T)
    a = fit(model, mix, T, EPS, 4000, 7)
    b = fit(model, mix, T, EPS, 4000, 7)
    assert np.array_equal(a.theta, b.theta)
    t, x, y = regression_data(mix, T, EPS, 4000, 7)
    perm = np.random.default_rng(0).permutation(len(t))
    c = fit_arrays(model, t[perm], x[perm], y[perm])
    assert np.array_equal(a.theta, c.theta)


def test_residual_decreases_with_features(mix):
    res = [fit(ScoreModel(dim=1, n_features=F, T=T), mix, T, EPS, 50_000, 0).residual for F in (32, 64, 128, 256)]
    assert all(a > b for a, b in zip(res, res[1:]))


def test_json_roundtrip(fitted):
    _, model, res = fitted
    text = model.to_json(res.theta, {"note": 1})
    m2, th2 = ScoreModel.from_json(text)
    x = np.linspace(-3, 3, 9)[:, None]
    np.testing.assert_array_equal(m2.eval(1.3, th2, x), model.eval(1.3, res.theta, x))
    doc = json.loads(text)
    doc["W"][0][0] += 1
    with pytest.raises(InputError):
        ScoreModel.from_json(json.dumps(doc))


def test_eps_sn_exact_wrapper_is_zero(mix):
    model, th = score_model_from_exact(mix)
    est = epsilon_sn_estimate(model, th, mix, SamplerConfig(T, EPS, 0.05, n=200, seed=0))
    assert est.value < 1e-10


class _ShiftedExact:
    """Exact score minus 0.1 x: a light-tailed score error for the CLT check."""

    def __init__(self, p):
        self.inner, _ = score_model_from_exact(p)
        self.dim = p.dim

    def eval(self, t, theta, x):
        return self.inner.eval(t, theta, x) - 0.1 * np.asarray(x)


def test_eps_sn_stderr_clt_scaling(mix):
    model = _ShiftedExact(mix)
    cfg = SamplerConfig(T, EPS, 0.02, n=1, seed=3)
    a = epsilon_sn_estimate(model, None, mix, cfg, n_traj=1000)
    b = epsilon_sn_estimate(model, None, mix, cfg, n_traj=4000)
    # four times the trajectories halves the standard error
    assert b.stderr / a.stderr == pytest.approx(0.5, rel=0.3)


def test_eps_sn_consistent_with_fit_residual(fitted):
    p, model, res = fitted
    est = epsilon_sn_estimate(model, res.theta, p, SamplerConfig(T, EPS, 0.02, n=2000, seed=3))
    # time-integrated error against the per-time residual over [eps, T]
    ratio = est.value / (res.residual * (T - EPS))
    assert 0.2 <= ratio <= 5
