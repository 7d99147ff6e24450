import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgm_semiconvex.errors import DivergedTrajectoryError, InputError
from sgm_semiconvex.forward import exact_score
from sgm_semiconvex.sampler import BLOCK, SamplerConfig, backward_em, block_normals, coupled_em, step_count, time_grid


def neg_identity(t, x):
    return -x


def test_step_count_examples():
    assert step_count(1.0, 0.1, 0.3) == 3
    assert step_count(10.0, 0.01, 0.001) == 9990
    assert step_count(1.0, 0.1, 0.4) == 2
    cfg = SamplerConfig(1.0, 0.1, 0.4)
    assert cfg.terminal_time == pytest.approx(0.8)
    np.testing.assert_allclose(time_grid(cfg), [0.0, 0.4, 0.8])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 20), st.floats(1e-3, 0.4), st.floats(1e-3, 0.9))
def test_step_count_floor(T, eps, gamma):
    if eps >= T:
        return
    J = step_count(T, eps, gamma)
    assert J * gamma <= (T - eps) * (1 + 1e-9)
    assert (J + 1) * gamma > (T - eps) * (1 - 1e-9)


def test_config_validation():
    for bad in [(0.0, 0.1, 0.1), (1.0, 0.0, 0.1), (1.0, 0.1, 1.0), (0.05, 0.1, 0.01)]:
        with pytest.raises(InputError):
            SamplerConfig(*bad)


def test_reproducible_and_prefix_stable():
    cfg = SamplerConfig(2.0, 0.1, 0.05, n=300, seed=9)
    a = backward_em(neg_identity, cfg)
    b = backward_em(neg_identity, cfg)
    assert np.array_equal(a, b)
    c = backward_em(neg_identity, SamplerConfig(2.0, 0.1, 0.05, n=120, seed=9))
    assert np.array_equal(a[:120], c)
    d = backward_em(neg_identity, SamplerConfig(2.0, 0.1, 0.05, n=300, seed=10))
    assert not np.array_equal(a, d)


def test_block_normals_prefix():
    big = block_normals(3, 1, 4, BLOCK, 2)
    assert np.array_equal(block_normals(3, 1, 4, 10, 2), big[:10])


def test_multi_block_matches_rows():
    n = BLOCK + 50
    y = backward_em(neg_identity, SamplerConfig(0.3, 0.1, 0.1, n=n, seed=1))
    head = backward_em(neg_identity, SamplerConfig(0.3, 0.1, 0.1, n=BLOCK, seed=1))
    assert np.array_equal(y[:BLOCK], head)


def test_gaussian_stationary_variance():
    # with score -x the recursion is y(1 - g) + sqrt(2 g) z, stationary variance 2/(2 - g)
    g = 0.1
    y = backward_em(neg_identity, SamplerConfig(20.0, 0.01, g, n=100_000, seed=2))
    assert y.var() == pytest.approx(2 / (2 - g), rel=0.02)


def test_callback_sequence():
    seen = []
    cfg = SamplerConfig(1.0, 0.1, 0.3, n=5)
    backward_em(neg_identity, cfg, callback=lambda j, t, s, y: seen.append((j, round(t, 12), s, y.shape)))
    assert [s[0] for s in seen] == [0, 1, 2, 3]
    assert seen[-1][1] == pytest.approx(0.9)


def test_divergence_masks_and_raises():
    def bad(t, x):
        out = -x.copy()
        out[0] = 1e3 * x[0]
        return out

    cfg = SamplerConfig(3.0, 0.1, 0.1, n=4, seed=0)
    y = backward_em(bad, cfg, on_diverge="mask")
    assert np.isnan(y[0]).all() and np.isfinite(y[1:]).all()
    with pytest.raises(DivergedTrajectoryError) as ei:
        backward_em(bad, cfg)
    assert ei.value.indices == [0]
    assert np.isfinite(ei.value.states[1:]).all()


def test_coupled_level_equals_plain_run(mix):
    s = exact_score(mix)
    lv = coupled_em(s, 2.0, 0.01, [0.01], 0.01, 500, seed=4)[0]
    plain = backward_em(s, SamplerConfig(2.0, 0.01, 0.01, n=500, seed=4))
    np.testing.assert_array_equal(lv.coarse, plain)
    np.testing.assert_array_equal(lv.reference, plain)


def test_coupled_error_shrinks(mix):
    s = exact_score(mix)
    levels = coupled_em(s, 4.0, 0.01, [0.04, 0.02, 0.01], 0.0025, 2000, seed=5)
    errs = [np.sqrt(np.mean((lv.coarse - lv.reference) ** 2)) for lv in levels]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(InputError):
        coupled_em(s, 4.0, 0.01, [0.03], 0.02, 10)
