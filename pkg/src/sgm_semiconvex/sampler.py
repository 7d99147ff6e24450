"""Backward Euler-Maruyama sampler with early stopping.

    Y_{j+1} = Y_j + gamma (Y_j + 2 s(T - t_j, Y_j)) + sqrt(2 gamma) Z_{j+1},   Y_0 ~ N(0, I_d)

Gaussian increments come from a counter-based generator: trajectories are
grouped in fixed blocks of ``BLOCK`` rows, and the normals of block ``b`` at
step ``j`` are drawn from ``Philox(key=(seed, b), counter=(0, 0, j, 0))``.
Step 0 holds the initial state.  A trajectory's path therefore depends only
on ``(seed, index)``, never on ``n`` or on the order blocks are processed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergedTrajectoryError, InputError

BLOCK = 8192
DIVERGENCE_LIMIT = 1e8
_STEP_TOL = 1e-9


def step_count(T, epsilon, gamma):
    """``floor((T - epsilon) / gamma)``, robust to representation error (0.9/0.3 -> 3)."""
    q = (T - epsilon) / gamma
    j = round(q)
    if abs(q - j) <= _STEP_TOL * max(1.0, q):
        return int(j)
    return int(math.floor(q))


@dataclass(frozen=True)
class SamplerConfig:
    T: float
    epsilon: float
    gamma: float
    n: int = 1
    seed: int = 0
    dim: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise InputError(f"T must be positive, got {self.T}")
        if not 0 < self.epsilon < 1 or not self.epsilon < self.T:
            raise InputError(f"need 0 < epsilon < min(1, T), got epsilon={self.epsilon}")
        if not 0 < self.gamma < 1:
            raise InputError(f"need 0 < gamma < 1, got {self.gamma}")
        if int(self.n) < 1 or int(self.dim) < 1:
            raise InputError("n and dim must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must fit in an unsigned 64-bit integer")

    @property
    def J(self):
        return step_count(self.T, self.epsilon, self.gamma)

    @property
    def terminal_time(self):
        return self.J * self.gamma

    def to_config(self):
        return {"T": self.T, "epsilon": self.epsilon, "gamma": self.gamma, "n": self.n, "seed": self.seed, "dim": self.dim}


def time_grid(cfg: SamplerConfig):
    """Grid points ``t_j = j gamma`` for ``j = 0..J``."""
    return np.arange(cfg.J + 1) * cfg.gamma


def block_normals(seed, block, step, rows, dim):
    """Standard normals for ``rows`` trajectories of ``block`` at ``step``."""
    bitgen = np.random.Philox(key=np.array([seed, block], dtype=np.uint64), counter=np.array([0, 0, step, 0], dtype=np.uint64))
    return np.random.Generator(bitgen).standard_normal((rows, dim))


def _blocks(n):
    for b, start in enumerate(range(0, n, BLOCK)):
        yield b, start, min(start + BLOCK, n)


class _DivergenceTracker:
    def __init__(self):
        self.indices = []
        self.first_step = None

    def check(self, y, alive, start, step):
        bad = alive & ~(np.all(np.abs(y) <= DIVERGENCE_LIMIT, axis=1))
        if bad.any():
            self.indices.extend((start + np.flatnonzero(bad)).tolist())
            if self.first_step is None:
                self.first_step = step
            alive &= ~bad
            y[bad] = np.nan
        return alive

    def finish(self, out, on_diverge):
        if self.indices and on_diverge == "raise":
            err = DivergedTrajectoryError(
                f"{len(self.indices)} trajectories diverged (first at step {self.first_step})",
                self.first_step,
                sorted(self.indices),
            )
            err.states = out
            raise err
        return out


def backward_em(score, cfg: SamplerConfig, callback=None, on_diverge="raise"):
    """Run the scheme for ``J`` steps and return the ``(n, d)`` terminal states at ``t_J``.

    ``score(t, x)`` maps a time and an ``(m, d)`` batch to an ``(m, d)`` batch.
    ``callback(j, t_j, start, y)`` is called before every step and once at the
    end (``j = J``) with the block's states; it must not modify ``y``.

    A trajectory whose state leaves ``[-1e8, 1e8]^d`` is frozen at NaN while the
    rest of the batch continues.  With ``on_diverge="raise"`` a
    :class:`DivergedTrajectoryError` (carrying ``.states``) is raised at the end;
    with ``"mask"`` the NaN rows are returned.
    """
    if on_diverge not in ("raise", "mask"):
        raise InputError("on_diverge must be 'raise' or 'mask'")
    J, g, T, d = cfg.J, cfg.gamma, cfg.T, cfg.dim
    out = np.empty((cfg.n, d))
    noise = math.sqrt(2 * g)
    tracker = _DivergenceTracker()
    for b, start, stop in _blocks(cfg.n):
        rows = stop - start
        y = block_normals(cfg.seed, b, 0, rows, d)
        alive = np.ones(rows, dtype=bool)
        for j in range(J):
            if callback is not None:
                callback(j, j * g, start, y)
            z = block_normals(cfg.seed, b, j + 1, rows, d)
            with np.errstate(over="ignore", invalid="ignore"):
                y = y + g * (y + 2 * score(T - j * g, y)) + noise * z
            alive = tracker.check(y, alive, start, j + 1)
        if callback is not None:
            callback(J, J * g, start, y)
        out[start:stop] = y
    return tracker.finish(out, on_diverge)


def simulate_aux(model, theta, cfg: SamplerConfig, callback=None, on_diverge="raise"):
    """The same recursion driven by ``s(t, theta, x)`` of a score model."""
    return backward_em(lambda t, x: model.eval(t, theta, x), cfg, callback=callback, on_diverge=on_diverge)


@dataclass(frozen=True)
class CoupledLevel:
    gamma: float
    J: int
    terminal_time: float
    coarse: np.ndarray
    reference: np.ndarray


def coupled_em(score, T, epsilon, gammas, gamma_ref, n, seed=0, dim=1):
    """Several step sizes and a fine reference driven by one Brownian path.

    Every ``gamma`` must be an integer multiple of ``gamma_ref``.  Normals are
    drawn on the fine grid; a coarse step of ratio ``r`` uses the sum of its
    ``r`` fine normals divided by ``sqrt(r)``.  For each level the reference
    state is recorded at the level's own terminal time ``J gamma``, so the pair
    differs only through discretization.
    """
    ratios = []
    for g in gammas:
        r = round(g / gamma_ref)
        if r < 1 or abs(r * gamma_ref - g) > 1e-12 * g:
            raise InputError(f"gamma={g} is not a multiple of gamma_ref={gamma_ref}")
        ratios.append(r)
    # validates epsilon/gamma ranges
    SamplerConfig(T, epsilon, gamma_ref, n, seed, dim)
    levels = [SamplerConfig(T, epsilon, g, n, seed, dim) for g in gammas]
    Js = [c.J for c in levels]
    fine_steps = max(J * r for J, r in zip(Js, ratios))
    coarse_out = [np.empty((n, dim)) for _ in gammas]
    ref_out = [np.empty((n, dim)) for _ in gammas]
    for b, start, stop in _blocks(n):
        rows = stop - start
        y0 = block_normals(seed, b, 0, rows, dim)
        y_ref = y0.copy()
        ys = [y0.copy() for _ in gammas]
        acc = [np.zeros((rows, dim)) for _ in gammas]
        for k, (J, r) in enumerate(zip(Js, ratios)):
            if J == 0:
                coarse_out[k][start:stop] = ys[k]
                ref_out[k][start:stop] = y_ref
        for i in range(fine_steps):
            z = block_normals(seed, b, i + 1, rows, dim)
            t_fine = i * gamma_ref
            y_ref = y_ref + gamma_ref * (y_ref + 2 * score(T - t_fine, y_ref)) + math.sqrt(2 * gamma_ref) * z
            for k, (g, J, r) in enumerate(zip(gammas, Js, ratios)):
                if i >= J * r:
                    continue
                acc[k] += z
                if (i + 1) % r == 0:
                    j = i // r
                    y = ys[k]
                    ys[k] = y + g * (y + 2 * score(T - j * g, y)) + math.sqrt(2 * g) * acc[k] / math.sqrt(r)
                    acc[k][:] = 0.0
                if i + 1 == J * r:
                    coarse_out[k][start:stop] = ys[k]
                    ref_out[k][start:stop] = y_ref
    return [
        CoupledLevel(g, J, J * g, c, ref)
        for g, J, c, ref in zip(gammas, Js, coarse_out, ref_out)
    ]
