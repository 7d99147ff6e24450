"""Command-line entry point.

Exit codes: 0 success, 1 bad input or usage, 2 invariant failure,
3 numerical failure (bracket failure, diverged trajectories, overflow).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bd
from .assumptions import assumption2_suite, empirical_K
from .convexity import beta_os_kmu, mu_tilde, r0_threshold, t_bar, t_star
from .errors import DivergedTrajectoryError, InputError, NumericalError, SGMError
from .experiments import benchmark_potential, bound_inputs_for, exact_mixture_constants, loglog_slope
from .forward import exact_score
from .plotting import line_plot_svg
from .potentials import GaussianMixture, Potential, from_config
from .sampler import SamplerConfig, backward_em
from .scorenet import ScoreModel, estimator_spread, fit
from .wasserstein import METHODS, w2, w2_1d, w2_assignment

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 1, 2, 3
PROFILE_X = (-0.8, 0.5)
PROFILE_N_T = 500
PROFILE_T_MAX = 10.0
PROFILE_TOL = 1e-3


class InvariantFailure(SGMError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# I/O helpers
# ---------------------------------------------------------------------------


def config_hash(command, config, seed):
    blob = json.dumps({"command": command, "config": config, "seed": seed}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _load_json(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read config {path}: {e}") from e


def csv_text(header, rows, chash):
    buf = io.StringIO(newline="")
    buf.write(f"#schema={SCHEMA_VERSION}\r\n#config_hash={chash}\r\n")
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_samples_csv(path):
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    except OSError as e:
        raise InputError(f"cannot read samples {path}: {e}") from e
    if len(lines) < 2:
        raise InputError(f"{path} holds no sample rows")
    try:
        return np.array([[float(v) for v in row] for row in csv.reader(lines[1:])])
    except ValueError as e:
        raise InputError(f"non-numeric entry in {path}: {e}") from e


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, newline="")
    return str(path)


def _strict(o):
    """Non-finite floats become ``null`` (NaN) or the strings ``"inf"``/``"-inf"``."""
    if isinstance(o, dict):
        return {k: _strict(v) for k, v in o.items()}
    if isinstance(o, np.ndarray):
        return _strict(o.tolist())
    if isinstance(o, (list, tuple)):
        return [_strict(v) for v in o]
    if isinstance(o, (float, np.floating)):
        v = float(o)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return o


def _emit_json(doc, out_dir, name):
    text = json.dumps(_strict(doc), indent=1, sort_keys=True, allow_nan=False, default=_json_default) + "\n"
    if out_dir:
        _write(Path(out_dir) / name, text)
    sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _potential(cfg):
    block = cfg.get("potential")
    return benchmark_potential() if block is None else from_config(block)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# Experiment spec
# ---------------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    potential: dict | None = None
    gammas: list = field(default_factory=lambda: [0.02, 0.01, 0.005, 0.0025])
    epsilons: list = field(default_factory=lambda: [0.01])
    Ts: list = field(default_factory=lambda: [8.0])
    score: str = "exact"
    w2_method: str = "auto"
    replicates: int = 1
    n: int = 10_000
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("gammas", "epsilons", "Ts"):
            vals = getattr(self, name)
            if not isinstance(vals, (list, tuple)) or not vals:
                raise InputError(f"{name} must be a non-empty list")
            setattr(self, name, [float(v) for v in vals])
        if int(self.replicates) < 1:
            raise InputError("replicates must be at least 1")
        if int(self.n) < 2:
            raise InputError("n must be at least 2")
        if self.w2_method not in ("auto",) + METHODS[:2]:
            raise InputError(f"w2_method must be auto, {METHODS[0]} or {METHODS[1]}")
        _parse_score_source(self.score)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown spec fields: {sorted(extra)}")
        return cls(**d)

    def grid(self):
        """Grid points in deterministic order (T outermost, gamma innermost)."""
        return [(T, e, g) for T in self.Ts for e in self.epsilons for g in self.gammas]


def _parse_score_source(src):
    if src == "exact":
        return "exact", None
    if isinstance(src, str) and src.startswith("model:") and len(src) > 6:
        return "model", src[6:]
    raise InputError(f"score source must be 'exact' or 'model:<path>', got {src!r}")


def _load_score(src, p: Potential):
    """``(score(t, x), model, theta, model_doc)``."""
    kind, path = _parse_score_source(src)
    if kind == "exact":
        return exact_score(p), None, None, {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read model {path}: {e}") from e
    model, theta = ScoreModel.from_json(text)
    if model.dim != p.dim:
        raise InputError(f"model dimension {model.dim} does not match potential dimension {p.dim}")
    return (lambda t, x: model.eval(t, theta, x)), model, theta, json.loads(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_constants(args, cfg):
    p = _potential(cfg)
    sc = p.semiconvexity()
    L = sc.K + sc.mu
    doc = {
        "family": p.family,
        "dim": p.dim,
        "K": sc.K,
        "mu": sc.mu,
        "R": sc.R,
        "L": L,
        "t_bar": t_bar(sc.mu, sc.K),
        "t_star": t_star(sc.mu, sc.K),
        "R0": r0_threshold(sc.mu, L),
        "mu_tilde": mu_tilde(sc.mu, L, sc.R) if sc.R > 0 else None,
    }
    _emit_json(doc, args.out_dir, "constants.json")
    return EXIT_OK


def _score_at(p: Potential, score, t, x):
    if t == 0 and not isinstance(p, GaussianMixture):
        return -p.grad(x)
    return score(t, x)


def score_profile(p: Potential, n_t=PROFILE_N_T, t_max=PROFILE_T_MAX, xs=PROFILE_X):
    """Rows ``(t, x, score, beta)`` and the critical time for a one-dimensional target."""
    if p.dim != 1:
        raise InputError("score-profile needs a one-dimensional potential")
    sc = p.semiconvexity()
    score = exact_score(p)
    ts = np.linspace(0.0, t_max, n_t)
    beta = beta_os_kmu(ts, sc.mu, sc.K)
    x = np.asarray(xs, dtype=float)[:, None]
    vals = np.stack([_score_at(p, score, float(t), x)[:, 0] for t in ts])
    rows = [(ts[i], xs[k], vals[i, k], beta[i]) for k in range(len(xs)) for i in range(n_t)]
    return rows, vals, ts, t_bar(sc.mu, sc.K)


def cmd_score_profile(args, cfg):
    p = _potential(cfg)
    chash = config_hash("score-profile", cfg, args.seed)
    rows, vals, ts, tb = score_profile(p)
    out = Path(args.out_dir or ".")
    _write(out / "score_profile.csv", csv_text(["t", "x", "score", "beta_os_kmu_t"], [[_fmt(v) for v in r] for r in rows], chash))
    series = [(f"x = {x:g}", ts, vals[:, k]) for k, x in enumerate(PROFILE_X)]
    svg = line_plot_svg(series, "score over time at fixed x", "t", "score", vlines=[(f"t_bar = {tb:.4f}", tb)])
    svg = f"<!-- config_hash={chash} -->\n" + svg
    _write(out / "score_profile.svg", svg)
    err = float(np.max(np.abs(vals[-1] + np.asarray(PROFILE_X))))
    doc = {"t_bar": tb, "max_abs_score_plus_x_at_tmax": err, "config_hash": chash, "out_dir": str(out)}
    _emit_json(doc, None, "")
    if err > PROFILE_TOL:
        raise InvariantFailure(f"score(t={PROFILE_T_MAX}, x) differs from -x by {err:.3g}")
    return EXIT_OK


def _sampler_config(cfg, p: Potential, seed):
    block = dict(cfg.get("sampler", {}))
    block.setdefault("dim", p.dim)
    block["seed"] = seed
    try:
        return SamplerConfig(
            float(block["T"]), float(block["epsilon"]), float(block["gamma"]), int(block.get("n", 1)), int(block["seed"]), int(block["dim"])
        )
    except KeyError as e:
        raise InputError(f"sampler block is missing {e}") from e


def cmd_sample(args, cfg):
    p = _potential(cfg)
    scfg = _sampler_config(cfg, p, args.seed)
    if scfg.dim != p.dim:
        raise InputError("sampler dim must equal the potential dimension")
    score, *_ = _load_score(args.score, p)
    y = backward_em(score, scfg)
    chash = config_hash("sample", {"config": cfg, "score": args.score}, args.seed)
    path = args.sample_out or str(Path(args.out_dir or ".") / "samples.csv")
    header = [f"x{j}" for j in range(p.dim)]
    _write(path, csv_text(header, [[_fmt(v) for v in row] for row in y], chash))
    _emit_json({"out": path, "n": scfg.n, "J": scfg.J, "terminal_time": scfg.terminal_time, "config_hash": chash}, None, "")
    return EXIT_OK


def cmd_fit(args, cfg):
    p = _potential(cfg)
    mb = dict(cfg.get("model", {}))
    T = float(mb.pop("T", 8.0))
    model = ScoreModel(dim=p.dim, T=T, weight_seed=int(mb.pop("weight_seed", args.seed)), **mb)
    eps = float(cfg.get("epsilon", 0.01))
    n_data = int(cfg.get("n_data", 50_000))
    res = fit(model, p, T, eps, n_data, args.seed)
    extra = {"fit": {"residual": res.residual, "ridge": res.ridge, "n_data": res.n_data, "epsilon": eps, "seed": args.seed}}
    sp = cfg.get("spread")
    if sp:
        refits = int(sp.get("refits", 20))
        spread = estimator_spread(
            model, p, T, eps, n_data, seeds=range(args.seed + 1000, args.seed + 1000 + refits), n_points=int(sp.get("n_star", 1_000_000))
        )
        extra["theta_star_sq"] = float(np.sum(spread.theta_star**2))
        extra["eps_al"] = spread.eps_al
        extra["theta_fourth"] = spread.theta_fourth
    extra["config_hash"] = config_hash("fit", cfg, args.seed)
    path = args.model_out or str(Path(args.out_dir or ".") / "model.json")
    _write(path, model.to_json(res.theta, extra) + "\n")
    _emit_json({"out": path, "residual": res.residual, "constants": model.constants(res.theta)}, None, "")
    return EXIT_OK


def cmd_w2(args, cfg):
    a = read_samples_csv(args.a)
    b = read_samples_csv(args.b)
    method = args.method
    if method == "auto":
        rep = w2(a, b, args.n_boot, args.seed)
    elif method == METHODS[0]:
        rep = w2_1d(a, b, args.n_boot, args.seed)
    else:
        rep = w2_assignment(a, b, args.n_boot, args.seed)
    _emit_json(rep.to_dict(), args.out_dir, "w2.json")
    return EXIT_OK


def cmd_bounds(args, cfg):
    block = dict(cfg.get("inputs", cfg))
    delta = block.pop("delta", None)
    try:
        b = bd.BoundInputs(**block)
    except TypeError as e:
        raise InputError(f"bad bound inputs: {e}") from e
    doc = {
        "inputs": b.to_dict(),
        "theorem_312": bd.theorem_312_rhs(b).to_dict(),
        "constants": bd.constants(b, improved=b.theta_fourth is not None),
    }
    if b.theta_fourth is not None:
        doc["theorem_313"] = bd.theorem_313_rhs(b).to_dict()
    if delta is not None:
        doc["thresholds"] = bd.delta_thresholds(b, float(delta)).to_dict()
    _emit_json(doc, args.out_dir, "bounds.json")
    return EXIT_OK


def _bound_constants(p, model, theta, doc, T, y_abs_max):
    if model is None:
        if isinstance(p, GaussianMixture) and p.dim == 1:
            return exact_mixture_constants(p, T, x_max=y_abs_max + 1.0), {}
        return None, {}
    return model.constants(theta), {k: doc[k] for k in ("theta_star_sq", "eps_al", "theta_fourth") if k in doc}


def _sweep_point(spec: ExperimentSpec, p: Potential, source, seed, T, eps, gamma, rep):
    score, model, theta, doc = source
    cfg = SamplerConfig(T, eps, gamma, spec.n, seed + rep, p.dim)
    acc = np.zeros(cfg.n)
    oracle = exact_score(p) if model is not None else None

    def on_step(j, t_j, start, y):
        if j == cfg.J:
            return
        t = cfg.T - t_j
        diff = oracle(t, y) - score(t, y)
        acc[start : start + len(y)] += cfg.gamma * np.sum(diff**2, axis=1)

    y = backward_em(score, cfg, callback=on_step if oracle is not None else None)
    eps_sn = float(acc.mean())
    method = spec.w2_method
    if method == "auto":
        method = METHODS[0] if p.dim == 1 else METHODS[1]
    fn = w2_1d if method == METHODS[0] else w2_assignment

    def draw(n, s):
        return p.sample(n, np.random.default_rng(s))

    ref = draw(cfg.n, [seed + rep, 1, 7])
    ref2 = draw(cfg.n, [seed + rep, 2, 7])
    raw = fn(y, ref).value
    base = fn(ref2, ref).value
    consts, extra = _bound_constants(p, model, theta, doc, T, float(np.max(np.abs(y))))
    row = {"T": T, "epsilon": eps, "gamma": gamma, "replicate": rep, "eps_sn": eps_sn, "w2_raw": raw, "w2_baseline": base, "w2": raw - base}
    terms = dict.fromkeys(("C1_sqrt_eps", "C2_exp", "C3_sqrt_eps_sn", "C4_sqrt_gamma"), float("nan"))
    total = float("nan")
    if consts is not None:
        bi = bound_inputs_for(p, consts, T, eps, gamma, eps_sn=eps_sn, **extra)
        rep312 = bd.theorem_312_rhs(bi)
        terms, total = rep312.terms, rep312.total
    row.update({f"bound_{k}": v for k, v in terms.items()})
    row["bound_total"] = total
    return row


def sweep_slopes(rows, spec: ExperimentSpec):
    """Log-log slopes of the mean corrected W2 along each grid axis, other axes fixed."""
    out = []
    axes = {"gamma": spec.gammas, "epsilon": spec.epsilons, "T": spec.Ts}
    for axis, vals in axes.items():
        if len(vals) < 2:
            continue
        others = [a for a in axes if a != axis]
        for fixed in itertools.product(*(axes[a] for a in others)):
            sel = [r for r in rows if all(r[a] == v for a, v in zip(others, fixed))]
            per_rep = []
            means = []
            for v in vals:
                means.append(np.mean([r["w2"] for r in sel if r[axis] == v]))
            for rep in range(spec.replicates):
                w = [next(r["w2"] for r in sel if r[axis] == v and r["replicate"] == rep) for v in vals]
                if all(x > 0 for x in w):
                    per_rep.append(loglog_slope(vals, w))
            slope = loglog_slope(vals, means) if all(m > 0 for m in means) else float("nan")
            se = float(np.std(per_rep, ddof=1) / math.sqrt(len(per_rep))) if len(per_rep) > 1 else float("nan")
            out.append({"axis": axis, "fixed": dict(zip(others, fixed)), "slope": slope, "slope_stderr": se, "n_replicates_used": len(per_rep)})
    return out


def cmd_sweep(args, cfg):
    spec = ExperimentSpec.from_dict(cfg)
    p = _potential({"potential": spec.potential})
    source = _load_score(spec.score, p)
    tasks = [(T, e, g, r) for (T, e, g) in spec.grid() for r in range(spec.replicates)]
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        rows = list(pool.map(lambda a: _sweep_point(spec, p, source, args.seed, *a), tasks))
    chash = config_hash("sweep", cfg, args.seed)
    out = Path(args.out_dir or spec.output_dir or ".")
    header = list(rows[0])
    _write(out / "sweep.csv", csv_text(header, [[_fmt(r[h]) for h in header] for r in rows], chash))
    summary = {"config_hash": chash, "rows": len(rows), "slopes": sweep_slopes(rows, spec)}
    _emit_json(summary, out, "sweep_summary.json")
    return EXIT_OK


DEFAULT_SUITE = (
    {"family": "gaussian_mixture", "weights": [0.5, 0.5], "means": [-2.0, 2.0], "stds": [3.0, 3.0]},
    {"family": "symmetric_modified_half_normal", "xi": 1.0},
    {"family": "double_well", "dim": 1},
    {"family": "double_well", "dim": 2},
    {"family": "elastic_net", "dim": 1},
    {"family": "elastic_net", "dim": 3},
    {"family": "max_norm", "dim": 1},
    {"family": "max_norm", "dim": 2},
    {"family": "max_norm_nonconvex", "dim": 1},
    {"family": "max_norm_nonconvex", "dim": 2},
)


def cmd_verify_assumptions(args, cfg):
    blocks = cfg.get("potentials") or ([cfg["potential"]] if "potential" in cfg else list(DEFAULT_SUITE))
    n_pairs = int(cfg.get("n_pairs", 10_000))
    report = []
    ok = True
    for block in blocks:
        p = from_config(block)
        checks = assumption2_suite(p, n_pairs, args.seed)
        sc = p.semiconvexity()
        passed = all(c.passed for c in checks)
        ok &= passed
        report.append(
            {
                "potential": block,
                "K": sc.K,
                "mu": sc.mu,
                "R": sc.R,
                "empirical_K": empirical_K(p, n_pairs, args.seed),
                "passed": passed,
                "checks": [c.to_dict() for c in checks],
            }
        )
    _emit_json({"passed": ok, "families": report}, args.out_dir, "assumptions.json")
    if not ok:
        raise InvariantFailure("assumption checks failed")
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "score-profile": cmd_score_profile,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "w2": cmd_w2,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "verify-assumptions": cmd_verify_assumptions,
}


def build_parser():
    ap = _Parser(prog="sgm-semiconvex", description="Score-based sampling on semiconvex targets.")
    ap.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    ap.add_argument("--out", dest="out_dir", default=None, help="output directory")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name != "w2":
            sp.add_argument("--config", default=None, help="JSON config file")
        if name == "sample":
            sp.add_argument("--score", default="exact", help="exact or model:<path>")
            sp.add_argument("--out", dest="sample_out", default=None, help="output CSV path")
        if name == "fit":
            sp.add_argument("--model-out", default=None, help="output model JSON path")
        if name == "w2":
            sp.add_argument("a")
            sp.add_argument("b")
            sp.add_argument("--method", default="auto", choices=("auto",) + METHODS[:2])
            sp.add_argument("--n-boot", type=int, default=0)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("error: seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = _load_json(getattr(args, "config", None))
        return COMMANDS[args.command](args, cfg)
    except InvariantFailure as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (NumericalError, DivergedTrajectoryError, FloatingPointError, OverflowError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError, KeyError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
