"""Explicit error-bound constants and the W2 upper bounds built from them.

Everything is evaluated in log space: the moment constants carry factors like
``exp(T (4 + 8 K_Total^2 (1 + T^{2 alpha})))`` that overflow a double for
moderate T.  Public results are exponentiated at the end; a term whose log
exceeds the float range saturates to ``inf`` and is listed in ``saturated``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import optimize

from .convexity import B_integral, integral_beta, t_bar
from .errors import BracketError, InputError

T_DELTA_BRACKET = 200.0
_LOG_MAX = math.log(np.finfo(float).max)


def _log(x):
    return math.log(x) if x > 0 else -math.inf


def _lse(*logs):
    finite = [v for v in logs if v != -math.inf]
    if not finite:
        return -math.inf
    m = max(finite)
    if m == math.inf:
        return math.inf
    return m + math.log(sum(math.exp(v - m) for v in finite))


def _exp(v):
    return math.inf if v > _LOG_MAX else math.exp(v)


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the bound formulas.

    ``K``/``mu`` are the target's semiconvexity constants (the score-side
    profile uses the proxy ``L = K + mu``); ``K1``, ``K3``, ``K4`` and
    ``K_total`` are the score model's regularity constants; ``eps_al`` bounds
    ``E|theta_hat - theta*|^2``; ``theta_fourth`` is ``E|theta_hat|^4`` (only
    needed for the improved-rate bound).
    """

    d: int
    second_moment: float
    K: float
    mu: float
    T: float
    epsilon: float
    gamma: float
    alpha: float = 1.0
    zeta: float = 0.5
    K1: float = 0.0
    K3: float = 0.0
    K4: float = 0.0
    K_total: float = 0.0
    theta_star_sq: float = 0.0
    eps_al: float = 0.0
    eps_sn: float = 0.0
    theta_fourth: float | None = None
    ey0_2: float | None = None
    ey0_4: float | None = None
    log_gamma: float | None = None

    def __post_init__(self):
        if int(self.d) < 1:
            raise InputError("d must be a positive integer")
        if not 0 < self.zeta < 1:
            raise InputError(f"zeta must lie in (0, 1), got {self.zeta}")
        if self.log_gamma is not None:
            # step sizes far below the float range are carried as logs
            if not self.log_gamma < 0:
                raise InputError("log_gamma must be negative")
            object.__setattr__(self, "gamma", _exp(self.log_gamma))
        elif not 0 < self.gamma < 1:
            raise InputError("gamma must lie in (0, 1)")
        if not 0 < self.epsilon < 1:
            raise InputError("epsilon must lie in (0, 1)")
        if not self.T > self.epsilon:
            raise InputError("need T > epsilon")
        if not 0.5 <= self.alpha <= 1:
            raise InputError("alpha must lie in [1/2, 1]")
        if not self.mu > 0 or self.K < 0:
            raise InputError("need mu > 0 and K >= 0")
        for name in ("second_moment", "K1", "K3", "K4", "K_total", "theta_star_sq", "eps_al", "eps_sn"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be nonnegative")
        if self.ey0_2 is None:
            object.__setattr__(self, "ey0_2", float(self.d))
        if self.ey0_4 is None:
            object.__setattr__(self, "ey0_4", float(self.d * (self.d + 2)))

    def with_(self, **kw):
        if "gamma" in kw and "log_gamma" not in kw:
            kw["log_gamma"] = None
        return replace(self, **kw)

    @property
    def log_gamma_value(self):
        return self.log_gamma if self.log_gamma is not None else math.log(self.gamma)

    def to_dict(self):
        return asdict(self)

    # shorthand used by several constants
    @property
    def _a2(self):
        return 1 + 2 * self.eps_al + 2 * self.theta_star_sq

    @property
    def _a8(self):
        return 1 + 8 * self.eps_al + 8 * self.theta_star_sq

    @property
    def _data_scale(self):
        return math.sqrt(self.second_moment) + math.sqrt(self.d)


def beta_integral(b: BoundInputs):
    """``∫_eps^T beta_os_kmu dt`` from the closed form."""
    return integral_beta(b.epsilon, b.T, b.mu, b.K)


# ---------------------------------------------------------------------------
# Moment constants (logs)
# ---------------------------------------------------------------------------


def log_c_em(b: BoundInputs, p, T=None):
    """Log of the p-th moment bound on the interpolated auxiliary scheme over [0, T]."""
    T = b.T if T is None else T
    Kt, a = b.K_total, b.alpha
    if p == 2:
        q = 1 + T ** (2 * a)
        expo = T * (4 + 8 * Kt**2 * q)
        add = b.ey0_2 + 16 * Kt**2 * T * b._a2 * q + 2 * b.d * T
    elif p == 4:
        if b.theta_fourth is None:
            raise InputError("the fourth-moment constant needs theta_fourth = E|theta_hat|^4")
        q = 1 + T ** (4 * a)
        expo = T * (10.5 + 128 * Kt**4 * q)
        add = b.ey0_4 + 1024 * Kt**4 * T * (1 + b.theta_fourth) * q + 8 * (b.d + 2) ** 2 * T
    else:
        raise InputError("p must be 2 or 4")
    return expo + _log(add)


def log_c_emose(b: BoundInputs, p):
    """Log of the one-step-error constant (``E|Y_t - Y_{floor}|^p <= gamma^{p/2} C``)."""
    Kt, a, T = b.K_total, b.alpha, b.T
    lc = log_c_em(b, p)
    if p == 2:
        q = 1 + T ** (2 * a)
        inner = _lse(math.log(16) + lc, _log(32 * b._a2))
        return _lse(math.log(2) + _lse(lc, _log(Kt**2 * q) + inner), _log(2 * b.d))
    q = 1 + T ** (4 * a)
    inner = _lse(math.log(1024) + lc, _log(8192 * (1 + b.theta_fourth)))
    return _lse(math.log(8) + _lse(lc, _log(Kt**4 * q) + inner), _log(144 * b.d**2))


def c_em_p(b: BoundInputs, p):
    return _exp(log_c_em(b, p))


def c_emose_p(b: BoundInputs, p):
    return _exp(log_c_emose(b, p))


# ---------------------------------------------------------------------------
# Bound constants (logs)
# ---------------------------------------------------------------------------


def c1(b: BoundInputs):
    return 2 * b._data_scale


def c2(b: BoundInputs):
    return math.sqrt(2) * b._data_scale


def log_c3(b: BoundInputs):
    return 0.5 * math.log(2 / b.zeta) + (1 + b.zeta) * (b.T - b.epsilon) - 2 * beta_integral(b)


def _c4_rate(b: BoundInputs):
    return 1 + 1.5 * b.zeta + 2 * b.K3 * (1 + 2 * b.T**b.alpha)


def _log_c4_bracket(b: BoundInputs):
    k3 = 1 + 2 * b.K3 * (1 + 2 * b.T**b.alpha)
    return _lse(0.5 * log_c_emose(b, 2) + math.log(k3), _log(2 * math.sqrt(2) * b.K1 * math.sqrt(b._a8)))


def log_c4(b: BoundInputs):
    te = b.T - b.epsilon
    return -0.5 * math.log(b.zeta) + 0.5 * math.log(te) + _c4_rate(b) * te + _log_c4_bracket(b)


def _tilde_rate(b: BoundInputs):
    a, T, K3 = b.alpha, b.T, b.K3
    return 2 * (1 + b.zeta + K3 * (1 + 2 * T**a + 4 * K3 * (1 + 4 * T ** (2 * a))))


def _log_tilde_inner(b: BoundInputs):
    """Log of the large parenthesised sum inside the improved-rate constant."""
    a, T, d, z = b.alpha, b.T, b.d, b.zeta
    g = 1 + 8 * b.K3**2 * (1 + 4 * T ** (2 * a))
    q2 = 1 + T ** (2 * a)
    Kt2 = b.K_total**2
    t_a = _log(b.K4**2 / z * (1 + 4 * T ** (2 * a))) + log_c_emose(b, 4)
    t_b = _log(4 * d * g)
    t_c = _log(2 / z * b.K1**2 * (1 + 8 * (b.eps_al + b.theta_star_sq)))
    em2 = _lse(_log(1 + 16 * Kt2 * q2) + log_c_em(b, 2), _log(32 * Kt2 * q2 * b._a2))
    t_d = _log(4 / z * d * g) + em2
    first = _lse(0.5 * math.log(g) + 0.5 * log_c_emose(b, 2), _log(2 * b.K1 * math.sqrt(b._a8)))
    t_e = math.log(2) + first + _log(d * math.sqrt(2) * math.sqrt(g))
    return _lse(t_a, t_b, t_c, t_d, t_e)


def log_c4_tilde(b: BoundInputs):
    te = b.T - b.epsilon
    return 0.5 * math.log(2) + _tilde_rate(b) * te + 0.5 * math.log(te) + 0.5 * _log_tilde_inner(b)


def constants(b: BoundInputs, improved=False):
    """All constants (linear scale, possibly ``inf``) plus their logs."""
    out = {
        "C1": c1(b),
        "C2": c2(b),
        "log_C3": log_c3(b),
        "log_C4": log_c4(b),
        "log_C_EM2": log_c_em(b, 2),
        "log_C_EMose2": log_c_emose(b, 2),
        "beta_integral": beta_integral(b),
    }
    if improved:
        out["log_C_EM4"] = log_c_em(b, 4)
        out["log_C_EMose4"] = log_c_emose(b, 4)
        out["log_C4_tilde"] = log_c4_tilde(b)
    for k in [k for k in out if k.startswith("log_")]:
        out[k[4:]] = _exp(out[k])
    return out


@dataclass
class BoundReport:
    total: float
    terms: dict
    log_terms: dict
    saturated: list = field(default_factory=list)

    def to_dict(self):
        return {"total": self.total, "terms": self.terms, "log_terms": self.log_terms, "saturated": self.saturated}


def _report(log_terms):
    terms = {k: _exp(v) for k, v in log_terms.items()}
    sat = [k for k, v in terms.items() if v == math.inf]
    total = math.fsum(terms.values()) if not sat else math.inf
    return BoundReport(total, terms, log_terms, sat)


def _common_terms(b: BoundInputs):
    return {
        "C1_sqrt_eps": math.log(c1(b)) + 0.5 * math.log(b.epsilon),
        "C2_exp": math.log(c2(b)) - 2 * beta_integral(b) - b.epsilon,
        "C3_sqrt_eps_sn": log_c3(b) + 0.5 * _log(b.eps_sn),
    }


def theorem_312_rhs(b: BoundInputs) -> BoundReport:
    """``C1 sqrt(eps) + C2 e^{-2∫beta - eps} + C3 sqrt(eps_SN) + C4 sqrt(gamma)``."""
    lt = _common_terms(b)
    lt["C4_sqrt_gamma"] = log_c4(b) + 0.5 * b.log_gamma_value
    return _report(lt)


def theorem_313_rhs(b: BoundInputs) -> BoundReport:
    """Same first three terms, last term ``C4_tilde gamma^alpha``."""
    lt = _common_terms(b)
    lt["C4_tilde_gamma_alpha"] = log_c4_tilde(b) + b.alpha * b.log_gamma_value
    return _report(lt)


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    delta: float
    eps_delta: float
    T_delta: float
    eps_sn_delta: float
    gamma_delta: float
    gamma_tilde_delta: float | None
    log_gamma_delta: float
    log_gamma_tilde_delta: float | None

    def to_dict(self):
        return asdict(self)


def eps_threshold(b: BoundInputs, delta):
    return delta**2 / (64 * b._data_scale**2)


def T_threshold(b: BoundInputs, delta, bracket=T_DELTA_BRACKET):
    """Smallest ``T >= max(eps, t_bar)`` with ``2B(T) > ln(4 sqrt2 a / delta) + 2B(eps) - eps``.

    ``B`` decreases on ``[0, t_bar]`` and increases afterwards, so if the
    inequality holds at ``t_bar`` it holds for every ``T``.
    """
    target = math.log(4 * math.sqrt(2) * b._data_scale / delta) + 2 * B_integral(b.epsilon, b.mu, b.K) - b.epsilon

    def F(T):
        return 2 * B_integral(T, b.mu, b.K) - target

    lo = t_bar(b.mu, b.K)
    hi = lo + bracket
    if F(lo) > 0:
        return b.epsilon
    if not F(hi) > 0:
        raise BracketError(f"T_delta beyond bracket [{lo}, {hi}]", lo, hi, (F(lo), F(hi)))
    root = optimize.bisect(F, lo, hi, xtol=1e-12, maxiter=500)
    return max(root, b.epsilon)


def eps_sn_threshold(b: BoundInputs, delta):
    lg = 2 * math.log(delta) + math.log(b.zeta / 32) - 2 * (1 + b.zeta) * (b.T - b.epsilon) + 4 * beta_integral(b)
    return _exp(lg)


def log_gamma_threshold(b: BoundInputs, delta):
    te = b.T - b.epsilon
    return 2 * math.log(delta) + math.log(b.zeta / 16) - math.log(te) - 2 * _c4_rate(b) * te - 2 * _log_c4_bracket(b)


def log_gamma_tilde_threshold(b: BoundInputs, delta):
    a, te = b.alpha, b.T - b.epsilon
    lg = (
        (1 / a) * math.log(delta / (4 * math.sqrt(2)))
        - math.log(te) / (2 * a)
        - (1 / a) * _tilde_rate(b) * te
        - _log_tilde_inner(b) / (2 * a)
    )
    return min(lg, 0.0)


def gamma_threshold(b: BoundInputs, delta):
    """May underflow to 0; see :func:`log_gamma_threshold`."""
    return math.exp(log_gamma_threshold(b, delta))


def gamma_tilde_threshold(b: BoundInputs, delta):
    return math.exp(log_gamma_tilde_threshold(b, delta))


def delta_thresholds(b: BoundInputs, delta) -> Thresholds:
    """All thresholds; the (T, eps)-dependent ones use ``b.T`` and ``b.epsilon``."""
    if not delta > 0:
        raise InputError("delta must be positive")
    lgt = log_gamma_tilde_threshold(b, delta) if b.theta_fourth is not None else None
    lg = log_gamma_threshold(b, delta)
    return Thresholds(
        delta=delta,
        eps_delta=eps_threshold(b, delta),
        T_delta=T_threshold(b, delta),
        eps_sn_delta=eps_sn_threshold(b, delta),
        gamma_delta=math.exp(lg),
        gamma_tilde_delta=None if lgt is None else math.exp(lgt),
        log_gamma_delta=lg,
        log_gamma_tilde_delta=lgt,
    )


def threshold_schedule(b: BoundInputs, delta):
    """Inputs with ``eps = eps_delta/2``, ``T = T_delta + 1``, ``eps_SN = eps_SN,delta/2``, ``gamma = gamma_delta/2``.

    The order matters: ``T_delta`` depends on eps, and the last two thresholds
    on (T, eps).
    """
    eps = eps_threshold(b, delta) / 2
    b1 = b.with_(epsilon=eps, T=max(b.T, 2 * eps))
    T = T_threshold(b1, delta) + 1
    b2 = b1.with_(T=T)
    th = delta_thresholds(b2, delta)
    return b2.with_(eps_sn=th.eps_sn_delta / 2, log_gamma=min(th.log_gamma_delta, 0.0) - math.log(2)), th
