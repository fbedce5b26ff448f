"""The hybrid estimator: empirical variational objectives maximized over models and circuit parameters."""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .circuits import CircuitAnsatz, OutcomeSample, ParamGrid, ParamPoint, build_unitary, measurement_dist, sample_outcomes
from .eigmodels import DeepReluModel, PolyModel, ShallowModel
from .errors import AlphaOutOfRange, BadParams, NoImprovement, TooFewTrials
from .oracle import RenyiOrder, as_order, measured
from .rng import derive_seed, stream
from .tables import write_csv

FRESH = "fresh_per_theta"
SHARED = "shared"
MODEL_KINDS = ("shallow", "deep", "poly")
INNER_KINDS = ("closed_form", "gradient", "fixed")
SAMPLING_KINDS = ("samples", "exact")

CSV_COLUMNS = ("alpha", "d", "b", "n", "grid_size", "trial", "estimate", "truth", "abs_error", "copies", "master_seed", "trial_seed")


@dataclass
class QneConfig:
    ansatz: CircuitAnsatz
    grid: ParamGrid
    logb: float
    alpha: float = 1.0
    n_per_eval: int = 1000
    model_kind: str = "shallow"
    sample_reuse: str = FRESH
    inner: str = "closed_form"
    steps: int = 500
    lr: float = 0.5
    seed: int = 0
    sampling: str = "samples"  # "exact" plugs in the true outcome laws (n -> infinity proxy)
    channel: Callable | None = None  # optional pre-processing applied to both states
    fixed_model: object | None = None  # evaluated as-is when inner == "fixed"
    deep_depth: int = 8
    deep_width: int = 9
    deep_max_entry: float = 1.0
    poly_degree: int = 6
    poly_coeff_bound: float | None = None

    def __post_init__(self):
        self.order = as_order(self.alpha)
        if self.n_per_eval < 1:
            raise BadParams("n_per_eval must be at least 1")
        if self.model_kind not in MODEL_KINDS:
            raise BadParams(f"model_kind must be one of {MODEL_KINDS}")
        if self.inner not in INNER_KINDS:
            raise BadParams(f"inner must be one of {INNER_KINDS}")
        if self.inner == "closed_form" and self.model_kind != "shallow":
            raise BadParams("closed-form inner solver needs the shallow model")
        if self.inner == "fixed" and self.fixed_model is None:
            raise BadParams("inner='fixed' needs fixed_model")
        if self.sample_reuse not in (FRESH, SHARED):
            raise BadParams("sample_reuse must be 'fresh_per_theta' or 'shared'")
        if self.sampling not in SAMPLING_KINDS:
            raise BadParams(f"sampling must be one of {SAMPLING_KINDS}")
        if self.logb <= 0:
            raise BadParams("logb must be positive")
        if self.ansatz.param_count != len(self.grid.points[0]):
            raise BadParams("grid points do not match the ansatz parameter count")

    @property
    def copies_per_state(self) -> int:
        if self.sampling == "exact":
            return 0
        return self.n_per_eval * (len(self.grid) if self.sample_reuse == FRESH else 1)

    def describe(self) -> dict:
        return {
            "alpha": self.order.alpha,
            "n_per_eval": self.n_per_eval,
            "model_kind": self.model_kind,
            "logb": self.logb,
            "sample_reuse": self.sample_reuse,
            "inner": self.inner,
            "steps": self.steps,
            "lr": self.lr,
            "seed": self.seed,
            "sampling": self.sampling,
            "ansatz": self.ansatz.to_dict(),
            "grid": self.grid.to_dict(),
        }


@dataclass
class QneEstimate:
    value: float
    best_theta: ParamPoint
    best_model: object
    copies_consumed: int
    per_theta_values: list = field(default_factory=list)
    truth: float | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "best_theta": list(self.best_theta.theta),
            "best_model": self.best_model.to_dict(),
            "copies_consumed": self.copies_consumed,
            "per_theta_values": list(self.per_theta_values),
        }


# --- objectives -------------------------------------------------------------


def _hist(sample, d: int) -> np.ndarray:
    if isinstance(sample, OutcomeSample):
        return sample.histogram(d)
    return np.asarray(sample, float)


def kl_objective(table, p_hat, q_hat) -> float:
    """sum p_hat f - sum q_hat e^f + 1."""
    f = np.asarray(table, float)
    return float(np.dot(p_hat, f) - np.dot(q_hat, np.exp(f)) + 1.0)


def renyi_objective(alpha, table, p_hat, q_hat) -> float:
    a = as_order(alpha).alpha
    if a == 1.0:
        raise AlphaOutOfRange("Renyi objective needs alpha != 1")
    f = np.asarray(table, float)
    t1 = logsumexp((a - 1.0) * f, b=p_hat)
    t2 = logsumexp(a * f, b=q_hat)
    return float(a / (a - 1.0) * t1 - t2)


def _objective(order: RenyiOrder, table, p_hat, q_hat) -> float:
    if order.is_kl:
        return kl_objective(table, p_hat, q_hat)
    return renyi_objective(order.alpha, table, p_hat, q_hat)


def _objective_grad(order: RenyiOrder, table, p_hat, q_hat) -> np.ndarray:
    f = np.asarray(table, float)
    if order.is_kl:
        return p_hat - q_hat * np.exp(f)
    a = order.alpha
    w1 = np.log(np.where(p_hat > 0, p_hat, 1.0)) + (a - 1.0) * f
    w1 = np.where(p_hat > 0, w1, -np.inf)
    w2 = np.log(np.where(q_hat > 0, q_hat, 1.0)) + a * f
    w2 = np.where(q_hat > 0, w2, -np.inf)
    return a * (np.exp(w1 - logsumexp(w1)) - np.exp(w2 - logsumexp(w2)))


def empirical_kl_objective(model, sample_rho, sample_sigma) -> float:
    d = model.dim
    return kl_objective(model.table(), _hist(sample_rho, d), _hist(sample_sigma, d))


def empirical_renyi_objective(alpha, model, sample_rho, sample_sigma) -> float:
    d = model.dim
    return renyi_objective(alpha, model.table(), _hist(sample_rho, d), _hist(sample_sigma, d))


# --- inner optimization -----------------------------------------------------


def closed_form_table(order: RenyiOrder, p_hat, q_hat, logb: float) -> np.ndarray:
    """Per-bin maximizer of the empirical objective over tables bounded by logb.

    Empty cells saturate (+logb when only q_hat vanishes, -logb when only p_hat
    does); cells empty in both samples do not enter the objective and get 0.
    For Renyi orders the objective is invariant under constant shifts, so the
    log-ratios are centred on their midrange before clamping.
    """
    p = np.asarray(p_hat, float)
    q = np.asarray(q_hat, float)
    both = (p > 0) & (q > 0)
    r = np.zeros_like(p)
    r[both] = np.log(p[both] / q[both])
    if not order.is_kl and np.any(both):
        r[both] -= 0.5 * (r[both].max() + r[both].min())
    beta = np.clip(r, -logb, logb)
    beta[(p > 0) & (q == 0)] = logb
    beta[(p == 0) & (q > 0)] = -logb
    return beta


def _initial_model(kind: str, d: int, logb: float, cfg: QneConfig | None, rng: np.random.Generator):
    if kind == "shallow":
        return ShallowModel.zeros(d, logb)
    if kind == "deep":
        depth = cfg.deep_depth if cfg else 8
        width = cfg.deep_width if cfg else 9
        cap = cfg.deep_max_entry if cfg else 1.0
        return DeepReluModel.random(d, logb, rng, depth=depth, width=width, max_entry=cap)
    k = cfg.poly_degree if cfg else 6
    bound = (cfg.poly_coeff_bound if cfg and cfg.poly_coeff_bound else 2.0**k * math.factorial(k) * logb)
    return PolyModel(k, np.zeros(k + 1), bound, dim=d, clamp_logb=logb)


def _projected_ascent(order: RenyiOrder, model, p_hat, q_hat, steps: int, lr: float):
    """Projected gradient ascent on model parameters with BB steps and backtracking."""
    x = model.params()
    cur = model
    val = _objective(order, cur.table(), p_hat, q_hat)
    g = cur.table_vjp(_objective_grad(order, cur.table(), p_hat, q_hat))
    step = lr
    x_prev = g_prev = None
    for _ in range(steps):
        if x_prev is not None:
            s, y = x - x_prev, g - g_prev
            sy = -float(np.dot(s, y))
            if sy > 1e-300:
                step = float(np.dot(s, s)) / sy
        step = min(max(step, 1e-10), 1e6)
        t = step
        improved = False
        while t > 1e-14:
            cand = cur.with_params(x + t * g)
            cv = _objective(order, cand.table(), p_hat, q_hat)
            if cv >= val - 1e-15 * (1 + abs(val)):
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        x_prev, g_prev = x, g
        cur, val = cand, cv
        x = cur.params()
        g = cur.table_vjp(_objective_grad(order, cur.table(), p_hat, q_hat))
        if np.allclose(x, x_prev, rtol=0, atol=1e-15):
            break
    return cur, val


def inner_optimize(alpha, model_kind: str, samples, logb: float, inner: str = "closed_form", steps: int = 500, lr: float = 0.5, d: int | None = None, config: QneConfig | None = None, rng=None, model=None):
    """Maximize the empirical objective over the chosen model class.

    ``samples`` is ``(sample_rho, sample_sigma)`` given as OutcomeSamples or histograms.
    Returns ``(model, value)``.
    """
    order = as_order(alpha)
    s_rho, s_sigma = samples
    if d is None:
        d = len(s_rho) if not isinstance(s_rho, OutcomeSample) else int(max(s_rho.outcomes.max(), s_sigma.outcomes.max()))
    p_hat, q_hat = _hist(s_rho, d), _hist(s_sigma, d)
    if inner == "fixed":
        return model, _objective(order, model.table(), p_hat, q_hat)
    if inner == "closed_form":
        if model_kind != "shallow":
            raise BadParams("closed-form inner solver needs the shallow model")
        m = ShallowModel(d, closed_form_table(order, p_hat, q_hat, logb), logb)
        return m, _objective(order, m.table(), p_hat, q_hat)
    if inner != "gradient":
        raise BadParams(f"unknown inner solver {inner!r}")
    rng = rng if isinstance(rng, np.random.Generator) else stream(0 if rng is None else int(rng))
    start = model if model is not None else _initial_model(model_kind, d, logb, config, rng)
    m, val = _projected_ascent(order, start, p_hat, q_hat, steps, lr)
    if val < 0.0:
        warnings.warn(f"gradient inner solver ended at {val:.3e}, below the zero model", NoImprovement, stacklevel=2)
    return m, val


# --- full estimator ---------------------------------------------------------


def _theta_laws(rho, sigma, cfg: QneConfig, theta: ParamPoint):
    u = build_unitary(cfg.ansatz, theta)
    if cfg.channel is not None:
        rho, sigma = cfg.channel(rho), cfg.channel(sigma)
    return np.asarray(measurement_dist(u, rho)), np.asarray(measurement_dist(u, sigma))


def estimate(rho, sigma, config: QneConfig) -> QneEstimate:
    """Exhaustive search over the grid with an inner maximization per grid point."""
    cfg = config
    order = cfg.order
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    d = cfg.ansatz.dim
    values = []
    best = None
    for k, theta in enumerate(cfg.grid.points):
        p, q = _theta_laws(rho, sigma, cfg, theta)
        if cfg.sampling == "exact":
            p_hat, q_hat = p, q
        else:
            key = k if cfg.sample_reuse == FRESH else 0
            s_r = sample_outcomes(p, cfg.n_per_eval, stream(cfg.seed, key, 0), "rho", theta.theta, derive_seed(cfg.seed, key, 0))
            s_s = sample_outcomes(q, cfg.n_per_eval, stream(cfg.seed, key, 1), "sigma", theta.theta, derive_seed(cfg.seed, key, 1))
            p_hat, q_hat = s_r.histogram(d), s_s.histogram(d)
        model, val = inner_optimize(
            order, cfg.model_kind, (p_hat, q_hat), cfg.logb, cfg.inner, cfg.steps, cfg.lr, d=d, config=cfg,
            rng=stream(cfg.seed, k, 2), model=cfg.fixed_model,
        )
        values.append(val)
        if best is None or val > best[0]:
            best = (val, theta, model)
    return QneEstimate(best[0], best[1], best[2], cfg.copies_per_state, values)


# --- risk curves ------------------------------------------------------------


@dataclass
class RiskTable:
    alpha: float
    rows: list  # one dict per (pair, n, trial) with CSV_COLUMNS keys plus 'pair'
    summary: list  # one dict per n
    slope: float | None
    master_seed: int

    def write_csv(self, path):
        return write_csv(path, CSV_COLUMNS, self.rows)

    def summary_dict(self) -> dict:
        return {"alpha": self.alpha, "slope": self.slope, "master_seed": self.master_seed, "per_n": self.summary}

    def to_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2)


def fit_loglog_slope(ns, errs) -> float | None:
    ns = np.asarray(ns, float)
    errs = np.asarray(errs, float)
    if ns.size < 2:
        return None
    return float(np.polyfit(np.log(ns), np.log(errs), 1)[0])


def _with(cfg: QneConfig, **changes) -> QneConfig:
    doc = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    doc.update(changes)
    return QneConfig(**doc)


def risk_curve(pair_family, config: QneConfig, n_list, trials: int, threads: int = 1, truths=None, min_trials: int = 30, class_b: float | None = None) -> RiskTable:
    """Monte Carlo risk of the estimator over a finite family of pairs.

    For every n the reported risk is the largest mean absolute error over the
    family. Trial seeds derive from ``config.seed`` and the (pair, n, trial)
    position, so results do not depend on ``threads``.
    """
    if trials < min_trials:
        raise TooFewTrials(f"need at least {min_trials} trials, got {trials}")
    pairs = list(pair_family)
    order = config.order
    if truths is None:
        truths = [measured(order, np.asarray(p.rho), np.asarray(p.sigma)).value for p in pairs]
    b = class_b if class_b is not None else float(math.exp(config.logb))
    jobs = [(pi, ni, n, t) for ni, n in enumerate(n_list) for pi in range(len(pairs)) for t in range(trials)]

    def run(job):
        pi, ni, n, t = job
        tseed = derive_seed(config.seed, pi, ni, t)
        cfg = _with(config, n_per_eval=int(n), seed=tseed)
        est = estimate(pairs[pi].rho, pairs[pi].sigma, cfg)
        return {
            "pair": pi,
            "alpha": order.alpha,
            "d": config.ansatz.dim,
            "b": b,
            "n": int(n),
            "grid_size": len(config.grid),
            "trial": t,
            "estimate": est.value,
            "truth": truths[pi],
            "abs_error": abs(est.value - truths[pi]),
            "copies": est.copies_consumed,
            "master_seed": config.seed,
            "trial_seed": tseed,
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]

    summary = []
    for ni, n in enumerate(n_list):
        best = None
        for pi in range(len(pairs)):
            errs = np.array([r["abs_error"] for r in rows if r["n"] == int(n) and r["pair"] == pi])
            mean = float(errs.mean())
            if best is None or mean > best["mean_abs_error"]:
                q = np.quantile(errs, [0.1, 0.5, 0.9])
                best = {
                    "n": int(n),
                    "pair": pi,
                    "mean_abs_error": mean,
                    "stderr": float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else 0.0,
                    "q10": float(q[0]),
                    "q50": float(q[1]),
                    "q90": float(q[2]),
                    "trials": int(errs.size),
                }
        summary.append(best)
    slope = fit_loglog_slope([s["n"] for s in summary], [s["mean_abs_error"] for s in summary])
    return RiskTable(order.alpha, rows, summary, slope, config.seed)


# --- theoretical bounds used as pass/fail references -------------------------


def shallow_kl_bound(n: int, d: int, b: float, delta: float) -> float:
    lb = math.log(b)
    return 2 * delta * (b + lb) + 96 * lb * (b + 1) * math.sqrt(d / n)


def shallow_renyi_bound(alpha: float, n: int, d: int, b: float, delta: float) -> float:
    lb = math.log(b)
    e = abs(alpha - 1.0)
    return 2 * (alpha / e * b**e + b**alpha) * delta + 96 * alpha * (b**alpha + b**e) * lb * math.sqrt(d / n)


def approximation_term(eps: float, delta: float, b: float) -> float:
    return eps * (b + 1) + 2 * delta * (b + math.log(b))
