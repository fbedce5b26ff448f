"""Exact measured (Rényi) relative entropies from their convex variational forms.

Both divergences are computed by optimizing over positive definite ``omega``
written as ``omega = exp(X)`` with ``X`` Hermitian, so the cone constraint
disappears. The map ``X -> exp(X)`` is a diffeomorphism onto the cone, hence
every stationary point in ``X`` is the unique optimizer in ``omega``.
Convergence is declared on the fixed-point residual of the optimality
conditions, evaluated with closed-form divided-difference kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import AlphaOutOfRange, DomainError, NoConvergence, SupportViolation
from .opmat import EXP, HermitianEig, divided_differences, herm_eig, hermitian_part, matrix_fn, operator_norm
from .states import POS_FLOOR, _require_positive

KL_WINDOW = 1e-3
TOL_EIGCONS = 1e-6


@dataclass(frozen=True)
class RenyiOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0:
            raise AlphaOutOfRange(f"alpha must be positive, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_kl(self) -> bool:
        return abs(self.alpha - 1.0) < KL_WINDOW

    @property
    def regime(self) -> str:
        a = self.alpha
        if self.is_kl:
            return "KL"
        if a < 0.5:
            return "(0,1/2)"
        if a < 1.0:
            return "[1/2,1)"
        return "(1,inf)"


def as_order(alpha) -> RenyiOrder:
    return alpha if isinstance(alpha, RenyiOrder) else RenyiOrder(alpha)


@dataclass
class SolverOptions:
    tol_fp: float | None = None  # default 1e-8 * d
    max_iters: int = 5000
    armijo_c: float = 1e-4
    shrink: float = 0.5
    memory: int = 10  # non-monotone reference window for the BB steps
    bb_iters: int = 60  # first-order budget before switching to Newton polishing
    newton_iters: int = 40
    raise_on_failure: bool = True

    def tolerance(self, d: int) -> float:
        return 1e-8 * d if self.tol_fp is None else self.tol_fp


@dataclass
class OptimizerSolution:
    value: float
    alpha: float
    h_star: np.ndarray
    omega_star: np.ndarray
    lambda_star: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    iterations: int
    converged: bool = True
    q_value: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.h_star.shape[0]

    @property
    def projectors(self) -> list[np.ndarray]:
        u = self.eigenvectors
        return [np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])]

    def eigen_consistency(self, rho, sigma) -> float:
        """max_i |lambda_i - log(Tr[P_i rho] / Tr[P_i sigma])|."""
        u = self.eigenvectors
        p = np.real(np.einsum("ji,jk,ki->i", u.conj(), np.asarray(rho), u))
        q = np.real(np.einsum("ji,jk,ki->i", u.conj(), np.asarray(sigma), u))
        return float(np.max(np.abs(self.lambda_star - np.log(p / q))))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "eigenvalues": [float(x) for x in self.lambda_star],
        }


# --- classical reductions ---------------------------------------------------


def classical_kl(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((p > 0) & (q <= 0)):
        raise SupportViolation("supp(p) is not contained in supp(q)")
    m = p > 0
    return float(np.sum(p[m] * np.log(p[m] / q[m])))


def classical_renyi(alpha, p, q) -> float:
    a = as_order(alpha).alpha
    if a == 1.0:
        return classical_kl(p, q)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if a > 1 and np.any((p > 0) & (q <= 0)):
        raise SupportViolation("supp(p) is not contained in supp(q)")
    m = (p > 0) & (q > 0)
    s = np.sum(p[m] ** a * q[m] ** (1.0 - a))
    return float(np.log(s) / (a - 1.0))


# --- generic Hermitian ascent -----------------------------------------------


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.vdot(a, b)))


def _ascend(evaluate, x0: np.ndarray, tol: float, opts: SolverOptions):
    """Maximize over Hermitian ``X`` with Barzilai-Borwein steps and Armijo backtracking.

    ``evaluate(X)`` returns ``(F, G, residual, cache)`` where ``G`` is the
    Frobenius gradient. The Armijo reference is the max of the last
    ``opts.memory`` accepted values; ties within rounding are accepted so the
    iteration does not stall once ``F`` is flat to machine precision.
    """
    def safe(x):
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                out = evaluate(x)
        except (DomainError, np.linalg.LinAlgError):
            return -np.inf, None, np.inf, None
        if not np.isfinite(out[0]) or not np.all(np.isfinite(out[1])) or not np.isfinite(out[2]):
            return -np.inf, None, np.inf, None
        return out

    x = hermitian_part(x0)
    f, g, res, cache = safe(x)
    history = [f]
    step = 1.0
    x_prev = g_prev = None
    it = 0
    bb_cap = min(opts.bb_iters, opts.max_iters)
    while res > tol and it < bb_cap:
        it += 1
        if x_prev is not None:
            s = x - x_prev
            y = g - g_prev
            sy = -_inner(s, y)
            ss = _inner(s, s)
            step = ss / sy if sy > 1e-300 else step * 2.0
        step = min(max(step, 1e-12), 1e12)
        gg = _inner(g, g)
        f_ref = max(history[-opts.memory :])
        slack = 4e-16 * (1.0 + abs(f_ref))
        t = step
        while True:
            xn = hermitian_part(x + t * g)
            fn, gn, rn, cn = safe(xn)
            if np.isfinite(fn) and fn >= f_ref + opts.armijo_c * t * gg - slack:
                break
            t *= opts.shrink
            if t < 1e-30:
                break
        if not np.isfinite(fn):
            break
        x_prev, g_prev = x, g
        x, f, g, res, cache = xn, fn, gn, rn, cn
        history.append(f)
    n_steps = 0
    while res > tol and n_steps < opts.newton_iters and np.isfinite(f):
        n_steps += 1
        it += 1
        step_x = _newton_direction(safe, x, g)
        t = 1.0
        accepted = False
        while t > 1e-6:
            xn = hermitian_part(x + t * step_x)
            fn, gn, rn, cn = safe(xn)
            if np.isfinite(fn) and (rn < res or fn > f + 1e-14 * (1.0 + abs(f))):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x, f, g, res, cache = xn, fn, gn, rn, cn
    return x, f, res, it, cache


def _herm_basis(d: int) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of d x d Hermitian matrices."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), complex)
        e[i, i] = 1.0
        basis.append(e)
    c = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), complex)
            e[i, j] = e[j, i] = c
            basis.append(e)
            e = np.zeros((d, d), complex)
            e[i, j] = -1j * c
            e[j, i] = 1j * c
            basis.append(e)
    return basis


def _newton_direction(safe, x: np.ndarray, g: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Newton step from a central-difference Hessian of the analytic gradient.

    Eigenvalues of the Hessian are replaced by minus their absolute value so
    the step is an ascent direction even away from the concave region.
    """
    d = x.shape[0]
    basis = _herm_basis(d)
    gvec = np.array([_inner(b, g) for b in basis])
    hess = np.empty((len(basis), len(basis)))
    for j, b in enumerate(basis):
        _, gp, _, _ = safe(x + h * b)
        _, gm, _, _ = safe(x - h * b)
        if gp is None or gm is None:
            return g
        dg = (gp - gm) / (2 * h)
        hess[:, j] = [_inner(bb, dg) for bb in basis]
    hess = 0.5 * (hess + hess.T)
    w, v = np.linalg.eigh(hess)
    w = -np.maximum(np.abs(w), 1e-12 * max(1.0, float(np.max(np.abs(w)))))
    step = -(v @ ((v.T @ gvec) / w))
    return sum(c * b for c, b in zip(step, basis))


# --- measured relative entropy ----------------------------------------------


def _kl_evaluator(rho: np.ndarray, sigma: np.ndarray):
    def evaluate(h):
        e = herm_eig(h)
        u = e.eigenvectors
        w = e.eigenvalues
        k = divided_differences(EXP, w)
        s_t = u.conj().T @ sigma @ u
        r_t = u.conj().T @ rho @ u
        f = float(np.sum(w * np.real(np.diag(r_t))) - np.sum(np.exp(w) * np.real(np.diag(s_t))) + 1.0)
        if not np.isfinite(f):
            return -np.inf, None, np.inf, None
        grad = rho - u @ (k * s_t) @ u.conj().T
        # stationarity in omega: sigma - Dlog_omega(rho); log divided differences are 1/k here
        res = operator_norm(s_t - r_t / k)
        return f, hermitian_part(grad), res, e

    return evaluate


def _initial_h(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return hermitian_part(matrix_fn(rho, "log") - matrix_fn(sigma, "log"))


def _prepare(rho, sigma):
    r = hermitian_part(np.asarray(rho, dtype=complex))
    s = hermitian_part(np.asarray(sigma, dtype=complex))
    _require_positive(r, "rho")
    _require_positive(s, "sigma")
    return r, s


def measured_rel_entropy(rho, sigma, opts: SolverOptions | None = None) -> OptimizerSolution:
    """D_M(rho || sigma) = sup_{omega > 0} Tr[rho log omega] + 1 - Tr[sigma omega]."""
    opts = opts or SolverOptions()
    r, s = _prepare(rho, sigma)
    d = r.shape[0]
    tol = opts.tolerance(d)
    h, f, res, it, e = _ascend(_kl_evaluator(r, s), _initial_h(r, s), tol, opts)
    converged = res <= tol
    if not converged and opts.raise_on_failure:
        raise NoConvergence(f"KL solver stopped after {it} iterations with residual {res:.3e}", it, res)
    return OptimizerSolution(
        value=f,
        alpha=1.0,
        h_star=h,
        omega_star=hermitian_part(e.reconstruct(np.exp(e.eigenvalues))),
        lambda_star=e.eigenvalues.copy(),
        eigenvectors=e.eigenvectors,
        residual=res,
        iterations=it,
        converged=converged,
    )


# --- measured Rényi relative entropy ----------------------------------------


def _renyi_terms(a: float, rho: np.ndarray, sigma: np.ndarray):
    """Objective ``c1 Tr[A e^{r1 X}] + c2 Tr[B e^{r2 X}]`` in ``omega = e^X`` coordinates."""
    if a < 0.5:
        return (a, rho, 1.0), (1.0 - a, sigma, a / (a - 1.0))
    return (a, rho, 1.0 - 1.0 / a), (1.0 - a, sigma, 1.0)


def _renyi_evaluator(a: float, rho: np.ndarray, sigma: np.ndarray):
    (c1, A, r1), (c2, B, r2) = _renyi_terms(a, rho, sigma)
    sign = 1.0 if a > 1 else -1.0  # ascend on sign * Phi
    low = a < 0.5

    def evaluate(x):
        e = herm_eig(x)
        u = e.eigenvectors
        w = e.eigenvalues
        a_t = u.conj().T @ A @ u
        b_t = u.conj().T @ B @ u
        k1 = r1 * divided_differences(EXP, r1 * w)
        k2 = r2 * divided_differences(EXP, r2 * w)
        phi = c1 * float(np.sum(np.exp(r1 * w) * np.real(np.diag(a_t)))) + c2 * float(
            np.sum(np.exp(r2 * w) * np.real(np.diag(b_t)))
        )
        if not np.isfinite(phi):
            return -np.inf, None, np.inf, None
        grad = u @ (c1 * k1 * a_t + c2 * k2 * b_t) @ u.conj().T
        kx = divided_differences(EXP, w)
        if low:
            # rho = ((a-1)/a) Dpow_r(omega)(sigma), r = a/(a-1)
            dpow = k2 / kx
            res = operator_norm(a_t - ((a - 1.0) / a) * dpow * b_t)
        else:
            # sigma = (a/(a-1)) Dpow_r(omega)(rho), r = (a-1)/a
            dpow = k1 / kx
            res = operator_norm(b_t - (a / (a - 1.0)) * dpow * a_t)
        return sign * phi, sign * hermitian_part(grad), res, (e, phi)

    return evaluate


def measured_renyi(alpha, rho, sigma, opts: SolverOptions | None = None) -> OptimizerSolution:
    """D_{M,alpha} = log(Q_alpha) / (alpha - 1) with Q_alpha from the regime-specific program."""
    order = as_order(alpha)
    if order.is_kl:
        return measured_rel_entropy(rho, sigma, opts)
    opts = opts or SolverOptions()
    a = order.alpha
    r, s = _prepare(rho, sigma)
    d = r.shape[0]
    tol = opts.tolerance(d)
    h0 = _initial_h(r, s)
    scale = (a - 1.0) if a < 0.5 else a  # X = scale * H
    x, _, res, it, (e, phi) = _ascend(_renyi_evaluator(a, r, s), scale * h0, tol, opts)
    converged = res <= tol
    if not converged and opts.raise_on_failure:
        raise NoConvergence(f"Renyi solver (alpha={a}) stopped after {it} iterations, residual {res:.3e}", it, res)
    # eigenvalues of H = X / scale; reorder descending in H
    lam = e.eigenvalues / scale
    order_idx = np.argsort(-lam, kind="stable")
    return OptimizerSolution(
        value=float(np.log(phi) / (a - 1.0)),
        alpha=a,
        h_star=hermitian_part(x / scale),
        omega_star=hermitian_part(e.reconstruct(np.exp(e.eigenvalues))),
        lambda_star=lam[order_idx],
        eigenvectors=e.eigenvectors[:, order_idx],
        residual=res,
        iterations=it,
        converged=converged,
        q_value=phi,
    )


def measured(alpha, rho, sigma, opts: SolverOptions | None = None) -> OptimizerSolution:
    order = as_order(alpha)
    if order.is_kl:
        return measured_rel_entropy(rho, sigma, opts)
    return measured_renyi(order, rho, sigma, opts)


def h_form_value(alpha, h: np.ndarray, rho, sigma) -> float:
    """Evaluate the Hermitian-operator variational objective at ``h``."""
    order = as_order(alpha)
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if order.is_kl:
        return float(np.real(np.trace(h @ rho)) - np.real(np.trace(matrix_fn(h, "exp") @ sigma)) + 1.0)
    a = order.alpha
    t1 = np.real(np.trace(matrix_fn((a - 1.0) * h, "exp") @ rho))
    t2 = np.real(np.trace(matrix_fn(a * h, "exp") @ sigma))
    return float(a / (a - 1.0) * np.log(t1) - np.log(t2))


# --- brute-force projective measurement search ------------------------------


def _measurement_divergence(alpha: float, u: np.ndarray, rho: np.ndarray, sigma: np.ndarray) -> float:
    p = np.real(np.einsum("ji,jk,ki->i", u.conj(), rho, u))
    q = np.real(np.einsum("ji,jk,ki->i", u.conj(), sigma, u))
    p = np.clip(p, 1e-300, None)
    q = np.clip(q, 1e-300, None)
    if alpha == 1.0:
        return float(np.sum(p * np.log(p / q)))
    return float(np.log(np.sum(p**alpha * q ** (1.0 - alpha))) / (alpha - 1.0))


def brute_force_measured(rho, sigma, alpha=1.0, budget: int = 200, rng: np.random.Generator | None = None, refine: int = 8) -> float:
    """Best classical divergence over projective measurements found by random search.

    ``budget`` random unitaries (Givens parametrization) are scored, and the
    ``refine`` best are polished with BFGS. The result is a lower bound on the
    measured divergence by construction.
    """
    from .circuits import CircuitAnsatz

    rng = rng if rng is not None else np.random.default_rng(0)
    r = hermitian_part(np.asarray(rho, dtype=complex))
    s = hermitian_part(np.asarray(sigma, dtype=complex))
    d = r.shape[0]
    order = as_order(alpha)
    a = 1.0 if order.is_kl else order.alpha
    ansatz = CircuitAnsatz.givens(d)

    def score(theta):
        return _measurement_divergence(a, ansatz.unitary(theta), r, s)

    starts = rng.uniform(-np.pi, np.pi, size=(budget, ansatz.param_count))
    vals = np.array([score(t) for t in starts])
    best = float(np.max(vals))
    for idx in np.argsort(-vals)[: max(1, min(refine, budget))]:
        out = minimize(lambda t: -score(t), starts[idx], method="BFGS", options={"gtol": 1e-10, "maxiter": 2000})
        best = max(best, -float(out.fun))
    return best
