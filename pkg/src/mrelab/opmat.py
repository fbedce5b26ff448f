"""Dense Hermitian linear algebra and matrix-function kernels.

Everything here works on plain complex ``numpy`` arrays. Matrix functions are
applied through the spectral decomposition, and Fréchet derivatives use the
Daleckii-Krein formula: in the eigenbasis of ``omega`` the derivative of
``f(omega)`` in direction ``A`` is the Hadamard product of ``A`` with the
matrix of first divided differences of ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NoConvergence, NotHermitian, ShapeMismatch

TOL_HERM_REL = 1e-9
TOL_UNITARY = 1e-10
TOL_DD_REL = 1e-7


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def check_hermitian(m, tol_rel: float = TOL_HERM_REL) -> np.ndarray:
    """Return ``(m + m^dag)/2`` after checking the asymmetry is within tolerance."""
    m = _as_square(m)
    scale = np.linalg.norm(m, 2) if m.size else 0.0
    asym = np.linalg.norm(m - m.conj().T, 2) if m.size else 0.0
    if asym > tol_rel * max(scale, 1e-300) and asym > 1e-300:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {tol_rel:.1e} * ||m|| = {tol_rel * scale:.3e}")
    return hermitian_part(m)


@dataclass(frozen=True)
class HermitianEig:
    """Spectral decomposition with eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self, values: np.ndarray | None = None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        u = self.eigenvectors
        return (u * lam) @ u.conj().T

    def projectors(self) -> list[np.ndarray]:
        u = self.eigenvectors
        return [np.outer(u[:, i], u[:, i].conj()) for i in range(self.dim)]


def _fix_phases(u: np.ndarray) -> np.ndarray:
    # first component with non-negligible modulus made real positive
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            z = col[idx[0]]
            u[:, k] = col * (abs(z) / z)
    return u


def herm_eig(m) -> HermitianEig:
    h = check_hermitian(m)
    try:
        w, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(f"eigensolver failed: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    return HermitianEig(eigenvalues=w[order], eigenvectors=_fix_phases(u[:, order]))


# --- scalar functions -------------------------------------------------------


@dataclass(frozen=True)
class ScalarFn:
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    # stable first divided difference for a != b; None means use the plain quotient
    divdiff: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    needs_positive: bool = False


def _exp_dd(a, b):
    return np.exp(a) * np.expm1(b - a) / (b - a)


def _log_dd(a, b):
    return np.log1p((b - a) / a) / (b - a)


EXP = ScalarFn("exp", np.exp, np.exp, _exp_dd)
LOG = ScalarFn("log", np.log, lambda x: 1.0 / x, _log_dd, needs_positive=True)


def power(r: float) -> ScalarFn:
    r = float(r)

    def val(x):
        return np.power(x, r)

    def der(x):
        return r * np.power(x, r - 1.0)

    def dd(a, b):
        return np.power(a, r) * np.expm1(r * np.log1p((b - a) / a)) / (b - a)

    integral = float(r).is_integer() and r >= 0
    return ScalarFn(f"pow({r:g})", val, der, None if integral else dd, needs_positive=not integral)


def resolve_fn(fn, r: float | None = None) -> ScalarFn:
    if isinstance(fn, ScalarFn):
        return fn
    if fn == "exp":
        return EXP
    if fn == "log":
        return LOG
    if fn == "pow":
        if r is None:
            raise ValueError("pow requires an exponent r")
        return power(r)
    raise ValueError(f"unsupported scalar function {fn!r}")


def divided_differences(f: ScalarFn, w: np.ndarray, tol_rel: float = TOL_DD_REL) -> np.ndarray:
    """Matrix ``K[i, j] = (f(w_i) - f(w_j)) / (w_i - w_j)`` with the derivative on near-ties."""
    w = np.asarray(w, dtype=float)
    a = w[:, None]
    b = w[None, :]
    gap = b - a
    tol = tol_rel * max(float(np.max(np.abs(w))), 1e-300)
    close = np.abs(gap) < tol
    safe_b = np.where(close, a + 1.0, b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if f.divdiff is not None:
            k = f.divdiff(a * np.ones_like(b), safe_b)
        else:
            k = (f.value(safe_b) - f.value(a)) / (safe_b - a)
    mid = 0.5 * (a + b)
    return np.where(close, f.deriv(mid), k)


def _check_domain(f: ScalarFn, w: np.ndarray) -> None:
    if f.needs_positive and np.min(w) <= 0:
        raise DomainError(f"{f.name} needs a strictly positive spectrum, min eigenvalue {np.min(w):.3e}")


def matrix_fn(m, fn, r: float | None = None) -> np.ndarray:
    f = resolve_fn(fn, r)
    e = herm_eig(m)
    _check_domain(f, e.eigenvalues)
    return hermitian_part(e.reconstruct(f.value(e.eigenvalues)))


def frechet_derivative(fn, omega, a, r: float | None = None) -> np.ndarray:
    """Derivative of ``X -> f(X)`` at ``omega`` applied to ``a``.

    For Hermitian ``a`` this also equals the gradient of ``X -> Tr[a f(X)]``
    at ``omega``; for ``log`` it coincides with the resolvent integral
    ``int_0^inf (omega + s)^-1 a (omega + s)^-1 ds``.
    """
    f = resolve_fn(fn, r)
    e = herm_eig(omega)
    _check_domain(f, e.eigenvalues)
    return frechet_in_eigenbasis(f, e, a)


def frechet_in_eigenbasis(f: ScalarFn, e: HermitianEig, a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (e.dim, e.dim):
        raise ShapeMismatch(f"direction shape {a.shape} vs dim {e.dim}")
    u = e.eigenvectors
    k = divided_differences(f, e.eigenvalues)
    return u @ (k * (u.conj().T @ a @ u)) @ u.conj().T


def operator_norm(m) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def is_unitary(u, tol: float = TOL_UNITARY) -> bool:
    u = np.asarray(u)
    return operator_norm(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep`` (factor order preserved)."""
    m = np.asarray(m, dtype=complex)
    dims = [int(x) for x in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ShapeMismatch(f"dims {dims} do not match matrix shape {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeMismatch(f"keep {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(kd, kd)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * hermitian_part(g) / np.sqrt(2.0)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
