"""Density operators, the Thompson metric, and generators of benchmark state pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, DomainError, ShapeMismatch, SingularState
from .opmat import (
    check_hermitian,
    haar_unitary,
    herm_eig,
    hermitian_part,
    matrix_fn,
    operator_norm,
    partial_trace,
)

POS_FLOOR = 1e-9
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
DIST_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = check_hermitian(self.matrix)
        w = np.linalg.eigvalsh(m)
        if w[0] < -PSD_TOL:
            raise DomainError(f"not positive semidefinite: min eigenvalue {w[0]:.3e}")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"trace {tr!r} differs from 1")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_min_eig", float(w[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eig

    @property
    def strictly_positive(self) -> bool:
        return self._min_eig >= POS_FLOOR

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @classmethod
    def normalized(cls, m) -> "DensityMatrix":
        m = hermitian_part(np.asarray(m, dtype=complex))
        return cls(m / np.trace(m).real)

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=float)).astype(complex))


@dataclass(frozen=True, eq=False)
class ClassicalDist:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1:
            raise ShapeMismatch("probability vector must be one-dimensional")
        if np.any(p < 0) or abs(p.sum() - 1.0) > DIST_TOL:
            raise DomainError(f"not a probability vector (min {p.min():.3e}, sum {p.sum()!r})")
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)


def _mat(x) -> np.ndarray:
    return np.asarray(x, dtype=complex)


def _require_positive(m: np.ndarray, label: str) -> None:
    w = np.linalg.eigvalsh(hermitian_part(m))
    if w[0] < POS_FLOOR:
        raise SingularState(f"{label} has min eigenvalue {w[0]:.3e} below {POS_FLOOR:g}")


def dmax(rho, sigma) -> float:
    """Max-relative entropy ``log || sigma^-1/2 rho sigma^-1/2 ||`` in nats."""
    r, s = _mat(rho), _mat(sigma)
    _require_positive(s, "sigma")
    s_isqrt = matrix_fn(s, "pow", -0.5)
    return float(np.log(operator_norm(hermitian_part(s_isqrt @ r @ s_isqrt))))


def thompson_metric(rho, sigma) -> float:
    r, s = _mat(rho), _mat(sigma)
    _require_positive(r, "rho")
    _require_positive(s, "sigma")
    return max(dmax(r, s), dmax(s, r), 0.0)


@dataclass(frozen=True, eq=False)
class StatePair:
    rho: DensityMatrix
    sigma: DensityMatrix
    class_bound_b: float | None = None
    seed: int | None = None
    thompson: float = field(default=float("nan"))

    def __post_init__(self):
        if not isinstance(self.rho, DensityMatrix):
            object.__setattr__(self, "rho", DensityMatrix(self.rho))
        if not isinstance(self.sigma, DensityMatrix):
            object.__setattr__(self, "sigma", DensityMatrix(self.sigma))
        if self.rho.dim != self.sigma.dim:
            raise ShapeMismatch("rho and sigma dimensions differ")
        t = thompson_metric(self.rho, self.sigma)
        object.__setattr__(self, "thompson", t)
        if self.class_bound_b is not None:
            if self.class_bound_b < 1:
                raise BadParams("class bound b must be >= 1")
            if t > np.log(self.class_bound_b) + 1e-9:
                raise BadParams(f"pair has Thompson metric {t:.6g} > log b = {np.log(self.class_bound_b):.6g}")

    @property
    def dim(self) -> int:
        return self.rho.dim

    @property
    def logb(self) -> float | None:
        return None if self.class_bound_b is None else float(np.log(self.class_bound_b))

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m.matrix]

        return {
            "dim": self.dim,
            "b": self.class_bound_b,
            "rho": enc(self.rho),
            "sigma": enc(self.sigma),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "StatePair":
        def dec(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)

        rho, sigma = dec(doc["rho"]), dec(doc["sigma"])
        if rho.shape != (doc["dim"], doc["dim"]) or sigma.shape != rho.shape:
            raise ShapeMismatch("matrix shape does not match 'dim'")
        return cls(DensityMatrix(rho), DensityMatrix(sigma), doc.get("b"), doc.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "StatePair":
        return cls.from_dict(json.loads(text))


# --- generators -------------------------------------------------------------


def random_full_rank_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-rotated state with a Dirichlet(1, ..., 1) spectrum."""
    spec = rng.dirichlet(np.ones(d))
    spec = np.maximum(spec, 1e-6)
    spec /= spec.sum()
    u = haar_unitary(d, rng)
    return hermitian_part((u * spec) @ u.conj().T)


def sample_pair_in_class(d: int, b: float, rng: np.random.Generator, seed: int | None = None) -> StatePair:
    """Draw a strictly positive pair with Thompson metric at most ``log b``.

    Two random full-rank states are drawn and ``sigma`` is mixed toward ``rho``
    along ``(1 - t) sigma + t rho``; the metric is non-increasing in ``t`` so a
    bisection on ``t`` lands on (or inside) the class boundary.
    """
    if b <= 1:
        raise BadParams("b must exceed 1")
    logb = float(np.log(b))
    rho = random_full_rank_state(d, rng)
    sigma = random_full_rank_state(d, rng)
    target = logb * (1.0 - 1e-9)

    def mix(t):
        return hermitian_part((1.0 - t) * sigma + t * rho)

    if thompson_metric(rho, sigma) > target:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if thompson_metric(rho, mix(mid)) > target:
                lo = mid
            else:
                hi = mid
        sigma = mix(hi)
    rho_dm = DensityMatrix.normalized(rho)
    sigma_dm = DensityMatrix.normalized(sigma)
    return StatePair(rho_dm, sigma_dm, class_bound_b=float(b), seed=seed)


def lecam_distributions(d: int, b: float, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The two-point hard instance ``(P, Q1, Q2)`` on ``d`` symbols."""
    if d < 2 or b < 2 or not (0 < eps < 0.5):
        raise BadParams("need d >= 2, b >= 2 and eps in (0, 0.5)")
    p = np.full(d, 1.0 / (2 * (d - 1)))
    p[-1] = 0.5
    q1 = np.full(d, (1 - eps) / (b * (d - 1)))
    q1[-1] = 1 - (1 - eps) / b
    q2 = np.full(d, (1 + eps) / (b * (d - 1)))
    q2[-1] = 1 - (1 + eps) / b
    for v in (p, q1, q2):
        if np.any(v <= 0):
            raise BadParams("parameters give a nonpositive probability")
    return p, q1, q2


def lecam_pair(d: int, b: float, eps: float, which: str = "Q1") -> StatePair:
    p, q1, q2 = lecam_distributions(d, b, eps)
    q = {"Q1": q1, "Q2": q2}.get(which)
    if q is None:
        raise BadParams("which must be 'Q1' or 'Q2'")
    return StatePair(DensityMatrix.diagonal(p), DensityMatrix.diagonal(q), class_bound_b=float(b))


def random_channel(d_in: int, d_out: int, d_env: int, rng: np.random.Generator):
    """Random CPTP map from a Haar isometry ``C^d_in -> C^d_out (x) C^d_env``."""
    big = d_out * d_env
    if big < d_in:
        raise BadParams("isometry needs d_out * d_env >= d_in")
    v = haar_unitary(big, rng)[:, :d_in]

    def channel(m):
        return hermitian_part(partial_trace(v @ np.asarray(m) @ v.conj().T, [d_out, d_env], [0]))

    return channel


def commuting_pair(d: int, rng: np.random.Generator, floor: float = 0.02) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Random states diagonal in a shared Haar basis; returns ``(rho, sigma, p, q)``."""
    p = rng.dirichlet(np.ones(d)) + floor
    q = rng.dirichlet(np.ones(d)) + floor
    p /= p.sum()
    q /= q.sum()
    u = haar_unitary(d, rng)
    rho = hermitian_part((u * p) @ u.conj().T)
    sigma = hermitian_part((u * q) @ u.conj().T)
    return rho, sigma, p, q


def spectrum(m) -> np.ndarray:
    return herm_eig(m).eigenvalues
