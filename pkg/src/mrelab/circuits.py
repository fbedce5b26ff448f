"""Parametrized unitaries, induced outcome distributions and finite parameter grids."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import BadParams, DomainError, FitFailed, ShapeMismatch
from .opmat import operator_norm
from .rng import as_generator, derive_seed
from .states import ClassicalDist

GIVENS = "givens"
QUBIT_LAYERS = "qubit_layers"


def wrap_angles(theta) -> np.ndarray:
    """Map angles into [-pi, pi]."""
    t = np.asarray(theta, dtype=float)
    w = np.mod(t + np.pi, 2 * np.pi) - np.pi
    # keep +pi as +pi rather than flipping it to -pi
    return np.where((w == -np.pi) & (t > 0), np.pi, w)


# --- ansatz -----------------------------------------------------------------


def _givens_slots(d: int) -> list[tuple[int, int]]:
    """(column, row) of each rotation in application order; rotation acts on rows (row-1, row)."""
    return [(c, r) for c in range(d - 1) for r in range(d - 1, c, -1)]


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def cnot_ladder(n: int) -> np.ndarray:
    """Permutation matrix of CNOT(0,1) CNOT(1,2) ... CNOT(n-2,n-1); qubit 0 is most significant."""
    d = 2**n
    perm = np.arange(d)
    for q in range(n - 1):
        ctrl = 1 << (n - 1 - q)
        tgt = 1 << (n - 2 - q)
        perm = np.where(perm & ctrl, perm ^ tgt, perm)
    # perm[k] is the image of basis state k after the whole ladder
    c = np.zeros((d, d), dtype=complex)
    c[perm, np.arange(d)] = 1.0
    return c


@dataclass(frozen=True)
class CircuitAnsatz:
    """Either a Givens chain on C^d or a layered qubit circuit on (C^2)^n."""

    dim: int
    kind: str
    num_qubits: int = 0
    depth: int = 0

    def __post_init__(self):
        if self.kind == GIVENS:
            if self.dim < 1:
                raise BadParams("dimension must be positive")
        elif self.kind == QUBIT_LAYERS:
            if self.num_qubits < 1 or self.depth < 1 or self.dim != 2**self.num_qubits:
                raise BadParams("qubit ansatz needs num_qubits >= 1, depth >= 1 and dim = 2**num_qubits")
        else:
            raise BadParams(f"unknown ansatz kind {self.kind!r}")

    @classmethod
    def givens(cls, d: int) -> "CircuitAnsatz":
        return cls(dim=d, kind=GIVENS)

    @classmethod
    def qubit_layers(cls, num_qubits: int, depth: int) -> "CircuitAnsatz":
        return cls(dim=2**num_qubits, kind=QUBIT_LAYERS, num_qubits=num_qubits, depth=depth)

    @property
    def param_count(self) -> int:
        if self.kind == GIVENS:
            d = self.dim
            return d * (d - 1) + (d - 1)
        return 2 * self.num_qubits * self.depth

    def unitary(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float).ravel()
        if t.shape[0] != self.param_count:
            raise ShapeMismatch(f"expected {self.param_count} parameters, got {t.shape[0]}")
        if self.kind == GIVENS:
            return _givens_unitary(self.dim, t)
        return _layers_unitary(self.num_qubits, self.depth, t)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "num_qubits": self.num_qubits, "depth": self.depth}

    @classmethod
    def from_dict(cls, doc: dict) -> "CircuitAnsatz":
        return cls(dim=int(doc["dim"]), kind=doc["kind"], num_qubits=int(doc.get("num_qubits", 0)), depth=int(doc.get("depth", 0)))


def _givens_unitary(d: int, t: np.ndarray) -> np.ndarray:
    slots = _givens_slots(d)
    m = len(slots)
    angles, phases, diag = t[:m], t[m : 2 * m], t[2 * m :]
    u = np.diag(np.concatenate([[1.0], np.exp(1j * diag)])).astype(complex)
    # U = G_1 ... G_m D, built right to left
    for k in range(m - 1, -1, -1):
        _, r = slots[k]
        c, s = math.cos(angles[k]), math.sin(angles[k])
        e = np.exp(1j * phases[k])
        top = u[r - 1].copy()
        bot = u[r].copy()
        u[r - 1] = c * top - np.conj(e) * s * bot
        u[r] = e * s * top + c * bot
    return u


_LADDER_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _ladders(n: int, depth: int):
    key = (n, depth)
    if key not in _LADDER_CACHE:
        c = cnot_ladder(n)
        undo = np.linalg.matrix_power(c.conj().T, depth)
        _LADDER_CACHE[key] = (c, undo)
    return _LADDER_CACHE[key]


def _layers_unitary(n: int, depth: int, t: np.ndarray) -> np.ndarray:
    c, undo = _ladders(n, depth)
    u = np.eye(2**n, dtype=complex)
    t = t.reshape(depth, n, 2)
    for layer in range(depth):
        r = np.ones((1, 1), dtype=complex)
        for q in range(n):
            r = np.kron(r, _rz(t[layer, q, 1]) @ _ry(t[layer, q, 0]))
        u = u @ r @ c
    # trailing inverse ladder makes theta = 0 the identity; it only permutes outcome labels
    return u @ undo


def build_unitary(ansatz: CircuitAnsatz, theta) -> np.ndarray:
    if isinstance(theta, ParamPoint):
        theta = theta.array
    return ansatz.unitary(theta)


def givens_decompose(u) -> tuple[np.ndarray, float]:
    """Angles ``theta`` and global phase ``g`` with ``u = exp(i g) U(theta)`` for the Givens chain."""
    m = np.array(u, dtype=complex)
    d = m.shape[0]
    slots = _givens_slots(d)
    k = len(slots)
    angles = np.zeros(k)
    phases = np.zeros(k)
    for idx, (c, r) in enumerate(slots):
        a, b = m[r - 1, c], m[r, c]
        th = math.atan2(abs(b), abs(a))
        ph = (np.angle(b) - np.angle(a)) if abs(b) > 0 else 0.0
        angles[idx], phases[idx] = th, ph
        cs, sn = math.cos(th), math.sin(th)
        e = np.exp(1j * ph)
        top = m[r - 1].copy()
        bot = m[r].copy()
        # apply G^dagger on rows (r-1, r)
        m[r - 1] = cs * top + np.conj(e) * sn * bot
        m[r] = -e * sn * top + cs * bot
    dphase = np.angle(np.diag(m))
    g = float(dphase[0])
    theta = np.concatenate([angles, phases, dphase[1:] - g])
    return wrap_angles(theta), g


def phase_aligned_distance(u_star, v) -> float:
    """min over global phases phi of ||u_star - e^{i phi} v|| (operator norm)."""
    u_star = np.asarray(u_star)
    v = np.asarray(v)
    phi0 = float(np.angle(np.trace(v.conj().T @ u_star)))

    def dist(phi):
        return operator_norm(u_star - np.exp(1j * phi) * v)

    best = dist(phi0)
    if best < 1e-12:
        return best
    res = minimize_scalar(dist, bounds=(phi0 - 0.5, phi0 + 0.5), method="bounded", options={"xatol": 1e-12})
    return float(min(best, res.fun))


# --- parameter points and grids ---------------------------------------------


@dataclass(frozen=True)
class ParamPoint:
    theta: tuple

    def __post_init__(self):
        arr = np.asarray(self.theta, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite angle")
        if np.any(np.abs(arr) > np.pi + 1e-12):
            raise DomainError("angles must lie in [-pi, pi]")
        object.__setattr__(self, "theta", tuple(float(x) for x in arr))

    @classmethod
    def wrapped(cls, theta) -> "ParamPoint":
        return cls(tuple(wrap_angles(theta)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.theta)

    def __len__(self):
        return len(self.theta)


@dataclass(frozen=True)
class ParamGrid:
    points: tuple
    provenance: str
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = tuple(p if isinstance(p, ParamPoint) else ParamPoint.wrapped(p) for p in self.points)
        if not pts:
            raise BadParams("parameter grid must be nonempty")
        if len(set(pts)) != len(pts):
            raise BadParams("parameter grid contains duplicate points")
        if len({len(p) for p in pts}) != 1:
            raise ShapeMismatch("grid points have different lengths")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def uniform(cls, ansatz: CircuitAnsatz, resolution: int, max_points: int = 100_000) -> "ParamGrid":
        """Tensor grid with ``resolution`` equispaced angles per parameter (including 0)."""
        if resolution < 1:
            raise BadParams("resolution must be positive")
        total = resolution**ansatz.param_count
        if total > max_points:
            raise BadParams(f"uniform grid would have {total} points (cap {max_points})")
        axis = wrap_angles(np.arange(resolution) * (2 * np.pi / resolution))
        pts = [ParamPoint(tuple(p)) for p in itertools.product(axis, repeat=ansatz.param_count)]
        return cls(tuple(pts), "uniform", {"resolution": resolution})

    @classmethod
    def seeded_random(cls, ansatz: CircuitAnsatz, count: int, seed: int) -> "ParamGrid":
        if count < 1:
            raise BadParams("count must be positive")
        rng = as_generator(seed)
        pts = [ParamPoint(tuple(rng.uniform(-np.pi, np.pi, ansatz.param_count))) for _ in range(count)]
        return cls(tuple(pts), "seeded_random", {"count": count, "seed": int(seed)})

    @classmethod
    def singleton(cls, theta) -> "ParamGrid":
        p = theta if isinstance(theta, ParamPoint) else ParamPoint.wrapped(theta)
        return cls((p,), "singleton")

    def augmented(self, extra, info: dict | None = None) -> "ParamGrid":
        extra = [p if isinstance(p, ParamPoint) else ParamPoint.wrapped(p) for p in extra]
        seen = set(self.points)
        new = list(self.points) + [p for p in extra if p not in seen]
        doc = {"base": self.provenance, "extra": len(new) - len(self.points)}
        doc.update(info or {})
        return ParamGrid(tuple(new), "augmented", doc)

    def to_dict(self) -> dict:
        return {"provenance": self.provenance, "info": self.info, "points": [list(p.theta) for p in self.points]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ParamGrid":
        return cls(tuple(ParamPoint(tuple(p)) for p in doc["points"]), doc["provenance"], dict(doc.get("info", {})))

    @classmethod
    def from_json(cls, text: str) -> "ParamGrid":
        return cls.from_dict(json.loads(text))


def fit_unitary(ansatz: CircuitAnsatz, u_star, starts: int = 8, rng=None) -> tuple[ParamPoint, float]:
    """Parameters whose circuit is closest to ``u_star`` up to global phase, and the achieved distance."""
    u_star = np.asarray(u_star, dtype=complex)
    if u_star.shape != (ansatz.dim, ansatz.dim):
        raise ShapeMismatch("target unitary has the wrong dimension")
    if ansatz.kind == GIVENS:
        theta, _ = givens_decompose(u_star)
        return ParamPoint(tuple(theta)), phase_aligned_distance(u_star, ansatz.unitary(theta))

    rng = as_generator(rng)
    p = ansatz.param_count

    def resid(x):
        diff = ansatz.unitary(x[:p]) - np.exp(1j * x[p]) * u_star
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    best_theta, best = np.zeros(p), phase_aligned_distance(u_star, ansatz.unitary(np.zeros(p)))
    inits = [np.zeros(p)] + [rng.uniform(-np.pi, np.pi, p) for _ in range(max(0, starts - 1))]
    for x0 in inits:
        phi0 = float(np.angle(np.trace(u_star.conj().T @ ansatz.unitary(x0))))
        out = least_squares(resid, np.concatenate([x0, [phi0]]), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
        theta = wrap_angles(out.x[:p])
        dist = phase_aligned_distance(u_star, ansatz.unitary(theta))
        if dist < best:
            best_theta, best = theta, dist
        if best < 1e-10:
            break
    return ParamPoint(tuple(best_theta)), best


def grid_with_oracle(base: ParamGrid, ansatz: CircuitAnsatz, u_star, delta_cap: float | None = None, starts: int = 8, rng=None) -> ParamGrid:
    """``base`` plus a point fitted to ``u_star``; the achieved distance is stored in ``info['delta']``."""
    point, delta = fit_unitary(ansatz, u_star, starts=starts, rng=rng)
    if delta_cap is not None and delta > delta_cap:
        raise FitFailed(f"fitted distance {delta:.3e} exceeds cap {delta_cap:.3e}", delta)
    grid = base.augmented([point], {"delta": delta})
    grid.info["oracle_index"] = grid.points.index(point)
    return grid


# --- measurement and sampling -----------------------------------------------


def measurement_dist(u, state) -> ClassicalDist:
    """Outcome law ``p(i) = <i| U^dag rho U |i>`` of measuring rho in the columns of U."""
    u = np.asarray(u)
    rho = np.asarray(state)
    if u.shape != rho.shape or u.ndim != 2:
        raise ShapeMismatch(f"unitary {u.shape} vs state {rho.shape}")
    p = np.real(np.einsum("ji,jk,ki->i", u.conj(), rho, u))
    clipped = np.clip(p, 0.0, None)
    if float(np.sum(clipped - p)) >= 1e-10:
        raise DomainError("state has significant negative outcome probabilities")
    return ClassicalDist(clipped / clipped.sum())


@dataclass(frozen=True, eq=False)
class OutcomeSample:
    outcomes: np.ndarray  # 1-based indices
    source: str
    theta: tuple | None = None
    seed: int | None = None

    def __post_init__(self):
        o = np.asarray(self.outcomes, dtype=np.int64)
        if o.ndim != 1:
            raise ShapeMismatch("outcomes must be one-dimensional")
        if o.size and o.min() < 1:
            raise DomainError("outcome indices start at 1")
        object.__setattr__(self, "outcomes", o)

    def __len__(self):
        return self.outcomes.shape[0]

    def histogram(self, d: int) -> np.ndarray:
        """Empirical frequencies over indices 1..d."""
        if self.outcomes.size and self.outcomes.max() > d:
            raise DomainError(f"outcome {self.outcomes.max()} exceeds dimension {d}")
        return np.bincount(self.outcomes - 1, minlength=d)[:d] / max(len(self), 1)


def sample_outcomes(dist, n: int, rng_stream, source: str = "rho", theta=None, seed: int | None = None) -> OutcomeSample:
    """``n`` i.i.d. draws (1-based) by inverse CDF; ``rng_stream`` is a Generator or an int seed."""
    if n < 1:
        raise BadParams("n must be at least 1")
    if not isinstance(rng_stream, np.random.Generator) and seed is None and rng_stream is not None:
        seed = int(rng_stream)
    rng = as_generator(rng_stream)
    p = np.asarray(dist, dtype=float)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, p.shape[0] - 1)
    return OutcomeSample(idx + 1, source, theta, seed)


def sample_seed(master_seed: int, *path: int) -> int:
    return derive_seed(master_seed, *path)
