"""Models for the eigenvalue function f: a lookup table, a truncated ReLU network and a polynomial.

Outcome indices are 1-based. The table model reads ``beta[i-1]`` directly; the
network and the polynomial are evaluated at the scalar embedding ``x = i/d``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import comb

from .errors import BadParams, IndexOutOfRange, ShapeMismatch

BOUND_TOL = 1e-12
MONOMIAL_MAX_DEGREE = 30


def _check_index(i: int, d: int) -> int:
    i = int(i)
    if not 1 <= i <= d:
        raise IndexOutOfRange(f"index {i} outside 1..{d}")
    return i


def embed_points(d: int) -> np.ndarray:
    return np.arange(1, d + 1) / d


# --- shallow table ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShallowModel:
    dim: int
    beta: np.ndarray
    bound_logb: float

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float).ravel()
        if b.shape[0] != self.dim:
            raise ShapeMismatch(f"beta has {b.shape[0]} entries for dimension {self.dim}")
        if self.bound_logb <= 0:
            raise BadParams("bound must be positive")
        if np.any(np.abs(b) > self.bound_logb + BOUND_TOL):
            raise BadParams(f"|beta| exceeds the bound {self.bound_logb:g}")
        object.__setattr__(self, "beta", b)

    kind = "shallow"

    @classmethod
    def zeros(cls, d: int, logb: float) -> "ShallowModel":
        return cls(d, np.zeros(d), logb)

    def table(self) -> np.ndarray:
        return self.beta.copy()

    def params(self) -> np.ndarray:
        return self.beta.copy()

    def with_params(self, v) -> "ShallowModel":
        return ShallowModel(self.dim, np.clip(v, -self.bound_logb, self.bound_logb), self.bound_logb)

    def table_vjp(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "beta": self.beta.tolist(), "bound_logb": self.bound_logb}


# --- truncated ReLU network -------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeepReluModel:
    """Scalar-input ReLU network; the output is saturated at +-``bound_logb``.

    ``layers`` holds ``(W, b)`` pairs; every hidden layer applies a ReLU and
    the final affine map produces one output.
    """

    dim: int
    layers: tuple
    bound_logb: float
    max_width: int = 9
    max_entry: float = 1.0

    kind = "deep"

    def __post_init__(self):
        layers = tuple((np.atleast_2d(np.asarray(w, float)), np.asarray(b, float).ravel()) for w, b in self.layers)
        if not layers:
            raise BadParams("network needs at least one layer")
        fan_in = 1
        for w, b in layers:
            if w.shape[1] != fan_in or w.shape[0] != b.shape[0]:
                raise ShapeMismatch("layer shapes do not chain")
            fan_in = w.shape[0]
        if layers[-1][0].shape[0] != 1:
            raise ShapeMismatch("network must have a single output")
        if any(w.shape[0] > self.max_width for w, _ in layers[:-1]):
            raise BadParams(f"hidden width exceeds {self.max_width}")
        if any(np.max(np.abs(w)) > self.max_entry + BOUND_TOL or (b.size and np.max(np.abs(b)) > self.max_entry + BOUND_TOL) for w, b in layers):
            raise BadParams(f"weights exceed the entry cap {self.max_entry:g}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def random(cls, d: int, logb: float, rng: np.random.Generator, depth: int = 8, width: int = 9, max_entry: float = 1.0) -> "DeepReluModel":
        """He-style initialization clipped to the entry cap; ``depth`` counts affine maps."""
        if depth < 1:
            raise BadParams("depth must be at least 1")
        sizes = [1] + [width] * (depth - 1) + [1]
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
            layers.append((np.clip(w, -max_entry, max_entry), np.zeros(fan_out)))
        return cls(d, tuple(layers), logb, max_width=width, max_entry=max_entry)

    def raw(self, x) -> np.ndarray:
        """Pre-saturation output at points ``x``."""
        a = np.atleast_1d(np.asarray(x, float))[None, :]
        for k, (w, b) in enumerate(self.layers):
            a = w @ a + b[:, None]
            if k < len(self.layers) - 1:
                a = np.maximum(a, 0.0)
        return a[0]

    def at(self, x) -> np.ndarray:
        return np.clip(self.raw(x), -self.bound_logb, self.bound_logb)

    def table(self) -> np.ndarray:
        return self.at(embed_points(self.dim))

    def params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    def with_params(self, v) -> "DeepReluModel":
        v = np.clip(np.asarray(v, float), -self.max_entry, self.max_entry)
        out, pos = [], 0
        for w, b in self.layers:
            nw, nb = w.size, b.size
            out.append((v[pos : pos + nw].reshape(w.shape), v[pos + nw : pos + nw + nb]))
            pos += nw + nb
        return replace(self, layers=tuple(out))

    def table_vjp(self, g: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_i g_i f(x_i)`` with respect to the flat parameters."""
        x = embed_points(self.dim)[None, :]
        acts = [x]
        pre = []
        a = x
        for k, (w, b) in enumerate(self.layers):
            z = w @ a + b[:, None]
            pre.append(z)
            a = np.maximum(z, 0.0) if k < len(self.layers) - 1 else z
            acts.append(a)
        out = pre[-1][0]
        live = (np.abs(out) < self.bound_logb).astype(float)
        delta = (np.asarray(g, float) * live)[None, :]
        grads = []
        for k in range(len(self.layers) - 1, -1, -1):
            w, _ = self.layers[k]
            grads.append((delta @ acts[k].T, delta.sum(axis=1)))
            if k:
                delta = (w.T @ delta) * (pre[k - 1] > 0)
        grads.reverse()
        return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "bound_logb": self.bound_logb,
            "max_width": self.max_width,
            "max_entry": self.max_entry,
            "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in self.layers],
        }


# --- polynomial -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolyModel:
    """Degree-k polynomial on [0, 1].

    High-degree Bernstein fits keep their node values instead of monomial
    coefficients; ``coeffs`` is then empty and evaluation uses the Bernstein basis.
    """

    degree: int
    coeffs: np.ndarray
    coeff_bound: float
    dim: int = 1
    clamp_logb: float | None = None
    nodes: np.ndarray | None = field(default=None)

    kind = "poly"

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).ravel()
        if self.degree < 0:
            raise BadParams("degree must be nonnegative")
        if self.nodes is None:
            if c.shape[0] != self.degree + 1:
                raise ShapeMismatch("need degree + 1 coefficients")
            if np.max(np.abs(c)) > self.coeff_bound * (1 + 1e-12) + BOUND_TOL:
                raise BadParams("coefficient exceeds coeff_bound")
        else:
            nodes = np.asarray(self.nodes, float).ravel()
            if nodes.shape[0] != self.degree + 1:
                raise ShapeMismatch("need degree + 1 Bernstein node values")
            object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coeffs", c)

    @property
    def in_bernstein_basis(self) -> bool:
        return self.nodes is not None and self.coeffs.size == 0

    def raw(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, float))
        if self.nodes is not None:
            # the Bernstein form is far better conditioned than the monomial expansion
            return bernstein_basis(self.degree, x) @ self.nodes
        acc = np.zeros_like(x)
        for a in self.coeffs[::-1]:
            acc = acc * x + a
        return acc

    def at(self, x) -> np.ndarray:
        v = self.raw(x)
        return v if self.clamp_logb is None else np.clip(v, -self.clamp_logb, self.clamp_logb)

    def table(self) -> np.ndarray:
        return self.at(embed_points(self.dim))

    def params(self) -> np.ndarray:
        return self.coeffs.copy()

    def with_params(self, v) -> "PolyModel":
        v = np.clip(np.asarray(v, float), -self.coeff_bound, self.coeff_bound)
        return replace(self, coeffs=v, nodes=None)

    def table_vjp(self, g: np.ndarray) -> np.ndarray:
        x = embed_points(self.dim)
        raw = self.raw(x)
        live = np.ones_like(raw) if self.clamp_logb is None else (np.abs(raw) < self.clamp_logb).astype(float)
        vander = x[:, None] ** np.arange(self.degree + 1)[None, :]
        return vander.T @ (np.asarray(g, float) * live)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degree": self.degree,
            "coeffs": self.coeffs.tolist(),
            "coeff_bound": self.coeff_bound,
            "dim": self.dim,
            "clamp_logb": self.clamp_logb,
            "nodes": None if self.nodes is None else self.nodes.tolist(),
        }


EigenvalueModel = ShallowModel | DeepReluModel | PolyModel


def eval_model(model, i: int) -> float:
    """Model value at outcome index ``i`` (1-based)."""
    i = _check_index(i, model.dim)
    if isinstance(model, ShallowModel):
        return float(model.beta[i - 1])
    return float(model.at(i / model.dim)[0])


def model_table(model) -> np.ndarray:
    return model.table()


def project_to_bound(model, logb: float):
    """Force every model value into [-logb, logb]."""
    if isinstance(model, ShallowModel):
        return ShallowModel(model.dim, np.clip(model.beta, -logb, logb), logb)
    if isinstance(model, DeepReluModel):
        return replace(model, bound_logb=float(logb))
    if isinstance(model, PolyModel):
        cl = float(logb) if model.clamp_logb is None else min(model.clamp_logb, float(logb))
        return replace(model, clamp_logb=cl)
    raise TypeError(f"unsupported model {type(model).__name__}")


def model_to_json(model) -> str:
    return json.dumps(model.to_dict())


def model_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "shallow":
        return ShallowModel(int(doc["dim"]), np.array(doc["beta"]), float(doc["bound_logb"]))
    if kind == "deep":
        layers = tuple((np.array(l["w"]), np.array(l["b"])) for l in doc["layers"])
        return DeepReluModel(int(doc["dim"]), layers, float(doc["bound_logb"]), int(doc["max_width"]), float(doc["max_entry"]))
    if kind == "poly":
        nodes = None if doc.get("nodes") is None else np.array(doc["nodes"])
        return PolyModel(int(doc["degree"]), np.array(doc["coeffs"]), float(doc["coeff_bound"]), int(doc["dim"]), doc.get("clamp_logb"), nodes)
    raise BadParams(f"unknown model kind {kind!r}")


def model_from_json(text: str):
    return model_from_dict(json.loads(text))


# --- Bernstein approximation ------------------------------------------------


def bernstein_basis(k: int, x) -> np.ndarray:
    """Matrix B[p, m] = C(k, m) x_p^m (1 - x_p)^(k - m)."""
    x = np.asarray(x, float)[:, None]
    m = np.arange(k + 1)[None, :]
    return comb(k, m) * x**m * (1.0 - x) ** (k - m)


def bernstein_monomials(nodes: np.ndarray) -> np.ndarray:
    """Monomial coefficients of sum_m B_{m,k}(x) nodes[m]."""
    k = nodes.shape[0] - 1
    out = np.empty(k + 1)
    for j in range(k + 1):
        s = sum((-1) ** (j - m) * math.comb(j, m) * nodes[m] for m in range(j + 1))
        out[j] = math.comb(k, j) * s
    return out


def bernstein_fit(f: Callable[[np.ndarray], np.ndarray], k: int, dim: int = 1) -> PolyModel:
    """Degree-k Bernstein polynomial of ``f`` on [0, 1]."""
    if k < 1:
        raise BadParams("degree must be at least 1")
    nodes = np.asarray(f(np.arange(k + 1) / k), float)
    if k <= MONOMIAL_MAX_DEGREE:
        coeffs = bernstein_monomials(nodes)
        return PolyModel(k, coeffs, float(np.max(np.abs(coeffs))), dim=dim, nodes=nodes)
    bound = float(2.0**k * math.factorial(k) * np.max(np.abs(nodes)))
    return PolyModel(k, np.empty(0), bound, dim=dim, nodes=nodes)


def piecewise_linear_interpolant(values) -> Callable[[np.ndarray], np.ndarray]:
    """Affine interpolation through (0, 0) and (i/d, values[i-1]) for i = 1..d."""
    v = np.asarray(values, float).ravel()
    d = v.shape[0]
    xs = np.arange(d + 1) / d
    ys = np.concatenate([[0.0], v])

    def fhat(x):
        return np.interp(np.asarray(x, float), xs, ys)

    fhat.knots = (xs, ys)
    return fhat


def lipschitz_constant(fhat) -> float:
    """Exact Lipschitz constant of a piecewise-linear function built above."""
    xs, ys = fhat.knots
    return float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
