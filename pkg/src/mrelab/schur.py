"""Schur-Weyl decomposition of N qubits and the induced compression/embedding channels.

The total-spin basis is built by coupling one spin-1/2 at a time. Each coupling
history (a string of +/- choices that keeps j >= 0) labels one copy of the
spin-j irrep, so for fixed j the histories index the multiplicity space V_j
and the magnetic number m indexes W_j. Histories are ordered lexicographically
with '+' before '-'.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadParams, NotPermutationInvariant, ShapeMismatch
from .opmat import hermitian_part, operator_norm
from .qne import QneConfig, estimate
from .oracle import measured
from .states import DensityMatrix, StatePair, sample_pair_in_class
from .tables import write_csv

MAX_QUBITS = 8
PERM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Sector:
    j: Fraction
    dim_w: int
    dim_v: int
    isometry: np.ndarray  # 2^N x (dim_w * dim_v), column (m_index, path_index) row-major
    paths: tuple


@dataclass(frozen=True, eq=False)
class SchurDecomposition:
    num_qubits: int
    sectors: tuple

    @property
    def ambient_dim(self) -> int:
        return 2**self.num_qubits

    @property
    def compressed_dim(self) -> int:
        return sum(s.dim_w for s in self.sectors)

    def offsets(self) -> list[int]:
        """Start index of each W block inside the compressed space."""
        out, pos = [], 0
        for s in self.sectors:
            out.append(pos)
            pos += s.dim_w
        return out

    def table(self) -> list[dict]:
        return [{"N": self.num_qubits, "j": float(s.j), "dim_W": s.dim_w, "dim_V": s.dim_v} for s in self.sectors]

    def write_csv(self, path):
        return write_csv(path, ("N", "j", "dim_W", "dim_V"), self.table())


def _couple(vecs: dict, j: Fraction, up: bool) -> dict:
    """Add one spin-1/2 to the spin-j multiplet ``vecs`` (m -> vector); up=True gives j+1/2."""
    half = Fraction(1, 2)
    jn = j + half if up else j - half
    two_j1 = 2 * j + 1
    dim = next(iter(vecs.values())).shape[0]
    zero = np.zeros(dim)
    out = {}
    m = jn
    while m >= -jn:
        lo = vecs.get(m - half, zero)  # |j, m-1/2> (x) |up>
        hi = vecs.get(m + half, zero)  # |j, m+1/2> (x) |down>
        if up:
            a = math.sqrt((j + m + half) / two_j1)
            b = math.sqrt((j - m + half) / two_j1)
        else:
            a = -math.sqrt((j - m + half) / two_j1)
            b = math.sqrt((j + m + half) / two_j1)
        out[m] = np.kron(lo, [1.0, 0.0]) * a + np.kron(hi, [0.0, 1.0]) * b
        m -= 1
    return out


def build_schur(num_qubits: int) -> SchurDecomposition:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise BadParams(f"num_qubits must be in 1..{MAX_QUBITS}")
    half = Fraction(1, 2)
    # each entry: (history, j, {m: vector})
    level = [("", half, {half: np.array([1.0, 0.0]), -half: np.array([0.0, 1.0])})]
    for _ in range(num_qubits - 1):
        nxt = []
        for hist, j, vecs in level:
            nxt.append((hist + "+", j + half, _couple(vecs, j, True)))
            if j > 0:
                nxt.append((hist + "-", j - half, _couple(vecs, j, False)))
        level = nxt
    level.sort(key=lambda item: item[0].replace("+", "0").replace("-", "1"))
    sectors = []
    for j in sorted({item[1] for item in level}, reverse=True):
        members = [item for item in level if item[1] == j]
        dim_w = int(2 * j + 1)
        ms = [j - k for k in range(dim_w)]
        cols = [members[p][2][m] for m in ms for p in range(len(members))]
        iso = np.stack(cols, axis=1).astype(complex)
        sectors.append(Sector(j, dim_w, len(members), iso, tuple(m[0] for m in members)))
    return SchurDecomposition(num_qubits, tuple(sectors))


# --- channels ---------------------------------------------------------------


def compress(decomp: SchurDecomposition, rho) -> np.ndarray:
    """Sum over sectors of Tr_V[P rho P], placed block-diagonally on the compressed space."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (decomp.ambient_dim, decomp.ambient_dim):
        raise ShapeMismatch(f"expected a {decomp.ambient_dim}-dimensional operator")
    k = decomp.compressed_dim
    out = np.zeros((k, k), dtype=complex)
    for off, s in zip(decomp.offsets(), decomp.sectors):
        block = s.isometry.conj().T @ rho @ s.isometry
        t = block.reshape(s.dim_w, s.dim_v, s.dim_w, s.dim_v)
        out[off : off + s.dim_w, off : off + s.dim_w] = np.einsum("avbv->ab", t)
    return out


def embed(decomp: SchurDecomposition, rho_bar) -> np.ndarray:
    """Sum over sectors of (block of rho_bar) (x) maximally mixed multiplicity state."""
    rho_bar = np.asarray(rho_bar, dtype=complex)
    k = decomp.compressed_dim
    if rho_bar.shape != (k, k):
        raise ShapeMismatch(f"expected a {k}-dimensional operator")
    out = np.zeros((decomp.ambient_dim,) * 2, dtype=complex)
    for off, s in zip(decomp.offsets(), decomp.sectors):
        blk = rho_bar[off : off + s.dim_w, off : off + s.dim_w]
        inner = np.kron(blk, np.eye(s.dim_v) / s.dim_v)
        out += s.isometry @ inner @ s.isometry.conj().T
    return out


# --- permutations -----------------------------------------------------------


def permutation_operator(num_qubits: int, perm) -> np.ndarray:
    """Unitary sending qubit q to position perm[q]."""
    n = num_qubits
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise BadParams("not a permutation")
    d = 2**n
    idx = np.arange(d)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    new_bits = np.zeros_like(bits)
    new_bits[:, perm] = bits
    img = new_bits @ (1 << (n - 1 - np.arange(n)))
    p = np.zeros((d, d), dtype=complex)
    p[img, idx] = 1.0
    return p


def all_permutation_operators(num_qubits: int) -> list[np.ndarray]:
    return [permutation_operator(num_qubits, p) for p in itertools.permutations(range(num_qubits))]


def twirl(rho, num_qubits: int) -> np.ndarray:
    """Average over all qubit permutations."""
    rho = np.asarray(rho, dtype=complex)
    ops = all_permutation_operators(num_qubits)
    return hermitian_part(sum(p @ rho @ p.conj().T for p in ops) / len(ops))


def permutation_defect(rho, num_qubits: int) -> float:
    """Largest commutator norm with the adjacent transpositions (they generate S_N)."""
    rho = np.asarray(rho, dtype=complex)
    worst = 0.0
    for q in range(num_qubits - 1):
        perm = list(range(num_qubits))
        perm[q], perm[q + 1] = perm[q + 1], perm[q]
        p = permutation_operator(num_qubits, perm)
        worst = max(worst, operator_norm(p @ rho - rho @ p))
    return worst


def perm_invariant_sampler(num_qubits: int, b: float, rng: np.random.Generator, decomp: SchurDecomposition | None = None) -> StatePair:
    """Embed a compressed-space pair from the Thompson class into the N-qubit space."""
    decomp = decomp or build_schur(num_qubits)
    small = sample_pair_in_class(decomp.compressed_dim, b, rng)
    rho = embed(decomp, small.rho.matrix)
    sigma = embed(decomp, small.sigma.matrix)
    return StatePair(DensityMatrix.normalized(rho), DensityMatrix.normalized(sigma), class_bound_b=float(b))


def compressed_qne(rho, sigma, config: QneConfig, decomp: SchurDecomposition | None = None, num_qubits: int | None = None):
    """Run the estimator on the compressed pair; the returned estimate carries the compressed-pair truth."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if decomp is None:
        n = num_qubits if num_qubits is not None else int(round(math.log2(rho.shape[0])))
        decomp = build_schur(n)
    for label, m in (("rho", rho), ("sigma", sigma)):
        defect = permutation_defect(m, decomp.num_qubits)
        if defect > PERM_TOL:
            raise NotPermutationInvariant(f"{label} is not permutation invariant (defect {defect:.3e})")
    if config.ansatz.dim != decomp.compressed_dim:
        raise ShapeMismatch(f"ansatz acts on dimension {config.ansatz.dim}, compressed space has {decomp.compressed_dim}")
    r_bar, s_bar = compress(decomp, rho), compress(decomp, sigma)
    est = estimate(r_bar, s_bar, config)
    est.truth = measured(config.order, r_bar, s_bar).value
    return est
