import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrelab.circuits import CircuitAnsatz, ParamGrid
from mrelab.errors import BadParams, NotPermutationInvariant, ShapeMismatch
from mrelab.oracle import measured_rel_entropy
from mrelab.qne import QneConfig
from mrelab.schur import (
    all_permutation_operators,
    build_schur,
    compress,
    compressed_qne,
    embed,
    perm_invariant_sampler,
    permutation_defect,
    permutation_operator,
    twirl,
)
from mrelab.states import random_full_rank_state, thompson_metric

seeds = st.integers(0, 2**32 - 1)
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]]) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
}


def total_spin(n):
    """Collective S_z and S^2 by brute-force tensor products (independent of the coupling code)."""
    comps = {}
    for a, s in PAULI.items():
        comps[a] = sum(np.kron(np.kron(np.eye(2**q), s), np.eye(2 ** (n - q - 1))) for q in range(n))
    s2 = sum(c @ c for c in comps.values())
    return comps["z"], s2


def cg_dims(n):
    """Sector multiplicities from the Clebsch-Gordan recursion j -> j +- 1/2."""
    mult = {Fraction(1, 2): 1}
    for _ in range(n - 1):
        nxt = {}
        for j, m in mult.items():
            for jn in (j + Fraction(1, 2), j - Fraction(1, 2)):
                if jn >= 0:
                    nxt[jn] = nxt.get(jn, 0) + m
        mult = nxt
    return mult


class TestBuild:
    def test_n2_sectors(self):
        dec = build_schur(2)
        assert [(s.j, s.dim_w, s.dim_v) for s in dec.sectors] == [(1, 3, 1), (0, 1, 1)]
        assert dec.compressed_dim == 4

    def test_n3_sectors(self):
        dec = build_schur(3)
        assert [(s.j, s.dim_w, s.dim_v) for s in dec.sectors] == [(Fraction(3, 2), 4, 1), (Fraction(1, 2), 2, 2)]
        assert dec.compressed_dim == 6

    def test_dimension_sequence(self):
        assert [build_schur(n).compressed_dim for n in range(2, 9)] == [4, 6, 9, 12, 16, 20, 25]

    @pytest.mark.parametrize("n", range(1, 9))
    def test_recursion_and_bounds(self, n):
        dec = build_schur(n)
        assert {s.j: s.dim_v for s in dec.sectors} == cg_dims(n)
        assert sum(s.dim_w * s.dim_v for s in dec.sectors) == 2**n
        if n >= 2:
            assert dec.compressed_dim <= (n + 1) * n
        if n >= 3:
            assert dec.compressed_dim < 2**n

    @pytest.mark.parametrize("n", range(1, 7))
    def test_jointly_unitary(self, n):
        iso = np.hstack([s.isometry for s in build_schur(n).sectors])
        assert np.allclose(iso.conj().T @ iso, np.eye(2**n), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_total_spin_eigenvectors(self, n):
        sz, s2 = total_spin(n)
        for s in build_schur(n).sectors:
            j = float(s.j)
            assert np.allclose(s2 @ s.isometry, j * (j + 1) * s.isometry, atol=1e-12)
            ms = np.repeat([j - k for k in range(s.dim_w)], s.dim_v)
            assert np.allclose(sz @ s.isometry, s.isometry * ms[None, :], atol=1e-12)

    def test_range(self):
        with pytest.raises(BadParams):
            build_schur(9)
        with pytest.raises(BadParams):
            build_schur(0)

    def test_csv_table(self, tmp_path):
        path = build_schur(3).write_csv(tmp_path / "s.csv")
        text = open(path, encoding="utf-8", newline="").read()
        assert text.splitlines()[0] == "N,j,dim_W,dim_V"
        assert "3,1.5,4,1" in text


class TestChannels:
    def test_maximally_mixed(self):
        dec = build_schur(3)
        out = compress(dec, np.eye(8) / 8)
        for off, s in zip(dec.offsets(), dec.sectors):
            blk = out[off : off + s.dim_w, off : off + s.dim_w]
            assert np.allclose(blk, np.eye(s.dim_w) * s.dim_v / 8, atol=1e-14)
        assert np.allclose(out, np.diag(np.diag(out)), atol=1e-14)

    def test_singlet(self):
        dec = build_schur(2)
        bar = np.zeros((4, 4))
        bar[3, 3] = 1.0
        psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
        assert np.allclose(embed(dec, bar), np.outer(psi, psi), atol=1e-14)

    @given(st.integers(1, 5), seeds)
    @settings(max_examples=20)
    def test_trace_preserved(self, n, seed):
        dec = build_schur(n)
        rng = np.random.default_rng(seed)
        rho = random_full_rank_state(2**n, rng)
        assert abs(np.trace(compress(dec, rho)) - 1) <= 1e-12
        bar = random_full_rank_state(dec.compressed_dim, rng)
        assert abs(np.trace(embed(dec, bar)) - 1) <= 1e-12

    @given(st.integers(1, 5), seeds)
    @settings(max_examples=20)
    def test_embed_compress_identity_on_invariant(self, n, seed):
        dec = build_schur(n)
        rho = twirl(random_full_rank_state(2**n, np.random.default_rng(seed)), n)
        assert np.allclose(embed(dec, compress(dec, rho)), rho, atol=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_choi_psd(self, n):
        dec = build_schur(n)
        d, k = 2**n, dec.compressed_dim
        choi_c = np.zeros((d * k, d * k), dtype=complex)
        choi_e = np.zeros((k * d, k * d), dtype=complex)
        for i, j in itertools.product(range(d), repeat=2):
            e = np.zeros((d, d))
            e[i, j] = 1.0
            choi_c += np.kron(e, compress(dec, e))
        for i, j in itertools.product(range(k), repeat=2):
            e = np.zeros((k, k))
            e[i, j] = 1.0
            choi_e += np.kron(e, embed(dec, e))
        assert np.linalg.eigvalsh((choi_c + choi_c.conj().T) / 2)[0] >= -1e-12
        assert np.linalg.eigvalsh((choi_e + choi_e.conj().T) / 2)[0] >= -1e-12

    def test_shape_checks(self):
        dec = build_schur(2)
        with pytest.raises(ShapeMismatch):
            compress(dec, np.eye(3))
        with pytest.raises(ShapeMismatch):
            embed(dec, np.eye(3))


class TestPermutations:
    def test_swap(self):
        p = permutation_operator(2, [1, 0])
        ket01 = np.array([0, 1, 0, 0])
        assert np.array_equal(p @ ket01, [0, 0, 1, 0])

    def test_not_a_permutation(self):
        with pytest.raises(BadParams):
            permutation_operator(3, [0, 0, 1])

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_embed_output_commutes_with_all(self, n, rng):
        dec = build_schur(n)
        out = embed(dec, random_full_rank_state(dec.compressed_dim, rng))
        for p in all_permutation_operators(n):
            assert np.linalg.norm(p @ out - out @ p, 2) <= 1e-10

    def test_twirl_invariant(self, rng):
        rho = twirl(random_full_rank_state(8, rng), 3)
        assert permutation_defect(rho, 3) <= 1e-12


class TestSampler:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_invariant_and_in_class(self, n, rng):
        pair = perm_invariant_sampler(n, 4.0, rng)
        for p in all_permutation_operators(n):
            assert np.linalg.norm(p @ pair.rho.matrix - pair.rho.matrix @ p, 2) <= 1e-10
        dec = build_schur(n)
        small = thompson_metric(compress(dec, pair.rho.matrix), compress(dec, pair.sigma.matrix))
        assert pair.thompson <= small + 1e-9
        assert small <= math.log(4.0) + 1e-9

    def test_seed_determinism(self):
        a = perm_invariant_sampler(3, 4.0, np.random.default_rng(5))
        b = perm_invariant_sampler(3, 4.0, np.random.default_rng(5))
        assert np.array_equal(a.rho.matrix, b.rho.matrix)


class TestCompressedQne:
    def _config(self, dec, **kw):
        a = CircuitAnsatz.givens(dec.compressed_dim)
        return QneConfig(a, ParamGrid.seeded_random(a, 2, 0), math.log(4.0), **kw)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_divergence_preserved(self, n, rng):
        dec = build_schur(n)
        pair = perm_invariant_sampler(n, 4.0, rng, dec)
        full = measured_rel_entropy(pair.rho, pair.sigma).value
        small = measured_rel_entropy(compress(dec, pair.rho.matrix), compress(dec, pair.sigma.matrix)).value
        assert abs(full - small) <= 1e-5

    def test_identical_pair(self, rng):
        dec = build_schur(3)
        pair = perm_invariant_sampler(3, 4.0, rng, dec)
        est = compressed_qne(pair.rho.matrix, pair.rho.matrix, self._config(dec, sampling="exact"), dec)
        assert est.truth == pytest.approx(0.0, abs=1e-12)
        assert est.value == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_invariant(self, rng):
        dec = build_schur(2)
        with pytest.raises(NotPermutationInvariant):
            compressed_qne(random_full_rank_state(4, rng), np.eye(4) / 4, self._config(dec), dec)

    def test_rejects_wrong_ansatz(self, rng):
        dec = build_schur(3)
        pair = perm_invariant_sampler(3, 4.0, rng, dec)
        a = CircuitAnsatz.givens(8)
        cfg = QneConfig(a, ParamGrid.seeded_random(a, 1, 0), 1.0)
        with pytest.raises(ShapeMismatch):
            compressed_qne(pair.rho.matrix, pair.sigma.matrix, cfg, dec)
