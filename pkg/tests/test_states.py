import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrelab.errors import BadParams, DomainError, ShapeMismatch, SingularState
from mrelab.states import (
    ClassicalDist,
    DensityMatrix,
    StatePair,
    commuting_pair,
    dmax,
    lecam_distributions,
    lecam_pair,
    random_channel,
    random_full_rank_state,
    sample_pair_in_class,
    thompson_metric,
)

seeds = st.integers(0, 2**32 - 1)


class TestDensityMatrix:
    def test_accepts_state(self):
        dm = DensityMatrix(np.diag([0.7, 0.3]))
        assert dm.dim == 2 and dm.strictly_positive

    def test_rejects_bad_trace(self):
        with pytest.raises(DomainError):
            DensityMatrix(np.diag([0.7, 0.7]))

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_pure_state_not_strictly_positive(self):
        assert not DensityMatrix(np.diag([1.0, 0.0])).strictly_positive

    def test_classical_dist_validation(self):
        assert len(ClassicalDist([0.2, 0.8])) == 2
        with pytest.raises(DomainError):
            ClassicalDist([0.2, 0.7])
        with pytest.raises(ShapeMismatch):
            ClassicalDist(np.eye(2) / 2)


class TestThompson:
    def test_self_is_zero(self, rng):
        r = random_full_rank_state(3, rng)
        assert thompson_metric(r, r) == pytest.approx(0.0, abs=1e-12)
        assert dmax(r, r) == pytest.approx(0.0, abs=1e-12)

    def test_diagonal_examples(self):
        rho, sigma = np.diag([0.7, 0.3]), np.diag([0.5, 0.5])
        assert thompson_metric(rho, sigma) == pytest.approx(np.log(5 / 3), abs=1e-12)
        assert dmax(rho, sigma) == pytest.approx(np.log(1.4), abs=1e-12)

    def test_singular_rejected(self):
        with pytest.raises(SingularState):
            thompson_metric(np.diag([1.0, 0.0]), np.eye(2) / 2)

    @given(st.integers(1, 6), seeds)
    def test_symmetric_and_max_of_dmax(self, d, seed):
        rng = np.random.default_rng(seed)
        r, s = random_full_rank_state(d, rng), random_full_rank_state(d, rng)
        t = thompson_metric(r, s)
        assert t == pytest.approx(thompson_metric(s, r), rel=1e-9, abs=1e-12)
        assert t == pytest.approx(max(dmax(r, s), dmax(s, r)), rel=1e-12, abs=1e-12)
        assert t >= 0

    @given(st.integers(2, 4), st.integers(0, 2), st.integers(1, 3), seeds)
    def test_channel_contraction(self, d, shrink, d_env, seed):
        rng = np.random.default_rng(seed)
        pair = sample_pair_in_class(d, 4.0, rng)
        # outputs stay full rank when d_out <= d
        d_out = max(1, d - shrink)
        d_env = max(d_env, -(-d // d_out))
        ch = random_channel(d, d_out, d_env, rng)
        after = thompson_metric(ch(pair.rho.matrix), ch(pair.sigma.matrix))
        assert after <= pair.thompson + 1e-9


class TestSampler:
    @given(st.integers(1, 8), st.floats(1.01, 20.0), seeds)
    def test_class_membership(self, d, b, seed):
        pair = sample_pair_in_class(d, b, np.random.default_rng(seed))
        assert pair.thompson <= np.log(b) + 1e-9
        assert pair.rho.strictly_positive and pair.sigma.strictly_positive

    def test_audit_d4_b4(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            assert sample_pair_in_class(4, 4.0, rng).thompson <= np.log(4.0) + 1e-9

    def test_b_near_one_collapses(self):
        pair = sample_pair_in_class(3, 1.0 + 1e-8, np.random.default_rng(1))
        assert np.allclose(pair.rho.matrix, pair.sigma.matrix, atol=1e-7)

    def test_seeded_determinism(self):
        a = sample_pair_in_class(3, 4.0, np.random.default_rng(99))
        b = sample_pair_in_class(3, 4.0, np.random.default_rng(99))
        c = sample_pair_in_class(3, 4.0, np.random.default_rng(100))
        assert np.array_equal(a.rho.matrix, b.rho.matrix) and np.array_equal(a.sigma.matrix, b.sigma.matrix)
        assert not np.array_equal(a.rho.matrix, c.rho.matrix)

    def test_rejects_b_at_one(self):
        with pytest.raises(BadParams):
            sample_pair_in_class(2, 1.0, np.random.default_rng(0))


class TestStatePair:
    def test_class_bound_enforced(self):
        with pytest.raises(BadParams):
            StatePair(np.diag([0.9, 0.1]), np.eye(2) / 2, class_bound_b=1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            StatePair(np.eye(2) / 2, np.eye(3) / 3)

    def test_json_roundtrip_bit_faithful(self, rng):
        pair = sample_pair_in_class(3, 4.0, rng, seed=5)
        back = StatePair.from_json(pair.to_json())
        assert np.array_equal(back.rho.matrix, pair.rho.matrix)
        assert np.array_equal(back.sigma.matrix, pair.sigma.matrix)
        assert back.class_bound_b == 4.0 and back.seed == 5
        doc = json.loads(pair.to_json())
        assert set(doc) == {"dim", "b", "rho", "sigma", "seed"}

    def test_json_shape_check(self, rng):
        doc = sample_pair_in_class(2, 4.0, rng).to_dict()
        doc["dim"] = 3
        with pytest.raises(ShapeMismatch):
            StatePair.from_dict(doc)


class TestLeCam:
    def test_example_values(self):
        p, q1, _ = lecam_distributions(3, 2.0, 0.25)
        assert np.allclose(p, [0.25, 0.25, 0.5])
        assert np.allclose(q1, [0.1875, 0.1875, 0.625])
        assert lecam_pair(3, 2.0, 0.25).thompson == pytest.approx(np.log(4 / 3), abs=1e-12)

    def test_eps_to_zero_symmetric(self):
        _, q1, q2 = lecam_distributions(4, 3.0, 1e-12)
        assert np.allclose(q1, q2, atol=1e-11)

    @given(st.integers(2, 8), st.floats(2.0, 16.0), st.floats(0.01, 0.49), st.sampled_from(["Q1", "Q2"]))
    def test_always_in_class(self, d, b, eps, which):
        pair = lecam_pair(d, b, eps, which)
        assert pair.thompson <= np.log(b) + 1e-9

    def test_bad_params(self):
        with pytest.raises(BadParams):
            lecam_distributions(3, 1.5, 0.25)
        with pytest.raises(BadParams):
            lecam_pair(3, 2.0, 0.25, which="Q3")


def test_commuting_pair_spectra(rng):
    rho, sigma, p, q = commuting_pair(4, rng)
    assert np.allclose(rho @ sigma, sigma @ rho, atol=1e-12)
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho)), np.sort(p))
