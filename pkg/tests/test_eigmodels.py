import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrelab.eigmodels import (
    DeepReluModel,
    PolyModel,
    ShallowModel,
    bernstein_basis,
    bernstein_fit,
    eval_model,
    lipschitz_constant,
    model_from_json,
    model_to_json,
    piecewise_linear_interpolant,
    project_to_bound,
)
from mrelab.errors import BadParams, IndexOutOfRange, ShapeMismatch
from mrelab.oracle import measured_rel_entropy
from mrelab.states import sample_pair_in_class

seeds = st.integers(0, 2**32 - 1)
GRID = np.linspace(0.0, 1.0, 10_001)


class TestShallow:
    def test_eval_is_beta(self):
        m = ShallowModel(3, [0.1, -0.2, 0.3], 1.0)
        assert [eval_model(m, i) for i in (1, 2, 3)] == [0.1, -0.2, 0.3]

    def test_index_range(self):
        m = ShallowModel.zeros(3, 1.0)
        with pytest.raises(IndexOutOfRange):
            eval_model(m, 0)
        with pytest.raises(IndexOutOfRange):
            eval_model(m, 4)

    def test_bound_enforced(self):
        with pytest.raises(BadParams):
            ShallowModel(2, [2.0, 0.0], 1.0)
        with pytest.raises(ShapeMismatch):
            ShallowModel(3, [0.0, 0.0], 1.0)

    def test_reproduces_optimizer_eigenvalues(self, rng):
        # beta = lambda* makes the approximation error zero
        pair = sample_pair_in_class(4, 4.0, rng)
        lam = measured_rel_entropy(pair.rho, pair.sigma).lambda_star
        m = ShallowModel(4, lam, math.log(4.0) + 1e-6)
        assert np.max(np.abs(m.table() - lam)) == 0.0

    def test_projection_clamps(self):
        m = ShallowModel(2, [10.0, -0.5], 20.0)
        p = project_to_bound(m, 1.0)
        assert p.beta.tolist() == [1.0, -0.5]

    def test_projection_leaves_feasible_alone(self):
        m = ShallowModel(2, [0.3, -0.5], 1.0)
        assert np.array_equal(project_to_bound(m, 1.0).beta, m.beta)


class TestDeep:
    def test_saturation(self):
        logb = 0.4
        # single affine layer with constant output 2 log b
        m = DeepReluModel(2, ((np.zeros((1, 1)), np.array([2 * logb])),), logb)
        assert m.raw(0.5)[0] == pytest.approx(2 * logb)
        assert eval_model(m, 1) == logb and eval_model(m, 2) == logb

    def test_caps(self, rng):
        wide = DeepReluModel.random(2, 1.0, rng, depth=3, width=12)
        with pytest.raises(BadParams):
            DeepReluModel(2, wide.layers, 1.0, max_width=9)
        with pytest.raises(BadParams):
            DeepReluModel(2, ((np.array([[2.0]]), np.zeros(1)),), 1.0, max_entry=1.0)

    def test_embedding(self, rng):
        m = DeepReluModel.random(4, 1.0, rng)
        assert eval_model(m, 3) == pytest.approx(float(m.at(0.75)[0]))

    def test_vjp_matches_finite_difference(self, rng):
        m = DeepReluModel.random(5, 50.0, rng, depth=4, width=5, max_entry=10.0)
        g = rng.normal(size=5)
        grad = m.table_vjp(g)
        x = m.params()
        eps = 1e-6
        for idx in rng.choice(x.size, 10, replace=False):
            e = np.zeros_like(x)
            e[idx] = eps
            fd = (g @ m.with_params(x + e).table() - g @ m.with_params(x - e).table()) / (2 * eps)
            assert fd == pytest.approx(grad[idx], abs=1e-6)

    @given(st.integers(1, 8), st.floats(0.1, 3.0), seeds)
    @settings(max_examples=20)
    def test_projected_values_bounded(self, d, logb, seed):
        m = project_to_bound(DeepReluModel.random(d, 100.0, np.random.default_rng(seed), max_entry=1.0), logb)
        assert np.all(np.abs([eval_model(m, i) for i in range(1, d + 1)]) <= logb)


class TestPoly:
    def test_square_at_top_index(self):
        m = PolyModel(2, [0.0, 0.0, 1.0], 1.0, dim=5)
        assert eval_model(m, 5) == 1.0

    def test_coeff_bound(self):
        with pytest.raises(BadParams):
            PolyModel(1, [0.0, 3.0], 1.0)

    def test_projection_wraps_clamp(self):
        m = project_to_bound(PolyModel(1, [0.0, 5.0], 5.0, dim=4), 1.0)
        assert np.max(np.abs(m.table())) <= 1.0

    def test_vjp_linear(self, rng):
        m = PolyModel(3, rng.normal(size=4), 10.0, dim=6)
        g = rng.normal(size=6)
        grad = m.table_vjp(g)
        for j in range(4):
            e = np.zeros(4)
            e[j] = 1.0
            assert grad[j] == pytest.approx(g @ (m.with_params(m.params() + e).table() - m.table()), abs=1e-12)


class TestJson:
    def test_roundtrip_all_kinds(self, rng):
        models = [
            ShallowModel(3, [0.1, 0.2, -0.3], 1.0),
            DeepReluModel.random(3, 1.0, rng, depth=3, width=4),
            PolyModel(2, [0.1, 0.2, 0.3], 1.0, dim=3, clamp_logb=0.5),
            bernstein_fit(lambda x: np.abs(x - 0.4), 40, dim=3),
        ]
        for m in models:
            back = model_from_json(model_to_json(m))
            assert type(back) is type(m)
            assert np.array_equal(back.table(), m.table())

    def test_unknown_kind(self):
        with pytest.raises(BadParams):
            model_from_json('{"kind": "tree"}')


class TestBernstein:
    def test_basis_partition_of_unity(self):
        assert np.allclose(bernstein_basis(7, GRID[::100]).sum(axis=1), 1.0)

    @pytest.mark.parametrize("k", [1, 2, 5, 17, 40])
    def test_reproduces_affine(self, k):
        p = bernstein_fit(lambda x: x, k)
        assert np.allclose(p.raw(GRID[::50]), GRID[::50], atol=1e-12)

    def test_square_k2(self):
        p = bernstein_fit(lambda x: x**2, 2)
        assert np.allclose(p.coeffs, [0.0, 0.5, 0.5])
        assert p.raw(0.5)[0] == pytest.approx(0.375)

    def test_endpoint_interpolation(self):
        f = lambda x: np.cos(3 * x)
        p = bernstein_fit(f, 9)
        assert p.raw([0.0, 1.0]) == pytest.approx(f(np.array([0.0, 1.0])))

    @pytest.mark.parametrize("k", [2, 8, 32, 64])
    def test_lemma_bound_abs(self, k):
        f = lambda x: np.abs(x - 0.4)
        err = np.max(np.abs(bernstein_fit(f, k).raw(GRID) - f(GRID)))
        assert err <= (1.0 + 0.5 * 0.6) * k ** (-1 / 3)

    @given(st.integers(1, 12), seeds)
    def test_coefficient_bound(self, k, seed):
        nodes_f = np.random.default_rng(seed).uniform(-1, 1, 50)
        f = lambda x: np.interp(x, np.linspace(0, 1, 50), nodes_f)
        sup = np.max(np.abs(f(GRID)))
        p = bernstein_fit(f, k)
        assert np.max(np.abs(p.coeffs)) <= 2**k * math.factorial(k) * sup + 1e-12

    def test_monomial_and_bernstein_forms_agree(self):
        f = lambda x: np.sin(4 * x)
        p = bernstein_fit(f, 12)
        mono = PolyModel(12, p.coeffs, p.coeff_bound)
        assert np.allclose(mono.raw(GRID[::10]), p.raw(GRID[::10]), atol=1e-9)

    def test_high_degree_stays_in_bernstein_basis(self):
        p = bernstein_fit(lambda x: x, 45)
        assert p.in_bernstein_basis


class TestInterpolant:
    def test_constant(self):
        f = piecewise_linear_interpolant([0.7, 0.7, 0.7])
        assert np.allclose(f(np.linspace(1 / 3, 1, 20)), 0.7)

    def test_knots(self):
        vals = [0.0, 1.0]
        f = piecewise_linear_interpolant(vals)
        assert f(0.5) == 0.0 and f(1.0) == 1.0 and f(0.75) == pytest.approx(0.5)

    @given(st.integers(1, 10), st.floats(0.1, 3.0), seeds)
    def test_lipschitz_bound(self, d, logb, seed):
        vals = np.random.default_rng(seed).uniform(-logb, logb, d)
        f = piecewise_linear_interpolant(vals)
        assert np.allclose(f(np.arange(1, d + 1) / d), vals)
        assert lipschitz_constant(f) <= 2 * d * logb + 1e-12

    @given(st.integers(2, 8), seeds)
    @settings(max_examples=15)
    def test_composite_pipeline(self, d, seed):
        logb = math.log(4.0)
        vals = np.random.default_rng(seed).uniform(-logb, logb, d)
        f = piecewise_linear_interpolant(vals)
        knots = np.arange(1, d + 1) / d
        for k in (4, 16, 64):
            err = np.max(np.abs(bernstein_fit(f, k).raw(knots) - vals))
            assert err <= (2 * d + 0.5) * k ** (-1 / 3) * logb
