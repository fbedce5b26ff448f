import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrelab.circuits import (
    CircuitAnsatz,
    OutcomeSample,
    ParamGrid,
    ParamPoint,
    build_unitary,
    cnot_ladder,
    fit_unitary,
    givens_decompose,
    grid_with_oracle,
    measurement_dist,
    phase_aligned_distance,
    sample_outcomes,
    wrap_angles,
)
from mrelab.errors import BadParams, DomainError, FitFailed, ShapeMismatch
from mrelab.opmat import haar_unitary, is_unitary
from mrelab.rng import derive_seed, stream
from mrelab.states import random_full_rank_state

seeds = st.integers(0, 2**32 - 1)
ansatze = st.one_of(
    st.integers(1, 6).map(CircuitAnsatz.givens),
    st.tuples(st.integers(1, 3), st.integers(1, 3)).map(lambda t: CircuitAnsatz.qubit_layers(*t)),
)


class TestAnsatz:
    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_givens_param_count(self, d):
        # d(d-1)/2 rotation angles, d(d-1)/2 relative phases, d-1 diagonal phases
        assert CircuitAnsatz.givens(d).param_count == d * d - 1

    def test_layers_param_count(self):
        assert CircuitAnsatz.qubit_layers(3, 2).param_count == 12

    def test_bad_kind(self):
        with pytest.raises(BadParams):
            CircuitAnsatz(dim=2, kind="nope")
        with pytest.raises(BadParams):
            CircuitAnsatz(dim=3, kind="qubit_layers", num_qubits=1, depth=1)

    def test_dict_roundtrip(self):
        a = CircuitAnsatz.qubit_layers(2, 3)
        assert CircuitAnsatz.from_dict(a.to_dict()) == a

    @given(ansatze)
    def test_zero_is_identity(self, ansatz):
        u = build_unitary(ansatz, np.zeros(ansatz.param_count))
        assert np.allclose(u, np.eye(ansatz.dim), atol=1e-12)

    @given(ansatze, seeds)
    def test_unitarity(self, ansatz, seed):
        theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, ansatz.param_count)
        u = build_unitary(ansatz, theta)
        assert np.linalg.norm(u.conj().T @ u - np.eye(ansatz.dim), 2) <= 1e-10

    def test_givens_quarter_turn(self):
        u = build_unitary(CircuitAnsatz.givens(2), [np.pi / 2, 0.0, 0.0])
        assert np.allclose(u, [[0, -1], [1, 0]], atol=1e-15)
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)

    def test_ry_pi_flips(self):
        # parameter layout per qubit is (Ry, Rz)
        u = build_unitary(CircuitAnsatz.qubit_layers(1, 1), [np.pi, 0.0])
        out = u @ np.array([1.0, 0.0])
        assert abs(abs(out[1]) - 1.0) <= 1e-12

    def test_wrong_length(self):
        with pytest.raises(ShapeMismatch):
            build_unitary(CircuitAnsatz.givens(2), [0.0])

    def test_cnot_ladder_is_permutation(self):
        c = cnot_ladder(3)
        assert is_unitary(c)
        assert np.all((c == 0) | (c == 1))

    def test_param_point_input(self):
        a = CircuitAnsatz.givens(2)
        p = ParamPoint((0.1, 0.2, 0.3))
        assert np.array_equal(build_unitary(a, p), build_unitary(a, [0.1, 0.2, 0.3]))


class TestGivensDecomposition:
    @given(st.integers(1, 7), seeds)
    def test_haar_roundtrip(self, d, seed):
        u = haar_unitary(d, np.random.default_rng(seed))
        theta, g = givens_decompose(u)
        v = CircuitAnsatz.givens(d).unitary(theta)
        assert np.allclose(np.exp(1j * g) * v, u, atol=1e-10)

    @given(st.integers(1, 5), seeds)
    def test_parameter_roundtrip(self, d, seed):
        a = CircuitAnsatz.givens(d)
        theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, a.param_count)
        back, _ = givens_decompose(a.unitary(theta))
        assert phase_aligned_distance(a.unitary(theta), a.unitary(back)) <= 1e-9


class TestPhaseDistance:
    def test_phase_invariant(self, rng):
        u = haar_unitary(3, rng)
        assert phase_aligned_distance(u, np.exp(0.7j) * u) <= 1e-12

    def test_not_above_plain_norm(self, rng):
        u, v = haar_unitary(3, rng), haar_unitary(3, rng)
        assert phase_aligned_distance(u, v) <= np.linalg.norm(u - v, 2) + 1e-12


class TestGrids:
    def test_uniform_contains_zero(self):
        g = ParamGrid.uniform(CircuitAnsatz.qubit_layers(1, 1), 4)
        assert len(g) == 16 and ParamPoint((0.0, 0.0)) in g.points

    def test_uniform_cap(self):
        with pytest.raises(BadParams):
            ParamGrid.uniform(CircuitAnsatz.givens(3), 4, max_points=100)

    def test_no_duplicates(self):
        with pytest.raises(BadParams):
            ParamGrid(((0.0,), (0.0,)), "manual")

    def test_nonempty(self):
        with pytest.raises(BadParams):
            ParamGrid((), "manual")

    def test_angle_range(self):
        with pytest.raises(DomainError):
            ParamPoint((4.0,))
        assert ParamPoint.wrapped((4.0,)).theta[0] == pytest.approx(4.0 - 2 * np.pi)

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=6))
    def test_wrap_range(self, xs):
        w = wrap_angles(xs)
        assert np.all(np.abs(w) <= np.pi + 1e-12)
        assert np.allclose(np.exp(1j * w), np.exp(1j * np.asarray(xs)))

    def test_seeded_random_deterministic(self):
        a = CircuitAnsatz.givens(3)
        assert ParamGrid.seeded_random(a, 5, 11).points == ParamGrid.seeded_random(a, 5, 11).points

    def test_json_roundtrip(self):
        g = ParamGrid.seeded_random(CircuitAnsatz.givens(2), 3, 1).augmented([(0.0, 0.0, 0.0)])
        back = ParamGrid.from_json(g.to_json())
        assert back.points == g.points and back.provenance == "augmented"

    def test_oracle_identity(self):
        a = CircuitAnsatz.givens(3)
        g = grid_with_oracle(ParamGrid.seeded_random(a, 2, 0), a, np.eye(3))
        assert g.info["delta"] == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(g.points[g.info["oracle_index"]].array, 0.0)

    def test_oracle_roundtrip_layers(self, rng):
        a = CircuitAnsatz.qubit_layers(2, 2)
        theta0 = rng.uniform(-np.pi, np.pi, a.param_count)
        g = grid_with_oracle(ParamGrid.singleton(np.zeros(a.param_count) + 0.1), a, a.unitary(theta0), starts=8, rng=rng)
        assert g.info["delta"] <= 1e-6

    @given(st.integers(2, 6), seeds)
    @settings(max_examples=15)
    def test_oracle_haar_givens(self, d, seed):
        a = CircuitAnsatz.givens(d)
        g = grid_with_oracle(ParamGrid.singleton(np.zeros(a.param_count)), a, haar_unitary(d, np.random.default_rng(seed)))
        assert g.info["delta"] <= 1e-6

    def test_fit_failed(self, rng):
        a = CircuitAnsatz.qubit_layers(2, 1)
        target = haar_unitary(4, rng)
        _, delta = fit_unitary(a, target, starts=2, rng=rng)
        assert delta > 1e-3  # one layer cannot reach a generic two-qubit unitary
        with pytest.raises(FitFailed):
            grid_with_oracle(ParamGrid.singleton(np.full(a.param_count, 0.5)), a, target, delta_cap=1e-6, starts=2, rng=rng)


class TestMeasurement:
    def test_identity_gives_diagonal(self):
        assert np.allclose(measurement_dist(np.eye(2), np.diag([0.7, 0.3])).probs, [0.7, 0.3])

    def test_hadamard(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.allclose(measurement_dist(h, np.diag([1.0, 0.0])).probs, [0.5, 0.5], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            measurement_dist(np.eye(2), np.eye(3) / 3)

    @given(st.integers(1, 6), seeds)
    def test_diagonal_of_conjugation(self, d, seed):
        rng = np.random.default_rng(seed)
        u = haar_unitary(d, rng)
        rho = random_full_rank_state(d, rng)
        p = measurement_dist(u, rho).probs
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.allclose(p, np.real(np.diag(u.conj().T @ rho @ u)), atol=1e-12)


class TestSampling:
    def test_point_mass(self):
        s = sample_outcomes([0.0, 0.0, 1.0], 100, stream(0))
        assert np.all(s.outcomes == 3)

    def test_law_of_large_numbers(self):
        s = sample_outcomes([0.5, 0.5], 100_000, stream(2024, 1))
        assert abs(s.histogram(2)[0] - 0.5) <= 0.01

    def test_determinism(self):
        a = sample_outcomes([0.2, 0.3, 0.5], 500, 77)
        b = sample_outcomes([0.2, 0.3, 0.5], 500, 77)
        assert np.array_equal(a.outcomes, b.outcomes) and a.seed == 77

    def test_stream_independence(self):
        assert not np.array_equal(stream(1, 0).random(4), stream(1, 1).random(4))
        assert np.array_equal(stream(1, 2, 3).random(4), stream(1, 2, 3).random(4))
        assert derive_seed(5, 1) != derive_seed(5, 2)

    def test_n_positive(self):
        with pytest.raises(BadParams):
            sample_outcomes([1.0], 0, 0)

    def test_outcomes_one_based(self):
        with pytest.raises(DomainError):
            OutcomeSample(np.array([0, 1]), "rho")
        with pytest.raises(DomainError):
            OutcomeSample(np.array([1, 4]), "rho").histogram(3)

    @given(st.integers(1, 8), st.integers(1, 200), seeds)
    def test_indices_in_range(self, d, n, seed):
        p = np.random.default_rng(seed).dirichlet(np.ones(d))
        s = sample_outcomes(p, n, seed)
        assert len(s) == n and s.outcomes.min() >= 1 and s.outcomes.max() <= d
