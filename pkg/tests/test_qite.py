"""Imaginary-time step machinery: Gram system, solver, step, trajectories."""
import numpy as np
import pytest

from thirringsim import model, oracle, pauli, qite
from thirringsim import statevector as sv
from thirringsim.pauli import PauliString, PauliSum, to_matrix


def random_real_symmetric_sum(n, rng, n_terms=6):
    """Random Hermitian sum whose dense matrix is real (even-Y strings only)."""
    terms = {}
    while len(terms) < n_terms:
        p = pauli.random_string(n, rng)
        if p.y_count() % 2 == 0:
            terms[p.packed_index] = float(rng.normal())
    return PauliSum(n, terms)


@pytest.fixture(scope="module")
def pool4():
    return qite.OperatorPool.odd_y(4)


class TestPools:
    def test_odd_y_size(self, pool4):
        assert pool4.size == 120

    def test_full_size(self):
        assert qite.OperatorPool.full_minus_identity(4).size == 255

    def test_odd_y_membership_and_order(self, pool4):
        assert all(s.y_count() % 2 == 1 for s in pool4.strings)
        packed = [s.packed_index for s in pool4.strings]
        assert packed == sorted(packed)

    def test_identity_rejected(self):
        with pytest.raises(ValueError):
            qite.OperatorPool(1, qite.ODD_Y, (PauliString.identity(1),))


class TestGram:
    def test_diagonal_is_two(self, pool4):
        rng = np.random.default_rng(0)
        gram = qite.build_gram(sv.random_real_state(4, rng), pool4)
        assert np.max(np.abs(np.diag(gram) - 2.0)) < 1e-12

    def test_single_qubit_anticommuting_offdiagonals(self):
        pool = qite.OperatorPool.full_minus_identity(1)
        gram = qite.build_gram(sv.basis_state(0, 1), pool)
        assert np.max(np.abs(gram - np.diag(np.diag(gram)))) == 0

    def test_matches_dense_gram_of_string_vectors(self, pool4):
        rng = np.random.default_rng(1)
        state = sv.random_real_state(4, rng)
        gram = qite.build_gram(state, pool4)
        vectors = np.column_stack(
            [sv.apply_string(state, s).amplitudes for s in pool4.strings]
        )
        dense = 2.0 * (vectors.conj().T @ vectors).real
        assert np.max(np.abs(gram - dense)) < 1e-12

    def test_positive_semidefinite(self, pool4):
        rng = np.random.default_rng(2)
        for _ in range(5):
            gram = qite.build_gram(sv.random_real_state(4, rng), pool4)
            assert np.linalg.eigvalsh(gram)[0] >= -1e-10

    def test_full_pool_accepts_complex_states(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        state = sv.QuantumState(2, v / np.linalg.norm(v))
        pool = qite.OperatorPool.full_minus_identity(2)
        gram = qite.build_gram(state, pool)
        vectors = np.column_stack([sv.apply_string(state, s).amplitudes for s in pool.strings])
        dense = 2.0 * (vectors.conj().T @ vectors).real
        assert np.max(np.abs(gram - dense)) < 1e-12

    def test_odd_y_pool_rejects_complex_state(self, pool4):
        v = np.zeros(16, dtype=complex)
        v[0] = 1j
        with pytest.raises(ValueError):
            qite.build_gram(sv.QuantumState(4, v), pool4)

    def test_transpose_sum_route_agrees_on_real_states(self, pool4):
        # operator-transpose reduction equals the anticommutator entries,
        # but only for real-amplitude states
        rng = np.random.default_rng(4)
        state = sv.random_real_state(4, rng)
        gram = qite.build_gram(state, pool4)
        idx = rng.integers(0, pool4.size, size=30)
        for i, j in idx.reshape(15, 2):
            via_transpose = sv.expectation(
                state, pauli.sym_transpose_product(pool4.strings[i], pool4.strings[j])
            ).real
            assert via_transpose == pytest.approx(gram[i, j], abs=1e-12)


class TestRhs:
    def test_eigenstate_gives_zero(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        ground = oracle.spectral(ham).eigenvectors[:, 0]
        state = sv.QuantumState(4, ground.astype(complex))
        b = qite.build_rhs(state, pool4, ham, 1.0)
        assert np.max(np.abs(b)) < 1e-10

    def test_single_qubit_plus_state(self):
        # H = Z on |+> with pool {Y}: b_Y = 2 <X> / sqrt(C)
        plus = sv.QuantumState(1, np.array([1.0, 1.0]) / np.sqrt(2))
        pool = qite.OperatorPool.odd_y(1)
        ham = PauliSum(1, {3: 1.0})
        assert qite.build_rhs(plus, pool, ham, 1.0)[0] == pytest.approx(2.0)
        assert qite.build_rhs(plus, pool, ham, 0.64)[0] == pytest.approx(2.5)

    def test_random_vs_dense_commutators(self, pool4):
        rng = np.random.default_rng(5)
        ham = random_real_symmetric_sum(4, rng)
        state = sv.random_real_state(4, rng)
        b = qite.build_rhs(state, pool4, ham, 1.0)
        h = to_matrix(ham, n_sites=4)
        amps = state.amplitudes
        for row in rng.integers(0, pool4.size, size=25):
            s = to_matrix(pool4.strings[row])
            want = np.vdot(amps, (-1j) * (s @ h - h @ s) @ amps).real
            assert b[row] == pytest.approx(want, abs=1e-12)

    def test_even_y_components_vanish_on_real_states(self):
        rng = np.random.default_rng(6)
        pool = qite.OperatorPool.full_minus_identity(3)
        ham = random_real_symmetric_sum(3, rng)
        for _ in range(5):
            b = qite.build_rhs(sv.random_real_state(3, rng), pool, ham, 1.0)
            for row, s in enumerate(pool.strings):
                if s.y_count() % 2 == 0:
                    assert abs(b[row]) < 1e-10

    def test_non_positive_c_rejected(self, pool4):
        ham = model.build_h2(4)
        state = sv.basis_state(0, 4)
        with pytest.raises(qite.NonPositiveWeightError):
            qite.build_rhs(state, pool4, ham, 0.0)


class TestSolve:
    def test_zero_rhs(self):
        a, residual = qite.solve(2.0 * np.eye(5), np.zeros(5))
        assert np.all(a == 0) and residual == 0

    def test_diagonal_system(self):
        b = np.array([1.0, -2.0, 0.5])
        a, residual = qite.solve(2.0 * np.eye(3), b)
        assert np.allclose(a, b / 2) and residual < 1e-14

    def test_singular_system_minimum_norm(self):
        rng = np.random.default_rng(7)
        column = rng.normal(size=6)
        gram = np.outer(column, column)  # rank one
        b = gram @ rng.normal(size=6)
        a, residual = qite.solve(gram, b)
        want = np.linalg.pinv(gram) @ b
        assert np.allclose(a, want, atol=1e-10)
        assert residual < 1e-10

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            qite.solve(np.array([[np.nan]]), np.array([1.0]))


class TestStep:
    def test_eigenstate_is_fixed_point(self, pool4):
        ham = model.build_h3(4)  # diagonal: basis states are eigenstates
        state = sv.basis_state(9, 4)
        energy = sv.expectation(state, ham).real
        new, record = qite.step(state, ham, 0.1, pool4, c_mode=qite.C_LINEAR)
        assert np.all(record.a == 0) and record.kept_terms == 0
        assert record.c_step == pytest.approx(1 - 2 * 0.1 * energy)
        assert np.max(np.abs(new.amplitudes - state.amplitudes)) < 1e-12

    def test_single_qubit_fidelity(self):
        plus = sv.QuantumState(1, np.array([1.0, 1.0]) / np.sqrt(2))
        ham = PauliSum(1, {3: 1.0})
        pool = qite.OperatorPool.odd_y(1)
        new, _ = qite.step(plus, ham, 0.01, pool)
        exact, _ = oracle.exact_imaginary_time_state(ham, plus, 0.01)
        assert abs(np.vdot(new.amplitudes, exact.amplitudes)) ** 2 > 1 - 1e-6

    def test_zero_dbeta_is_identity(self, pool4):
        rng = np.random.default_rng(8)
        state = sv.random_real_state(4, rng)
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 0.7)).hamiltonian
        new, record = qite.step(state, ham, 0.0, pool4)
        assert record.c_step == 1.0
        assert np.max(np.abs(new.amplitudes - state.amplitudes)) < 1e-12

    def test_zero_threshold_reproduces_untruncated_rotations(self, pool4):
        rng = np.random.default_rng(9)
        state = sv.random_real_state(4, rng)
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 0.7)).hamiltonian
        new, record = qite.step(state, ham, 0.2, pool4, trotter_steps=3, threshold=0.0)
        manual = state.copy()
        angles = record.a * (0.2 / 3)
        for _ in range(3):
            for s, angle in zip(pool4.strings, angles):
                if angle != 0.0:
                    manual = sv.apply_rotation(manual, s, angle)
        manual = manual.normalized()
        assert np.max(np.abs(new.amplitudes - manual.amplitudes)) < 1e-12
        assert record.kept_terms == int(np.count_nonzero(record.a))

    def test_truncation_zeroes_small_coefficients(self, pool4):
        rng = np.random.default_rng(10)
        state = sv.random_real_state(4, rng)
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 0.7)).hamiltonian
        _, full = qite.step(state, ham, 0.2, pool4, threshold=0.0)
        _, cut = qite.step(state, ham, 0.2, pool4, threshold=0.05)
        assert cut.kept_terms < full.kept_terms
        assert np.all(np.abs(cut.a[cut.a != 0]) > 0.05)

    def test_linear_mode_negative_weight_raises(self, pool4):
        # highest-energy basis state of h3 has <h3> = 5, so 1 - 2*0.25*5 < 0
        ham = model.build_h3(4)
        state = sv.basis_state(0, 4)
        with pytest.raises(qite.NonPositiveWeightError, match="c_mode"):
            qite.step(state, ham, 0.25, pool4, c_mode=qite.C_LINEAR)

    def test_exact_norm_mode_matches_oracle_weight(self, pool4):
        rng = np.random.default_rng(11)
        state = sv.random_real_state(4, rng)
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        _, record = qite.step(state, ham, 0.25, pool4, c_mode=qite.C_EXACT_NORM)
        _, want = oracle.exact_imaginary_time_state(ham, state, 0.25)
        assert record.c_step == pytest.approx(want, rel=1e-12)

    def test_inverse_sqrt_c_scaling_rescales_solution(self, pool4):
        rng = np.random.default_rng(12)
        state = sv.random_real_state(4, rng)
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        _, unit = qite.step(state, ham, 0.2, pool4, threshold=0.0)
        _, scaled = qite.step(
            state, ham, 0.2, pool4, threshold=0.0, b_scaling=qite.B_INVERSE_SQRT_C
        )
        assert np.allclose(scaled.a, unit.a / np.sqrt(unit.c_step), atol=1e-12)

    def test_real_state_stays_real_over_twenty_steps(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        state = sv.basis_state(6, 4)
        worst = 0.0
        for _ in range(20):
            state, _ = qite.step(state, ham, 0.25, pool4)
            worst = max(worst, state.max_imag())
        assert worst < 1e-8


class TestTrajectory:
    def test_short_step_keeps_initial_diagonal_values(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        obs = model.default_observables(4)
        traj = qite.run_trajectory(5, ham, 1e-7, 1, obs, pool4)
        state = sv.basis_state(5, 4)
        for name, op in obs.items():
            assert traj.observables[name][0] == pytest.approx(
                sv.expectation(state, op).real, abs=1e-5
            )

    def test_cumulative_weights_are_running_products(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        traj = qite.run_trajectory(3, ham, 0.25, 5, model.default_observables(4), pool4)
        prod = 1.0
        for record, weight in zip(traj.records, traj.cumulative_weights):
            prod *= record.c_step
            assert weight == pytest.approx(prod)

    def test_energy_descends_from_basis_state(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 0.0)).hamiltonian
        obs = {"energy": ham}
        traj = qite.run_trajectory(0, ham, 0.25, 20, obs, pool4)
        energies = traj.observables["energy"]
        for prev, cur in zip(energies[3:], energies[4:]):
            assert cur <= prev + 1e-9

    def test_frozen_trajectory_regression(self, pool4):
        # three default-mode steps from |0011>, values frozen from a verified
        # build; the fermion number is conserved exactly along the trajectory
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        traj = qite.run_trajectory(3, ham, 0.25, 3, model.default_observables(4), pool4)
        assert [r.energy for r in traj.records] == pytest.approx(
            [0.0, -0.858787479915, -1.399292337654], abs=1e-9
        )
        assert traj.cumulative_weights == pytest.approx(
            [1.0, 1.536325828190, 3.092685813807], abs=1e-9
        )
        assert [r.kept_terms for r in traj.records] == [16, 24, 56]
        assert traj.observables[model.CHIRAL_CONDENSATE] == pytest.approx(
            [-0.000018730911, -0.186327143167, -0.446590152369], abs=1e-9
        )
        assert traj.observables[model.FERMION_NUMBER] == pytest.approx(
            [2.0, 2.0, 2.0], abs=1e-12
        )

    def test_shot_mode_is_seed_deterministic(self, pool4):
        ham = model.assemble(model.ModelParams(model.EUCLIDEAN, 4, 0.5, 1.0)).hamiltonian
        obs = model.default_observables(4)
        kwargs = dict(mode=qite.MODE_SHOTS, shots=256, seed=42)
        a = qite.run_trajectory(1, ham, 0.25, 3, obs, pool4, **kwargs)
        b = qite.run_trajectory(1, ham, 0.25, 3, obs, pool4, **kwargs)
        c = qite.run_trajectory(1, ham, 0.25, 3, obs, pool4, mode=qite.MODE_SHOTS, shots=256, seed=43)
        assert a.observables == b.observables
        assert a.observables != c.observables
