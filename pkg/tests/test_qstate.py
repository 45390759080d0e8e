import math

import numpy as np
import pytest

from catsim.exceptions import (
    DimensionMismatchError,
    GateError,
    NormalizationError,
    QubitIndexError,
    SizeError,
)
from catsim.schemas import CatParams
from catsim.services.circuit import cat_state, u3_matrix
from catsim.services.qstate import (
    IDENTITY,
    PAULI_X,
    StateVector,
    apply_cnot,
    apply_kraus_branch,
    apply_single,
    derive_rng,
    derive_seed,
    format_bitstring,
    index_to_bits,
    inner_product,
    new_zero_state,
    norm,
    qubit_probabilities,
    reduced_bloch_vector,
    sample_bitstring,
    sample_counts,
    sample_indices,
)

def basis_state(num_qubits, index):
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)

class TestStateVector:
    """Construction and register size limits."""

    def test_zero_state_amplitudes(self):
        assert np.array_equal(new_zero_state(1).amplitudes, [1, 0])
        assert np.array_equal(new_zero_state(2).amplitudes, [1, 0, 0, 0])

    def test_zero_state_fifteen_qubits(self):
        state = new_zero_state(15)
        assert len(state) == 32768
        assert state.amplitudes[0] == 1
        assert np.count_nonzero(state.amplitudes) == 1

    @pytest.mark.parametrize("num_qubits", [0, -1, 25])
    def test_zero_state_rejects_size(self, num_qubits):
        with pytest.raises(SizeError):
            new_zero_state(num_qubits)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(SizeError):
            StateVector([1, 0, 0])

    def test_amplitudes_are_read_only(self):
        state = new_zero_state(2)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0

    def test_operations_leave_input_untouched(self):
        state = new_zero_state(2)
        apply_single(state, 0, PAULI_X)
        assert state.amplitudes[0] == 1

class TestApplySingle:
    def test_u3_on_zero(self):
        theta, phi = 1.1, 0.4
        state = apply_single(new_zero_state(1), 0, u3_matrix(theta, phi, 0.0))
        expected = [math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)]
        assert np.allclose(state.amplitudes, expected, atol=1e-12)

    def test_identity(self):
        state = apply_single(new_zero_state(1), 0, IDENTITY)
        assert np.allclose(state.amplitudes, [1, 0])

    def test_acts_on_the_right_bit(self):
        # qubit 1 set: basis index 2
        state = apply_single(basis_state(2, 2), 1, u3_matrix(math.pi, 0.0, 0.0))
        assert abs(state.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(QubitIndexError):
            apply_single(new_zero_state(2), 2, PAULI_X)

    def test_rejects_non_unitary(self):
        with pytest.raises(GateError):
            apply_single(new_zero_state(1), 0, np.array([[1, 0], [0, 2]]))

    def test_rejects_wrong_shape(self):
        with pytest.raises(GateError):
            apply_single(new_zero_state(1), 0, np.eye(3))

    def test_gate_then_inverse_restores_state(self):
        rng = np.random.default_rng(7)
        state = new_zero_state(3)
        for q in range(3):
            state = apply_single(state, q, u3_matrix(*rng.uniform(-3, 3, size=3)))
        gate = u3_matrix(0.3, 1.2, -0.7)
        restored = apply_single(apply_single(state, 1, gate), 1, gate.conj().T)
        assert np.allclose(restored.amplitudes, state.amplitudes, atol=1e-9)

    @pytest.mark.parametrize("qubit", range(4))
    def test_matches_dense_operator(self, qubit):
        rng = np.random.default_rng(qubit)
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = StateVector(amps / np.linalg.norm(amps))
        gate = u3_matrix(0.4, -1.1, 2.3)
        dense = np.kron(np.kron(np.eye(1 << (3 - qubit)), gate), np.eye(1 << qubit))
        result = apply_single(state, qubit, gate)
        assert np.allclose(result.amplitudes, dense @ state.amplitudes, atol=1e-12)

class TestApplyCnot:
    def test_bell_state(self):
        plus = apply_single(new_zero_state(2), 0, u3_matrix(math.pi / 2, 0, 0))
        bell = apply_cnot(plus, 0, 1)
        assert np.allclose(bell.amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])

    def test_control_unset(self):
        assert np.allclose(apply_cnot(new_zero_state(2), 0, 1).amplitudes, [1, 0, 0, 0])

    def test_target_flipped(self):
        out = apply_cnot(basis_state(2, 3), 0, 1)
        assert np.allclose(out.amplitudes, [0, 1, 0, 0])

    @pytest.mark.parametrize("control,target", [(0, 2), (2, 0), (1, 3), (3, 1)])
    def test_matches_bit_arithmetic(self, control, target):
        rng = np.random.default_rng(11)
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = StateVector(amps / np.linalg.norm(amps))
        out = apply_cnot(state, control, target)
        for index in range(16):
            image = index ^ (1 << target) if (index >> control) & 1 else index
            assert out.amplitudes[image] == pytest.approx(state.amplitudes[index])

    def test_equal_indices(self):
        with pytest.raises(QubitIndexError):
            apply_cnot(new_zero_state(2), 1, 1)

    def test_out_of_range(self):
        with pytest.raises(QubitIndexError):
            apply_cnot(new_zero_state(2), 0, 5)

    def test_norm_preserved(self):
        rng = np.random.default_rng(3)
        state = new_zero_state(4)
        for _ in range(30):
            state = apply_single(state, int(rng.integers(4)), u3_matrix(*rng.uniform(-3, 3, size=3)))
            c, t = rng.choice(4, size=2, replace=False)
            state = apply_cnot(state, int(c), int(t))
        assert norm(state) == pytest.approx(1.0, abs=1e-9)

class TestProbabilities:
    def test_half_pi_cat(self):
        state = cat_state(4, CatParams(theta=math.pi / 2))
        for q in range(4):
            p0, p1 = qubit_probabilities(state, q)
            assert p0 == pytest.approx(0.5, abs=1e-12)
            assert p1 == pytest.approx(0.5, abs=1e-12)

    def test_zero(self):
        assert qubit_probabilities(new_zero_state(1), 0) == (1.0, 0.0)

    def test_third_pi_cat(self):
        p0, p1 = qubit_probabilities(cat_state(3, CatParams(theta=math.pi / 3)), 2)
        assert p0 == pytest.approx(0.75, abs=1e-12)
        assert p1 == pytest.approx(0.25, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(QubitIndexError):
            qubit_probabilities(new_zero_state(2), 3)

class TestSampling:
    def test_zero_state_always_zeros(self, rng):
        for _ in range(20):
            assert not sample_bitstring(new_zero_state(3), rng).any()

    def test_half_pi_cat_statistics(self, rng):
        state = cat_state(4, CatParams(theta=math.pi / 2))
        counts = sample_counts(state, 100_000, rng)
        assert set(counts) <= {"0000", "1111"}
        assert counts["1111"] / 100_000 == pytest.approx(0.5, abs=0.005)

    def test_pi_cat_all_ones(self, rng):
        state = cat_state(5, CatParams(theta=math.pi))
        assert sample_counts(state, 10_000, rng) == {"11111": 10_000}

    def test_frequencies_within_four_sigma(self, rng):
        state = apply_single(new_zero_state(1), 0, u3_matrix(1.0, 0, 0))
        shots = 20_000
        p1 = math.sin(0.5) ** 2
        ones = int(sample_indices(state, shots, rng).sum())
        assert abs(ones / shots - p1) <= 4 * math.sqrt(p1 * (1 - p1) / shots)

    def test_unnormalized_state_rejected(self, rng):
        with pytest.raises(NormalizationError):
            sample_bitstring(StateVector([0.9, 0.0]), rng)

    def test_bit_order(self):
        bits = index_to_bits(1, 3)
        assert list(bits) == [1, 0, 0]
        assert format_bitstring(bits) == "001"

class TestInnerProduct:
    def test_self_overlap(self):
        state = cat_state(3, CatParams(theta=0.8, phi=0.3))
        assert inner_product(state, state) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert inner_product(basis_state(1, 0), basis_state(1, 1)) == 0

    def test_two_cats(self):
        a = cat_state(4, CatParams(theta=math.pi / 2))
        b = cat_state(4, CatParams(theta=math.pi / 3))
        expected = math.cos(math.pi / 4) * math.cos(math.pi / 6) + math.sin(math.pi / 4) * math.sin(math.pi / 6)
        assert inner_product(a, b).real == pytest.approx(expected, abs=1e-12)

    def test_conjugate_linear_in_first_argument(self):
        a = StateVector([1j, 0])
        b = StateVector([1, 0])
        assert inner_product(a, b) == pytest.approx(-1j)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            inner_product(new_zero_state(1), new_zero_state(2))

class TestReducedBlochVector:
    @pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2, 2.0, math.pi])
    def test_cat_state(self, theta):
        state = cat_state(3, CatParams(theta=theta, phi=0.7))
        for q in range(3):
            sx, sy, sz = reduced_bloch_vector(state, q)
            assert sx == pytest.approx(0.0, abs=1e-12)
            assert sy == pytest.approx(0.0, abs=1e-12)
            assert sz == pytest.approx(math.cos(theta), abs=1e-12)

    def test_product_state(self):
        theta, phi = 1.2, 0.5
        state = apply_single(new_zero_state(2), 0, u3_matrix(theta, phi, 0))
        bloch = reduced_bloch_vector(state, 0)
        assert bloch.sx == pytest.approx(math.sin(theta) * math.cos(phi), abs=1e-12)
        assert bloch.sy == pytest.approx(math.sin(theta) * math.sin(phi), abs=1e-12)
        assert bloch.sz == pytest.approx(math.cos(theta), abs=1e-12)
        assert bloch.length == pytest.approx(1.0, abs=1e-9)

    def test_bell_state(self):
        bell = cat_state(2, CatParams(theta=math.pi / 2))
        for q in range(2):
            assert reduced_bloch_vector(bell, q).length == pytest.approx(0.0, abs=1e-12)

    def test_entangled_state_is_shorter(self):
        state = cat_state(3, CatParams(theta=1.0))
        assert reduced_bloch_vector(state, 1).length < 1 - 1e-6

class TestKrausBranch:
    def test_branch_renormalized(self, rng):
        gamma = 0.3
        kraus = [
            np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
            np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
        ]
        state = apply_single(new_zero_state(1), 0, PAULI_X)
        out, branch = apply_kraus_branch(state, 0, kraus, rng)
        assert norm(out) == pytest.approx(1.0, abs=1e-12)
        assert branch in (0, 1)

    def test_branch_frequency(self):
        gamma = 0.25
        kraus = [
            np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
            np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
        ]
        excited = apply_single(new_zero_state(1), 0, PAULI_X)
        rng = np.random.default_rng(5)
        decays = sum(apply_kraus_branch(excited, 0, kraus, rng)[1] for _ in range(4000))
        assert decays / 4000 == pytest.approx(gamma, abs=4 * math.sqrt(gamma * (1 - gamma) / 4000))

class TestDerivedStreams:
    def test_same_key_same_stream(self):
        assert derive_rng(42, 3, 1).random() == derive_rng(42, 3, 1).random()

    def test_different_keys_differ(self):
        assert derive_rng(42, 3, 1).random() != derive_rng(42, 1, 3).random()

    def test_nested_keys_compose(self):
        nested = derive_rng(derive_seed(derive_seed(9, 2), 5))
        flat = derive_rng(9, 2, 5)
        assert nested.random() == flat.random()
