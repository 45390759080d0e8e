"""
Dense statevector kernel.

Qubit 0 is the least-significant bit of the basis index. A ``StateVector``
never changes after construction: every operation returns a new vector and
the amplitude buffer is marked read-only, so vectors can be handed between
threads freely.
"""

from typing import Dict, NamedTuple, Sequence, Tuple, Union

import numpy as np

from ..config import settings
from ..exceptions import (
    DimensionMismatchError,
    GateError,
    NormalizationError,
    QubitIndexError,
    SizeError,
)

MAX_QUBITS = settings.MAX_QUBITS
UNITARY_ATOL = 1e-8
SAMPLING_NORM_ATOL = 1e-6

Matrix2 = np.ndarray
SeedLike = Union[int, np.random.SeedSequence, None]

IDENTITY = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

class BlochVector(NamedTuple):
    sx: float
    sy: float
    sz: float

    @property
    def length(self) -> float:
        return float(np.sqrt(self.sx ** 2 + self.sy ** 2 + self.sz ** 2))

class StateVector:
    """2^N complex amplitudes of an N-qubit pure state."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes: Sequence[complex]):
        amps = np.array(amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise SizeError(f"amplitude count must be a power of two >= 2, got {amps.size}")
        num_qubits = amps.size.bit_length() - 1
        _check_size(num_qubits)
        amps.flags.writeable = False
        self.num_qubits = num_qubits
        self.amplitudes = amps

    @classmethod
    def _adopt(cls, amps: np.ndarray, num_qubits: int) -> "StateVector":
        # Takes ownership of a freshly computed buffer without copying it.
        state = cls.__new__(cls)
        amps = amps.reshape(-1)
        amps.flags.writeable = False
        state.num_qubits = num_qubits
        state.amplitudes = amps
        return state

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"

def _check_size(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise SizeError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")

def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {state.num_qubits}-qubit register")

def _qubit_view(amps: np.ndarray, num_qubits: int, qubit: int) -> np.ndarray:
    # axis 1 of the view is the qubit's bit
    return amps.reshape(1 << (num_qubits - 1 - qubit), 2, 1 << qubit)

def new_zero_state(num_qubits: int) -> StateVector:
    """|00...0⟩ on ``num_qubits`` qubits."""
    _check_size(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector._adopt(amps, num_qubits)

def validate_unitary(gate: Matrix2) -> np.ndarray:
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (2, 2):
        raise GateError(f"single-qubit gate must be 2x2, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise GateError("gate has non-finite entries")
    if not np.allclose(g.conj().T @ g, IDENTITY, atol=UNITARY_ATOL):
        raise GateError("gate is not unitary")
    return g

def _apply_matrix(state: StateVector, qubit: int, matrix: np.ndarray) -> np.ndarray:
    view = _qubit_view(state.amplitudes, state.num_qubits, qubit)
    return (matrix @ view).reshape(-1)

def apply_single(state: StateVector, qubit: int, gate: Matrix2) -> StateVector:
    """Apply a 2x2 unitary to one qubit."""
    _check_qubit(state, qubit)
    g = validate_unitary(gate)
    return StateVector._adopt(_apply_matrix(state, qubit, g), state.num_qubits)

def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """Flip ``target`` on every basis state whose ``control`` bit is 1."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise QubitIndexError(f"control and target must differ, both are {control}")
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n).copy()
    # tensor axis k holds qubit n-1-k
    c_axis, t_axis = n - 1 - control, n - 1 - target
    index = [slice(None)] * n
    index[c_axis] = 1
    index = tuple(index)
    flip_axis = t_axis - 1 if t_axis > c_axis else t_axis
    psi[index] = np.flip(psi[index], axis=flip_axis).copy()
    return StateVector._adopt(psi, n)

def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2

def norm(state: StateVector) -> float:
    return float(np.linalg.norm(state.amplitudes))

def qubit_probabilities(state: StateVector, qubit: int) -> Tuple[float, float]:
    """Probabilities of reading 0 and 1 on ``qubit`` in the z basis."""
    _check_qubit(state, qubit)
    view = _qubit_view(state.amplitudes, state.num_qubits, qubit)
    p0 = float(np.vdot(view[:, 0, :], view[:, 0, :]).real)
    p1 = float(np.vdot(view[:, 1, :], view[:, 1, :]).real)
    return p0, p1

def _check_sampling_norm(state: StateVector) -> np.ndarray:
    p = probabilities(state)
    total = float(p.sum())
    if abs(total - 1.0) > SAMPLING_NORM_ATOL:
        raise NormalizationError(f"cannot sample from state with squared norm {total:.9f}")
    return p / total

def sample_indices(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` basis indices from |amplitude|^2 without touching the state."""
    p = _check_sampling_norm(state)
    return rng.choice(p.size, size=shots, p=p)

def index_to_bits(index: int, num_qubits: int) -> np.ndarray:
    """bits[q] is the bit of qubit q."""
    return ((int(index) >> np.arange(num_qubits)) & 1).astype(np.uint8)

def format_bitstring(bits: Sequence[int]) -> str:
    """Render with qubit N-1 leftmost, the usual device convention."""
    return "".join(str(int(b)) for b in reversed(list(bits)))

def sample_bitstring(state: StateVector, rng: np.random.Generator) -> np.ndarray:
    """One N-bit measurement outcome; the state is left untouched."""
    index = sample_indices(state, 1, rng)[0]
    return index_to_bits(index, state.num_qubits)

def sample_counts(state: StateVector, shots: int, rng: np.random.Generator) -> Dict[str, int]:
    indices = sample_indices(state, shots, rng)
    values, counts = np.unique(indices, return_counts=True)
    return {
        format_bitstring(index_to_bits(v, state.num_qubits)): int(c)
        for v, c in zip(values, counts)
    }

def inner_product(a: StateVector, b: StateVector) -> complex:
    """⟨a|b⟩, conjugate-linear in ``a``."""
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatchError(
            f"inner product of {a.num_qubits}- and {b.num_qubits}-qubit states"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))

def reduced_density_matrix(state: StateVector, qubit: int) -> np.ndarray:
    """2x2 density matrix of ``qubit`` after tracing out every other qubit."""
    _check_qubit(state, qubit)
    view = _qubit_view(state.amplitudes, state.num_qubits, qubit)
    return np.einsum("aib,ajb->ij", view, view.conj())

def reduced_bloch_vector(state: StateVector, qubit: int) -> BlochVector:
    """(⟨σx⟩, ⟨σy⟩, ⟨σz⟩) of one qubit by direct partial trace."""
    rho = reduced_density_matrix(state, qubit)
    return BlochVector(
        sx=float(2 * rho[0, 1].real),
        sy=float(-2 * rho[0, 1].imag),
        sz=float((rho[0, 0] - rho[1, 1]).real),
    )

def apply_kraus_branch(
    state: StateVector,
    qubit: int,
    kraus: Sequence[np.ndarray],
    rng: np.random.Generator,
) -> Tuple[StateVector, int]:
    """
    One quantum-trajectory step of a single-qubit channel.

    Branch k is taken with probability ||K_k ψ||^2 and the result renormalised.
    Returns the new state and the index of the branch taken.
    """
    _check_qubit(state, qubit)
    rho = reduced_density_matrix(state, qubit)
    weights = np.array([np.trace(k.conj().T @ k @ rho).real for k in kraus])
    weights = np.clip(weights, 0.0, None)
    cumulative = np.cumsum(weights)
    branch = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    branch = min(branch, len(kraus) - 1)
    out = _apply_matrix(state, qubit, kraus[branch])
    out /= np.sqrt(weights[branch])
    return StateVector._adopt(out, state.num_qubits), branch

def derive_seed(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """
    Child seed addressed by ``key`` (point, axis, shot, ...).

    Children depend only on the master seed and the key, never on the order
    in which they are requested, so parallel schedules reproduce serial runs.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.SeedSequence(
        seed.entropy,
        spawn_key=tuple(seed.spawn_key) + tuple(int(k) for k in key),
    )

def derive_rng(seed: SeedLike, *key: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *key))
