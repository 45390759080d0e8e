"""
Entanglement measurement protocol.

A spin component is read by rotating the measured qubit so that the
component lines up with z, then counting 0s and 1s:

    ⟨σx⟩: rotate +π/2 about y, ⟨σy⟩: rotate −π/2 about x, ⟨σz⟩: no rotation.

The three mean values form the qubit's spin vector, and the geometric
measure of its entanglement with the rest of the register is
E = (1 − |⟨σ⟩|) / 2.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..exceptions import EstimateError, QubitIndexError
from ..schemas import AXES, BlochEstimate, CatParams, EntanglementResult
from .circuit import (
    AxisRotation,
    Circuit,
    CouplingMap,
    axis_rotation_matrix,
    build_cat_chain,
    build_cat_on_topology,
    cat_state,
    execute,
)
from .logger import get_logger, log_simulation_event
from .noise import NoiseModel, apply_readout_error, readout_shrink, run_noisy
from .qstate import (
    SeedLike,
    StateVector,
    apply_single,
    derive_rng,
    derive_seed,
    inner_product,
    new_zero_state,
    probabilities,
    qubit_probabilities,
    sample_bitstring,
    sample_indices,
)

logger = get_logger("protocol")

T = TypeVar("T")
R = TypeVar("R")

PRE_ROTATIONS = {"x": ("y", math.pi / 2), "y": ("x", -math.pi / 2)}
# key slot of the fidelity stream next to the three axis streams of a point
FIDELITY_STREAM = len(AXES)

class PauliEstimate(NamedTuple):
    mean: float
    stderr: float

class FidelityEstimate(NamedTuple):
    mean: float
    stderr: float
    readout: Optional[float] = None

def _check_axis(axis: str) -> None:
    if axis not in AXES:
        raise EstimateError(f"axis must be one of x, y, z, got {axis!r}")

def _check_qubit(qubit: int, num_qubits: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {num_qubits}-qubit register")

def _active(noise: Optional[NoiseModel]) -> Optional[NoiseModel]:
    return noise if noise is not None and noise.active else None

def pre_rotation(qubit: int, axis: str, reverse_rotations: bool = False) -> Optional[AxisRotation]:
    """Rotation that maps σ_axis onto σz before a z-basis readout."""
    _check_axis(axis)
    if axis not in PRE_ROTATIONS:
        return None
    rot_axis, angle = PRE_ROTATIONS[axis]
    return AxisRotation(rot_axis, qubit, -angle if reverse_rotations else angle)

def measurement_circuit(circuit: Circuit, qubit: int, axis: str, reverse_rotations: bool = False) -> Circuit:
    _check_qubit(qubit, circuit.num_qubits)
    rotation = pre_rotation(qubit, axis, reverse_rotations)
    return circuit if rotation is None else circuit.append(rotation)

def exact_pauli_mean(state: StateVector, qubit: int, axis: str, reverse_rotations: bool = False) -> float:
    """p0 − p1 of the pre-rotated state, i.e. the spin mean value with infinitely many shots."""
    _check_qubit(qubit, state.num_qubits)
    rotation = pre_rotation(qubit, axis, reverse_rotations)
    if rotation is not None:
        state = apply_single(state, qubit, axis_rotation_matrix(rotation.axis, rotation.angle))
    p0, p1 = qubit_probabilities(state, qubit)
    return p0 - p1

def _counting_stderr(mean: float, shots: int) -> float:
    return math.sqrt(max(0.0, 1.0 - mean ** 2) / shots)

def _sample_stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))

def estimate_pauli_mean(
    circuit: Circuit,
    qubit: int,
    axis: str,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: SeedLike = None,
    exact: bool = False,
    reverse_rotations: bool = False,
) -> PauliEstimate:
    """
    Estimate ⟨σ_axis⟩ of ``qubit`` from ``shots`` prepare-rotate-measure runs.

    Sampled mode returns (count0 − count1)/shots with stderr
    sqrt((1 − mean²)/shots). Exact mode replaces counting by p0 − p1;
    with noise it averages that value (scaled by the readout factor) over
    ``shots`` trajectories. Shot ``s`` always draws from stream ``(seed, s)``.
    """
    if shots < 1:
        raise EstimateError(f"shots must be at least 1, got {shots}")
    measured = measurement_circuit(circuit, qubit, axis, reverse_rotations)
    zero = new_zero_state(circuit.num_qubits)
    noise = _active(noise)

    if noise is None:
        state = execute(measured, zero)
        if exact:
            p0, p1 = qubit_probabilities(state, qubit)
            return PauliEstimate(p0 - p1, 0.0)
        indices = sample_indices(state, shots, derive_rng(seed))
        ones = int(((indices >> qubit) & 1).sum())
        mean = (shots - 2 * ones) / shots
        return PauliEstimate(mean, _counting_stderr(mean, shots))

    config = noise.config
    if exact:
        shrink = readout_shrink(noise.calibration, qubit) if config.include_readout else 1.0
        values = np.empty(shots)
        for s in range(shots):
            state = run_noisy(measured, zero, noise, derive_rng(seed, s))
            p0, p1 = qubit_probabilities(state, qubit)
            values[s] = (p0 - p1) * shrink
        return PauliEstimate(float(values.mean()), _sample_stderr(values))

    zeros = 0
    for s in range(shots):
        rng = derive_rng(seed, s)
        state = run_noisy(measured, zero, noise, rng)
        bits = sample_bitstring(state, rng)
        if config.include_readout:
            bits = apply_readout_error(bits, noise.calibration, rng)
        zeros += int(bits[qubit] == 0)
    mean = (2 * zeros - shots) / shots
    return PauliEstimate(mean, _counting_stderr(mean, shots))

def _clamped_length(sx: float, sy: float, sz: float) -> Tuple[float, bool]:
    for value in (sx, sy, sz):
        if not math.isfinite(value):
            raise EstimateError("spin components must be finite")
    length = math.sqrt(sx ** 2 + sy ** 2 + sz ** 2)
    return min(1.0, length), length > 1.0

def entanglement_from_bloch(bloch) -> float:
    """E = (1 − |⟨σ⟩|)/2 with the spin length clamped at 1."""
    length, _ = _clamped_length(bloch.sx, bloch.sy, bloch.sz)
    return (1.0 - length) / 2.0

def cat_entanglement_theory(theta: float) -> float:
    """E of any qubit of a cat state: (1 − |cos θ|)/2."""
    if not math.isfinite(theta):
        raise EstimateError(f"theta must be finite, got {theta}")
    return (1.0 - abs(math.cos(theta))) / 2.0

def fidelity_exact(reference: StateVector, actual: StateVector) -> float:
    """|⟨reference|actual⟩|²."""
    return min(1.0, abs(inner_product(reference, actual)) ** 2)

def _bits_to_index(bits: np.ndarray) -> int:
    return int(sum(int(b) << q for q, b in enumerate(bits)))

def _population_overlap(reference: StateVector, indices: np.ndarray) -> float:
    p = probabilities(reference)
    q = np.bincount(indices, minlength=p.size) / indices.size
    return float(np.sum(np.sqrt(p * q)) ** 2)

def _noisy_fidelity_samples(
    reference: StateVector,
    circuit: Circuit,
    noise: NoiseModel,
    trajectories: int,
    seed: SeedLike,
) -> Tuple[np.ndarray, np.ndarray]:
    # one trajectory yields both a state overlap and one all-qubit readout
    overlaps = np.empty(trajectories)
    indices = np.empty(trajectories, dtype=np.int64)
    zero = new_zero_state(circuit.num_qubits)
    for t in range(trajectories):
        rng = derive_rng(seed, t)
        state = run_noisy(circuit, zero, noise, rng)
        overlaps[t] = fidelity_exact(reference, state)
        bits = sample_bitstring(state, rng)
        if noise.config.include_readout:
            bits = apply_readout_error(bits, noise.calibration, rng)
        indices[t] = _bits_to_index(bits)
    return overlaps, indices

def fidelity_noisy(
    reference: StateVector,
    circuit: Circuit,
    noise: Optional[NoiseModel],
    trajectories: int,
    seed: SeedLike = None,
) -> FidelityEstimate:
    """
    Trajectory average of |⟨reference|ψ_t⟩|², which equals ⟨reference|ρ|reference⟩
    for the unravelled mixed state. ``readout`` carries the population overlap
    of one noisy all-qubit readout per trajectory.
    """
    if trajectories < 1:
        raise EstimateError(f"trajectories must be at least 1, got {trajectories}")
    noise = _active(noise)
    if noise is None:
        return FidelityEstimate(fidelity_exact(reference, execute(circuit, new_zero_state(circuit.num_qubits))), 0.0)
    overlaps, indices = _noisy_fidelity_samples(reference, circuit, noise, trajectories, seed)
    return FidelityEstimate(
        float(overlaps.mean()),
        _sample_stderr(overlaps),
        _population_overlap(reference, indices),
    )

def fidelity_readout(
    reference: StateVector,
    circuit: Circuit,
    noise: Optional[NoiseModel],
    shots: int,
    seed: SeedLike = None,
) -> float:
    """
    Squared Bhattacharyya overlap between the reference's z-basis populations
    and ``shots`` all-qubit readouts of the prepared state. Readout errors of
    every qubit enter this number.
    """
    if shots < 1:
        raise EstimateError(f"shots must be at least 1, got {shots}")
    noise = _active(noise)
    if noise is None:
        state = execute(circuit, new_zero_state(circuit.num_qubits))
        return _population_overlap(reference, sample_indices(state, shots, derive_rng(seed)))
    _, indices = _noisy_fidelity_samples(reference, circuit, noise, shots, seed)
    return _population_overlap(reference, indices)

def _theory_for(circuit: Circuit, qubit: int) -> Tuple[Optional[float], Optional[float]]:
    if circuit.cat is None:
        return None, None
    theta = circuit.cat.params.theta
    if qubit not in circuit.cat.qubits or len(circuit.cat.qubits) == 1:
        # a qubit outside the cat (or a one-qubit "cat") is in a product state
        return theta, 0.0
    return theta, cat_entanglement_theory(theta)

def measure_qubit_entanglement(
    circuit: Circuit,
    qubit: int,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: SeedLike = None,
    exact: bool = False,
    reverse_rotations: bool = False,
) -> EntanglementResult:
    """Measure all three spin components of ``qubit`` and combine them into E."""
    _check_qubit(qubit, circuit.num_qubits)
    estimates = [
        estimate_pauli_mean(
            circuit, qubit, axis, shots, noise, derive_seed(seed, i), exact, reverse_rotations
        )
        for i, axis in enumerate(AXES)
    ]
    (sx, ex), (sy, ey), (sz, ez) = estimates
    bloch = BlochEstimate(
        sx=sx, sy=sy, sz=sz,
        stderr_x=ex, stderr_y=ey, stderr_z=ez,
        shots_per_axis=shots,
        exact=exact,
    )
    length, clamped = _clamped_length(sx, sy, sz)
    theta, e_theory = _theory_for(circuit, qubit)
    return EntanglementResult(
        qubit=qubit,
        theta=theta,
        e_measured=(1.0 - length) / 2.0,
        e_theory=e_theory,
        bloch=bloch,
        clamped=clamped,
    )

def theta_grid(start: float, end: float, step: float) -> List[float]:
    """Inclusive grid start, start+step, ..., tolerant of float accumulation at ``end``."""
    for value in (start, end, step):
        if not math.isfinite(value):
            raise EstimateError("theta grid bounds must be finite")
    if step <= 0:
        raise EstimateError(f"theta_step must be positive, got {step}")
    if end < start:
        raise EstimateError(f"theta_end {end} is smaller than theta_start {start}")
    count = int(math.floor((end - start) / step + 1e-9))
    return [start + k * step for k in range(count + 1)]

def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """map() over a thread pool; results keep input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

def prepare_cat(
    num_qubits: int,
    params: CatParams,
    coupling: Optional[CouplingMap] = None,
    root: Optional[int] = None,
) -> Circuit:
    """Chain builder without a coupling map; otherwise the topology builder over ``num_qubits`` qubits."""
    if coupling is None:
        return build_cat_chain(num_qubits, params)
    return build_cat_on_topology(coupling, root, params, size=num_qubits)

def sweep_theta(
    num_qubits: int,
    qubit: int,
    coupling: Optional[CouplingMap] = None,
    root: Optional[int] = None,
    theta_start: float = 0.0,
    theta_end: float = 2 * math.pi,
    theta_step: float = math.pi / 20,
    shots: int = 1024,
    noise: Optional[NoiseModel] = None,
    compute_fidelity: bool = False,
    seed: SeedLike = None,
    exact: bool = False,
    phi: float = 0.0,
    lam: float = 0.0,
    trajectories: int = 500,
    workers: int = 1,
) -> List[EntanglementResult]:
    """
    One EntanglementResult per θ of the inclusive grid.

    Without ``coupling`` the cat is built as a CNOT chain over
    ``num_qubits`` qubits; with it, on the first ``num_qubits`` qubits of
    the breadth-first tree from ``root``. Point ``i`` draws from stream
    ``(seed, i)``.
    """
    grid = theta_grid(theta_start, theta_end, theta_step)
    register = num_qubits if coupling is None else coupling.num_qubits
    _check_qubit(qubit, register)
    started = time.perf_counter()

    def run_point(indexed: Tuple[int, float]) -> EntanglementResult:
        index, theta = indexed
        params = CatParams(theta=theta, phi=phi, lam=lam)
        circuit = prepare_cat(num_qubits, params, coupling, root)
        point_seed = derive_seed(seed, index)
        result = measure_qubit_entanglement(circuit, qubit, shots, noise, point_seed, exact)
        if not compute_fidelity:
            return result
        reference = cat_state(circuit.num_qubits, params, circuit.cat.qubits)
        fidelity_seed = derive_seed(point_seed, FIDELITY_STREAM)
        if _active(noise) is None:
            estimate = fidelity_noisy(reference, circuit, None, trajectories, fidelity_seed)
            readout = None if exact else fidelity_readout(reference, circuit, None, shots, fidelity_seed)
        else:
            estimate = fidelity_noisy(reference, circuit, noise, trajectories, fidelity_seed)
            readout = estimate.readout
        return result.model_copy(update={
            "fidelity": estimate.mean,
            "fidelity_stderr": estimate.stderr,
            "fidelity_readout": readout,
        })

    results = ordered_map(run_point, list(enumerate(grid)), workers)
    log_simulation_event(
        "sweep_finished",
        points=len(results),
        num_qubits=num_qubits,
        qubit=qubit,
        elapsed_s=round(time.perf_counter() - started, 3),
    )
    return results

def per_qubit_entanglement(
    coupling: CouplingMap,
    root: int,
    theta: float,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: SeedLike = None,
    exact: bool = False,
    phi: float = 0.0,
    lam: float = 0.0,
    qubits: Optional[Sequence[int]] = None,
    size: Optional[int] = None,
    workers: int = 1,
) -> List[Tuple[int, EntanglementResult]]:
    """
    E of every qubit (or of ``qubits``) of one topology-built cat state.

    Each qubit gets its own measurement pipeline and fresh shots, drawn
    from stream ``(seed, qubit)``.
    """
    params = CatParams(theta=theta, phi=phi, lam=lam)
    circuit = build_cat_on_topology(coupling, root, params, size=size)
    targets = list(range(coupling.num_qubits)) if qubits is None else list(qubits)
    for q in targets:
        _check_qubit(q, coupling.num_qubits)

    def run_qubit(q: int) -> Tuple[int, EntanglementResult]:
        return q, measure_qubit_entanglement(circuit, q, shots, noise, derive_seed(seed, q), exact)

    return ordered_map(run_qubit, targets, workers)
