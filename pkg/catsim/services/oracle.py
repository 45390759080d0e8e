"""
Brute-force references for the fast kernels.

Dense 2^N x 2^N operators built with Kronecker products check gate
application; direct partial traces check the rotate-and-measure
protocol; the closed-form cat-state curve checks the whole pipeline.
"""

import math
from functools import reduce
from typing import List

import numpy as np

from ..schemas import AXES, CatParams, OracleCheck, OracleReport
from .circuit import CNOT, U3, AxisRotation, Circuit, GateOp, build_cat_chain, execute, gate_matrix
from .logger import get_logger
from .protocol import cat_entanglement_theory, entanglement_from_bloch, exact_pauli_mean
from .qstate import IDENTITY, BlochVector, SeedLike, derive_rng, new_zero_state, reduced_bloch_vector

logger = get_logger("oracle")

AMPLITUDE_TOLERANCE = 1e-9
PAULI_TOLERANCE = 1e-10
ORACLE_MAX_QUBITS = 5
ORACLE_MAX_GATES = 20
CAT_CURVE_SIZES = (1, 2, 3, 4, 5, 15)

def dense_single(num_qubits: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    """Full-register operator of a one-qubit gate; leftmost Kronecker factor is qubit N-1."""
    factors = [gate if num_qubits - 1 - k == qubit else IDENTITY for k in range(num_qubits)]
    return reduce(np.kron, factors)

def dense_cnot(num_qubits: int, control: int, target: int) -> np.ndarray:
    """Permutation matrix of a CNOT."""
    dim = 1 << num_qubits
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for index in range(dim):
        image = index ^ (1 << target) if (index >> control) & 1 else index
        matrix[image, index] = 1.0
    return matrix

def dense_operator(num_qubits: int, op: GateOp) -> np.ndarray:
    if isinstance(op, CNOT):
        return dense_cnot(num_qubits, op.control, op.target)
    return dense_single(num_qubits, op.qubits[0], gate_matrix(op))

def dense_unitary(circuit: Circuit) -> np.ndarray:
    unitary = np.eye(1 << circuit.num_qubits, dtype=np.complex128)
    for op in circuit.ops:
        unitary = dense_operator(circuit.num_qubits, op) @ unitary
    return unitary

def random_circuit(num_qubits: int, num_gates: int, rng: np.random.Generator) -> Circuit:
    """Random mix of U3, axis rotations and (for N ≥ 2) CNOTs."""
    ops: List[GateOp] = []
    for _ in range(num_gates):
        kind = rng.integers(3 if num_qubits > 1 else 2)
        if kind == 0:
            theta, phi, lam = rng.uniform(-math.pi, math.pi, size=3)
            ops.append(U3(int(rng.integers(num_qubits)), float(theta), float(phi), float(lam)))
        elif kind == 1:
            axis = AXES[int(rng.integers(3))]
            ops.append(AxisRotation(axis, int(rng.integers(num_qubits)), float(rng.uniform(-math.pi, math.pi))))
        else:
            control, target = rng.choice(num_qubits, size=2, replace=False)
            ops.append(CNOT(int(control), int(target)))
    return Circuit(num_qubits, tuple(ops))

def _random_circuits(count: int, seed: SeedLike) -> List[Circuit]:
    circuits = []
    for i in range(count):
        rng = derive_rng(seed, i)
        n = int(rng.integers(1, ORACLE_MAX_QUBITS + 1))
        circuits.append(random_circuit(n, int(rng.integers(1, ORACLE_MAX_GATES + 1)), rng))
    return circuits

def gate_deviation(circuit: Circuit) -> float:
    """Largest amplitude difference between the kernel and dense multiplication."""
    zero = new_zero_state(circuit.num_qubits)
    fast = execute(circuit, zero).amplitudes
    dense = dense_unitary(circuit) @ zero.amplitudes
    return float(np.max(np.abs(fast - dense)))

def pauli_deviation(circuit: Circuit) -> float:
    """Largest gap between rotate-and-measure mean values and the partial-trace spin vector."""
    state = execute(circuit, new_zero_state(circuit.num_qubits))
    worst = 0.0
    for qubit in range(circuit.num_qubits):
        reference = reduced_bloch_vector(state, qubit)
        for axis, expected in zip(AXES, reference):
            worst = max(worst, abs(exact_pauli_mean(state, qubit, axis) - expected))
    return worst

def cat_curve_deviation(num_qubits: int, steps: int = 40) -> float:
    """Largest gap between protocol E and (1 − |cos θ|)/2 over a θ grid on a chain cat."""
    worst = 0.0
    for k in range(steps + 1):
        theta = 2 * math.pi * k / steps
        state = execute(build_cat_chain(num_qubits, CatParams(theta=theta)), new_zero_state(num_qubits))
        for qubit in range(num_qubits):
            means = [exact_pauli_mean(state, qubit, axis) for axis in AXES]
            measured = entanglement_from_bloch(BlochVector(*means))
            expected = cat_entanglement_theory(theta) if num_qubits > 1 else 0.0
            worst = max(worst, abs(measured - expected))
    return worst

def _check(name: str, deviations: List[float], tolerance: float) -> OracleCheck:
    worst = max(deviations) if deviations else 0.0
    return OracleCheck(
        name=name,
        max_deviation=worst,
        tolerance=tolerance,
        cases=len(deviations),
        passed=bool(worst <= tolerance),
    )

def run_oracle_suite(seed: int, circuits: int = 200) -> OracleReport:
    """Run every equivalence check; the report passes only if all of them do."""
    batch = _random_circuits(circuits, seed)
    checks = [
        _check("gate_vs_dense", [gate_deviation(c) for c in batch], AMPLITUDE_TOLERANCE),
        _check("pauli_vs_partial_trace", [pauli_deviation(c) for c in batch], PAULI_TOLERANCE),
        _check(
            "cat_entanglement_curve",
            [cat_curve_deviation(n) for n in CAT_CURVE_SIZES],
            PAULI_TOLERANCE,
        ),
    ]
    for check in checks:
        logger.info(
            "Oracle check finished",
            check=check.name,
            max_deviation=check.max_deviation,
            passed=check.passed,
        )
    return OracleReport(seed=seed, passed=all(c.passed for c in checks), checks=checks)
