"""
Gate IR, gate constructors, device coupling maps and cat-state builders.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from ..config import resolve_data_file
from ..exceptions import (
    DimensionMismatchError,
    GateError,
    QubitIndexError,
    TopologyError,
)
from ..schemas import CatParams
from .logger import get_logger
from .qstate import (
    IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    Matrix2,
    StateVector,
    apply_cnot,
    apply_single,
)

logger = get_logger("circuit")

PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

# Edge list of the 15-qubit melbourne device (calibration sheet of 2020-04-04)
MELBOURNE_EDGES: Tuple[Tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 8), (7, 8), (8, 9),
    (9, 10), (10, 11), (11, 12), (12, 13), (13, 14),
    (0, 14), (1, 13), (2, 12), (3, 11), (4, 10), (5, 9),
)
MELBOURNE_QUBITS = 15

def _check_angle(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise GateError(f"{name} must be finite, got {value}")

def _check_index(qubit: int) -> None:
    if qubit < 0:
        raise QubitIndexError(f"qubit index must be non-negative, got {qubit}")

# Gate IR

@dataclass(frozen=True)
class U3:
    qubit: int
    theta: float
    phi: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        _check_index(self.qubit)
        for name in ("theta", "phi", "lam"):
            _check_angle(getattr(self, name), name)

    @property
    def qubits(self) -> Tuple[int, ...]:
        return (self.qubit,)

@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        _check_index(self.control)
        _check_index(self.target)
        if self.control == self.target:
            raise QubitIndexError(f"CNOT control and target must differ, both are {self.control}")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return (self.control, self.target)

@dataclass(frozen=True)
class AxisRotation:
    """exp(+i·angle/2·σ_axis) on one qubit."""
    axis: str
    qubit: int
    angle: float

    def __post_init__(self):
        if self.axis not in PAULIS:
            raise GateError(f"axis must be one of x, y, z, got {self.axis!r}")
        _check_index(self.qubit)
        _check_angle(self.angle, "angle")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return (self.qubit,)

GateOp = Union[U3, CNOT, AxisRotation]

@dataclass(frozen=True)
class CatTag:
    """Marks a circuit as preparing a cat state over ``qubits``."""
    params: CatParams
    qubits: Tuple[int, ...]

@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: Tuple[GateOp, ...] = ()
    cat: Optional[CatTag] = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise DimensionMismatchError(f"circuit needs at least one qubit, got {self.num_qubits}")
        for position, op in enumerate(self.ops):
            for q in op.qubits:
                if q >= self.num_qubits:
                    raise QubitIndexError(
                        f"op {position} touches qubit {q} outside {self.num_qubits}-qubit register"
                    )

    def append(self, *ops: GateOp) -> "Circuit":
        return Circuit(self.num_qubits, self.ops + tuple(ops), self.cat)

    def count(self, kind: type) -> int:
        return sum(isinstance(op, kind) for op in self.ops)

    def __len__(self) -> int:
        return len(self.ops)

@dataclass(frozen=True)
class CouplingMap:
    """Undirected graph of qubit pairs that support a native CNOT."""
    num_qubits: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise TopologyError(f"coupling map needs at least one qubit, got {self.num_qubits}")
        normalized = set()
        for a, b in self.edges:
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise TopologyError(f"edge ({a}, {b}) outside {self.num_qubits}-qubit device")
            normalized.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(normalized))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, qubit: int) -> List[int]:
        return sorted(b if a == qubit else a for a, b in self.edges if qubit in (a, b))

    def degree(self, qubit: int) -> int:
        return len(self.neighbors(qubit))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_qubits))
        g.add_edges_from(self.edges)
        return g

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)

@dataclass(frozen=True)
class Violation:
    op_index: int
    control: int
    target: int

@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

# Gate matrices

def u3_matrix(theta: float, phi: float, lam: float) -> Matrix2:
    for name, value in (("theta", theta), ("phi", phi), ("lambda", lam)):
        _check_angle(value, name)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (lam + phi)) * c],
        ],
        dtype=np.complex128,
    )

def axis_rotation_matrix(axis: str, angle: float) -> Matrix2:
    """cos(angle/2)·I + i·sin(angle/2)·σ_axis."""
    if axis not in PAULIS:
        raise GateError(f"axis must be one of x, y, z, got {axis!r}")
    _check_angle(angle, "angle")
    return math.cos(angle / 2) * IDENTITY + 1j * math.sin(angle / 2) * PAULIS[axis]

def gate_matrix(op: GateOp) -> Matrix2:
    if isinstance(op, U3):
        return u3_matrix(op.theta, op.phi, op.lam)
    if isinstance(op, AxisRotation):
        return axis_rotation_matrix(op.axis, op.angle)
    raise GateError(f"{type(op).__name__} has no single-qubit matrix")

def apply_op(state: StateVector, op: GateOp) -> StateVector:
    if isinstance(op, CNOT):
        return apply_cnot(state, op.control, op.target)
    return apply_single(state, op.qubit, gate_matrix(op))

def execute(circuit: Circuit, initial: StateVector) -> StateVector:
    """Run every op of ``circuit`` in order on ``initial``."""
    if circuit.num_qubits != initial.num_qubits:
        raise DimensionMismatchError(
            f"circuit has {circuit.num_qubits} qubits, state has {initial.num_qubits}"
        )
    state = initial
    for op in circuit.ops:
        state = apply_op(state, op)
    return state

# Coupling maps

def melbourne_coupling() -> CouplingMap:
    return CouplingMap(MELBOURNE_QUBITS, frozenset(MELBOURNE_EDGES))

def chain_coupling(num_qubits: int) -> CouplingMap:
    return CouplingMap(num_qubits, frozenset((i, i + 1) for i in range(num_qubits - 1)))

def parse_coupling(text: str) -> CouplingMap:
    """
    Parse the coupling-map text format: a ``qubits N`` header followed by
    one ``i j`` edge per line. ``#`` starts a comment.
    """
    num_qubits = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "qubits" and len(parts) == 2:
                num_qubits = int(parts[1])
            elif len(parts) == 2:
                edges.append((int(parts[0]), int(parts[1])))
            else:
                raise ValueError(line)
        except ValueError:
            raise TopologyError(f"line {lineno}: expected 'qubits N' or an 'i j' edge")
    if num_qubits is None:
        raise TopologyError("coupling map is missing its 'qubits N' header")
    return CouplingMap(num_qubits, frozenset(edges))

def format_coupling(coupling: CouplingMap) -> str:
    lines = [f"qubits {coupling.num_qubits}"]
    lines.extend(f"{a} {b}" for a, b in coupling.sorted_edges())
    return "\n".join(lines) + "\n"

def load_coupling(name_or_path: str, allow_paths: bool = True) -> CouplingMap:
    try:
        path = resolve_data_file(name_or_path, suffixes=(".coupling",), allow_paths=allow_paths)
        text = Path(path).read_text()
    except OSError as e:
        raise TopologyError(f"cannot read coupling map {name_or_path!r}: {e}")
    coupling = parse_coupling(text)
    logger.info("Coupling map loaded", path=str(path), qubits=coupling.num_qubits, edges=len(coupling.edges))
    return coupling

# Cat-state builders

def build_cat_chain(num_qubits: int, params: CatParams) -> Circuit:
    """U3 on qubit 0 followed by the CNOT ladder 0→1→...→N-1."""
    if num_qubits < 1:
        raise DimensionMismatchError(f"cat chain needs at least one qubit, got {num_qubits}")
    ops: List[GateOp] = [U3(0, params.theta, params.phi, params.lam)]
    ops.extend(CNOT(i, i + 1) for i in range(num_qubits - 1))
    return Circuit(num_qubits, tuple(ops), CatTag(params, tuple(range(num_qubits))))

def spanning_tree_edges(coupling: CouplingMap, root: int, size: Optional[int] = None) -> List[Tuple[int, int]]:
    """
    (parent, child) pairs of the breadth-first tree from ``root``, neighbors
    visited in ascending order, truncated to the first ``size`` qubits reached.
    """
    if not 0 <= root < coupling.num_qubits:
        raise QubitIndexError(f"root {root} outside {coupling.num_qubits}-qubit device")
    g = coupling.graph()
    reachable = nx.node_connected_component(g, root)
    if size is None:
        unreachable = sorted(set(g.nodes) - reachable)
        if unreachable:
            raise TopologyError(f"coupling map is disconnected; unreachable from {root}: {unreachable}")
        size = coupling.num_qubits
    elif not 1 <= size <= len(reachable):
        raise TopologyError(
            f"cannot span {size} qubits from root {root}; its component has {len(reachable)}"
        )
    return list(nx.bfs_edges(g, root, sort_neighbors=sorted))[: size - 1]

def build_cat_on_topology(
    coupling: CouplingMap,
    root: int,
    params: CatParams,
    size: Optional[int] = None,
) -> Circuit:
    """
    Cat-state circuit that only uses CNOTs between coupled qubits.

    With ``size`` set, the cat spans the first ``size`` qubits of the
    breadth-first order and the rest of the register stays in |0⟩.
    """
    tree = spanning_tree_edges(coupling, root, size)
    ops: List[GateOp] = [U3(root, params.theta, params.phi, params.lam)]
    ops.extend(CNOT(parent, child) for parent, child in tree)
    qubits = tuple(sorted({root} | {child for _, child in tree}))
    return Circuit(coupling.num_qubits, tuple(ops), CatTag(params, qubits))

def cat_state(num_qubits: int, params: CatParams, qubits: Optional[Sequence[int]] = None) -> StateVector:
    """Reference cos(θ/2)|0...0⟩ + e^{iφ} sin(θ/2)|1...1⟩ over ``qubits`` (default: all)."""
    qubits = range(num_qubits) if qubits is None else qubits
    mask = 0
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise QubitIndexError(f"cat qubit {q} outside {num_qubits}-qubit register")
        mask |= 1 << q
    if mask == 0:
        raise QubitIndexError("cat state needs at least one qubit")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = math.cos(params.theta / 2)
    amps[mask] = np.exp(1j * params.phi) * math.sin(params.theta / 2)
    return StateVector(amps)

def validate_circuit(circuit: Circuit, coupling: CouplingMap) -> ValidationReport:
    """Report every CNOT whose qubit pair is not a coupling edge."""
    if circuit.num_qubits != coupling.num_qubits:
        raise DimensionMismatchError(
            f"circuit has {circuit.num_qubits} qubits, coupling map has {coupling.num_qubits}"
        )
    violations = tuple(
        Violation(i, op.control, op.target)
        for i, op in enumerate(circuit.ops)
        if isinstance(op, CNOT) and not coupling.has_edge(op.control, op.target)
    )
    return ValidationReport(violations)

# Text form

def _fmt(value: float) -> str:
    return repr(float(value))

def circuit_to_text(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for op in circuit.ops:
        if isinstance(op, U3):
            lines.append(f"u3 {op.qubit} {_fmt(op.theta)} {_fmt(op.phi)} {_fmt(op.lam)}")
        elif isinstance(op, CNOT):
            lines.append(f"cx {op.control} {op.target}")
        else:
            lines.append(f"r {op.axis} {op.qubit} {_fmt(op.angle)}")
    return "\n".join(lines) + "\n"

def circuit_from_text(text: str) -> Circuit:
    num_qubits = None
    ops: List[GateOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "qubits" and len(parts) == 2:
                num_qubits = int(parts[1])
            elif parts[0] == "u3" and len(parts) == 5:
                ops.append(U3(int(parts[1]), float(parts[2]), float(parts[3]), float(parts[4])))
            elif parts[0] == "cx" and len(parts) == 3:
                ops.append(CNOT(int(parts[1]), int(parts[2])))
            elif parts[0] == "r" and len(parts) == 4:
                ops.append(AxisRotation(parts[1], int(parts[2]), float(parts[3])))
            else:
                raise ValueError(line)
        except ValueError:
            raise GateError(f"line {lineno}: unrecognised gate line")
    if num_qubits is None:
        raise GateError("circuit text is missing its 'qubits N' header")
    return Circuit(num_qubits, tuple(ops))
