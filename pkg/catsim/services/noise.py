"""
Calibration ingestion and the stochastic noise engine.

Noise is unravelled into quantum trajectories on the statevector: every
gate is followed by sampled depolarizing, amplitude-damping and
pure-dephasing branches on the qubits it touched. Readout error is a
classical symmetric bit flip applied after sampling.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ..config import resolve_data_file
from ..exceptions import CalibrationError, DimensionMismatchError
from ..schemas import CalibrationTable, EdgeCalibration, NoiseConfig, QubitCalibration
from .circuit import CNOT, U3, Circuit, CouplingMap, GateOp, apply_op
from .logger import get_logger, log_simulation_event
from .qstate import PAULI_X, PAULI_Y, PAULI_Z, StateVector, apply_kraus_branch, apply_single

logger = get_logger("noise")

NON_IDENTITY_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

# Column scales of the published calibration sheet
SCALED_KEYS = {
    "gate_err": ("gate_error", 1.0),
    "gate_err_e3": ("gate_error", 1e-3),
    "readout_err": ("readout_error", 1.0),
    "readout_err_e2": ("readout_error", 1e-2),
    "t1": ("t1", 1.0),
    "t2": ("t2", 1.0),
}
EDGE_KEYS = {"err": 1.0, "err_e2": 1e-2}

_QUBIT_LINE = re.compile(r"^q(\d+)$")

@dataclass(frozen=True)
class NoiseModel:
    """Calibration data plus the switches that decide which channels run."""
    calibration: CalibrationTable
    config: NoiseConfig = field(default_factory=NoiseConfig)
    # Calibration file the table was read from
    source: Optional[str] = None

    @property
    def active(self) -> bool:
        return self.config.enabled

# Calibration file format

def _parse_number(value: str, lineno: int, key: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise CalibrationError(f"line {lineno}: malformed number for {key}")
    if not math.isfinite(number):
        raise CalibrationError(f"line {lineno}: {key} must be finite")
    return number

def _parse_int(value: str, lineno: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise CalibrationError(f"line {lineno}: {key} must be an integer")

def _parse_fields(parts: Sequence[str], lineno: int) -> Dict[str, str]:
    fields = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep or not value:
            raise CalibrationError(f"line {lineno}: expected key=value fields")
        fields[key] = value
    return fields

def parse_calibration(text: str) -> CalibrationTable:
    """
    Parse a calibration file.

    Header ``qubits N``; optional ``device NAME``; one
    ``q<i> t1=<µs> t2=<µs> gate_err=<p> readout_err=<p>`` line per qubit;
    ``cx <i> <j> err=<p>`` per edge. The ``gate_err_e3``, ``readout_err_e2``
    and ``err_e2`` keys accept values in the sheet's 10^-3 / 10^-2 units.
    """
    num_qubits: Optional[int] = None
    name: Optional[str] = None
    rows: Dict[int, Dict[str, float]] = {}
    edges: Dict[Tuple[int, int], float] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]

        if head == "qubits":
            if len(parts) != 2:
                raise CalibrationError(f"line {lineno}: expected 'qubits N'")
            num_qubits = _parse_int(parts[1], lineno, "qubits")
            if num_qubits < 1:
                raise CalibrationError(f"line {lineno}: qubit count must be positive")
        elif head == "device":
            name = " ".join(parts[1:]) or None
        elif _QUBIT_LINE.match(head):
            index = int(_QUBIT_LINE.match(head).group(1))
            if index in rows:
                raise CalibrationError(f"line {lineno}: duplicate row for qubit {index}")
            values = {}
            for key, value in _parse_fields(parts[1:], lineno).items():
                if key not in SCALED_KEYS:
                    raise CalibrationError(f"line {lineno}: unknown qubit field {key!r}")
                target, scale = SCALED_KEYS[key]
                values[target] = _parse_number(value, lineno, key) * scale
            missing = {"t1", "t2", "gate_error", "readout_error"} - set(values)
            if missing:
                raise CalibrationError(f"line {lineno}: qubit {index} lacks {sorted(missing)}")
            rows[index] = values
        elif head == "cx":
            if len(parts) != 4:
                raise CalibrationError(f"line {lineno}: expected 'cx i j err=<p>'")
            a = _parse_int(parts[1], lineno, "control")
            b = _parse_int(parts[2], lineno, "target")
            fields = _parse_fields(parts[3:], lineno)
            key = next(iter(fields))
            if key not in EDGE_KEYS:
                raise CalibrationError(f"line {lineno}: unknown edge field {key!r}")
            pair = (min(a, b), max(a, b))
            if pair in edges:
                raise CalibrationError(f"line {lineno}: duplicate edge {pair}")
            edges[pair] = _parse_number(fields[key], lineno, key) * EDGE_KEYS[key]
        else:
            raise CalibrationError(f"line {lineno}: unrecognised line")

    if num_qubits is None:
        raise CalibrationError("calibration is missing its 'qubits N' header")
    missing_rows = [q for q in range(num_qubits) if q not in rows]
    if missing_rows:
        raise CalibrationError(f"missing calibration rows for qubits {missing_rows}")
    extra_rows = sorted(q for q in rows if q >= num_qubits)
    if extra_rows:
        raise CalibrationError(f"rows for unknown qubits {extra_rows}")
    unknown = sorted(pair for pair in edges if pair[1] >= num_qubits)
    if unknown:
        raise CalibrationError(f"edges reference unknown qubits: {unknown}")

    try:
        return CalibrationTable(
            name=name,
            qubits=[QubitCalibration(**rows[q]) for q in range(num_qubits)],
            edges=[EdgeCalibration(pair=pair, cx_error=err) for pair, err in sorted(edges.items())],
        )
    except ValidationError as e:
        raise CalibrationError(f"calibration values out of range: {e.errors()[0]['msg']}")

def format_calibration(table: CalibrationTable) -> str:
    lines = [f"qubits {table.num_qubits}"]
    if table.name:
        lines.append(f"device {table.name}")
    for i, q in enumerate(table.qubits):
        lines.append(
            f"q{i} t1={q.t1!r} t2={q.t2!r} gate_err={q.gate_error!r} readout_err={q.readout_error!r}"
        )
    for edge in table.edges:
        a, b = edge.pair
        lines.append(f"cx {a} {b} err={edge.cx_error!r}")
    return "\n".join(lines) + "\n"

def locate_calibration(name_or_path: str, allow_paths: bool = True) -> Path:
    """Resolved file behind a calibration path or bundled name."""
    try:
        return resolve_data_file(name_or_path, suffixes=(".cal",), allow_paths=allow_paths)
    except OSError as e:
        raise CalibrationError(f"cannot read calibration {name_or_path!r}: {e}")

def load_calibration(name_or_path: str, allow_paths: bool = True) -> CalibrationTable:
    """Read a calibration by path or by bundled name (e.g. ``melbourne-20200404``)."""
    path = locate_calibration(name_or_path, allow_paths)
    try:
        text = path.read_text()
    except OSError as e:
        raise CalibrationError(f"cannot read calibration {name_or_path!r}: {e}")
    table = parse_calibration(text)
    if table.name is None:
        table = table.model_copy(update={"name": path.stem})
    logger.info("Calibration loaded", path=str(path), device=table.name, qubits=table.num_qubits)
    return table

def check_calibration_coupling(table: CalibrationTable, coupling: CouplingMap) -> List[Tuple[int, int]]:
    """
    Raise if a calibrated edge is not a coupling edge; return the coupling
    edges that carry no CX calibration.
    """
    if table.num_qubits < coupling.num_qubits:
        raise CalibrationError(
            f"calibration covers {table.num_qubits} qubits, coupling map has {coupling.num_qubits}"
        )
    foreign = [e.pair for e in table.edges if not coupling.has_edge(*e.pair)]
    if foreign:
        raise CalibrationError(f"calibrated edges absent from coupling map: {foreign}")
    calibrated = {e.pair for e in table.edges}
    return [pair for pair in coupling.sorted_edges() if pair not in calibrated]

def qubit_calibration(table: CalibrationTable, qubit: int) -> QubitCalibration:
    if not 0 <= qubit < table.num_qubits:
        raise CalibrationError(f"no calibration entry for qubit {qubit}")
    return table.qubits[qubit]

def cx_error(table: CalibrationTable, a: int, b: int) -> float:
    pair = (min(a, b), max(a, b))
    for edge in table.edges:
        if edge.pair == pair:
            return edge.cx_error
    raise CalibrationError(f"no CX calibration for edge {pair}")

# Channel strengths

def damping_probability(t1: float, duration: float) -> float:
    """γ = 1 − exp(−duration/T1); ``t1`` in µs, ``duration`` in ns."""
    if not t1 > 0:
        raise CalibrationError(f"T1 must be positive, got {t1}")
    if duration < 0:
        raise CalibrationError(f"duration must be non-negative, got {duration}")
    return float(-math.expm1(-(duration / 1000.0) / t1))

def dephasing_probability(t1: float, t2: float, duration: float) -> float:
    """
    λ = 1 − exp(−duration/Tφ) with 1/Tφ = max(0, 1/T2 − 1/(2·T1)).

    The clamp keeps T2 > 2·T1 calibrations physical.
    """
    if not (t1 > 0 and t2 > 0):
        raise CalibrationError(f"T1 and T2 must be positive, got {t1}, {t2}")
    if duration < 0:
        raise CalibrationError(f"duration must be non-negative, got {duration}")
    rate = max(0.0, 1.0 / t2 - 1.0 / (2.0 * t1))
    if rate == 0.0:
        return 0.0
    return float(-math.expm1(-(duration / 1000.0) * rate))

def amplitude_damping_kraus(gamma: float) -> List[np.ndarray]:
    if not 0 <= gamma <= 1:
        raise CalibrationError("gamma must be in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=np.complex128)
    return [k0, k1]

def phase_damping_kraus(lam: float) -> List[np.ndarray]:
    if not 0 <= lam <= 1:
        raise CalibrationError("lambda must be in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - lam)]], dtype=np.complex128)
    k1 = np.array([[0.0, 0.0], [0.0, math.sqrt(lam)]], dtype=np.complex128)
    return [k0, k1]

def readout_shrink(table: CalibrationTable, qubit: int) -> float:
    """Factor by which symmetric readout flips scale a measured ⟨σz⟩."""
    return 1.0 - 2.0 * qubit_calibration(table, qubit).readout_error

# Trajectory steps

def _depolarize(state: StateVector, qubit: int, p: float, rng: np.random.Generator) -> StateVector:
    hit = rng.random() < p
    pauli = rng.integers(len(NON_IDENTITY_PAULIS))
    if hit:
        state = apply_single(state, qubit, NON_IDENTITY_PAULIS[pauli])
    return state

def _relax(
    state: StateVector,
    qubit: int,
    calib: QubitCalibration,
    duration: float,
    rng: np.random.Generator,
) -> StateVector:
    gamma = damping_probability(calib.t1, duration)
    if gamma > 0:
        state, _ = apply_kraus_branch(state, qubit, amplitude_damping_kraus(gamma), rng)
    lam = dephasing_probability(calib.t1, calib.t2, duration)
    if lam > 0:
        state, _ = apply_kraus_branch(state, qubit, phase_damping_kraus(lam), rng)
    return state

def apply_noisy_gate(
    state: StateVector,
    op: GateOp,
    calib: CalibrationTable,
    config: NoiseConfig,
    rng: np.random.Generator,
) -> StateVector:
    """
    Ideal gate followed by one sampled trajectory step of its noise.

    Per touched qubit, in order: depolarizing (gate_error, or cx_error for
    a CNOT, applied independently to both participants), amplitude damping
    from T1, pure dephasing from T2. With ``include_idle`` every other
    qubit relaxes for the same duration.
    """
    if not config.enabled:
        return apply_op(state, op)

    if isinstance(op, CNOT):
        error = cx_error(calib, op.control, op.target)
        duration = config.cx_gate_duration
    else:
        error = None
        duration = config.single_gate_duration
    touched = [(q, qubit_calibration(calib, q)) for q in op.qubits]

    if isinstance(op, U3) and config.u3_overrotation:
        op = U3(op.qubit, op.theta + config.u3_overrotation, op.phi, op.lam)
    state = apply_op(state, op)

    for qubit, qcal in touched:
        if config.include_depolarizing:
            p = qcal.gate_error if error is None else error
            state = _depolarize(state, qubit, p, rng)
        if config.include_thermal:
            state = _relax(state, qubit, qcal, duration, rng)

    if config.include_idle and config.include_thermal:
        for qubit in range(state.num_qubits):
            if qubit not in op.qubits:
                state = _relax(state, qubit, qubit_calibration(calib, qubit), duration, rng)
    return state

def run_noisy(circuit: Circuit, initial: StateVector, noise: NoiseModel, rng: np.random.Generator) -> StateVector:
    """One noisy trajectory of the whole circuit."""
    if circuit.num_qubits != initial.num_qubits:
        raise DimensionMismatchError(
            f"circuit has {circuit.num_qubits} qubits, state has {initial.num_qubits}"
        )
    state = initial
    for op in circuit.ops:
        state = apply_noisy_gate(state, op, noise.calibration, noise.config, rng)
    return state

def apply_readout_error(bits: Sequence[int], calib: CalibrationTable, rng: np.random.Generator) -> np.ndarray:
    """Flip bit q with probability readout_error of qubit q."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size > calib.num_qubits:
        raise DimensionMismatchError(
            f"{bits.size} measured bits but calibration covers {calib.num_qubits} qubits"
        )
    eps = np.array([calib.qubits[q].readout_error for q in range(bits.size)])
    flips = rng.random(bits.size) < eps
    return bits ^ flips.astype(np.uint8)

def describe(noise: Optional[NoiseModel]) -> Dict[str, object]:
    """Provenance fields recorded in every result header."""
    if noise is None:
        return {"noise": None, "noise_source": None}
    info: Dict[str, object] = {"noise": noise.calibration.name, "noise_source": noise.source}
    info.update(noise.config.model_dump())
    log_simulation_event("noise_described", **info)
    return info
