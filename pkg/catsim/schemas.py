import math
from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import settings

Axis = Literal["x", "y", "z"]
AXES: Tuple[str, ...] = ("x", "y", "z")

class ErrorResponse(BaseModel):
    detail: str
    error_code: Optional[str] = None
    timestamp: datetime = Field(default_factory=datetime.utcnow)

# Circuit parameters

class CatParams(BaseModel):
    """
    Angles of the cat state cos(θ/2)|0...0⟩ + e^{iφ} sin(θ/2)|1...1⟩.

    λ only enters the U3 gate and never changes observable quantities.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    theta: float = Field(..., description="Polar angle θ in radians")
    phi: float = Field(0.0, description="Relative phase φ in radians")
    lam: float = Field(0.0, alias="lambda", description="U3 λ angle in radians")

    @field_validator("theta", "phi", "lam")
    @classmethod
    def validate_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("angles must be finite")
        return v

# Calibration (device data)

class QubitCalibration(BaseModel):
    model_config = ConfigDict(frozen=True)

    t1: float = Field(..., gt=0, description="Energy relaxation time, µs")
    t2: float = Field(..., gt=0, description="Dephasing time, µs")
    gate_error: float = Field(..., ge=0, le=1, description="Single-qubit gate error probability")
    readout_error: float = Field(..., ge=0, le=1, description="Symmetric readout flip probability")

class EdgeCalibration(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: Tuple[int, int] = Field(..., description="Unordered qubit pair, stored ascending")
    cx_error: float = Field(..., ge=0, le=1, description="CNOT error probability")

    @field_validator("pair")
    @classmethod
    def validate_pair(cls, v):
        a, b = v
        if a == b:
            raise ValueError("edge must join two different qubits")
        if a < 0 or b < 0:
            raise ValueError("qubit indices must be non-negative")
        return (min(a, b), max(a, b))

class CalibrationTable(BaseModel):
    """Per-qubit and per-edge calibration, shaped like a device calibration sheet."""
    model_config = ConfigDict(frozen=True)

    name: Optional[str] = None
    qubits: List[QubitCalibration]
    edges: List[EdgeCalibration] = Field(default_factory=list)

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

class NoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    enabled: bool = True
    single_gate_duration: float = Field(settings.SINGLE_GATE_NS, ge=0, description="ns")
    cx_gate_duration: float = Field(settings.CX_GATE_NS, ge=0, description="ns")
    include_thermal: bool = True
    include_depolarizing: bool = True
    include_readout: bool = True
    include_idle: bool = False
    u3_overrotation: float = Field(0.0, description="Coherent θ offset on every U3, radians")

    @field_validator("u3_overrotation")
    @classmethod
    def validate_overrotation(cls, v):
        if not math.isfinite(v):
            raise ValueError("u3_overrotation must be finite")
        return v

# Estimates

class BlochEstimate(BaseModel):
    """Estimated spin mean values of one qubit with their counting errors."""
    model_config = ConfigDict(frozen=True)

    sx: float
    sy: float
    sz: float
    stderr_x: float = Field(0.0, ge=0)
    stderr_y: float = Field(0.0, ge=0)
    stderr_z: float = Field(0.0, ge=0)
    shots_per_axis: int = Field(..., gt=0)
    exact: bool = False

    @property
    def length(self) -> float:
        return math.sqrt(self.sx ** 2 + self.sy ** 2 + self.sz ** 2)

    def component(self, axis: str) -> float:
        return {"x": self.sx, "y": self.sy, "z": self.sz}[axis]

class EntanglementResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    qubit: int
    theta: Optional[float] = None
    e_measured: float = Field(..., ge=0, le=0.5)
    e_theory: Optional[float] = None
    bloch: BlochEstimate
    clamped: bool = False
    fidelity: Optional[float] = None
    fidelity_stderr: Optional[float] = None
    fidelity_readout: Optional[float] = None

# Experiments

class ExperimentConfig(BaseModel):
    """
    Experiment description shared by the CLI and the HTTP API.

    Defaults reproduce the published run: 1024 shots per spin component,
    θ from 0 to 2π in steps of π/20, measured qubit q[6].
    """
    command: Literal["sweep", "per-qubit", "oracle-check"] = "sweep"
    num_qubits: int = Field(15, ge=1, le=settings.MAX_QUBITS)
    topology: str = Field("melbourne", description="'chain', 'melbourne' or a coupling-map path")
    root_qubit: Optional[int] = Field(None, ge=0, description="Defaults to 6")
    measure_qubit: Optional[int] = Field(None, ge=0, description="Defaults to 6")
    theta_start: float = 0.0
    theta_end: float = 2 * math.pi
    theta_step: float = Field(math.pi / 20, gt=0)
    theta: float = Field(math.pi / 2, description="Fixed θ of the per-qubit scan")
    phi: float = 0.0
    lam: float = 0.0
    shots: int = Field(1024, gt=0)
    seed: int = Field(settings.DEFAULT_SEED, ge=0, lt=2 ** 64)
    noise: Optional[str] = Field(None, description="Calibration name/path; None or 'off' disables noise")
    exact: bool = False
    fidelity: bool = False
    trajectories: int = Field(500, gt=0)
    single_gate_ns: float = Field(settings.SINGLE_GATE_NS, ge=0)
    cx_gate_ns: float = Field(settings.CX_GATE_NS, ge=0)
    idle_noise: bool = False
    u3_overrotation: float = 0.0
    workers: int = Field(settings.WORKERS, ge=1)
    oracle_circuits: int = Field(200, gt=0)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("noise")
    @classmethod
    def normalize_noise(cls, v):
        if v is None or v.strip().lower() in ("", "off", "none"):
            return None
        return v.strip()

    @model_validator(mode="after")
    def validate_angles(self):
        for name in ("theta_start", "theta_end", "theta_step", "theta", "phi", "lam", "u3_overrotation"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.theta_end < self.theta_start:
            raise ValueError("theta_end must not be smaller than theta_start")
        return self

class ExperimentReport(BaseModel):
    """In-memory result from which both CSV and JSON files are written."""
    header: Dict[str, Any]
    columns: List[str]
    rows: List[Dict[str, Any]]

class OracleCheck(BaseModel):
    name: str
    max_deviation: float
    tolerance: float
    cases: int
    passed: bool

class OracleReport(BaseModel):
    seed: int
    passed: bool
    checks: List[OracleCheck]

# HTTP responses

class TopologyResponse(BaseModel):
    name: str
    num_qubits: int
    edges: List[Tuple[int, int]]

class HealthResponse(BaseModel):
    status: str
    version: str
