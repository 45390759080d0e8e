from fastapi import APIRouter

from ..schemas import CalibrationTable, ExperimentConfig, ExperimentReport, OracleReport, TopologyResponse
from ..services.circuit import melbourne_coupling
from ..services.experiments import api_experiment_service
from ..services.noise import load_calibration

router = APIRouter(prefix="/experiments", tags=["experiments"])

# Simulations are CPU bound, so the routes are plain functions and run in
# FastAPI's threadpool.

@router.post("/sweep", response_model=ExperimentReport)
def sweep(config: ExperimentConfig):
    """Entanglement (and optionally fidelity) of one qubit over a θ grid."""
    return api_experiment_service.run_sweep(config.model_copy(update={"command": "sweep"}))

@router.post("/per-qubit", response_model=ExperimentReport)
def per_qubit(config: ExperimentConfig):
    """Entanglement of every qubit of one cat state."""
    return api_experiment_service.run_per_qubit(config.model_copy(update={"command": "per-qubit"}))

@router.post("/oracle-check", response_model=OracleReport)
def oracle_check(config: ExperimentConfig):
    return api_experiment_service.run_oracle_check(config.model_copy(update={"command": "oracle-check"}))

@router.get("/topologies/melbourne", response_model=TopologyResponse)
def melbourne_topology():
    coupling = melbourne_coupling()
    return TopologyResponse(name="melbourne", num_qubits=coupling.num_qubits, edges=coupling.sorted_edges())

@router.get("/calibrations/{name}", response_model=CalibrationTable)
def calibration(name: str):
    """Parsed calibration table by name; file paths are not accepted."""
    return load_calibration(name, allow_paths=False)
