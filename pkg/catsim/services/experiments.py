"""
Experiment runners shared by the CLI and the HTTP routes, plus result writers.
"""

import csv
import io
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, TextIO, Tuple

from .. import __version__
from ..exceptions import CalibrationError, ConfigurationError
from ..schemas import (
    EntanglementResult,
    ExperimentConfig,
    ExperimentReport,
    NoiseConfig,
    OracleReport,
)
from .circuit import CouplingMap, chain_coupling, load_coupling, melbourne_coupling
from .logger import LoggerMixin, log_experiment_event
from .noise import NoiseModel, check_calibration_coupling, describe, load_calibration, locate_calibration
from .oracle import run_oracle_suite
from .protocol import per_qubit_entanglement, sweep_theta

DEFAULT_QUBIT = 6

BLOCH_COLUMNS = ["sx", "sy", "sz", "stderr_x", "stderr_y", "stderr_z"]
SWEEP_COLUMNS = (
    ["theta_rad", "e_measured", "e_theory"]
    + BLOCH_COLUMNS
    + ["fidelity", "fidelity_stderr", "fidelity_readout"]
)
PER_QUBIT_COLUMNS = ["qubit", "theta_rad", "e_measured", "e_theory"] + BLOCH_COLUMNS
ORACLE_COLUMNS = ["name", "max_deviation", "tolerance", "cases", "passed"]

# Header keys left out when comparing two runs for reproducibility
VOLATILE_HEADER_KEYS = ("generated_at",)

def _bloch_cells(result: EntanglementResult) -> Dict[str, Any]:
    b = result.bloch
    return {
        "sx": b.sx, "sy": b.sy, "sz": b.sz,
        "stderr_x": b.stderr_x, "stderr_y": b.stderr_y, "stderr_z": b.stderr_z,
    }

class ExperimentService(LoggerMixin):
    """
    Turns an ExperimentConfig into an in-memory report.

    With ``allow_paths=False`` topology and noise must name files in the
    calibration or bundled data directory; the HTTP routes run this way.
    """

    def __init__(self, allow_paths: bool = True):
        self.allow_paths = allow_paths

    def resolve_topology(self, config: ExperimentConfig) -> Tuple[Optional[CouplingMap], int, int]:
        """
        Coupling map (None for the chain builder), root and measured qubit.

        Chains always start at qubit 0; root and measured qubit default to 6,
        clamped to the last qubit of the register.
        """
        name = config.topology.strip()
        if name == "chain":
            coupling, register = None, config.num_qubits
        elif name == "melbourne":
            coupling = melbourne_coupling()
            register = coupling.num_qubits
        else:
            coupling = load_coupling(name, allow_paths=self.allow_paths)
            register = coupling.num_qubits

        if config.num_qubits > register:
            raise ConfigurationError(
                f"{config.num_qubits}-qubit cat does not fit the {register}-qubit topology {name!r}"
            )
        last = register - 1
        root = 0 if coupling is None else (
            min(DEFAULT_QUBIT, last) if config.root_qubit is None else config.root_qubit
        )
        measure = min(DEFAULT_QUBIT, last) if config.measure_qubit is None else config.measure_qubit
        for label, qubit in (("root_qubit", root), ("measure_qubit", measure)):
            if qubit > last:
                raise ConfigurationError(f"{label} {qubit} outside {register}-qubit register")
        return coupling, root, measure

    def resolve_noise(self, config: ExperimentConfig, coupling: Optional[CouplingMap]) -> Optional[NoiseModel]:
        if config.noise is None:
            return None
        path = locate_calibration(config.noise, allow_paths=self.allow_paths)
        table = load_calibration(str(path))
        register = config.num_qubits if coupling is None else coupling.num_qubits
        if table.num_qubits < register:
            raise CalibrationError(
                f"calibration {table.name!r} covers {table.num_qubits} qubits, register has {register}"
            )
        if coupling is not None:
            uncovered = check_calibration_coupling(table, coupling)
            if uncovered:
                self.logger.warning("Coupling edges without CX calibration", edges=uncovered)
        noise_config = NoiseConfig(
            single_gate_duration=config.single_gate_ns,
            cx_gate_duration=config.cx_gate_ns,
            include_idle=config.idle_noise,
            u3_overrotation=config.u3_overrotation,
        )
        source = str(path.resolve()) if self.allow_paths else path.name
        return NoiseModel(table, noise_config, source=source)

    def _header(
        self,
        config: ExperimentConfig,
        root: int,
        measure: Optional[int],
        noise: Optional[NoiseModel],
    ) -> Dict[str, Any]:
        header: Dict[str, Any] = {
            "command": config.command,
            "version": __version__,
            "seed": config.seed,
            "shots": config.shots,
            "exact": config.exact,
            "num_qubits": config.num_qubits,
            "topology": config.topology,
            "root_qubit": root,
            "measure_qubit": measure,
        }
        if config.command == "sweep":
            header.update(
                theta_start=config.theta_start,
                theta_end=config.theta_end,
                theta_step=config.theta_step,
                fidelity=config.fidelity,
                trajectories=config.trajectories,
            )
        else:
            header["theta"] = config.theta
        header.update(phi=config.phi, **{"lambda": config.lam})
        header.update(describe(noise))
        header.setdefault("single_gate_duration", config.single_gate_ns)
        header.setdefault("cx_gate_duration", config.cx_gate_ns)
        header["generated_at"] = datetime.now(timezone.utc).isoformat()
        return header

    def run_sweep(self, config: ExperimentConfig) -> ExperimentReport:
        """One row per θ of the grid for the measured qubit."""
        started = time.perf_counter()
        coupling, root, measure = self.resolve_topology(config)
        noise = self.resolve_noise(config, coupling)
        log_experiment_event("started", "sweep", seed=config.seed, shots=config.shots, num_qubits=config.num_qubits)

        results = sweep_theta(
            num_qubits=config.num_qubits,
            qubit=measure,
            coupling=coupling,
            root=root,
            theta_start=config.theta_start,
            theta_end=config.theta_end,
            theta_step=config.theta_step,
            shots=config.shots,
            noise=noise,
            compute_fidelity=config.fidelity,
            seed=config.seed,
            exact=config.exact,
            phi=config.phi,
            lam=config.lam,
            trajectories=config.trajectories,
            workers=config.workers,
        )
        rows = [
            {
                "theta_rad": r.theta,
                "e_measured": r.e_measured,
                "e_theory": r.e_theory,
                **_bloch_cells(r),
                "fidelity": r.fidelity,
                "fidelity_stderr": r.fidelity_stderr,
                "fidelity_readout": r.fidelity_readout,
            }
            for r in results
        ]
        log_experiment_event(
            "finished", "sweep",
            points=len(rows),
            clamped=sum(r.clamped for r in results),
            elapsed_s=round(time.perf_counter() - started, 3),
        )
        return ExperimentReport(header=self._header(config, root, measure, noise), columns=SWEEP_COLUMNS, rows=rows)

    def run_per_qubit(self, config: ExperimentConfig) -> ExperimentReport:
        """One row per qubit of the register at fixed θ."""
        started = time.perf_counter()
        coupling, root, _ = self.resolve_topology(config)
        noise = self.resolve_noise(config, coupling)
        if coupling is None:
            coupling = chain_coupling(config.num_qubits)
        log_experiment_event("started", "per-qubit", seed=config.seed, shots=config.shots, theta=config.theta)

        results = per_qubit_entanglement(
            coupling=coupling,
            root=root,
            theta=config.theta,
            shots=config.shots,
            noise=noise,
            seed=config.seed,
            exact=config.exact,
            phi=config.phi,
            lam=config.lam,
            size=config.num_qubits,
            workers=config.workers,
        )
        rows = [
            {
                "qubit": q,
                "theta_rad": r.theta,
                "e_measured": r.e_measured,
                "e_theory": r.e_theory,
                **_bloch_cells(r),
            }
            for q, r in results
        ]
        log_experiment_event(
            "finished", "per-qubit",
            rows=len(rows),
            elapsed_s=round(time.perf_counter() - started, 3),
        )
        return ExperimentReport(header=self._header(config, root, None, noise), columns=PER_QUBIT_COLUMNS, rows=rows)

    def run_oracle_check(self, config: ExperimentConfig) -> OracleReport:
        """Self-test of the kernels against brute-force references."""
        started = time.perf_counter()
        report = run_oracle_suite(config.seed, config.oracle_circuits)
        log_experiment_event(
            "finished", "oracle-check",
            passed=report.passed,
            elapsed_s=round(time.perf_counter() - started, 3),
        )
        return report

    def run(self, config: ExperimentConfig) -> ExperimentReport:
        """Dispatch on ``config.command``; oracle reports come back in tabular form."""
        if config.command == "sweep":
            return self.run_sweep(config)
        if config.command == "per-qubit":
            return self.run_per_qubit(config)
        return oracle_table(self.run_oracle_check(config), config)

def oracle_table(report: OracleReport, config: ExperimentConfig) -> ExperimentReport:
    header = {
        "command": "oracle-check",
        "version": __version__,
        "seed": report.seed,
        "circuits": config.oracle_circuits,
        "passed": report.passed,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    rows = [check.model_dump() for check in report.checks]
    return ExperimentReport(header=header, columns=ORACLE_COLUMNS, rows=rows)

# Writers

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)

def render_csv(report: ExperimentReport) -> str:
    """``# key: value`` header lines, then the column row and data rows."""
    buffer = io.StringIO()
    for key, value in report.header.items():
        buffer.write(f"# {key}: {_cell(value)}\n")
    writer = csv.DictWriter(buffer, fieldnames=report.columns, lineterminator="\n")
    writer.writeheader()
    for row in report.rows:
        writer.writerow({column: _cell(row.get(column)) for column in report.columns})
    return buffer.getvalue()

def render_json(report: ExperimentReport) -> str:
    return report.model_dump_json(include={"header", "rows"}, indent=2) + "\n"

def render(report: ExperimentReport, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return render_json(report)
    raise ConfigurationError(f"unknown output format {fmt!r}")

def write_report(report: ExperimentReport, fmt: str, output: Optional[str] = None, stream: TextIO = None) -> None:
    """Write to ``output`` or, without one, to ``stream`` (stdout by default)."""
    text = render(report, fmt)
    if output is None:
        (stream or sys.stdout).write(text)
        return
    try:
        path = Path(output)
        path.write_text(text)
    except OSError as e:
        raise ConfigurationError(f"cannot write results to {output!r}: {e}")
    log_experiment_event("written", report.header.get("command", ""), path=str(path), format=fmt, rows=len(report.rows))

def comparable_header(header: Dict[str, Any]) -> Dict[str, Any]:
    """Header without the fields that legitimately change between identical runs."""
    return {k: v for k, v in header.items() if k not in VOLATILE_HEADER_KEYS}

experiment_service = ExperimentService()
api_experiment_service = ExperimentService(allow_paths=False)

run_sweep = experiment_service.run_sweep
run_per_qubit = experiment_service.run_per_qubit
run_oracle_check = experiment_service.run_oracle_check
