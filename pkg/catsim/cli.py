"""
Command-line experiment harness.

Usage:
    python -m catsim sweep --qubits 15 --topology melbourne --theta-step pi/20
    python -m catsim per-qubit --theta pi/2 --noise melbourne-20200404
    python -m catsim oracle-check

Exit codes: 0 success, 1 usage error, 2 configuration or file error,
3 oracle-check failure.
"""

import argparse
import math
import re
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .exceptions import CatSimException
from .schemas import ExperimentConfig
from .services.experiments import experiment_service, oracle_table, write_report
from .services.logger import get_logger, log_error, set_log_level

logger = get_logger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_ORACLE_FAILED = 3

_FACTOR = re.compile(r"(\d+(?:\.\d*)?(?:e[+-]?\d+)?|\.\d+(?:e[+-]?\d+)?)?(pi|π)?")

def _angle_factor(token: str, text: str) -> float:
    match = _FACTOR.fullmatch(token)
    if not token or match is None:
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}")
    number, pi = match.groups()
    value = float(number) if number else 1.0
    return value * math.pi if pi else value

def parse_angle(text: str) -> float:
    """
    Radians from a number or a product/quotient with ``pi``:
    ``0.5``, ``pi``, ``pi/20``, ``2*pi``, ``3pi/4``, ``-pi/2``.
    """
    expr = text.strip().lower().replace(" ", "")
    sign = 1.0
    if expr[:1] in ("+", "-"):
        sign = -1.0 if expr[0] == "-" else 1.0
        expr = expr[1:]
    parts = re.split(r"([*/])", expr)
    value = _angle_factor(parts[0], text)
    for op, token in zip(parts[1::2], parts[2::2]):
        factor = _angle_factor(token, text)
        if op == "*":
            value *= factor
        elif factor == 0:
            raise argparse.ArgumentTypeError(f"division by zero in angle {text!r}")
        else:
            value /= factor
    return sign * value

class CatSimArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")

def build_parser() -> argparse.ArgumentParser:
    parser = CatSimArgumentParser(
        prog="catsim",
        description="Cat-state entanglement experiments on a simulated qubit device",
    )
    parser.add_argument("command", choices=["sweep", "per-qubit", "oracle-check"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    circuit = parser.add_argument_group("circuit")
    circuit.add_argument("--qubits", dest="num_qubits", type=int, help="cat size (default 15)")
    circuit.add_argument("--topology", help="chain, melbourne or a coupling-map file (default melbourne)")
    circuit.add_argument("--root", dest="root_qubit", type=int, help="qubit carrying the U3 (default 6)")
    circuit.add_argument("--measure-qubit", type=int, help="qubit measured by sweep (default 6)")
    circuit.add_argument("--theta-start", type=parse_angle, help="default 0")
    circuit.add_argument("--theta-end", type=parse_angle, help="default 2*pi")
    circuit.add_argument("--theta-step", type=parse_angle, help="default pi/20")
    circuit.add_argument("--theta", type=parse_angle, help="fixed θ of per-qubit (default pi/2)")
    circuit.add_argument("--phi", type=parse_angle)
    circuit.add_argument("--lambda", dest="lam", type=parse_angle)

    sampling = parser.add_argument_group("sampling")
    sampling.add_argument("--shots", type=int, help="shots per spin component (default 1024)")
    sampling.add_argument("--seed", type=int, help="master seed")
    sampling.add_argument("--exact", action="store_true", help="expectation values instead of counts")
    sampling.add_argument("--fidelity", action="store_true", help="add fidelity columns to sweep")
    sampling.add_argument("--trajectories", type=int, help="noisy fidelity trajectories (default 500)")
    sampling.add_argument("--workers", type=int, help="worker threads")
    sampling.add_argument("--oracle-circuits", type=int, help="random circuits for oracle-check (default 200)")

    noise = parser.add_argument_group("noise")
    noise.add_argument("--noise", help="calibration file or bundled name; 'off' disables noise")
    noise.add_argument("--single-gate-ns", type=float)
    noise.add_argument("--cx-gate-ns", type=float)
    noise.add_argument("--idle-noise", action="store_true", help="relax idle qubits during every gate")
    noise.add_argument("--u3-overrotation", type=parse_angle, help="coherent θ error on every U3")

    output = parser.add_argument_group("output")
    output.add_argument("--out", dest="output", help="result file (default stdout)")
    output.add_argument("--format", choices=["csv", "json"])
    output.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    return parser

_CONFIG_FIELDS = set(ExperimentConfig.model_fields)

def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Unset flags fall through to ExperimentConfig defaults."""
    values: Dict[str, object] = {
        key: value
        for key, value in vars(args).items()
        if key in _CONFIG_FIELDS and value is not None and value is not False
    }
    return ExperimentConfig(**values)

def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)

    try:
        config = config_from_args(args)
    except ValidationError as e:
        messages = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        print(f"catsim: error: {messages}", file=sys.stderr)
        return EXIT_USAGE

    logger.info("Running experiment", command=config.command, seed=config.seed, output=config.output or "stdout")
    try:
        if config.command == "oracle-check":
            oracle = experiment_service.run_oracle_check(config)
            write_report(oracle_table(oracle, config), config.format, config.output)
            return EXIT_OK if oracle.passed else EXIT_ORACLE_FAILED
        report = experiment_service.run(config)
        write_report(report, config.format, config.output)
    except (CatSimException, OSError) as e:
        log_error(e, context={"operation": config.command})
        print(f"catsim: error: {getattr(e, 'message', e)}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK
