from pathlib import Path
from typing import List
from pydantic import BaseModel
import os
import re
from dotenv import load_dotenv

load_dotenv()

DATA_DIR = Path(__file__).parent / "data"

class Settings(BaseModel):
    # Files
    CALIBRATION_DIR: str = os.getenv("CATSIM_CALIBRATION_DIR", str(DATA_DIR))
    
    # Logging
    LOG_LEVEL: str = os.getenv("CATSIM_LOG_LEVEL", "INFO")
    LOG_JSON: bool = os.getenv("CATSIM_LOG_JSON", "true").lower() in ("1", "true", "yes")
    
    # Execution
    WORKERS: int = int(os.getenv("CATSIM_WORKERS", "1"))
    DEFAULT_SEED: int = int(os.getenv("CATSIM_DEFAULT_SEED", "20200404"))
    MAX_QUBITS: int = int(os.getenv("CATSIM_MAX_QUBITS", "24"))
    
    # Gate durations (ns); the device calibration does not publish them
    SINGLE_GATE_NS: float = float(os.getenv("CATSIM_SINGLE_GATE_NS", "100"))
    CX_GATE_NS: float = float(os.getenv("CATSIM_CX_GATE_NS", "300"))

settings = Settings()

# Bare file names only: no separators, no leading dot
_DATA_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")

def _search_dirs() -> List[Path]:
    return [Path(settings.CALIBRATION_DIR), DATA_DIR]

def resolve_data_file(name: str, suffixes=(), allow_paths: bool = True) -> Path:
    """
    Locate a calibration or coupling file.

    Tries the literal path, then CATSIM_CALIBRATION_DIR, then the bundled
    data directory, each with and without the given suffixes. With
    ``allow_paths=False`` only bare names inside those two directories
    resolve.
    """
    if not allow_paths:
        return _resolve_named_file(name, suffixes)
    candidates = [Path(name).expanduser()]
    for directory in _search_dirs():
        candidates.append(directory / name)
        candidates.extend(directory / f"{name}{suffix}" for suffix in suffixes)
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no file named {name!r} in working directory, {settings.CALIBRATION_DIR} or {DATA_DIR}")

def _resolve_named_file(name: str, suffixes) -> Path:
    if not _DATA_NAME.fullmatch(name):
        raise FileNotFoundError(f"{name!r} is not a data file name")
    for directory in _search_dirs():
        root = directory.resolve()
        for candidate in [directory / name, *(directory / f"{name}{suffix}" for suffix in suffixes)]:
            if candidate.is_file() and candidate.resolve().parent == root:
                return candidate
    raise FileNotFoundError(f"no data file named {name!r}")
