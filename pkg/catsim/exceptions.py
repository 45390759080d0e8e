from fastapi import HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.exceptions import RequestValidationError
from catsim.services.logger import log_error
from catsim.schemas import ErrorResponse

class CatSimException(Exception):
    """Base exception for the simulator."""
    error_code = "CATSIM_ERROR"

    def __init__(self, message: str, error_code: str = None):
        self.message = message
        self.error_code = error_code or self.error_code
        super().__init__(self.message)

class SizeError(CatSimException):
    """Register size outside the supported range."""
    error_code = "REGISTER_SIZE"

class QubitIndexError(CatSimException):
    """Qubit index out of range, or control equal to target."""
    error_code = "QUBIT_INDEX"

class GateError(CatSimException):
    """Non-unitary matrix, non-finite angle or unknown axis."""
    error_code = "INVALID_GATE"

class NormalizationError(CatSimException):
    """State norm too far from 1 for the requested operation."""
    error_code = "NORMALIZATION"

class DimensionMismatchError(CatSimException):
    """Operands live on registers of different sizes."""
    error_code = "DIMENSION_MISMATCH"

class TopologyError(CatSimException):
    """Coupling map unusable (disconnected, malformed)."""
    error_code = "TOPOLOGY"

class CalibrationError(CatSimException):
    """Calibration data malformed or missing an entry."""
    error_code = "CALIBRATION"

class EstimateError(CatSimException):
    """Invalid estimator input (non-finite components, zero shots, bad grid)."""
    error_code = "INVALID_ESTIMATE"

class ConfigurationError(CatSimException):
    """Experiment configuration or file access problem."""
    error_code = "CONFIGURATION"

def _error_response(status_code: int, detail: str, error_code: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content=ErrorResponse(detail=detail, error_code=error_code).model_dump(mode="json"),
    )

def _request_context(request: Request, operation: str, **extra) -> dict:
    return {"operation": operation, "path": request.url.path, "method": request.method, **extra}

async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Request body failed ExperimentConfig validation: 422 listing every field."""
    errors = [
        f"{' -> '.join(str(loc) for loc in error['loc'])}: {error['msg']}"
        for error in exc.errors()
    ]
    log_error(exc, context=_request_context(request, "validation_error", errors=errors))
    return _error_response(422, "Validation error: " + "; ".join(errors), "VALIDATION_ERROR")

async def http_exception_handler(request: Request, exc: HTTPException):
    log_error(exc, context=_request_context(request, "http_error", status_code=exc.status_code))
    return _error_response(exc.status_code, str(exc.detail), f"HTTP_{exc.status_code}")

async def catsim_exception_handler(request: Request, exc: CatSimException):
    """Domain errors are caller errors: 400 with the exception's code."""
    log_error(exc, context=_request_context(request, "simulation_error"))
    return _error_response(400, exc.message, exc.error_code)

async def general_exception_handler(request: Request, exc: Exception):
    log_error(exc, context=_request_context(request, "unhandled_error"))
    return _error_response(500, "An internal server error occurred", "INTERNAL_ERROR")
