from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .exceptions import (
    CatSimException,
    catsim_exception_handler,
    general_exception_handler,
    http_exception_handler,
    validation_exception_handler,
)
from .middleware.logging import LoggingMiddleware
from .routers import experiments
from .schemas import HealthResponse
from .services.logger import get_logger

logger = get_logger("startup")

app = FastAPI(
    title="catsim API",
    description="""
    ## catsim - cat-state entanglement experiments on a simulated qubit device

    * **Sweeps**: entanglement and fidelity of one qubit over a θ grid
    * **Per-qubit scans**: entanglement of every qubit of one cat state
    * **Noise**: stochastic trajectories driven by device calibration data
    * **Self-test**: kernels checked against dense-matrix references

    Every request runs to completion and returns the rows the CLI would write.
    """,
    version=__version__,
    openapi_tags=[
        {
            "name": "experiments",
            "description": "Experiment runners, bundled topologies and calibrations"
        }
    ]
)

app.add_middleware(LoggingMiddleware)

app.add_exception_handler(RequestValidationError, validation_exception_handler)
app.add_exception_handler(StarletteHTTPException, http_exception_handler)
app.add_exception_handler(CatSimException, catsim_exception_handler)
app.add_exception_handler(Exception, general_exception_handler)

app.include_router(experiments.router)

@app.on_event("startup")
async def startup_event():
    logger.info("catsim API starting up", version=__version__)

@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="healthy", version=__version__)
