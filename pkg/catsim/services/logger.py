import structlog
import logging
import sys
from typing import Any, Dict, Optional
from ..config import settings

def _renderer(json_logs: bool):
    if json_logs:
        return structlog.processors.JSONRenderer()
    return structlog.dev.ConsoleRenderer(colors=False)

def configure_logging(level: Optional[str] = None, json_logs: Optional[bool] = None) -> None:
    """
    (Re)configure structlog and the stdlib root logger.

    Records always go to stderr: the CLI writes result tables to stdout.
    """
    level = (level or settings.LOG_LEVEL).upper()
    json_logs = settings.LOG_JSON if json_logs is None else json_logs

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            _renderer(json_logs),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    logging.basicConfig(format="%(message)s", stream=sys.stderr, force=True)
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))

configure_logging()

def get_logger(name: str = None) -> structlog.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)

def set_log_level(level: str) -> None:
    """Change the level at runtime (CLI ``--log-level``)."""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))

class LoggerMixin:
    """Mixin class to add logging capabilities to any class."""

    @property
    def logger(self) -> structlog.BoundLogger:
        return get_logger(self.__class__.__name__)

def log_api_call(method: str, path: str, status_code: int, response_time: float, **kwargs):
    """One record per HTTP request; 5xx responses are logged as errors."""
    logger = get_logger("api")
    emit = logger.error if status_code >= 500 else logger.info
    emit(
        "API call",
        method=method,
        path=path,
        status_code=status_code,
        response_time_ms=round(response_time * 1000, 2),
        **kwargs
    )

def log_experiment_event(event_type: str, command: str, **kwargs):
    """Experiment lifecycle: started, finished, written."""
    get_logger("experiment").bind(command=command).info(
        "Experiment event",
        event_type=event_type,
        **kwargs
    )

def log_simulation_event(event_type: str, **kwargs):
    """Kernel-level detail (sweep timings, noise settings); debug level."""
    get_logger("simulation").debug("Simulation event", event_type=event_type, **kwargs)

def log_error(error: Exception, context: Dict[str, Any] = None, **kwargs):
    """Log an error with its domain error code when it carries one."""
    logger = get_logger("error")
    logger.error(
        "Error occurred",
        error_type=type(error).__name__,
        error_code=getattr(error, "error_code", None),
        error_message=getattr(error, "message", str(error)),
        context=context or {},
        **kwargs
    )
