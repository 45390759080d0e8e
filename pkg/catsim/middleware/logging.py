import time
from fastapi import Request
from starlette.middleware.base import BaseHTTPMiddleware
from ..services.logger import log_api_call

TIMING_HEADER = "X-Simulation-Time-Ms"

class LoggingMiddleware(BaseHTTPMiddleware):
    """Time each request, expose the duration as a header and log the call."""

    async def dispatch(self, request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        elapsed = time.perf_counter() - started

        response.headers[TIMING_HEADER] = f"{elapsed * 1000:.1f}"
        log_api_call(
            method=request.method,
            path=request.url.path,
            status_code=response.status_code,
            response_time=elapsed,
            query=request.url.query or None,
        )
        return response
