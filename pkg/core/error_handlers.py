import logging
from typing import Any, Final

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .exceptions import AppException, NotKrachtException, ParseException, RuleException

LOGGER: Final = logging.getLogger(__name__)


def error_body(exc: AppException) -> dict[str, Any]:
    """JSON envelope of a domain error; parse errors carry the offending position."""
    body: dict[str, Any] = {"error": exc.message, "kind": type(exc).__name__}
    if isinstance(exc, ParseException) and exc.position is not None:
        body["position"] = exc.position
    if isinstance(exc, NotKrachtException):
        body["reason"] = exc.reason
    return body


def register_error_handlers(app: FastAPI):

    @app.exception_handler(AppException)
    async def app_exception_handler(request: Request, exc: AppException):
        if isinstance(exc, RuleException):
            # a rule refused a shape the classifier accepted
            LOGGER.warning("Rule failure on %s: %s", request.url.path, exc.message)
        return JSONResponse(status_code=exc.status_code, content=error_body(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_exception_handler(request: Request, exc: RequestValidationError):
        fields = sorted({".".join(str(x) for x in e["loc"][1:]) for e in exc.errors()})
        return JSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            content={
                "error": "Validation failed",
                "fields": fields,
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(request: Request, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.detail})

    @app.exception_handler(Exception)
    async def unhandled_exception_handler(request: Request, exc: Exception):
        LOGGER.exception("Unhandled error on %s", request.url.path)
        return JSONResponse(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            content={"error": "Internal server error"},
        )
