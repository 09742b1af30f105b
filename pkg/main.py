import logging
from contextlib import asynccontextmanager
from typing import Final

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from slowapi.errors import RateLimitExceeded

from api.routes import limiter, router
from core.config import get_settings
from core.error_handlers import register_error_handlers
from core.log import configure_logging

LOGGER: Final = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    settings = get_settings()
    configure_logging(settings.log_level)
    app.state.limiter = limiter
    LOGGER.info("Correspondence service starting up")
    yield
    LOGGER.info("Correspondence service shutting down")


app = FastAPI(lifespan=lifespan, title="DLE correspondence")
app.state.limiter = limiter
register_error_handlers(app)

app.add_exception_handler(RateLimitExceeded, lambda request, exc: JSONResponse(
    status_code=429,
    content={"error": "Too many requests, please slow down."},
))

app.add_middleware(
    CORSMiddleware,
    allow_origins=get_settings().cors_origins,
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router)


@app.get("/")
async def home():
    return {"success": True, "message": "DLE correspondence: POST /classify, /alba, /to-kracht, /inverse, /roundtrip, /check"}
