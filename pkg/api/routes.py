import logging
from typing import Final

from fastapi import APIRouter, Depends, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from core.config import Settings, get_settings
from model.index import (
    AlbaReport,
    CheckReport,
    CheckRequest,
    ClassifyReport,
    ExprRequest,
    InverseReport,
    InverseRequest,
    KrachtReport,
    KrachtRequest,
    RoundtripReport,
    RoundtripRequest,
)
from services import pipeline

LOGGER: Final = logging.getLogger(__name__)

limiter = Limiter(key_func=get_remote_address)
router = APIRouter()


def _rate() -> str:
    return get_settings().rate_limit


@router.get("/health")
async def health_check():
    return {"success": True, "message": "Ok"}


@router.get("/signatures")
async def signatures(settings: Settings = Depends(get_settings)) -> list[str]:
    return pipeline.list_signatures(settings)


@router.post("/classify", response_model=ClassifyReport)
@limiter.limit(_rate)
async def classify(request: Request, body: ExprRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    return pipeline.classify(sig, body.expr)


@router.post("/alba", response_model=AlbaReport)
@limiter.limit(_rate)
async def alba(request: Request, body: ExprRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    return pipeline.alba(sig, body.expr, trace=body.trace)


@router.post("/to-kracht", response_model=KrachtReport)
@limiter.limit(_rate)
async def to_kracht(request: Request, body: KrachtRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    return pipeline.to_kracht(sig, body.expr, refined=body.refined, trace=body.trace)


@router.post("/inverse", response_model=InverseReport)
@limiter.limit(_rate)
async def inverse(request: Request, body: InverseRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    return pipeline.inverse(sig, body.expr, enforce_polarity=body.enforce_polarity, trace=body.trace)


@router.post("/roundtrip", response_model=RoundtripReport)
@limiter.limit(_rate)
async def roundtrip(request: Request, body: RoundtripRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    report = pipeline.roundtrip(sig, body.expr, settings, body.seed, trace=body.trace)
    if not report.ok:
        LOGGER.warning("Round trip of %s failed", report.input)
    return report


@router.post("/check", response_model=CheckReport)
@limiter.limit(_rate)
async def check(request: Request, body: CheckRequest, settings: Settings = Depends(get_settings)):
    sig = pipeline.resolve_signature(body.signature, settings)
    return pipeline.check(sig, body.expr, body.against, settings, body.seed)
