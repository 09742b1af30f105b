import json
from pathlib import Path

import pytest

from core.config import Settings, get_settings
from services.oracle import build_battery
from services.signature import load_signature

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
SIGNATURES = ("basic_modal", "tense", "lambek")


def load_fixture(name: str):
    return json.loads((CORPUS / "fixtures" / f"{name}.json").read_text(encoding="utf-8"))


def signature(name: str):
    return load_signature(CORPUS / "signatures" / f"{name}.sig")


@pytest.fixture(scope="session")
def sigs():
    return {name: signature(name) for name in SIGNATURES}


@pytest.fixture(scope="session")
def basic_modal(sigs):
    return sigs["basic_modal"]


@pytest.fixture(scope="session")
def tense(sigs):
    return sigs["tense"]


@pytest.fixture(scope="session")
def lambek(sigs):
    return sigs["lambek"]


@pytest.fixture(scope="session")
def settings():
    return Settings(_env_file=None, corpus_dir=CORPUS)


@pytest.fixture(scope="session")
def small_settings():
    """Two random models instead of seven, for the slower meta-formula checks."""
    return Settings(_env_file=None, corpus_dir=CORPUS, battery_random_models=2)


@pytest.fixture(scope="session")
def batteries(sigs, settings):
    return {name: build_battery(sig, settings) for name, sig in sigs.items()}


@pytest.fixture(scope="session")
def small_batteries(sigs, small_settings):
    return {name: build_battery(sig, small_settings) for name, sig in sigs.items()}


@pytest.fixture(autouse=True)
def _corpus_settings(monkeypatch):
    monkeypatch.setenv("DLE_CORPUS_DIR", str(CORPUS))
    monkeypatch.setenv("DLE_RATE_LIMIT", "1000/minute")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
