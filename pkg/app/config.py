"""Application configuration settings."""
from __future__ import annotations

import os
import secrets
from typing import Iterable, List

from dotenv import load_dotenv

from .engine import settings

load_dotenv()


def _csv_env(name: str, default: Iterable[str]) -> List[str]:
    raw = os.getenv(name)
    if not raw:
        return list(default)
    return [item.strip() for item in raw.split(",") if item.strip()]


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return float(default)
    try:
        return float(raw)
    except ValueError:
        raise RuntimeError(f"{name} must be a number, got {raw!r}") from None


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return int(default)
    try:
        return int(raw)
    except ValueError:
        raise RuntimeError(f"{name} must be an integer, got {raw!r}") from None


def _bracket_env(name: str, default: tuple[float, float]) -> tuple[float, float]:
    values = _csv_env(name, [str(v) for v in default])
    if len(values) != 2:
        raise RuntimeError(f"{name} takes two comma-separated numbers")
    try:
        return float(values[0]), float(values[1])
    except ValueError:
        raise RuntimeError(f"{name} must hold numbers, got {values!r}") from None


def _secret_env(name: str) -> str:
    value = os.getenv(name)
    if value:
        return value
    # per-process secret for local use
    return secrets.token_urlsafe(32)


def _get_database_url() -> str:
    """Get database URL, converting postgres:// to postgresql:// for SQLAlchemy."""
    db_url = os.getenv("DATABASE_URL", "sqlite:///cdqaoa.db")
    if db_url and db_url.startswith("postgres://"):
        db_url = db_url.replace("postgres://", "postgresql://", 1)
    return db_url


class Config:
    ENV = os.getenv("FLASK_ENV", "development")
    SECRET_KEY = _secret_env("SECRET_KEY")
    SQLALCHEMY_DATABASE_URI = _get_database_url()
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    JSON_SORT_KEYS = False
    PROPAGATE_EXCEPTIONS = True

    CORS_ORIGINS = _csv_env(
        "CORS_ALLOWED_ORIGINS",
        ["http://localhost:3000", "http://localhost:5173"],
    )

    # Numerics; engine defaults live in app/engine/settings.py
    PAULI_PRUNE_THRESHOLD = _float_env("PAULI_PRUNE_THRESHOLD", settings.PRUNE_THRESHOLD)
    DENSE_QUBIT_CAP = _int_env("DENSE_QUBIT_CAP", settings.DENSE_QUBIT_CAP)
    STATEVECTOR_QUBIT_CAP = _int_env("STATEVECTOR_QUBIT_CAP", settings.STATEVECTOR_QUBIT_CAP)
    BCH_ORDER = _int_env("BCH_ORDER", settings.BCH_ORDER)
    MAGNUS_ORDER = _int_env("MAGNUS_ORDER", settings.MAGNUS_ORDER)
    MATCH_T_BRACKET = _bracket_env("MATCH_T_BRACKET", settings.T_BRACKET)
    MATCH_T_RTOL = _float_env("MATCH_T_RTOL", settings.T_RTOL)
    NM_XATOL = _float_env("NM_XATOL", settings.NM_XATOL)
    NM_MAXFEV = _int_env("NM_MAXFEV", settings.NM_MAXFEV)
    STEP_ERROR_CEILING = _float_env("STEP_ERROR_CEILING", settings.STEP_ERROR_CEILING)
    SMOOTHNESS_THRESHOLD = _float_env("SMOOTHNESS_THRESHOLD", settings.SMOOTHNESS_THRESHOLD)
    RK4_STEPS = _int_env("RK4_STEPS", settings.RK4_STEPS)
    SWEEP_WORKERS = _int_env("SWEEP_WORKERS", 4)
    RESULTS_DIR = os.getenv("RESULTS_DIR", "")


class DevelopmentConfig(Config):
    DEBUG = True


class ProductionConfig(Config):
    DEBUG = False
    TESTING = False


class TestingConfig(Config):
    TESTING = True
    SQLALCHEMY_DATABASE_URI = "sqlite:///:memory:"
    CORS_ORIGINS = ["http://localhost:3000"]
    SWEEP_WORKERS = 1
    RESULTS_DIR = ""


config_by_name = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
}
