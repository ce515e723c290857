"""
Model configuration files.

A config file is flat KEY=VALUE text (``[section]`` lines and ``#`` comments are
ignored; keys are case-insensitive):

    GAMMA, LAMBDA, EPSILON, D, P           model parameters
    LON_MIN, LON_MAX, LAT_MIN, LAT_MAX     study rectangle in degrees
    NU                                     probability | lebesgue

Environment variables named SWARMFILTER_<KEY> (a local .env file included) override
file values. Missing keys fall back to the reference values in ``constants``.
"""
from __future__ import annotations

import io
import logging
import os
from pathlib import Path
from typing import Dict, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict

from .constants import (
    ENV_PREFIX,
    REFERENCE_D,
    REFERENCE_EPSILON,
    REFERENCE_GAMMA,
    REFERENCE_LAMBDA,
    REFERENCE_LAT_MAX,
    REFERENCE_LAT_MIN,
    REFERENCE_LON_MAX,
    REFERENCE_LON_MIN,
    REFERENCE_P,
)
from .errors import DataError
from .models import ModelParams, NuConvention, Region

logger = logging.getLogger(__name__)

PARAM_KEYS = {"GAMMA": "gamma", "LAMBDA": "lam", "EPSILON": "epsilon", "D": "d", "P": "p"}
REGION_KEYS = {"LON_MIN": "lon_min", "LON_MAX": "lon_max", "LAT_MIN": "lat_min", "LAT_MAX": "lat_max"}

DEFAULTS: Dict[str, float] = {
    "GAMMA": REFERENCE_GAMMA,
    "LAMBDA": REFERENCE_LAMBDA,
    "EPSILON": REFERENCE_EPSILON,
    "D": REFERENCE_D,
    "P": REFERENCE_P,
    "LON_MIN": REFERENCE_LON_MIN,
    "LON_MAX": REFERENCE_LON_MAX,
    "LAT_MIN": REFERENCE_LAT_MIN,
    "LAT_MAX": REFERENCE_LAT_MAX,
}


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    region: Region
    nu: NuConvention = NuConvention.PROBABILITY


def read_key_values(path: Union[str, Path]) -> Dict[str, str]:
    """Upper-cased KEY -> raw value from a flat config file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    body = "\n".join(line for line in text.splitlines() if not line.strip().startswith("["))
    values = dotenv_values(stream=io.StringIO(body))
    return {key.strip().upper(): value for key, value in values.items() if value is not None}


def environment_overrides() -> Dict[str, str]:
    load_dotenv()
    return {
        key[len(ENV_PREFIX):].upper(): value
        for key, value in os.environ.items()
        if key.upper().startswith(ENV_PREFIX) and value
    }


def _number(values: Dict[str, str], key: str) -> float:
    raw = values.get(key)
    if raw is None:
        return DEFAULTS[key]
    try:
        return float(raw)
    except ValueError:
        raise DataError(f"config key {key} is not a number: {raw!r}") from None


def load_model_config(path: Optional[Union[str, Path]] = None, nu: Optional[str] = None) -> ModelConfig:
    """File values, then environment overrides, then an explicit ``nu`` argument."""
    values = read_key_values(path) if path is not None else {}
    overrides = environment_overrides()
    if overrides:
        logger.debug(f"Config overrides from environment: {sorted(overrides)}")
    values.update(overrides)

    params = ModelParams(**{field: _number(values, key) for key, field in PARAM_KEYS.items()})
    region = Region(**{field: _number(values, key) for key, field in REGION_KEYS.items()})
    convention = nu or values.get("NU", NuConvention.PROBABILITY.value)
    try:
        convention = NuConvention(str(convention).strip().lower())
    except ValueError:
        raise DataError(f"unknown NU convention {convention!r}; expected probability or lebesgue") from None
    logger.debug(f"Loaded model config from {path or 'defaults'}: {params.as_dict()}")
    return ModelConfig(params=params, region=region, nu=convention)
