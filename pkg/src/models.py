from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import (
    DEFAULT_FTOL,
    DEFAULT_MAX_ITER,
    DEFAULT_RESTARTS,
    DEFAULT_XTOL,
    HIGH_PROBABILITY,
    LOW_PROBABILITY,
    RESTART_PERTURBATION,
)
from .errors import StateError


class NuConvention(str, Enum):
    """Reference measure on the study region."""

    PROBABILITY = "probability"
    LEBESGUE = "lebesgue"


class Region(BaseModel):
    """Rectangular study area in degrees."""

    model_config = ConfigDict(frozen=True)

    lon_min: float
    lon_max: float
    lat_min: float
    lat_max: float

    @model_validator(mode="after")
    def validate_extent(self) -> "Region":
        if not self.lon_min < self.lon_max:
            raise ValueError(f"lon_min ({self.lon_min}) must be < lon_max ({self.lon_max})")
        if not self.lat_min < self.lat_max:
            raise ValueError(f"lat_min ({self.lat_min}) must be < lat_max ({self.lat_max})")
        return self

    @property
    def area(self) -> float:
        return (self.lon_max - self.lon_min) * (self.lat_max - self.lat_min)

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.lon_min + self.lon_max), 0.5 * (self.lat_min + self.lat_max))

    def contains(self, lon, lat):
        """Closed-rectangle membership; works on scalars and arrays."""
        return (
            (lon >= self.lon_min) & (lon <= self.lon_max)
            & (lat >= self.lat_min) & (lat <= self.lat_max)
        )


class ModelParams(BaseModel):
    """
    Model parameters. All rates are per day; ``d`` is the kernel variance in deg^2.
    ``lam`` is read from / written as ``lambda``.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    gamma: float = Field(..., gt=0, description="noise rate")
    lam: float = Field(..., gt=0, alias="lambda", description="cluster productivity scale")
    epsilon: float = Field(..., ge=0, description="cluster initiation rate")
    d: float = Field(..., gt=0, description="kernel variance")
    p: float = Field(..., gt=0, le=1, description="cluster death probability per offspring")

    @field_validator("gamma", "lam", "epsilon", "d", "p")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("parameters must be finite")
        return v

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "lambda": self.lam, "epsilon": self.epsilon, "d": self.d, "p": self.p}


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=1)
    t: float = Field(..., ge=0)
    lon: float
    lat: float


class Catalog(BaseModel):
    """Time-ordered observed events inside a region."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    region: Region
    events: List[Event] = Field(default_factory=list)
    origin: Optional[datetime] = None

    @model_validator(mode="after")
    def validate_events(self) -> "Catalog":
        prev_t = -math.inf
        for pos, ev in enumerate(self.events, start=1):
            if ev.index != pos:
                raise ValueError(f"event indices must be contiguous from 1; found {ev.index} at position {pos}")
            if not ev.t > prev_t:
                raise ValueError(f"event times must be strictly increasing (event {ev.index}: {ev.t} <= {prev_t})")
            if not self.region.contains(ev.lon, ev.lat):
                raise ValueError(f"event {ev.index} at ({ev.lon}, {ev.lat}) lies outside the region")
            prev_t = ev.t
        return self

    @classmethod
    def from_arrays(
        cls,
        region: Region,
        times: Sequence[float],
        lons: Sequence[float],
        lats: Sequence[float],
        origin: Optional[datetime] = None,
    ) -> "Catalog":
        events = [
            Event(index=i + 1, t=float(t), lon=float(lon), lat=float(lat))
            for i, (t, lon, lat) in enumerate(zip(times, lons, lats))
        ]
        return cls(region=region, events=events, origin=origin)

    @property
    def n(self) -> int:
        return len(self.events)

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([ev.t for ev in self.events], dtype=float)

    @cached_property
    def lons(self) -> np.ndarray:
        return np.array([ev.lon for ev in self.events], dtype=float)

    @cached_property
    def lats(self) -> np.ndarray:
        return np.array([ev.lat for ev in self.events], dtype=float)

    @property
    def last_time(self) -> float:
        return self.events[-1].t if self.events else 0.0

    def subset(self, first_n: int) -> "Catalog":
        return Catalog(region=self.region, events=self.events[:first_n], origin=self.origin)


class LabelKind(str, Enum):
    NOISE = "noise"
    MOTHER = "mother"
    OFFSPRING = "offspring"


class HiddenLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: LabelKind
    kills: bool = False

    @model_validator(mode="after")
    def validate_kills(self) -> "HiddenLabel":
        if self.kills and self.kind != LabelKind.OFFSPRING:
            raise ValueError("only offspring can kill a cluster")
        return self

    @classmethod
    def noise(cls) -> "HiddenLabel":
        return cls(kind=LabelKind.NOISE)

    @classmethod
    def mother(cls) -> "HiddenLabel":
        return cls(kind=LabelKind.MOTHER)

    @classmethod
    def offspring(cls, kills: bool) -> "HiddenLabel":
        return cls(kind=LabelKind.OFFSPRING, kills=kills)

    @property
    def in_cluster(self) -> bool:
        return self.kind != LabelKind.NOISE


def trace_labels(labels: Sequence[HiddenLabel]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Post-arrival (D, E) trajectory induced by a label sequence; starts from D=0, E=0."""
    d_state, mother = 0, 0
    ds: List[int] = []
    es: List[int] = []
    for idx, label in enumerate(labels, start=1):
        if label.kind == LabelKind.MOTHER:
            if d_state == 1:
                raise StateError(f"event {idx}: mother while a cluster is active")
            d_state, mother = 1, idx
        elif label.kind == LabelKind.OFFSPRING:
            if d_state == 0:
                raise StateError(f"event {idx}: offspring with no active cluster")
            if label.kills:
                d_state = 0
        ds.append(d_state)
        es.append(mother)
    return tuple(ds), tuple(es)


class LabeledPath(BaseModel):
    """Per-event hidden labels with the induced cluster-active indicator D and latest mother E."""

    model_config = ConfigDict(frozen=True)

    labels: Tuple[HiddenLabel, ...]
    D: Tuple[int, ...]
    E: Tuple[int, ...]

    @model_validator(mode="after")
    def validate_trajectory(self) -> "LabeledPath":
        ds, es = trace_labels(self.labels)
        if ds != tuple(self.D) or es != tuple(self.E):
            raise ValueError("D/E trajectory does not match the labels")
        return self

    @classmethod
    def from_labels(cls, labels: Sequence[HiddenLabel]) -> "LabeledPath":
        ds, es = trace_labels(labels)
        return cls(labels=tuple(labels), D=ds, E=es)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def final_active(self) -> bool:
        return bool(self.D and self.D[-1] == 1)


class SimConfig(BaseModel):
    params: ModelParams
    region: Region
    horizon: float = Field(..., gt=0, description="days")
    seed: int = Field(0, ge=0, lt=2**64)
    nu: NuConvention = NuConvention.PROBABILITY


class FitConfig(BaseModel):
    init: ModelParams
    xtol: float = Field(DEFAULT_XTOL, gt=0, description="simplex size tolerance")
    ftol: float = Field(DEFAULT_FTOL, gt=0, description="function value spread tolerance")
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    restarts: int = Field(DEFAULT_RESTARTS, ge=1)
    perturbation: float = Field(RESTART_PERTURBATION, ge=0)
    horizon: Optional[float] = Field(None, gt=0)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)


class FitResult(BaseModel):
    params_hat: ModelParams
    loglik: float
    converged: bool
    iterations: int
    trace: List[float] = Field(default_factory=list)
    restart: int = 0


class CatalogFileRow(BaseModel):
    """One parsed row of a catalog CSV."""

    time: Union[float, datetime]
    lon: float
    lat: float
    magnitude: Optional[float] = None
    depth_km: Optional[float] = None

    @field_validator("lon", "lat")
    @classmethod
    def validate_coordinate(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("coordinates must be finite")
        return v


@dataclass
class PosteriorReport:
    """Smoothed per-event membership and per-event-time cluster-active probabilities."""

    times: np.ndarray
    lons: np.ndarray
    lats: np.ndarray
    membership: np.ndarray
    active: np.ndarray
    membership_online: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_time: float = 0.0

    @property
    def n(self) -> int:
        return int(self.times.shape[0])

    def fraction_decisive(self, values: Optional[np.ndarray] = None) -> float:
        """Share of probabilities outside (0.1, 0.9)."""
        vals = self.membership if values is None else values
        if vals.size == 0:
            return 0.0
        decisive = (vals < LOW_PROBABILITY) | (vals > HIGH_PROBABILITY)
        return float(np.mean(decisive))

    def summary(self) -> dict:
        n = self.n
        return {
            "n": n,
            "final_time": self.final_time,
            "frac_below_0.1": float(np.mean(self.membership < LOW_PROBABILITY)) if n else 0.0,
            "frac_above_0.9": float(np.mean(self.membership > HIGH_PROBABILITY)) if n else 0.0,
            "frac_decisive": self.fraction_decisive(),
            "mean_membership": float(np.mean(self.membership)) if n else 0.0,
            "frac_active_decisive": self.fraction_decisive(self.active),
        }


# Compact integer label codes used by the simulator, the oracle and the label CSV.
NOISE_CODE = 0
MOTHER_CODE = 1
SURVIVE_CODE = 2
KILL_CODE = 3

_CODE_TO_LABEL = {
    NOISE_CODE: HiddenLabel(kind=LabelKind.NOISE),
    MOTHER_CODE: HiddenLabel(kind=LabelKind.MOTHER),
    SURVIVE_CODE: HiddenLabel(kind=LabelKind.OFFSPRING, kills=False),
    KILL_CODE: HiddenLabel(kind=LabelKind.OFFSPRING, kills=True),
}


def label_from_code(code: int) -> HiddenLabel:
    return _CODE_TO_LABEL[int(code)]


def code_from_label(label: HiddenLabel) -> int:
    if label.kind == LabelKind.NOISE:
        return NOISE_CODE
    if label.kind == LabelKind.MOTHER:
        return MOTHER_CODE
    return KILL_CODE if label.kills else SURVIVE_CODE


def path_from_codes(codes: Sequence[int]) -> LabeledPath:
    return LabeledPath.from_labels([label_from_code(c) for c in codes])
