"""
Exact forward simulation of the noise + single-active-cluster model.

All rates are constant between events, so the next arrival is drawn from competing
exponential clocks: noise at the total noise rate, and either cluster initiation
(no active cluster) or offspring of the current mother (active cluster).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .constants import MAX_REJECTION_ATTEMPTS, REJECTION_BATCH
from .errors import NumericalError
from .factory import create_intensity
from .models import (
    KILL_CODE,
    MOTHER_CODE,
    NOISE_CODE,
    SURVIVE_CODE,
    Catalog,
    LabeledPath,
    Region,
    SimConfig,
    path_from_codes,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationTrace:
    """Raw simulator output: event arrays plus integer label codes."""

    times: np.ndarray
    lons: np.ndarray
    lats: np.ndarray
    codes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.times.shape[0])


def sample_uniform(rng: np.random.Generator, region: Region) -> Tuple[float, float]:
    lon = rng.uniform(region.lon_min, region.lon_max)
    lat = rng.uniform(region.lat_min, region.lat_max)
    return float(lon), float(lat)


def sample_truncated_gaussian(
    rng: np.random.Generator,
    center: Tuple[float, float],
    d: float,
    region: Region,
    event_index: int,
    max_attempts: int = MAX_REJECTION_ATTEMPTS,
) -> Tuple[float, float]:
    """Draw from N(center, d*I) restricted to the region by rejection."""
    sd = np.sqrt(d)
    attempts = 0
    while attempts < max_attempts:
        batch = min(REJECTION_BATCH, max_attempts - attempts)
        lon = rng.normal(center[0], sd, size=batch)
        lat = rng.normal(center[1], sd, size=batch)
        ok = np.flatnonzero(region.contains(lon, lat))
        if ok.size:
            k = ok[0]
            if attempts:
                logger.warning(
                    f"offspring location for event {event_index} took {attempts + k + 1} draws "
                    f"(mother at {center}, d={d})"
                )
            return float(lon[k]), float(lat[k])
        attempts += batch
    raise NumericalError(
        f"offspring location for event {event_index} not found inside the region after "
        f"{max_attempts} attempts (mother at {center}, d={d})"
    )


def simulate_trace(config: SimConfig) -> SimulationTrace:
    model = create_intensity(config.params, config.region, config.nu)
    rng = np.random.default_rng(config.seed)
    region = config.region
    p = config.params.p

    noise_rate = model.noise_total
    times, lons, lats, codes = [], [], [], []
    t = 0.0
    active = False
    mother = (0.0, 0.0)
    mother_rate = 0.0

    while True:
        cluster_rate = mother_rate if active else model.initiation_total
        total = noise_rate + cluster_rate
        t += rng.exponential(1.0 / total)
        if t > config.horizon:
            break

        index = len(times) + 1
        if rng.random() * total < noise_rate:
            lon, lat = sample_uniform(rng, region)
            code = NOISE_CODE
        elif not active:
            lon, lat = sample_uniform(rng, region)
            code = MOTHER_CODE
            active = True
            mother = (lon, lat)
            mother_rate = float(model.offspring_total_rate(lon, lat))
        else:
            lon, lat = sample_truncated_gaussian(rng, mother, config.params.d, region, index)
            # the kill decision comes after the offspring is recorded
            if rng.random() < p:
                code = KILL_CODE
                active = False
            else:
                code = SURVIVE_CODE

        times.append(t)
        lons.append(lon)
        lats.append(lat)
        codes.append(code)

    logger.info(f"Simulated {len(times)} events over {config.horizon:g} days (seed={config.seed})")
    return SimulationTrace(
        times=np.asarray(times, dtype=float),
        lons=np.asarray(lons, dtype=float),
        lats=np.asarray(lats, dtype=float),
        codes=np.asarray(codes, dtype=np.int8),
    )


def simulate(config: SimConfig) -> Tuple[Catalog, LabeledPath]:
    """Simulate a catalog and its ground-truth labels; deterministic per seed."""
    trace = simulate_trace(config)
    catalog = Catalog.from_arrays(config.region, trace.times, trace.lons, trace.lats)
    path = path_from_codes(trace.codes)
    if path.final_active:
        logger.info(f"Cluster started by event {path.E[-1]} is still active at the horizon")
    return catalog, path


def cluster_sizes(codes: np.ndarray) -> np.ndarray:
    """Sizes (mother included) of every cluster that was closed by a killing offspring."""
    sizes = []
    current = 0
    for code in codes:
        if code == MOTHER_CODE:
            current = 1
        elif code == SURVIVE_CODE:
            current += 1
        elif code == KILL_CODE:
            sizes.append(current + 1)
            current = 0
    return np.asarray(sizes, dtype=int)
