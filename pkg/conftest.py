"""Shared fixtures: reference model, the two-event worked scenario, seeded small catalogs."""
import math
from typing import Tuple

import numpy as np
import pytest

from src.constants import (
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
from src.factory import create_intensity
from src.intensity import ClusterIntensity
from src.models import Catalog, ModelParams, NuConvention, Region, SimConfig
from src.simulator import simulate

# Two events at the same place one day apart. The region is large enough that the
# kernel mass is 1 up to 1e-12, so a(y) = lam / area = 0.05 and the kernel value
# between the events is lam / (2 pi d) = 2.0.
WORKED_REGION = Region(lon_min=0.0, lon_max=5.0, lat_min=0.0, lat_max=4.0)
WORKED_PARAMS = ModelParams(gamma=0.1, lam=1.0, epsilon=0.01, d=1.0 / (4.0 * math.pi), p=0.2)

DRAW_REGION = Region(lon_min=0.0, lon_max=3.0, lat_min=0.0, lat_max=2.0)


@pytest.fixture
def reference_params() -> ModelParams:
    return ModelParams(
        gamma=REFERENCE_GAMMA, lam=REFERENCE_LAMBDA, epsilon=REFERENCE_EPSILON, d=REFERENCE_D, p=REFERENCE_P
    )


@pytest.fixture
def reference_region() -> Region:
    return Region(
        lon_min=REFERENCE_LON_MIN, lon_max=REFERENCE_LON_MAX, lat_min=REFERENCE_LAT_MIN, lat_max=REFERENCE_LAT_MAX
    )


@pytest.fixture
def reference_model(reference_params, reference_region) -> ClusterIntensity:
    return create_intensity(reference_params, reference_region)


@pytest.fixture
def worked_model() -> ClusterIntensity:
    return create_intensity(WORKED_PARAMS, WORKED_REGION)


@pytest.fixture
def worked_catalog() -> Catalog:
    return Catalog.from_arrays(WORKED_REGION, [1.0, 2.0], [2.5, 2.5], [2.0, 2.0])


def single_event_catalog(t: float = 1.0, region: Region = WORKED_REGION) -> Catalog:
    lon, lat = region.center
    return Catalog.from_arrays(region, [t], [lon], [lat])


def random_draw(seed: int, max_events: int = 10) -> Tuple[ClusterIntensity, Catalog]:
    """
    Random parameters and a simulated catalog of at most ``max_events`` events.
    Even seeds use the probability convention, odd seeds Lebesgue.
    """
    rng = np.random.default_rng(seed)
    params = ModelParams(
        gamma=rng.uniform(0.05, 0.5),
        lam=rng.uniform(0.2, 3.0),
        epsilon=rng.uniform(0.01, 0.3),
        d=rng.uniform(0.01, 0.5),
        p=rng.uniform(0.1, 0.9),
    )
    nu = NuConvention.PROBABILITY if seed % 2 == 0 else NuConvention.LEBESGUE
    model = create_intensity(params, DRAW_REGION, nu)
    horizon = 3.0 * max_events / (model.noise_total + model.initiation_total)
    for attempt in range(20):
        catalog, _ = simulate(SimConfig(params=params, region=DRAW_REGION, horizon=horizon, seed=seed * 100 + attempt, nu=nu))
        if catalog.n:
            return model, catalog.subset(min(catalog.n, max_events))
        horizon *= 2.0
    raise RuntimeError(f"no events simulated for seed {seed}")


@pytest.fixture(params=range(100), ids=lambda s: f"draw{s}")
def small_draw(request) -> Tuple[ClusterIntensity, Catalog]:
    return random_draw(request.param)
