"""
Spatial kernel, edge-corrected offspring rates and the conditional intensity of the
cluster process when the mother alone drives its cluster.

Rates are time-invariant: the noise density is ``gamma``, the initiation density is
``epsilon`` and an active cluster with mother ``m`` emits offspring with the Gaussian
kernel density centred on ``m``. The reference measure convention decides how densities
integrate to total rates (see :class:`NuConvention`).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple, Type

import numpy as np
from scipy.special import ndtr

from .errors import DataError, StateError
from .models import Catalog, Event, ModelParams, NuConvention, Region

Location = Tuple[float, float]


def gaussian_box_mass(lon, lat, d: float, region: Region):
    """Mass of N((lon, lat), d*I) inside the region (product of two normal CDF differences)."""
    s = math.sqrt(d)
    gx = ndtr((region.lon_max - lon) / s) - ndtr((region.lon_min - lon) / s)
    gy = ndtr((region.lat_max - lat) / s) - ndtr((region.lat_min - lat) / s)
    return gx * gy


class ClusterIntensity(ABC):
    """
    Common contract for the two reference-measure conventions.
    Densities are per unit of nu per day; totals are per day.
    """

    nu: NuConvention

    def __init__(self, params: ModelParams, region: Region):
        self.params = params
        self.region = region

    @property
    @abstractmethod
    def nu_mass(self) -> float:
        """nu(E), the mass of the whole region."""

    @abstractmethod
    def _kernel_mass_scale(self) -> float:
        """Factor turning Gaussian box mass into the integral of the kernel against nu."""

    # ---- densities ----

    @property
    def noise_density(self) -> float:
        return self.params.gamma

    @property
    def initiation_density(self) -> float:
        return self.params.epsilon

    @property
    def noise_total(self) -> float:
        return self.params.gamma * self.nu_mass

    @property
    def initiation_total(self) -> float:
        return self.params.epsilon * self.nu_mass

    def kernel_density(self, lon, lat, mother_lon, mother_lat):
        """lambda * exp(-|u - u_m|^2 / 2d) / (2 pi d); broadcasts over arrays."""
        d = self.params.d
        r2 = (np.asarray(lon) - mother_lon) ** 2 + (np.asarray(lat) - mother_lat) ** 2
        return self.params.lam * np.exp(-r2 / (2.0 * d)) / (2.0 * math.pi * d)

    def kernel_row(self, catalog: Catalog, j: int) -> np.ndarray:
        """Kernel densities at event ``j`` (0-based) from every earlier event 0..j-1."""
        lons, lats = catalog.lons, catalog.lats
        return self.kernel_density(lons[:j], lats[:j], lons[j], lats[j])

    # ---- totals ----

    def offspring_total_rate(self, lon, lat):
        """a(y): integral of the kernel centred at y against nu over the region."""
        inside = self.region.contains(np.asarray(lon), np.asarray(lat))
        if not np.all(inside):
            raise DataError(f"mother location ({lon}, {lat}) lies outside the region")
        mass = gaussian_box_mass(np.asarray(lon, dtype=float), np.asarray(lat, dtype=float), self.params.d, self.region)
        return self.params.lam * mass * self._kernel_mass_scale()

    def offspring_total_rates(self, catalog: Catalog) -> np.ndarray:
        if catalog.n == 0:
            return np.zeros(0)
        return np.asarray(self.offspring_total_rate(catalog.lons, catalog.lats), dtype=float)

    def conditional_intensity(self, lon: float, lat: float, active: int, mother: Optional[Event]) -> float:
        """Cluster-process intensity density at u given D and the current mother."""
        if active:
            if mother is None:
                raise StateError("an active cluster requires a mother event")
            return float(self.kernel_density(lon, lat, mother.lon, mother.lat))
        return self.params.epsilon


class ProbabilityIntensity(ClusterIntensity):
    """nu is the uniform probability measure on the region (nu(E) = 1)."""

    nu = NuConvention.PROBABILITY

    @property
    def nu_mass(self) -> float:
        return 1.0

    def _kernel_mass_scale(self) -> float:
        return 1.0 / self.region.area


class LebesgueIntensity(ClusterIntensity):
    """nu is Lebesgue measure on the region in deg^2 (nu(E) = area)."""

    nu = NuConvention.LEBESGUE

    @property
    def nu_mass(self) -> float:
        return self.region.area

    def _kernel_mass_scale(self) -> float:
        return 1.0


INTENSITY_CLASSES: Dict[NuConvention, Type[ClusterIntensity]] = {
    NuConvention.PROBABILITY: ProbabilityIntensity,
    NuConvention.LEBESGUE: LebesgueIntensity,
}


def kernel_density(u: Location, y: Event, params: ModelParams) -> float:
    d = params.d
    r2 = (u[0] - y.lon) ** 2 + (u[1] - y.lat) ** 2
    return params.lam * math.exp(-r2 / (2.0 * d)) / (2.0 * math.pi * d)


def offspring_total_rate(
    y: Event, region: Region, params: ModelParams, nu: NuConvention = NuConvention.PROBABILITY
) -> float:
    from .factory import create_intensity

    return float(create_intensity(params, region, nu).offspring_total_rate(y.lon, y.lat))


def conditional_intensity(
    u: Location,
    active: int,
    mother: Optional[Event],
    params: ModelParams,
    region: Region,
    nu: NuConvention = NuConvention.PROBABILITY,
) -> float:
    from .factory import create_intensity

    return create_intensity(params, region, nu).conditional_intensity(u[0], u[1], active, mother)
