import math

import numpy as np
import pytest

from src.errors import DataError, StateError
from src.factory import create_intensity
from src.intensity import (
    LebesgueIntensity,
    ProbabilityIntensity,
    conditional_intensity,
    gaussian_box_mass,
    kernel_density,
    offspring_total_rate,
)
from src.models import Catalog, Event, NuConvention, Region


def test_kernel_peak_value(reference_params):
    mother = Event(index=1, t=0.0, lon=135.0, lat=36.0)
    value = kernel_density((135.0, 36.0), mother, reference_params)
    assert value == pytest.approx(1.3274 / (2 * math.pi * 0.007), rel=1e-12)
    assert value == pytest.approx(30.18, abs=0.01)


def test_kernel_matches_vectorised_form(reference_model, reference_params):
    mother = Event(index=1, t=0.0, lon=135.0, lat=36.0)
    lons = np.array([135.0, 135.05, 134.9])
    lats = np.array([36.0, 36.02, 35.95])
    row = reference_model.kernel_density(lons, lats, mother.lon, mother.lat)
    expected = [kernel_density((lo, la), mother, reference_params) for lo, la in zip(lons, lats)]
    np.testing.assert_allclose(row, expected, rtol=1e-14)
    assert row[0] > row[1] > 0


def test_offspring_rate_at_region_centre(reference_params, reference_region):
    centre = Event(index=1, t=0.0, lon=135.5, lat=36.5)
    prob = offspring_total_rate(centre, reference_region, reference_params, NuConvention.PROBABILITY)
    leb = offspring_total_rate(centre, reference_region, reference_params, NuConvention.LEBESGUE)
    assert prob == pytest.approx(1.3274 / 45.0, rel=1e-9)
    assert prob == pytest.approx(0.029498, abs=1e-6)
    assert leb == pytest.approx(1.3274, rel=1e-9)


def test_offspring_rate_at_corner_loses_three_quarters(reference_params, reference_region):
    corner = Event(index=1, t=0.0, lon=131.0, lat=34.0)
    rate = offspring_total_rate(corner, reference_region, reference_params)
    assert rate == pytest.approx(0.25 * 1.3274 / 45.0, rel=1e-9)
    assert gaussian_box_mass(131.0, 34.0, 0.007, reference_region) == pytest.approx(0.25)


@pytest.mark.parametrize("nu", list(NuConvention))
@pytest.mark.parametrize("d", [0.007, 0.5])
@pytest.mark.parametrize("mother", [(135.5, 36.5), (131.05, 34.02), (139.9, 37.0)], ids=["centre", "corner", "edge"])
def test_offspring_rate_is_the_kernel_integral(reference_params, reference_region, nu, d, mother):
    params = reference_params.model_copy(update={"d": d})
    model = create_intensity(params, reference_region, nu)
    rng = np.random.default_rng(17)
    size = 1_000_000
    lons = rng.normal(mother[0], math.sqrt(d), size)
    lats = rng.normal(mother[1], math.sqrt(d), size)
    # the kernel is lam times a normal density; nu(du) = nu(E) du / area
    inside = float(np.mean(reference_region.contains(lons, lats)))
    estimate = params.lam * inside * model.nu_mass / reference_region.area
    assert estimate == pytest.approx(float(model.offspring_total_rate(*mother)), rel=0.01)


def test_kernel_translation_and_transpose_invariance(reference_model):
    lons = np.array([135.0, 135.07, 134.91, 136.2])
    lats = np.array([36.0, 36.03, 35.88, 37.1])
    base = reference_model.kernel_density(lons, lats, 135.02, 36.01)
    shifted = reference_model.kernel_density(lons + 1.5, lats - 0.7, 136.52, 35.31)
    swapped = reference_model.kernel_density(lats, lons, 36.01, 135.02)
    np.testing.assert_allclose(shifted, base, rtol=1e-9)
    np.testing.assert_allclose(swapped, base, rtol=1e-12)


def test_offspring_rate_is_transpose_invariant(reference_params):
    wide = Region(lon_min=0.0, lon_max=3.0, lat_min=0.0, lat_max=2.0)
    tall = Region(lon_min=0.0, lon_max=2.0, lat_min=0.0, lat_max=3.0)
    params = reference_params.model_copy(update={"d": 0.2})
    a_wide = create_intensity(params, wide).offspring_total_rate(0.4, 1.7)
    a_tall = create_intensity(params, tall).offspring_total_rate(1.7, 0.4)
    assert a_wide == pytest.approx(a_tall, rel=1e-12)


def test_offspring_rate_is_bounded(reference_params, reference_region):
    prob = create_intensity(reference_params, reference_region)
    leb = create_intensity(reference_params, reference_region, NuConvention.LEBESGUE)
    grid_lon, grid_lat = np.meshgrid(np.linspace(131.0, 140.0, 37), np.linspace(34.0, 39.0, 21))
    lons, lats = grid_lon.ravel(), grid_lat.ravel()
    a_prob = prob.offspring_total_rate(lons, lats)
    a_leb = leb.offspring_total_rate(lons, lats)
    assert np.all(a_prob > 0)
    assert np.all(a_prob <= 1.3274 / reference_region.area)
    assert np.all(a_leb <= 1.3274)
    np.testing.assert_allclose(a_leb, a_prob * reference_region.area, rtol=1e-12)


def test_offspring_rate_outside_region_is_an_error(reference_model):
    with pytest.raises(DataError):
        reference_model.offspring_total_rate(130.0, 36.0)


def test_totals_follow_the_reference_measure(reference_params, reference_region):
    prob = create_intensity(reference_params, reference_region, "probability")
    leb = create_intensity(reference_params, reference_region, NuConvention.LEBESGUE)
    assert isinstance(prob, ProbabilityIntensity)
    assert isinstance(leb, LebesgueIntensity)
    assert prob.noise_total == pytest.approx(0.1070)
    assert prob.initiation_total == pytest.approx(0.0126)
    assert leb.noise_total == pytest.approx(0.1070 * 45.0)
    assert leb.initiation_total == pytest.approx(0.0126 * 45.0)
    # per-event densities do not depend on the convention
    assert prob.noise_density == leb.noise_density == 0.1070


def test_unknown_convention_rejected(reference_params, reference_region):
    with pytest.raises(ValueError, match="Unsupported nu convention"):
        create_intensity(reference_params, reference_region, "counting")


def test_conditional_intensity_branches(reference_params, reference_region):
    mother = Event(index=1, t=0.0, lon=135.0, lat=36.0)
    assert conditional_intensity((136.0, 37.0), 0, None, reference_params, reference_region) == 0.0126
    active = conditional_intensity((135.0, 36.0), 1, mother, reference_params, reference_region)
    assert active == pytest.approx(kernel_density((135.0, 36.0), mother, reference_params))
    with pytest.raises(StateError):
        conditional_intensity((135.0, 36.0), 1, None, reference_params, reference_region)


def test_kernel_row_and_rates_cover_the_catalog(reference_model, reference_region):
    catalog = Catalog.from_arrays(reference_region, [1.0, 2.0, 3.0], [135.0, 135.1, 131.0], [36.0, 36.1, 34.0])
    row = reference_model.kernel_row(catalog, 2)
    assert row.shape == (2,)
    assert reference_model.kernel_row(catalog, 0).shape == (0,)
    rates = reference_model.offspring_total_rates(catalog)
    assert rates.shape == (3,)
    assert rates[2] == pytest.approx(0.25 * rates[0], rel=1e-6)
