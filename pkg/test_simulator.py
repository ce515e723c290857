import logging

import numpy as np
import pytest
from scipy import stats

from src.errors import NumericalError
from src.factory import create_intensity
from src.models import (
    KILL_CODE,
    MOTHER_CODE,
    NOISE_CODE,
    SURVIVE_CODE,
    ModelParams,
    NuConvention,
    Region,
    SimConfig,
    code_from_label,
)
from src.simulator import cluster_sizes, sample_truncated_gaussian, simulate, simulate_trace


def _config(params, region, horizon=2000.0, seed=7):
    return SimConfig(params=params, region=region, horizon=horizon, seed=seed)


def test_same_seed_same_catalog(reference_params, reference_region):
    first, labels_a = simulate(_config(reference_params, reference_region))
    second, labels_b = simulate(_config(reference_params, reference_region))
    np.testing.assert_array_equal(first.times, second.times)
    np.testing.assert_array_equal(first.lons, second.lons)
    assert labels_a == labels_b


def test_different_seeds_differ(reference_params, reference_region):
    a, _ = simulate(_config(reference_params, reference_region, seed=1))
    b, _ = simulate(_config(reference_params, reference_region, seed=2))
    assert a.n != b.n or not np.array_equal(a.times, b.times)


def test_trace_is_a_valid_history(reference_params, reference_region):
    catalog, path = simulate(_config(reference_params, reference_region, horizon=5000.0))
    assert catalog.n == len(path) > 0
    assert np.all(np.diff(catalog.times) > 0)
    assert catalog.last_time <= 5000.0
    assert np.all(reference_region.contains(catalog.lons, catalog.lats))
    codes = np.array([code_from_label(label) for label in path.labels])
    assert np.any(codes == MOTHER_CODE)
    # an offspring always follows an open cluster
    for code, d_before in zip(codes, (0,) + path.D[:-1]):
        if code in (SURVIVE_CODE, KILL_CODE):
            assert d_before == 1
        if code == MOTHER_CODE:
            assert d_before == 0


def test_no_initiation_gives_pure_noise(reference_region):
    params = ModelParams(gamma=0.2, lam=1.0, epsilon=0.0, d=0.01, p=0.5)
    trace = simulate_trace(_config(params, reference_region, horizon=1000.0))
    assert trace.n > 0
    assert np.all(trace.codes == NOISE_CODE)
    # Poisson count: mean 200, well within 5 standard deviations
    assert abs(trace.n - 200) < 5 * np.sqrt(200)


def test_cluster_sizes_count_closed_clusters_only():
    codes = np.array([NOISE_CODE, MOTHER_CODE, SURVIVE_CODE, KILL_CODE, MOTHER_CODE, KILL_CODE, MOTHER_CODE])
    np.testing.assert_array_equal(cluster_sizes(codes), [3, 2])


def test_rejection_sampler_gives_up(reference_region):
    rng = np.random.default_rng(0)
    far_outside = (200.0, 80.0)
    with pytest.raises(NumericalError, match="event 5"):
        sample_truncated_gaussian(rng, far_outside, 0.001, reference_region, 5, max_attempts=256)


@pytest.mark.slow
def test_offspring_count_is_geometric(reference_region):
    # productive clusters and frequent initiation so that 10^4 clusters close quickly
    p = 0.2035
    params = ModelParams(gamma=0.01, lam=45.0, epsilon=1.0, d=0.007, p=p)
    trace = simulate_trace(_config(params, reference_region, horizon=80_000.0, seed=11))
    sizes = cluster_sizes(trace.codes)
    assert sizes.size >= 10_000

    offspring = sizes - 1
    cap = 15
    observed = np.array([np.sum(offspring == k) for k in range(1, cap)] + [np.sum(offspring >= cap)])
    probs = stats.geom.pmf(np.arange(1, cap), p)
    probs = np.append(probs, stats.geom.sf(cap - 1, p))
    _, p_value = stats.chisquare(observed, probs * sizes.size)
    assert p_value > 0.01

    mean_size = 1 + 1 / p
    sd = np.sqrt((1 - p) / p**2 / sizes.size)
    assert abs(sizes.mean() - mean_size) < 3 * sd


def test_waiting_times_are_exponential_per_regime(reference_params, reference_region):
    catalog, path = simulate(_config(reference_params, reference_region, horizon=20_000.0, seed=5))
    model = create_intensity(reference_params, reference_region)
    gaps = np.diff(np.concatenate([[0.0], catalog.times]))
    d_before = np.array((0,) + path.D[:-1])
    e_before = np.array((0,) + path.E[:-1])

    idle = gaps[d_before == 0] * (model.noise_total + model.initiation_total)
    mothers = e_before[d_before == 1] - 1
    rates = model.noise_total + model.offspring_total_rate(catalog.lons[mothers], catalog.lats[mothers])
    active = gaps[d_before == 1] * rates
    assert idle.size > 500 and active.size > 500
    assert stats.kstest(idle, "expon").pvalue > 0.01
    assert stats.kstest(active, "expon").pvalue > 0.01


@pytest.mark.slow
def test_offspring_scatter_matches_the_kernel():
    region = Region(lon_min=0.0, lon_max=100.0, lat_min=0.0, lat_max=100.0)
    d = 0.01
    params = ModelParams(gamma=1e-4, lam=2.0, epsilon=1e-4, d=d, p=0.2)
    config = SimConfig(params=params, region=region, horizon=15_000.0, seed=8, nu=NuConvention.LEBESGUE)
    catalog, path = simulate(config)
    codes = np.array([code_from_label(label) for label in path.labels])
    offspring = np.flatnonzero((codes == SURVIVE_CODE) | (codes == KILL_CODE))
    mothers = np.array(path.E)[offspring] - 1
    mlon, mlat = catalog.lons[mothers], catalog.lats[mothers]
    # mothers well inside the region: truncation is negligible
    margin = 5 * np.sqrt(d)
    away = (mlon > margin) & (mlon < 100 - margin) & (mlat > margin) & (mlat < 100 - margin)
    dx = catalog.lons[offspring][away] - mlon[away]
    dy = catalog.lats[offspring][away] - mlat[away]
    assert dx.size > 5000
    assert abs(np.mean(dx)) < 4 * np.sqrt(d / dx.size)
    assert np.mean(dx**2) == pytest.approx(d, rel=0.05)
    assert np.mean(dy**2) == pytest.approx(d, rel=0.05)


def test_certain_kill_gives_pairs(reference_region):
    params = ModelParams(gamma=0.05, lam=1.0, epsilon=0.1, d=0.01, p=1.0)
    trace = simulate_trace(_config(params, reference_region, horizon=20_000.0, seed=3))
    sizes = cluster_sizes(trace.codes)
    assert sizes.size > 50
    assert np.all(sizes == 2)
    assert not np.any(trace.codes == SURVIVE_CODE)


@pytest.mark.slow
def test_no_initiation_counts_over_replicates():
    region = Region(lon_min=0.0, lon_max=3.0, lat_min=0.0, lat_max=2.0)
    params = ModelParams(gamma=0.2, lam=1.0, epsilon=0.0, d=0.01, p=0.5)
    counts = np.array([simulate_trace(_config(params, region, horizon=100.0, seed=s)).n for s in range(1000)])
    # Poisson(20): mean and dispersion
    assert abs(counts.mean() - 20.0) < 4 * np.sqrt(20.0 / 1000)
    assert counts.var(ddof=1) / counts.mean() == pytest.approx(1.0, abs=0.15)


def test_open_cluster_at_the_horizon_is_kept(reference_region, caplog):
    # one mother right away, and p so small that the cluster outlives the horizon
    params = ModelParams(gamma=0.1, lam=1.0, epsilon=5.0, d=0.01, p=0.001)
    with caplog.at_level(logging.INFO, logger="src.simulator"):
        _, path = simulate(_config(params, reference_region, horizon=50.0, seed=2))
    assert path.final_active
    assert path.D[-1] == 1
    assert "still active at the horizon" in caplog.text


def test_rejection_sampler_warns_on_retries(reference_region, caplog):
    rng = np.random.default_rng(0)
    # four standard deviations outside the western edge: the first batch is almost surely rejected
    centre = (reference_region.lon_min - 0.4, 36.5)
    with caplog.at_level(logging.WARNING, logger="src.simulator"):
        lon, lat = sample_truncated_gaussian(rng, centre, 0.01, reference_region, 9)
    assert reference_region.contains(lon, lat)
    assert "event 9 took" in caplog.text
