import numpy as np
import pandas as pd
import pytest

from src.cluster_filter import smoothed_report
from src.errors import DataError
from src.factory import create_intensity
from src.models import SimConfig
from src.reporting import histogram_frame, report, top_k_frame
from src.simulator import simulate


@pytest.fixture
def synthetic(reference_params, reference_region):
    catalog, _ = simulate(SimConfig(params=reference_params, region=reference_region, horizon=1200.0, seed=17))
    return catalog


def test_all_files_written(tmp_path, synthetic, reference_model):
    written = report(synthetic, reference_model, tmp_path, top_k=10)
    assert set(written) == {"posterior", "active", "hist_membership", "hist_active", "top_k", "summary"}
    posterior = pd.read_csv(written["posterior"])
    assert list(posterior.columns) == ["index", "t", "lon", "lat", "p_member", "p_member_online"]
    assert len(posterior) == synthetic.n
    assert posterior["p_member"].between(0.0, 1.0).all()

    for name in ("hist_membership", "hist_active"):
        hist = pd.read_csv(written[name])
        assert list(hist.columns) == ["bin_lo", "bin_hi", "count"]
        assert len(hist) == 20
        assert hist["count"].sum() == synthetic.n

    top = pd.read_csv(written["top_k"])
    assert list(top.columns) == ["t", "lon", "lat"]
    assert len(top) == 10
    assert top["t"].is_monotonic_increasing
    assert "frac_decisive" in written["summary"].read_text()


def test_top_k_keeps_the_most_likely_events(synthetic, reference_model):
    posterior = smoothed_report(synthetic, reference_model)
    top = top_k_frame(posterior, 5)
    threshold = np.sort(posterior.membership)[-5]
    chosen = np.isin(posterior.times, top["t"].to_numpy())
    assert np.all(posterior.membership[chosen] >= threshold)


def test_top_k_larger_than_catalog_exports_everything(tmp_path, synthetic, reference_model, caplog):
    written = report(synthetic, reference_model, tmp_path, top_k=synthetic.n + 100)
    assert len(pd.read_csv(written["top_k"])) == synthetic.n
    assert "exceeds the catalog size" in caplog.text


def test_no_initiation_fills_the_lowest_bin(tmp_path, synthetic, reference_params, reference_region):
    model = create_intensity(reference_params.model_copy(update={"epsilon": 0.0}), reference_region)
    written = report(synthetic, model, tmp_path)
    hist = pd.read_csv(written["hist_membership"])
    assert hist["count"].iloc[0] == synthetic.n
    assert hist["count"].iloc[1:].sum() == 0


def test_external_difference_histogram(tmp_path, synthetic, reference_model):
    external = tmp_path / "etas.csv"
    pd.DataFrame({"p_member": np.full(synthetic.n, 0.5)}).to_csv(external, index=False)
    written = report(synthetic, reference_model, tmp_path / "out", external=external)
    diff = pd.read_csv(written["diff_histogram"])
    assert diff["bin_lo"].iloc[0] == -1.0
    assert diff["bin_hi"].iloc[-1] == 1.0
    assert diff["count"].sum() == synthetic.n


def test_external_row_count_mismatch(tmp_path, synthetic, reference_model):
    external = tmp_path / "etas.csv"
    pd.DataFrame({"p_member": [0.1, 0.2]}).to_csv(external, index=False)
    with pytest.raises(DataError, match="rows"):
        report(synthetic, reference_model, tmp_path / "out", external=external)


def test_histogram_includes_both_ends():
    frame = histogram_frame(np.array([0.0, 0.05, 1.0, 1.0]))
    assert frame["count"].iloc[0] == 2
    assert frame["count"].iloc[-1] == 2
    assert frame["count"].sum() == 4


def test_summary_fractions(worked_model, worked_catalog):
    summary = smoothed_report(worked_catalog, worked_model).summary()
    assert summary["n"] == 2
    assert summary["frac_decisive"] == 0.0
    assert summary["final_time"] == 2.0


@pytest.mark.slow
def test_membership_is_bimodal_on_synthetic_data(reference_params, reference_region, reference_model):
    catalog, _ = simulate(SimConfig(params=reference_params, region=reference_region, horizon=8000.0, seed=21))
    assert catalog.n > 500
    posterior = smoothed_report(catalog, reference_model)
    assert posterior.fraction_decisive() >= 0.85
    counts = histogram_frame(posterior.membership, bins=10)["count"].to_numpy()
    assert counts[0] > counts[1:-1].max()
    assert counts[-1] > counts[1:-1].max()
