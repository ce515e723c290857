"""
Posterior report files for external plotting.

Outputs in ``output_dir``:
    posterior.csv        index,t,lon,lat,p_member,p_member_online
    active.csv           index,t,p_active
    hist_membership.csv  bin_lo,bin_hi,count (20 bins over [0, 1])
    hist_active.csv      bin_lo,bin_hi,count
    top_k.csv            t,lon,lat of the K most likely clustered events, in time order
    diff_histogram.csv   bin_lo,bin_hi,count of p_member - p_external over [-1, 1]
                         (only with an external probability file)
    summary.txt          key: value lines
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .catalog_io import write_active, write_posterior
from .cluster_filter import smoothed_report
from .constants import DEFAULT_TOP_K, FLOAT_FORMAT, HISTOGRAM_BINS
from .errors import DataError
from .intensity import ClusterIntensity
from .models import Catalog, PosteriorReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

EXTERNAL_COLUMNS = ("p_member", "probability", "p")


def histogram_frame(values: np.ndarray, bins: int = HISTOGRAM_BINS, value_range: Tuple[float, float] = (0.0, 1.0)) -> pd.DataFrame:
    lo, hi = value_range
    counts, edges = np.histogram(np.clip(values, lo, hi), bins=bins, range=value_range)
    return pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts})


def top_k_frame(report: PosteriorReport, k: int) -> pd.DataFrame:
    if k > report.n:
        logger.warning(f"top-k of {k} exceeds the catalog size {report.n}; exporting all events")
        k = report.n
    chosen = np.sort(np.argsort(-report.membership, kind="stable")[:k])
    return pd.DataFrame({"t": report.times[chosen], "lon": report.lons[chosen], "lat": report.lats[chosen]})


def read_external_probabilities(source: PathLike, n: int) -> np.ndarray:
    """Per-event probabilities from another method, one row per event in catalog order."""
    frame = pd.read_csv(source)
    column = next((c for c in EXTERNAL_COLUMNS if c in frame.columns), frame.columns[-1])
    values = frame[column].to_numpy(dtype=float)
    if values.shape[0] != n:
        raise DataError(f"{source} has {values.shape[0]} rows but the catalog has {n} events")
    return values


def write_summary(report: PosteriorReport, out: Path) -> Path:
    lines = []
    for key, value in report.summary().items():
        lines.append(f"{key}: {FLOAT_FORMAT % value}" if isinstance(value, float) else f"{key}: {value}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def report(
    catalog: Catalog,
    model: ClusterIntensity,
    output_dir: PathLike,
    top_k: int = DEFAULT_TOP_K,
    external: Optional[PathLike] = None,
    horizon: Optional[float] = None,
) -> Dict[str, Path]:
    """Compute the smoothed posterior and write every report file; returns name -> path."""
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    external_values = read_external_probabilities(external, catalog.n) if external is not None else None

    posterior = smoothed_report(catalog, model, horizon=horizon)
    written: Dict[str, Path] = {
        "posterior": write_posterior(posterior, out_dir / "posterior.csv"),
        "active": write_active(posterior, out_dir / "active.csv"),
    }
    for name, values in (("hist_membership", posterior.membership), ("hist_active", posterior.active)):
        path = out_dir / f"{name}.csv"
        histogram_frame(values).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        written[name] = path

    path = out_dir / "top_k.csv"
    top_k_frame(posterior, top_k).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    written["top_k"] = path

    if external_values is not None:
        path = out_dir / "diff_histogram.csv"
        histogram_frame(posterior.membership - external_values, value_range=(-1.0, 1.0)).to_csv(
            path, index=False, float_format=FLOAT_FORMAT
        )
        written["diff_histogram"] = path

    written["summary"] = write_summary(posterior, out_dir / "summary.txt")
    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written
