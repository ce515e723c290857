"""
Catalog CSV ingestion and writers for every result file.

Catalog CSV header: time,lon,lat,magnitude,depth_km (magnitude and depth optional).
``time`` is either float days since the origin or an ISO-8601 timestamp.
The origin is kept on the catalog only when some row carries a timestamp.
"""
from __future__ import annotations

import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .constants import (
    CATALOG_FLOAT_FORMAT,
    DEFAULT_MAX_DEPTH_KM,
    DEFAULT_MIN_MAGNITUDE,
    DEFAULT_TIME_ORIGIN,
    FLOAT_FORMAT,
    LABEL_COLUMNS,
    SECONDS_PER_DAY,
)
from .errors import DataError
from .models import (
    Catalog,
    CatalogFileRow,
    FitResult,
    HiddenLabel,
    LabeledPath,
    LabelKind,
    PosteriorReport,
    Region,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REQUIRED_COLUMNS = ("time", "lon", "lat")


def _blank(value) -> bool:
    return value is None or (isinstance(value, float) and np.isnan(value)) or str(value).strip() == ""


def _parse_time(raw: str) -> Union[float, datetime]:
    try:
        return float(raw)
    except ValueError:
        pass
    stamp = pd.to_datetime(raw)
    if stamp.tzinfo is not None:
        stamp = stamp.tz_convert("UTC").tz_localize(None)
    return stamp.to_pydatetime()


def parse_row(record: Dict[str, object], line: int) -> CatalogFileRow:
    """Validate one CSV record; errors name the file line (header is line 1)."""
    try:
        if _blank(record.get("time")):
            raise ValueError("missing time")
        return CatalogFileRow(
            time=_parse_time(str(record["time"]).strip()),
            lon=float(record["lon"]),
            lat=float(record["lat"]),
            magnitude=None if _blank(record.get("magnitude")) else float(record["magnitude"]),
            depth_km=None if _blank(record.get("depth_km")) else float(record["depth_km"]),
        )
    except (ValueError, TypeError, ValidationError) as exc:
        raise DataError(f"line {line}: unparsable catalog row {record}: {exc}") from None


def days_since(origin: datetime, value: Union[float, datetime]) -> float:
    if isinstance(value, datetime):
        return (value - origin).total_seconds() / SECONDS_PER_DAY
    return float(value)


def ingest(
    path: PathLike,
    region: Region,
    min_magnitude: Optional[float] = DEFAULT_MIN_MAGNITUDE,
    max_depth: Optional[float] = DEFAULT_MAX_DEPTH_KM,
    time_origin: Union[str, datetime] = DEFAULT_TIME_ORIGIN,
    jitter: Optional[float] = None,
) -> Catalog:
    """
    Read, filter and sort a catalog CSV.

    Rows are kept when magnitude >= ``min_magnitude`` and depth <= ``max_depth`` (rows
    without the column value are kept), and when they fall inside ``region``. Exact time
    ties raise DataError unless ``jitter`` (seconds) is given; the k-th duplicate of a
    timestamp (in input order) is then shifted by k * jitter.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"catalog file not found: {path}")
    frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    frame.columns = [c.strip().lower() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}; expected header time,lon,lat[,magnitude,depth_km]")

    origin = pd.Timestamp(time_origin).to_pydatetime()
    times: List[float] = []
    lons: List[float] = []
    lats: List[float] = []
    lines: List[int] = []
    dropped = {"magnitude": 0, "depth": 0, "region": 0}
    stamped = False

    for offset, record in enumerate(frame.to_dict(orient="records")):
        line = offset + 2
        row = parse_row(record, line)
        if min_magnitude is not None and row.magnitude is not None and row.magnitude < min_magnitude:
            dropped["magnitude"] += 1
            continue
        if max_depth is not None and row.depth_km is not None and row.depth_km > max_depth:
            dropped["depth"] += 1
            continue
        if not region.contains(row.lon, row.lat):
            dropped["region"] += 1
            continue
        stamped = stamped or isinstance(row.time, datetime)
        t = days_since(origin, row.time)
        if t < 0:
            raise DataError(f"line {line}: event at t={t:.6f} days precedes the time origin {origin.isoformat()}")
        times.append(t)
        lons.append(row.lon)
        lats.append(row.lat)
        lines.append(line)

    t_arr = np.asarray(times, dtype=float)
    line_arr = np.asarray(lines, dtype=int)
    if jitter:
        t_arr = _jitter_ties(t_arr, jitter)
    order = np.argsort(t_arr, kind="stable")
    t_arr, line_arr = t_arr[order], line_arr[order]
    ties = np.flatnonzero(np.diff(t_arr) <= 0)
    if ties.size:
        a, b = line_arr[ties[0]], line_arr[ties[0] + 1]
        hint = "; enlarge --jitter" if jitter else "; pass --jitter to break ties"
        raise DataError(f"lines {a} and {b} have the same time t={t_arr[ties[0]]:.12g}{hint}")

    if dropped["region"]:
        logger.warning(f"Dropped {dropped['region']} rows outside the region")
    logger.info(
        f"Ingested {t_arr.size} events from {path} "
        f"(dropped: {dropped['magnitude']} below magnitude, {dropped['depth']} too deep, "
        f"{dropped['region']} outside region)"
    )
    return Catalog.from_arrays(
        region,
        t_arr,
        np.asarray(lons)[order] if lons else [],
        np.asarray(lats)[order] if lats else [],
        origin=origin if stamped else None,
    )


def _jitter_ties(times: np.ndarray, jitter_seconds: float) -> np.ndarray:
    shift = jitter_seconds / SECONDS_PER_DAY
    out = times.copy()
    seen: Dict[float, int] = {}
    for pos, t in enumerate(times):
        k = seen.get(t, 0)
        out[pos] = t + k * shift
        seen[t] = k + 1
    return out


# ---- writers ----

def _ensure_parent(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_catalog(catalog: Catalog, path: PathLike) -> Path:
    """Float-day catalog CSV that ``ingest`` reads back to the identical catalog."""
    path = _ensure_parent(Path(path))
    frame = pd.DataFrame({"time": catalog.times, "lon": catalog.lons, "lat": catalog.lats})
    frame.to_csv(path, index=False, float_format=CATALOG_FLOAT_FORMAT)
    return path


def labels_frame(path: LabeledPath) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "index": np.arange(1, len(path) + 1),
            "label": [label.kind.value for label in path.labels],
            "kills": [int(label.kills) for label in path.labels],
            "D": list(path.D),
            "E": list(path.E),
        },
        columns=list(LABEL_COLUMNS),
    )


def write_labels(path: LabeledPath, out: PathLike) -> Path:
    out = _ensure_parent(Path(out))
    labels_frame(path).to_csv(out, index=False)
    return out


def read_labels(source: PathLike) -> LabeledPath:
    frame = pd.read_csv(source)
    missing = [c for c in LABEL_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{source}: missing label columns {missing}")
    labels = []
    for offset, (kind, kills) in enumerate(zip(frame["label"], frame["kills"])):
        try:
            labels.append(HiddenLabel(kind=LabelKind(str(kind).strip()), kills=bool(int(kills))))
        except (ValueError, ValidationError) as exc:
            raise DataError(f"{source} line {offset + 2}: bad label {kind!r}: {exc}") from None
    path = LabeledPath.from_labels(labels)
    if tuple(frame["D"]) != path.D or tuple(frame["E"]) != path.E:
        raise DataError(f"{source}: D/E columns do not match the labels")
    return path


def write_fit_result(result: FitResult, out: PathLike) -> Path:
    """KEY=VALUE report; the parameter keys double as a model config file."""
    out = _ensure_parent(Path(out))
    params = result.params_hat.as_dict()
    rows = [f"{key.upper()}={FLOAT_FORMAT % value}" for key, value in params.items()]
    rows += [
        f"LOGLIK={FLOAT_FORMAT % result.loglik}",
        f"CONVERGED={str(result.converged).lower()}",
        f"ITERATIONS={result.iterations}",
        f"RESTART={result.restart}",
    ]
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return out


def posterior_frame(report: PosteriorReport) -> pd.DataFrame:
    frame = pd.DataFrame(
        {
            "index": np.arange(1, report.n + 1),
            "t": report.times,
            "lon": report.lons,
            "lat": report.lats,
            "p_member": report.membership,
        }
    )
    if report.membership_online.size == report.n:
        frame["p_member_online"] = report.membership_online
    return frame


def write_posterior(report: PosteriorReport, out: PathLike) -> Path:
    out = _ensure_parent(Path(out))
    posterior_frame(report).to_csv(out, index=False, float_format=FLOAT_FORMAT)
    return out


def write_active(report: PosteriorReport, out: PathLike) -> Path:
    """Cluster-active probability just after each event time."""
    out = _ensure_parent(Path(out))
    frame = pd.DataFrame({"index": np.arange(1, report.n + 1), "t": report.times, "p_active": report.active})
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT)
    return out
