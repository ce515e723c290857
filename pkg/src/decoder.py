"""
Most likely hidden cluster sequence (max-product counterpart of the forward algorithm)
and exact log-weights of individual labelled histories.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DataError, StateError
from .intensity import ClusterIntensity
from .models import (
    KILL_CODE,
    MOTHER_CODE,
    NOISE_CODE,
    SURVIVE_CODE,
    Catalog,
    LabeledPath,
    code_from_label,
    path_from_codes,
)
from .trellis import StepFactors, catalog_step_factors, log_event_factor, log_interval_survival, step_dt

logger = logging.getLogger(__name__)


@dataclass
class ViterbiBack:
    """Backpointers for one step: the event label that wins each cell, and the predecessor of a new mother."""

    idle_labels: np.ndarray    # cell (0, i): NOISE from (0, i) or KILL from (1, i)
    active_labels: np.ndarray  # cell (1, i): NOISE or SURVIVE, both from (1, i)
    mother_from: int           # cell (1, j): argmax_k l*_{j-1}(0, k)


@dataclass
class ViterbiMatrix:
    j: int
    l0: np.ndarray
    l1: np.ndarray
    back: List[ViterbiBack] = field(default_factory=list)
    log_c: List[float] = field(default_factory=list)


def viterbi_cells(l0: np.ndarray, l1: np.ndarray, f: StepFactors) -> Tuple[np.ndarray, np.ndarray, ViterbiBack]:
    """Max-product transition using the same branch factors as the forward step. Ties prefer noise."""
    j = l0.shape[0]
    new0 = np.zeros(j + 1)
    new1 = np.zeros(j + 1)
    idle_labels = np.full(j, NOISE_CODE, dtype=np.int8)
    active_labels = np.full(j, NOISE_CODE, dtype=np.int8)

    new0[0] = f.noise_idle * l0[0]
    stay = f.noise_idle * l0[1:j]
    killed = f.kill * l1[1:j]
    kill_wins = killed > stay
    new0[1:j] = np.where(kill_wins, killed, stay)
    idle_labels[1:j][kill_wins] = KILL_CODE

    noise = f.noise_active * l1[1:j]
    survived = f.survive * l1[1:j]
    survive_wins = survived > noise
    new1[1:j] = np.where(survive_wins, survived, noise)
    active_labels[1:j][survive_wins] = SURVIVE_CODE

    k = int(np.argmax(l0))
    new1[j] = f.mother * l0[k]
    return new0, new1, ViterbiBack(idle_labels, active_labels, k)


def _backtrack(back: List[ViterbiBack], d: int, i: int) -> List[int]:
    codes: List[int] = []
    for j in range(len(back), 0, -1):
        step = back[j - 1]
        if d == 1 and i == j:
            codes.append(MOTHER_CODE)
            d, i = 0, step.mother_from
        elif d == 1:
            codes.append(int(step.active_labels[i]))
        else:
            code = int(step.idle_labels[i])
            codes.append(code)
            if code == KILL_CODE:
                d = 1
    codes.reverse()
    return codes


def viterbi_decode(
    catalog: Catalog,
    model: ClusterIntensity,
    normalize: bool = True,
) -> Tuple[LabeledPath, float]:
    """Most likely labelling and its log-weight (same dropped constants as the likelihood)."""
    if catalog.n == 0:
        raise DataError("cannot decode an empty catalog")
    rates = model.offspring_total_rates(catalog)
    vm = ViterbiMatrix(j=0, l0=np.ones(1), l1=np.zeros(1))
    for pos in range(catalog.n):
        f = catalog_step_factors(model, catalog, pos, rates, vm.l0, vm.l1)
        new0, new1, back = viterbi_cells(vm.l0, vm.l1, f)
        scale = float(max(new0.max(), new1.max())) if normalize else 1.0
        if not scale > 0 or not np.isfinite(scale):
            raise StateError(f"Viterbi mass degenerate at event {pos + 1} (scale={scale})")
        vm.l0, vm.l1 = new0 / scale, new1 / scale
        vm.back.append(back)
        vm.log_c.append(float(np.log(scale)) - f.log_shift)
        vm.j = pos + 1

    cells = np.concatenate([vm.l0, vm.l1])
    best = int(np.argmax(cells))
    d, i = divmod(best, vm.l0.shape[0])
    with np.errstate(divide="ignore"):
        weight = float(np.sum(vm.log_c) + np.log(cells[best])) - model.noise_total * catalog.last_time
    codes = _backtrack(vm.back, d, i)
    logger.debug(f"Viterbi end state (d={d}, i={i}), log-weight {weight:.6f}")
    return path_from_codes(codes), weight


def path_weight(catalog: Catalog, path: LabeledPath, model: ClusterIntensity) -> float:
    """Exact log-weight of one labelled history: event factors times interval survivals."""
    if len(path) != catalog.n:
        raise DataError(f"path has {len(path)} labels but the catalog has {catalog.n} events")
    rates = model.offspring_total_rates(catalog)
    eps_total = model.initiation_total
    active = np.zeros(1, dtype=bool)
    mother = np.zeros(1, dtype=int)
    logw = np.zeros(1)
    for pos, label in enumerate(path.labels):
        code = np.array([code_from_label(label)], dtype=np.int8)
        if code[0] == MOTHER_CODE and active[0]:
            raise StateError(f"event {pos + 1}: mother while a cluster is active")
        if code[0] in (SURVIVE_CODE, KILL_CODE) and not active[0]:
            raise StateError(f"event {pos + 1}: offspring with no active cluster")
        logw = logw + log_interval_survival(active, mother, rates[:pos], eps_total, step_dt(catalog, pos))
        lam_row = model.kernel_row(catalog, pos)
        logw = logw + log_event_factor(code, mother, lam_row, model)
        if code[0] == MOTHER_CODE:
            active, mother = np.ones(1, dtype=bool), np.full(1, pos + 1)
        elif code[0] == KILL_CODE:
            active = np.zeros(1, dtype=bool)
    return float(logw[0] - model.noise_total * catalog.last_time)


def confusion_counts(truth: LabeledPath, decoded: LabeledPath) -> Dict[str, int]:
    """Agreement counts between two labellings on the cluster/noise split."""
    if len(truth) != len(decoded):
        raise DataError("paths differ in length")
    counts = {"cluster_cluster": 0, "cluster_noise": 0, "noise_cluster": 0, "noise_noise": 0}
    for a, b in zip(truth.labels, decoded.labels):
        key = f"{'cluster' if a.in_cluster else 'noise'}_{'cluster' if b.in_cluster else 'noise'}"
        counts[key] += 1
    return counts
