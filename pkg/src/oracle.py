"""
Brute-force exact inference for small catalogs.

Every valid labelled history is generated by sequential branching (noise always; a new
mother only while no cluster is active; a surviving or killing offspring only while one
is). A history corresponds one-to-one to the pair (cluster/noise indicators, kill
switches): cluster events after a mother are offspring and carry a kill switch, the
first cluster event with no active cluster is a mother. Weights use the same factor
definitions as the forward algorithm, and all sums are taken with log-sum-exp.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np
from scipy.special import logsumexp

from .cluster_filter import smoothed_report
from .constants import ORACLE_MAX_EVENTS
from .decoder import viterbi_decode
from .errors import OracleLimitError
from .intensity import ClusterIntensity
from .likelihood import log_likelihood
from .models import (
    KILL_CODE,
    MOTHER_CODE,
    NOISE_CODE,
    SURVIVE_CODE,
    Catalog,
    LabeledPath,
    path_from_codes,
)
from .trellis import log_event_factor, log_interval_survival, step_dt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedPath:
    codes: Tuple[int, ...]
    log_weight: float

    @cached_property
    def path(self) -> LabeledPath:
        return path_from_codes(self.codes)


@dataclass(frozen=True)
class PathTable:
    """All histories at once: label codes (P, n), post-arrival D (P, n) and log-weights (P,)."""

    codes: np.ndarray
    active: np.ndarray
    log_weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.log_weights.shape[0])

    def paths(self) -> List[WeightedPath]:
        return [WeightedPath(tuple(int(c) for c in row), float(w)) for row, w in zip(self.codes, self.log_weights)]


@dataclass(frozen=True)
class OraclePosteriors:
    membership: np.ndarray
    active: np.ndarray
    best: WeightedPath
    loglik: float


def _guard(catalog: Catalog) -> None:
    if catalog.n > ORACLE_MAX_EVENTS:
        raise OracleLimitError(f"enumeration is limited to {ORACLE_MAX_EVENTS} events; catalog has {catalog.n}")


def enumerate_table(catalog: Catalog, model: ClusterIntensity) -> PathTable:
    _guard(catalog)
    n = catalog.n
    rates = model.offspring_total_rates(catalog)
    eps_total = model.initiation_total
    allow_mother = model.initiation_density > 0
    allow_survive = model.params.q > 0

    codes = np.zeros((1, 0), dtype=np.int8)
    d_hist = np.zeros((1, 0), dtype=bool)
    active = np.zeros(1, dtype=bool)
    mother = np.zeros(1, dtype=int)
    logw = np.zeros(1)

    for pos in range(n):
        logw = logw + log_interval_survival(active, mother, rates[:pos], eps_total, step_dt(catalog, pos))
        lam_row = model.kernel_row(catalog, pos)

        parents, branch = [np.arange(active.size)], [np.full(active.size, NOISE_CODE, dtype=np.int8)]
        idle = np.flatnonzero(~active)
        busy = np.flatnonzero(active)
        if allow_mother and idle.size:
            parents.append(idle)
            branch.append(np.full(idle.size, MOTHER_CODE, dtype=np.int8))
        if busy.size:
            if allow_survive:
                parents.append(busy)
                branch.append(np.full(busy.size, SURVIVE_CODE, dtype=np.int8))
            parents.append(busy)
            branch.append(np.full(busy.size, KILL_CODE, dtype=np.int8))
        parent = np.concatenate(parents)
        code = np.concatenate(branch)

        mother = mother[parent]
        logw = logw[parent] + log_event_factor(code, mother, lam_row, model)
        active = active[parent]
        active = np.where(code == MOTHER_CODE, True, np.where(code == KILL_CODE, False, active))
        mother = np.where(code == MOTHER_CODE, pos + 1, mother)
        codes = np.concatenate([codes[parent], code[:, None]], axis=1)
        d_hist = np.concatenate([d_hist[parent], active[:, None]], axis=1)

    logw = logw - model.noise_total * catalog.last_time
    logger.debug(f"Enumerated {logw.size} histories for {n} events")
    return PathTable(codes=codes, active=d_hist, log_weights=logw)


def enumerate_paths(catalog: Catalog, model: ClusterIntensity) -> List[WeightedPath]:
    """Every valid history with its log-weight."""
    return enumerate_table(catalog, model).paths()


def oracle_loglik(catalog: Catalog, model: ClusterIntensity) -> float:
    return float(logsumexp(enumerate_table(catalog, model).log_weights))


def posteriors_from_table(table: PathTable) -> OraclePosteriors:
    total = float(logsumexp(table.log_weights))
    weights = np.exp(table.log_weights - total)
    membership = weights @ (table.codes != NOISE_CODE)
    active = weights @ table.active
    best = int(np.argmax(table.log_weights))
    best_path = WeightedPath(tuple(int(c) for c in table.codes[best]), float(table.log_weights[best]))
    return OraclePosteriors(membership=membership, active=active, best=best_path, loglik=total)


def oracle_posteriors(catalog: Catalog, model: ClusterIntensity) -> OraclePosteriors:
    """Membership and post-arrival activity probabilities at the last event, plus the best history."""
    return posteriors_from_table(enumerate_table(catalog, model))


@dataclass(frozen=True)
class OracleCheckResult:
    """Largest disagreements between the recursions and enumeration on one catalog."""

    n: int
    paths: int
    loglik_rel: float
    membership_abs: float
    active_abs: float
    viterbi_abs: float
    viterbi_path_matches: bool

    @property
    def max_abs(self) -> float:
        return max(self.membership_abs, self.active_abs, self.viterbi_abs)

    def passed(self, prob_tol: float = 1e-8, loglik_tol: float = 1e-9, weight_tol: float = 1e-10) -> bool:
        return (
            self.loglik_rel < loglik_tol
            and self.membership_abs < prob_tol
            and self.active_abs < prob_tol
            and self.viterbi_abs < weight_tol
        )

    def lines(self) -> List[str]:
        return [
            f"events: {self.n}",
            f"paths: {self.paths}",
            f"loglik relative |diff|: {self.loglik_rel:.3e}",
            f"membership max |diff|: {self.membership_abs:.3e}",
            f"active max |diff|: {self.active_abs:.3e}",
            f"viterbi weight |diff|: {self.viterbi_abs:.3e}",
            f"viterbi path matches: {self.viterbi_path_matches}",
            f"max |diff|: {self.max_abs:.3e}",
        ]


def oracle_check(catalog: Catalog, model: ClusterIntensity) -> OracleCheckResult:
    """Run the filter, the forward algorithm and the decoder against enumeration."""
    table = enumerate_table(catalog, model)
    exact = posteriors_from_table(table)
    report = smoothed_report(catalog, model)
    loglik = log_likelihood(catalog, model)
    path, weight = viterbi_decode(catalog, model)

    result = OracleCheckResult(
        n=catalog.n,
        paths=table.size,
        loglik_rel=abs(loglik - exact.loglik) / max(abs(exact.loglik), 1e-300),
        membership_abs=float(np.max(np.abs(report.membership - exact.membership))),
        active_abs=float(np.max(np.abs(report.active - exact.active))),
        viterbi_abs=abs(weight - exact.best.log_weight),
        viterbi_path_matches=path == exact.best.path,
    )
    logger.info(f"Oracle check on {catalog.n} events: max |diff| {result.max_abs:.3e}")
    return result
