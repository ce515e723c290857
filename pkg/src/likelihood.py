"""
Forward algorithm for the observed-data log-likelihood.

l_j(d, i) is the (normalised) mass of histories with D = d after event j and latest
mother i (i = 0: no mother yet). Every step is rescaled and the scales are accumulated
in log space, so catalogs of any length stay representable. Cost is O(n^2) time and
O(n) memory: kernel values are computed one row at a time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DataError, StateError
from .intensity import ClusterIntensity
from .models import Catalog
from .trellis import StepFactors, catalog_step_factors

logger = logging.getLogger(__name__)

ScaleRule = Callable[[np.ndarray, np.ndarray], float]


def _sum_scale(l0: np.ndarray, l1: np.ndarray) -> float:
    return float(l0.sum() + l1.sum())


@dataclass(frozen=True)
class ForwardMatrix:
    """Forward table after step ``j``: ``l0[i] = l_j(0, i)``, ``l1[i] = l_j(1, i)``, i = 0..j."""

    j: int
    l0: np.ndarray
    l1: np.ndarray
    log_c: List[float] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(self.l0.sum() + self.l1.sum())

    @property
    def log_scale(self) -> float:
        return float(np.sum(self.log_c))


def empty_forward() -> ForwardMatrix:
    """Step 0: no events, no cluster, all mass on (0, 0)."""
    return ForwardMatrix(j=0, l0=np.ones(1), l1=np.zeros(1), log_c=[])


def advance_cells(l0: np.ndarray, l1: np.ndarray, f: StepFactors):
    """One unnormalised forward transition from step j-1 (length j) to step j (length j+1)."""
    j = l0.shape[0]
    new0 = np.zeros(j + 1)
    new1 = np.zeros(j + 1)
    new0[0] = f.noise_idle * l0[0]
    new0[1:j] = f.noise_idle * l0[1:j] + f.kill * l1[1:j]
    new1[1:j] = (f.noise_active + f.survive) * l1[1:j]
    new1[j] = f.mother * l0.sum()
    return new0, new1


def forward_step(
    fm: ForwardMatrix,
    catalog: Catalog,
    model: ClusterIntensity,
    rates: Optional[np.ndarray] = None,
    scale_rule: Optional[ScaleRule] = None,
) -> ForwardMatrix:
    """Absorb event ``fm.j + 1`` of the catalog."""
    pos = fm.j
    if pos >= catalog.n:
        raise StateError(f"forward matrix already at step {fm.j}; catalog has {catalog.n} events")
    f = catalog_step_factors(model, catalog, pos, rates, fm.l0, fm.l1)
    new0, new1 = advance_cells(fm.l0, fm.l1, f)
    scale = (scale_rule or _sum_scale)(new0, new1)
    if not scale > 0 or not np.isfinite(scale):
        raise StateError(f"forward mass degenerate at event {pos + 1} (scale={scale})")
    return ForwardMatrix(j=pos + 1, l0=new0 / scale, l1=new1 / scale, log_c=[*fm.log_c, float(np.log(scale)) - f.log_shift])


def forward_init(catalog: Catalog, model: ClusterIntensity) -> ForwardMatrix:
    """l_1(0,0) = gamma e^{-eps tau_1}, l_1(1,1) = eps e^{-eps tau_1}, normalised with c_1 recorded."""
    if catalog.n == 0:
        raise DataError("cannot initialise the forward table on an empty catalog")
    return forward_step(empty_forward(), catalog, model)


def terminal_log_survival(fm: ForwardMatrix, rates: np.ndarray, eps_total: float, dt: float) -> float:
    """log sum_{d,i} l_n(d,i) exp(-[d a(y_i) + (1-d) eps] dt) for the quiet tail after the last event."""
    exponents = np.append(rates[: fm.j] * dt, eps_total * dt)
    masses = np.append(fm.l1[1:], fm.l0.sum())
    return float(logsumexp(-exponents, b=masses))


def forward_pass(
    catalog: Catalog,
    model: ClusterIntensity,
    horizon: Optional[float] = None,
    scale_rule: Optional[ScaleRule] = None,
):
    """Run the full recursion; returns ``(ForwardMatrix, log_likelihood)``."""
    if catalog.n == 0:
        if horizon is None:
            raise DataError("log-likelihood of an empty catalog needs a horizon")
        return empty_forward(), -(model.noise_total + model.initiation_total) * horizon

    rates = model.offspring_total_rates(catalog)
    rule = scale_rule or _sum_scale
    l0, l1 = np.ones(1), np.zeros(1)
    log_c: List[float] = []
    for pos in range(catalog.n):
        f = catalog_step_factors(model, catalog, pos, rates, l0, l1)
        l0, l1 = advance_cells(l0, l1, f)
        scale = rule(l0, l1)
        if not scale > 0 or not np.isfinite(scale):
            raise StateError(f"forward mass degenerate at event {pos + 1} (scale={scale})")
        l0, l1 = l0 / scale, l1 / scale
        log_c.append(float(np.log(scale)) - f.log_shift)
    fm = ForwardMatrix(j=catalog.n, l0=l0, l1=l1, log_c=log_c)

    loglik = fm.log_scale + float(np.log(fm.total))
    end = catalog.last_time
    if horizon is not None:
        if horizon < end:
            raise DataError(f"horizon {horizon} precedes the last event at {end}")
        normalised = ForwardMatrix(j=fm.j, l0=fm.l0 / fm.total, l1=fm.l1 / fm.total)
        loglik += terminal_log_survival(normalised, rates, model.initiation_total, horizon - end)
        end = horizon
    return fm, loglik - model.noise_total * end


def log_likelihood(catalog: Catalog, model: ClusterIntensity, horizon: Optional[float] = None) -> float:
    """sum_j log c_j - gamma_total * tau_n (plus the quiet-tail correction when a horizon is given)."""
    _, loglik = forward_pass(catalog, model, horizon)
    return loglik


def forward_posterior_active(fm: ForwardMatrix) -> np.ndarray:
    """Posterior P(mother i active | data up to tau_j) for i = 1..j from a forward table."""
    return fm.l1[1:] / fm.total
