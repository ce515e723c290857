"""
Per-branch transition factors over the (D, latest mother) trellis.

The forward algorithm, the Viterbi decoder, exact path weights and the enumeration
oracle all read their factors from here, so sum-vs-max is the only difference between
them. Dropped constants: the per-event 1/2 and the reference-measure normaliser are
never reconstructed; the noise survival is applied once, as -gamma_total * t.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import StateError
from .intensity import ClusterIntensity
from .models import KILL_CODE, MOTHER_CODE, NOISE_CODE, SURVIVE_CODE, Catalog


@dataclass(frozen=True)
class StepFactors:
    """
    Factors for moving from step j-1 to step j. Array entries run over mothers
    i = 1..j-1 (position i-1).
    """

    noise_idle: float        # gamma_j * exp(-eps_total * dt): noise while no cluster is active
    mother: float            # eps_j * exp(-eps_total * dt): a new mother
    noise_active: np.ndarray  # gamma_j * S_i: noise while mother i is active
    survive: np.ndarray      # q * lambda_{j,i} * S_i: offspring of i, cluster continues
    kill: np.ndarray         # p * lambda_{j,i} * S_i: offspring of i, cluster dies
    log_shift: float = 0.0   # survivals are stored multiplied by exp(log_shift)


def step_dt(catalog: Catalog, pos: int) -> float:
    """Gap before the event at 0-based position ``pos``; the first gap starts at time 0."""
    t = catalog.times[pos]
    prev = catalog.times[pos - 1] if pos > 0 else 0.0
    dt = t - prev
    if not dt > 0 and pos > 0:
        raise StateError(f"event {pos + 1} at t={t} does not follow t={prev}")
    return float(dt)


def survival_shift(l0: np.ndarray, l1: np.ndarray, mother_rates: np.ndarray, eps_total: float, dt: float) -> float:
    """
    Smallest survival exponent over the states that still carry mass. Factors built with
    this shift are at most 1 on those states and exactly 1 on the slowest one, so a long
    quiet gap cannot underflow a whole step to zero.
    """
    exponents = mother_rates[l1[1:] > 0] * dt
    if l0.sum() > 0:
        exponents = np.append(exponents, eps_total * dt)
    return float(exponents.min()) if exponents.size else 0.0


def step_factors(
    model: ClusterIntensity,
    lam_row: np.ndarray,
    mother_rates: np.ndarray,
    dt: float,
    shift: float = 0.0,
) -> StepFactors:
    params = model.params
    # capped at 1: states with no mass must not overflow to inf * 0
    idle_survival = np.exp(min(shift - model.initiation_total * dt, 0.0))
    active_survival = np.exp(np.minimum(shift - mother_rates * dt, 0.0))
    return StepFactors(
        noise_idle=model.noise_density * idle_survival,
        mother=model.initiation_density * idle_survival,
        noise_active=model.noise_density * active_survival,
        survive=params.q * lam_row * active_survival,
        kill=params.p * lam_row * active_survival,
        log_shift=shift,
    )


def catalog_step_factors(
    model: ClusterIntensity,
    catalog: Catalog,
    pos: int,
    rates: Optional[np.ndarray] = None,
    l0: Optional[np.ndarray] = None,
    l1: Optional[np.ndarray] = None,
) -> StepFactors:
    """
    Factors for the event at 0-based position ``pos`` given offspring totals ``rates``.
    With the previous table ``(l0, l1)`` the survivals are shifted by ``survival_shift``.
    """
    if rates is None:
        rates = model.offspring_total_rates(catalog)
    dt = step_dt(catalog, pos)
    shift = 0.0
    if l0 is not None and l1 is not None:
        shift = survival_shift(l0, l1, rates[:pos], model.initiation_total, dt)
    return step_factors(model, model.kernel_row(catalog, pos), rates[:pos], dt, shift)


# ---- log-space terms for single labelled histories ----

def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def log_interval_survival(
    active: np.ndarray,
    mother_index: np.ndarray,
    rates: np.ndarray,
    eps_total: float,
    dt: float,
) -> np.ndarray:
    """Cluster-process survival over a gap: -eps*dt while idle, -a(y_E)*dt while active."""
    if rates.size == 0:
        return np.full(active.shape, -eps_total * dt)
    mother_rate = rates[np.maximum(mother_index - 1, 0)]
    return -np.where(active, mother_rate, eps_total) * dt


def log_event_factor(
    codes: np.ndarray,
    mother_index: np.ndarray,
    lam_row: np.ndarray,
    model: ClusterIntensity,
) -> np.ndarray:
    """Log of the per-event factor for each label code (offspring use the current mother)."""
    params = model.params
    out = np.empty(codes.shape, dtype=float)
    out[codes == NOISE_CODE] = _safe_log(model.noise_density)
    out[codes == MOTHER_CODE] = _safe_log(model.initiation_density)
    offspring = (codes == SURVIVE_CODE) | (codes == KILL_CODE)
    if np.any(offspring):
        lam = lam_row[mother_index[offspring] - 1]
        branch = np.where(codes[offspring] == KILL_CODE, params.p, params.q)
        out[offspring] = _safe_log(lam) + _safe_log(branch)
    return out
