"""
Exact posterior probabilities for the single-active-cluster model.

The base filter tracks pi_j = P(event j is the mother of the active cluster | data).
Between events the vector decays in closed form; at an event it takes a rational
update. A tracked functional f keeps pi(theta_0(y_j) alpha f) for every j and the scalar
pi(f). Only functionals that later events cannot change ("frozen" ones: membership of
an earlier event, cluster activity at an earlier time, the constant one) are supported.

All functional arithmetic broadcasts over a leading batch axis: a single target is the
batch-of-one case, and ``smoothed_report`` advances many targets together.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .constants import FILTER_TARGET_BATCH
from .errors import DataError, StateError
from .intensity import ClusterIntensity
from .models import Catalog, Event, PosteriorReport

logger = logging.getLogger(__name__)


# ---- base filter ----

@dataclass(frozen=True)
class BaseFilterState:
    """
    pi(theta_0(y_j) alpha, t) for the k events seen so far, with their marks and
    offspring totals a(y_j).
    """

    t: float
    pis: np.ndarray
    lons: np.ndarray
    lats: np.ndarray
    rates: np.ndarray
    last_event_t: float = -np.inf

    @property
    def k(self) -> int:
        return int(self.pis.shape[0])

    @property
    def active_probability(self) -> float:
        return float(self.pis.sum())


@dataclass(frozen=True)
class JumpTerms:
    """Quantities shared by every update at one arrival; all use left-limit values."""

    lam: np.ndarray        # kernel density at the new event from each tracked event
    d_plus: float          # normaliser
    new_mother: float      # eps * (1 - sum pi^-)
    gamma: float
    epsilon: float
    q: float


def init_filter() -> BaseFilterState:
    """No events and no active cluster at time 0."""
    empty = np.zeros(0)
    return BaseFilterState(t=0.0, pis=empty, lons=empty, lats=empty, rates=empty)


def _decay(pis: np.ndarray, rates: np.ndarray, eps_total: float, dt: float) -> Tuple[np.ndarray, float]:
    """
    Log-weights log(pi_j) - c_j dt and the log of the normaliser 1/b, with c_j = a(y_j) - eps.
    Kept in log space so long quiet gaps never overflow.
    """
    c = rates - eps_total
    with np.errstate(divide="ignore"):
        log_w = np.log(pis) - c * dt
        log_idle = np.log(max(1.0 - float(pis.sum()), 0.0))
    log_norm = float(logsumexp(np.append(log_w, log_idle)))
    return log_w, log_norm


def propagate(state: BaseFilterState, to_t: float, model: ClusterIntensity) -> BaseFilterState:
    """Closed-form evolution to ``to_t`` with no arrival in between."""
    if to_t < state.t:
        raise StateError(f"cannot propagate backwards from t={state.t} to t={to_t}")
    if state.k == 0 or to_t == state.t:
        return BaseFilterState(to_t, state.pis, state.lons, state.lats, state.rates, state.last_event_t)
    log_w, log_norm = _decay(state.pis, state.rates, model.initiation_total, to_t - state.t)
    pis = np.exp(log_w - log_norm)
    return BaseFilterState(to_t, pis, state.lons, state.lats, state.rates, state.last_event_t)


def jump_terms(base_minus: BaseFilterState, event: Event, model: ClusterIntensity) -> JumpTerms:
    lam = np.asarray(model.kernel_density(base_minus.lons, base_minus.lats, event.lon, event.lat), dtype=float)
    eps, gam = model.initiation_density, model.noise_density
    d_plus = float(np.dot(lam - eps, base_minus.pis)) + eps + gam
    new_mother = eps * max(1.0 - float(base_minus.pis.sum()), 0.0)
    return JumpTerms(lam=lam, d_plus=d_plus, new_mother=new_mother, gamma=gam, epsilon=eps, q=model.params.q)


def _check_arrival(state: BaseFilterState, event: Event) -> None:
    if event.t <= state.last_event_t:
        raise StateError(f"event {event.index} at t={event.t} does not follow the previous event at t={state.last_event_t}")
    if event.t < state.t:
        raise StateError(f"event {event.index} at t={event.t} precedes the filter time {state.t}")
    if event.index != state.k + 1:
        raise StateError(f"expected event {state.k + 1}, got event {event.index}")


def jump_update(state: BaseFilterState, new_event: Event, model: ClusterIntensity) -> BaseFilterState:
    """Absorb an arrival. The state is first carried to the arrival's left limit if needed."""
    _check_arrival(state, new_event)
    minus = propagate(state, new_event.t, model)
    terms = jump_terms(minus, new_event, model)
    return _apply_jump(minus, new_event, terms, model)


def _apply_jump(minus: BaseFilterState, event: Event, terms: JumpTerms, model: ClusterIntensity) -> BaseFilterState:
    old = minus.pis * (terms.gamma + terms.q * terms.lam) / terms.d_plus
    pis = np.append(old, terms.new_mother / terms.d_plus)
    rate = float(model.offspring_total_rate(event.lon, event.lat))
    return BaseFilterState(
        t=event.t,
        pis=pis,
        lons=np.append(minus.lons, event.lon),
        lats=np.append(minus.lats, event.lat),
        rates=np.append(minus.rates, rate),
        last_event_t=event.t,
    )


def run_base_filter(catalog: Catalog, model: ClusterIntensity) -> List[BaseFilterState]:
    """Base state right after every event."""
    states = []
    state = init_filter()
    for event in catalog.events:
        state = jump_update(state, event, model)
        states.append(state)
    return states


# ---- tracked functionals ----

class TargetKind(str, Enum):
    MEMBERSHIP = "membership"
    ACTIVE_AT = "active_at"
    CONST_ONE = "const_one"


@dataclass(frozen=True)
class TargetFunctional:
    kind: TargetKind
    index: int = 0
    t0: float = 0.0

    @classmethod
    def membership(cls, index: int) -> "TargetFunctional":
        return cls(TargetKind.MEMBERSHIP, index=index)

    @classmethod
    def active_at(cls, t0: float) -> "TargetFunctional":
        return cls(TargetKind.ACTIVE_AT, t0=t0)

    @classmethod
    def const_one(cls) -> "TargetFunctional":
        return cls(TargetKind.CONST_ONE)

    def frozen_for(self, event: Event) -> bool:
        """True when adding ``event`` cannot change the functional's value."""
        if self.kind == TargetKind.MEMBERSHIP:
            return self.index < event.index
        if self.kind == TargetKind.ACTIVE_AT:
            return self.t0 <= event.t
        return True


@dataclass(frozen=True)
class FunctionalState:
    target: TargetFunctional
    t: float
    pif_js: np.ndarray
    pif: float


def membership_start(base_minus: BaseFilterState, terms: JumpTerms) -> Tuple[np.ndarray, float]:
    """Row for membership of the arriving event, built from left-limit base values."""
    js = np.append(terms.q * terms.lam * base_minus.pis, terms.new_mother) / terms.d_plus
    pif = (terms.new_mother + float(np.dot(terms.lam, base_minus.pis))) / terms.d_plus
    return js, pif


def track_functional(
    target: TargetFunctional,
    base: BaseFilterState,
    new_event: Optional[Event] = None,
    model: Optional[ClusterIntensity] = None,
) -> FunctionalState:
    """
    Start tracking ``target``. Membership(i) starts jointly with the jump at event i:
    pass the base at tau_i^- together with the event. ActiveAt(t0) starts from the
    base at t0. ConstOne starts anywhere.
    """
    if target.kind == TargetKind.MEMBERSHIP:
        if new_event is None or model is None:
            raise StateError("membership tracking starts at its own event; pass the event and the model")
        if new_event.index != target.index or base.k != target.index - 1:
            raise StateError(f"membership({target.index}) must start at event {target.index}")
        if base.t != new_event.t:
            raise StateError(f"base at t={base.t} is not at the left limit of event {new_event.index} (t={new_event.t})")
        js, pif = membership_start(base, jump_terms(base, new_event, model))
        return FunctionalState(target, new_event.t, js, pif)

    if target.kind == TargetKind.ACTIVE_AT:
        if base.t != target.t0:
            raise StateError(f"active_at({target.t0}) needs the base propagated to {target.t0}, not {base.t}")
        return FunctionalState(target, base.t, base.pis.copy(), base.active_probability)

    return FunctionalState(target, base.t, base.pis.copy(), 1.0)


def decay_functionals(
    pif_js: np.ndarray,
    pif: np.ndarray,
    log_w_shift: np.ndarray,
    log_norm: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Between-event evolution of functional arrays (shape (..., k) and (...)):
    pif_j <- pif_j e^{-c_j dt} b and pif <- (pif - sum pif_j + sum pif_j e^{-c_j dt}) b.
    ``log_w_shift`` is -c_j dt.
    """
    residual = np.maximum(pif - pif_js.sum(axis=-1), 0.0)
    with np.errstate(divide="ignore"):
        js = np.exp(np.log(pif_js) + log_w_shift - log_norm)
        idle = np.exp(np.log(residual) - log_norm)
    return js, np.clip(idle + js.sum(axis=-1), 0.0, 1.0)


def jump_functionals(
    pif_js: np.ndarray,
    pif: np.ndarray,
    terms: JumpTerms,
) -> Tuple[np.ndarray, np.ndarray]:
    """Arrival update of frozen functional arrays; left-limit inputs."""
    residual = np.maximum(pif - pif_js.sum(axis=-1), 0.0)
    old = (terms.gamma + terms.q * terms.lam) * pif_js / terms.d_plus
    new = terms.epsilon * residual / terms.d_plus
    js = np.concatenate([old, np.expand_dims(new, -1)], axis=-1)
    num = terms.gamma * pif + terms.epsilon * residual + pif_js @ terms.lam
    return js, np.clip(num / terms.d_plus, 0.0, 1.0)


def propagate_functional(
    fs: FunctionalState,
    base_at_start: BaseFilterState,
    to_t: float,
    model: ClusterIntensity,
) -> FunctionalState:
    if base_at_start.t != fs.t:
        raise StateError(f"base at t={base_at_start.t} does not match functional at t={fs.t}")
    if to_t < fs.t:
        raise StateError(f"cannot propagate backwards from t={fs.t} to t={to_t}")
    if fs.pif_js.shape[0] == 0 or to_t == fs.t:
        return FunctionalState(fs.target, to_t, fs.pif_js, fs.pif)
    dt = to_t - fs.t
    _, log_norm = _decay(base_at_start.pis, base_at_start.rates, model.initiation_total, dt)
    shift = -(base_at_start.rates - model.initiation_total) * dt
    js, pif = decay_functionals(fs.pif_js, np.float64(fs.pif), shift, log_norm)
    return FunctionalState(fs.target, to_t, js, float(pif))


def jump_update_functional(
    fs: FunctionalState,
    base_minus: BaseFilterState,
    new_event: Event,
    model: ClusterIntensity,
) -> FunctionalState:
    if not fs.target.frozen_for(new_event):
        raise StateError(f"{fs.target} is not frozen at event {new_event.index}; start it with track_functional")
    if not (fs.t == base_minus.t == new_event.t):
        raise StateError(f"functional (t={fs.t}) and base (t={base_minus.t}) must sit at the left limit of t={new_event.t}")
    if fs.pif_js.shape[0] != base_minus.k:
        raise StateError("functional and base track different numbers of events")
    terms = jump_terms(base_minus, new_event, model)
    js, pif = jump_functionals(fs.pif_js, np.float64(fs.pif), terms)
    return FunctionalState(fs.target, new_event.t, js, float(pif))


# ---- catalogue-level drivers ----

def filter_online(catalog: Catalog, model: ClusterIntensity) -> Iterator[Tuple[int, float, float, float]]:
    """Real-time use: per event, (index, t, P(in a cluster | data to t), P(cluster active | data to t))."""
    state = init_filter()
    for event in catalog.events:
        _check_arrival(state, event)
        minus = propagate(state, event.t, model)
        terms = jump_terms(minus, event, model)
        _, p_member = membership_start(minus, terms)
        state = _apply_jump(minus, event, terms, model)
        yield event.index, event.t, p_member, state.active_probability


def _run_target_batch(
    catalog: Catalog,
    model: ClusterIntensity,
    kind: TargetKind,
    positions: np.ndarray,
    final_time: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance one batch of targets that start at the given 0-based event positions."""
    b = positions.shape[0]
    first = int(positions.min())
    eps_total = model.initiation_total
    pif_js = np.zeros((b, 0))
    pif = np.zeros(b)
    started = np.zeros(b, dtype=bool)
    at_start = np.zeros(b)

    state = init_filter()
    for pos, event in enumerate(catalog.events):
        if pos > first and state.k:
            dt = event.t - state.t
            _, log_norm = _decay(state.pis, state.rates, eps_total, dt)
            pif_js, pif = decay_functionals(pif_js, pif, -(state.rates - eps_total) * dt, log_norm)
        minus = propagate(state, event.t, model)
        terms = jump_terms(minus, event, model)
        if pos == first:
            pif_js = np.zeros((b, minus.k))
        if pos >= first:
            pif_js, pif = jump_functionals(pif_js, pif, terms)
        state = _apply_jump(minus, event, terms, model)

        rows = np.flatnonzero(positions == pos)
        if rows.size:
            if kind == TargetKind.MEMBERSHIP:
                js, p0 = membership_start(minus, terms)
            else:
                js, p0 = state.pis, state.active_probability
            pif_js[rows] = js
            pif[rows] = p0
            at_start[rows] = p0
            started[rows] = True

    if final_time > state.t and state.k:
        dt = final_time - state.t
        _, log_norm = _decay(state.pis, state.rates, eps_total, dt)
        pif_js, pif = decay_functionals(pif_js, pif, -(state.rates - eps_total) * dt, log_norm)
    return pif, at_start


def smoothed_report(
    catalog: Catalog,
    model: ClusterIntensity,
    horizon: Optional[float] = None,
    batch_size: int = FILTER_TARGET_BATCH,
) -> PosteriorReport:
    """
    pi(theta(y_i), T) and pi(D_{tau_i}, T) for every event, with T the horizon
    (default: the last event time).
    """
    n = catalog.n
    if n == 0:
        raise DataError("cannot build a posterior report for an empty catalog")
    final_time = catalog.last_time if horizon is None else float(horizon)
    if final_time < catalog.last_time:
        raise DataError(f"horizon {final_time} precedes the last event at {catalog.last_time}")

    membership = np.zeros(n)
    active = np.zeros(n)
    online = np.zeros(n)
    for kind, out, start_out in (
        (TargetKind.MEMBERSHIP, membership, online),
        (TargetKind.ACTIVE_AT, active, None),
    ):
        for lo in range(0, n, batch_size):
            positions = np.arange(lo, min(lo + batch_size, n))
            final, at_start = _run_target_batch(catalog, model, kind, positions, final_time)
            out[positions] = final
            if start_out is not None:
                start_out[positions] = at_start
        logger.debug(f"Finished {kind.value} targets for {n} events")

    return PosteriorReport(
        times=catalog.times.copy(),
        lons=catalog.lons.copy(),
        lats=catalog.lats.copy(),
        membership=membership,
        active=active,
        membership_online=online,
        final_time=final_time,
    )
