"""
Maximum likelihood fitting of (gamma, lambda, epsilon, d, p).

The search runs in unconstrained coordinates (log of the four positive parameters,
logit of p) with Nelder-Mead, from the initial guess and from perturbed restarts.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from scipy.special import expit, logit

from .constants import EPSILON_FLOOR
from .errors import DataError, NumericalError
from .factory import create_intensity
from .likelihood import log_likelihood
from .models import Catalog, FitConfig, FitResult, ModelParams, NuConvention, Region
from .optimizer import nelder_mead

logger = logging.getLogger(__name__)


class ParamTransform:
    """ModelParams <-> R^5 as (log gamma, log lambda, log epsilon, log d, logit p)."""

    names = ("gamma", "lambda", "epsilon", "d", "p")

    @staticmethod
    def to_vector(params: ModelParams) -> np.ndarray:
        eps = max(params.epsilon, EPSILON_FLOOR)
        p = min(max(params.p, EPSILON_FLOOR), 1.0 - EPSILON_FLOOR)
        return np.array([np.log(params.gamma), np.log(params.lam), np.log(eps), np.log(params.d), logit(p)])

    @staticmethod
    def from_vector(x: np.ndarray) -> ModelParams:
        g, lam, eps, d = np.exp(x[:4])
        return ModelParams(gamma=float(g), lam=float(lam), epsilon=float(eps), d=float(d), p=float(expit(x[4])))


class NegativeLogLikelihood:
    """Objective for the simplex search; invalid parameter vectors raise and are scored +inf."""

    def __init__(self, catalog: Catalog, region: Region, nu: NuConvention, horizon: Optional[float] = None):
        self.catalog = catalog
        self.region = region
        self.nu = nu
        self.horizon = horizon

    def __call__(self, x: np.ndarray) -> float:
        params = ParamTransform.from_vector(x)
        model = create_intensity(params, self.region, self.nu)
        return -log_likelihood(self.catalog, model, self.horizon)


def restart_points(config: FitConfig) -> List[np.ndarray]:
    """Restart 0 is the initial guess; later ones are shifted uniformly by +-perturbation per coordinate."""
    x0 = ParamTransform.to_vector(config.init)
    rng = np.random.default_rng(config.seed)
    points = [x0]
    for _ in range(1, config.restarts):
        points.append(x0 + rng.uniform(-config.perturbation, config.perturbation, size=x0.shape))
    return points


def _run_restart(objective: NegativeLogLikelihood, x0: np.ndarray, config: FitConfig, restart: int) -> Optional[FitResult]:
    try:
        result = nelder_mead(objective, x0, xtol=config.xtol, ftol=config.ftol, max_iter=config.max_iter)
    except NumericalError as exc:
        logger.warning(f"Restart {restart} failed: {exc}")
        return None
    if not np.isfinite(result.fun):
        logger.warning(f"Restart {restart} ended without a finite likelihood")
        return None
    try:
        params_hat = ParamTransform.from_vector(result.x)
    except ValueError as exc:
        logger.warning(f"Restart {restart} ended at invalid parameters: {exc}")
        return None
    fit = FitResult(
        params_hat=params_hat,
        loglik=-result.fun,
        converged=result.converged,
        iterations=result.iterations,
        trace=[-v for v in result.trace],
        restart=restart,
    )
    logger.info(
        f"Restart {restart}: loglik={fit.loglik:.6f} converged={fit.converged} "
        f"iterations={fit.iterations}"
    )
    return fit


def fit_mle(
    catalog: Catalog,
    config: FitConfig,
    region: Region,
    nu: NuConvention = NuConvention.PROBABILITY,
) -> FitResult:
    """Best result over all restarts. ``trace`` holds the best log-likelihood per iteration."""
    if catalog.n == 0:
        raise DataError("cannot fit an empty catalog")
    objective = NegativeLogLikelihood(catalog, region, nu, config.horizon)
    starts = restart_points(config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_restart, objective, x0, config, i) for i, x0 in enumerate(starts)]
            results = [f.result() for f in futures]
    else:
        results = [_run_restart(objective, x0, config, i) for i, x0 in enumerate(starts)]

    finished = [r for r in results if r is not None]
    if not finished:
        raise NumericalError(f"all {len(starts)} restarts failed to reach a finite likelihood")
    # max() keeps the earliest restart on ties, so the result does not depend on worker count
    best = max(finished, key=lambda r: r.loglik)
    logger.info(f"Best fit from restart {best.restart}: {best.params_hat.as_dict()} loglik={best.loglik:.6f}")
    return best
