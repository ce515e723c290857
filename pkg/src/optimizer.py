"""
Derivative-free minimisation with the Nelder-Mead simplex method.
"""
from __future__ import annotations

import logging
from typing import Callable, List, NamedTuple

import numpy as np

from .constants import (
    DEFAULT_FTOL,
    DEFAULT_MAX_ITER,
    DEFAULT_XTOL,
    INITIAL_SIMPLEX_STEP,
    NM_CONTRACT,
    NM_EXPAND,
    NM_REFLECT,
    NM_SHRINK,
)
from .errors import NumericalError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    trace: List[float]


def _guarded(objective: Objective) -> Objective:
    def evaluate(x: np.ndarray) -> float:
        try:
            value = float(objective(x))
        except (ArithmeticError, ValueError) as exc:
            logger.debug(f"Objective failed at {x}: {exc}")
            return np.inf
        return value if np.isfinite(value) else np.inf

    return evaluate


def initial_simplex(x0: np.ndarray, step: float) -> np.ndarray:
    """x0 plus one vertex per coordinate offset by ``step``."""
    dim = x0.shape[0]
    return np.vstack([x0, x0 + step * np.eye(dim)])


def nelder_mead(
    objective: Objective,
    x0: np.ndarray,
    xtol: float = DEFAULT_XTOL,
    ftol: float = DEFAULT_FTOL,
    max_iter: int = DEFAULT_MAX_ITER,
    step: float = INITIAL_SIMPLEX_STEP,
) -> SimplexResult:
    """
    Minimise ``objective`` from ``x0``.

    Stops when the simplex diameter (max-norm distance of every vertex to the best one)
    is below ``xtol`` and the spread of vertex values is below ``ftol``, or after
    ``max_iter`` iterations. Non-finite values during the search count as +inf.
    """
    x0 = np.asarray(x0, dtype=float)
    try:
        f_start = float(objective(x0))
    except (ArithmeticError, ValueError) as exc:
        raise NumericalError(f"objective failed at the starting point {x0}: {exc}") from exc
    if not np.isfinite(f_start):
        raise NumericalError(f"objective is not finite at the starting point {x0}")
    func = _guarded(objective)

    simplex = initial_simplex(x0, step)
    values = np.array([f_start] + [func(v) for v in simplex[1:]])
    trace: List[float] = []
    converged = False
    iterations = 0

    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        trace.append(float(values[0]))

        diameter = float(np.max(np.abs(simplex[1:] - simplex[0])))
        spread = float(values[-1] - values[0])
        if diameter < xtol and spread < ftol:
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        # Reflection
        xr = centroid + NM_REFLECT * (centroid - worst)
        fr = func(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue

        # Expansion
        if fr < values[0]:
            xe = centroid + NM_EXPAND * (xr - centroid)
            fe = func(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue

        # Contraction, outside or inside the simplex
        if fr < values[-1]:
            xc = centroid + NM_CONTRACT * (xr - centroid)
            fc = func(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + NM_CONTRACT * (worst - centroid)
            fc = func(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue

        # Shrink towards the best vertex
        simplex[1:] = simplex[0] + NM_SHRINK * (simplex[1:] - simplex[0])
        values[1:] = [func(v) for v in simplex[1:]]

    logger.debug(f"Nelder-Mead stopped after {iterations} iterations (converged={converged}, f={values[0]:.10g})")
    return SimplexResult(simplex[0].copy(), float(values[0]), converged, iterations, trace)
