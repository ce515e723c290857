"""
Between-event differential equations of the filter and a classical fourth-order
Runge-Kutta integrator. The closed forms in ``cluster_filter`` solve these exactly;
this module exists to check them numerically.

State layout along the last axis: [pi_1..pi_k, pif_1..pif_k, pif]. Leading axes are
independent problems; ``c`` (a(y_j) - eps) broadcasts against them.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

Rhs = Callable[[np.ndarray], np.ndarray]


def base_rhs(pis: np.ndarray, c: np.ndarray) -> np.ndarray:
    """d pi_j / dt = -pi_j (c_j - sum_l c_l pi_l)."""
    mean_c = np.sum(c * pis, axis=-1, keepdims=True)
    return -pis * (c - mean_c)


def functional_rhs(state: np.ndarray, c: np.ndarray, k: int) -> np.ndarray:
    """Joint right-hand side for the base vector, the functional vector and pi(f)."""
    pis = state[..., :k]
    js = state[..., k:2 * k]
    pif = state[..., 2 * k:]
    mean_c = np.sum(c * pis, axis=-1, keepdims=True)
    d_pis = -pis * (c - mean_c)
    d_js = -js * (c - mean_c)
    d_pif = -np.sum(c * js, axis=-1, keepdims=True) + pif * mean_c
    return np.concatenate([d_pis, d_js, d_pif], axis=-1)


def rk4(rhs: Rhs, y0: np.ndarray, duration: np.ndarray, steps: int) -> np.ndarray:
    """
    Integrate y' = rhs(y) over ``duration`` (scalar or one value per leading problem,
    shape (..., 1)) with ``steps`` equal steps.
    """
    h = np.asarray(duration, dtype=float) / steps
    y = np.array(y0, dtype=float)
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
