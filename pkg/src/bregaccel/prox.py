"""Weighted-l1 proximal operators and the FISTA inner solver.

The inner solver minimizes H_k(x) = G_k(x) + sum_i delta_i |x_i| with a
constant step 1/L (L from :func:`bregaccel.model.lipschitz_bound`) and a
monotone safeguard: an extrapolated step is kept only if it does not
increase H_k, otherwise a plain proximal gradient step is taken instead.
Stops when the displacement between consecutive iterates drops below
``tol_f`` or after ``max_iters`` steps.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as kernels
from . import model
from .errors import DimensionMismatchError, NumericalError


@dataclass(frozen=True)
class FistaConfig:
    """Stopping parameters of the inner solver."""

    tol_f: float = 1e-5
    max_iters: int = 5000

    def __post_init__(self):
        if self.tol_f <= 0:
            raise ValueError("tol_f must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def soft_threshold(v, t):
    """Scalar shrinkage sign(v) * max(|v| - t, 0)."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return math.copysign(max(abs(v) - t, 0.0), v)


def prox_weighted_l1(v, delta, step):
    """Componentwise soft threshold of v at step * delta."""
    v = np.asarray(v, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if v.shape != delta.shape:
        raise DimensionMismatchError("v", v.shape, "delta", delta.shape)
    if step <= 0:
        raise ValueError("step must be positive")
    if np.any(delta < 0):
        raise ValueError("delta must be nonnegative")
    return kernels.soft_threshold_vec(v, step * delta)


class FistaResult(NamedTuple):
    x: np.ndarray
    iters: int
    subgrad_inf: float
    value: float


def fista_minimize(sp, state, x0, cfg):
    """Approximately minimize the current subproblem from x0.

    Returns the final iterate, the number of iterations, the sup norm of the
    minimum-norm subgradient at the result, and the final composite value.
    Linear maps of the iterate are carried along and combined instead of
    recomputed at extrapolated points, which saves one M and one C product
    per step.
    """
    if x0.shape[0] != sp.n_x:
        raise DimensionMismatchError("x0", x0.shape, "M columns", sp.M.shape)
    lip = model.lipschitz_bound(sp, state.lam)
    step = 1.0 / lip if lip > 0 else 1.0
    delta = sp.delta
    s_k = state.s_k
    lam = state.lam
    n = sp.n

    def linear_maps(x):
        return model.mat_vec(sp, x), model.apply_C(sp, x[:n])

    def value_from(x, mx, cu):
        r = mx - s_k
        return float(x[:n] @ cu + 0.5 * lam * (r @ r)) + model.penalty_value(sp, x)

    def grad_from(x, mx, cu):
        g = lam * model.mat_t_vec(sp, mx - s_k)
        g[:n] += 2.0 * cu
        return g

    z = np.array(x0, dtype=np.float64, copy=True)
    # overflow is detected through isfinite checks, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        mz, cz = linear_maps(z)
        h_z = value_from(z, mz, cz)
    if not np.isfinite(h_z):
        raise NumericalError("non-finite objective at the FISTA start point")
    z_prev, mz_prev, cz_prev = z, mz, cz
    t = 1.0

    iters = 0
    for _ in range(cfg.max_iters):
        iters += 1
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        coef = (t - 1.0) / t_next
        y = kernels.momentum_combine(z, z_prev, coef)
        my = mz + coef * (mz - mz_prev)
        cy = cz + coef * (cz - cz_prev)
        cand = kernels.prox_grad_step(y, grad_from(y, my, cy), step, delta)
        m_cand, c_cand = linear_maps(cand)
        h_cand = value_from(cand, m_cand, c_cand)
        if h_cand > h_z:
            # monotone safeguard: plain proximal step from the last accepted
            # iterate cannot increase H_k at step 1/L
            cand = kernels.prox_grad_step(z, grad_from(z, mz, cz), step, delta)
            m_cand, c_cand = linear_maps(cand)
            h_cand = value_from(cand, m_cand, c_cand)
        if not np.isfinite(h_cand):
            raise NumericalError("non-finite objective inside FISTA")
        disp2 = kernels.diff_norm2(cand, z)
        z_prev, mz_prev, cz_prev = z, mz, cz
        z, mz, cz, h_z = cand, m_cand, c_cand, h_cand
        t = t_next
        if math.sqrt(disp2) <= cfg.tol_f:
            break

    g_final = grad_from(z, mz, cz)
    sub = kernels.min_norm_subgrad(g_final, delta, z)
    sub_inf = float(np.abs(sub).max()) if sub.size else 0.0
    return FistaResult(x=z, iters=iters, subgrad_inf=sub_inf, value=h_z)
