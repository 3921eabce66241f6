"""Brute-force reference solver for desk-scale instances.

Enumerates every sign pattern of the stacked variable, solves the linear
stationarity system of each candidate face (quadratic term restricted to the
support, signed l1 slopes, equality constraints), screens the result for
sign consistency and dual feasibility on the zeros, and returns the feasible
stationary point of least objective.  Exhaustive and independent of the
iterative solvers; used as the ground truth in tests.
"""

from typing import NamedTuple

import numpy as np

from . import model
from .errors import InfeasibleProblemError, SizeLimitError

SIZE_CAP = 12

_SIGN_TOL = 1e-11
_DUAL_TOL = 1e-9
_RESID_RTOL = 1e-9


class SignPattern(NamedTuple):
    sigma: tuple


class OracleSolution(NamedTuple):
    u: np.ndarray
    objective: float
    x: np.ndarray
    pattern: SignPattern


def enumerate_solve(problem):
    """Globally minimize a :class:`ConstrainedL1Problem` by enumeration.

    Hard size cap: n + q <= 12 (3^(n+q) candidate patterns).  Patterns whose
    stationarity system is singular are skipped; the optimum's own system is
    nonsingular whenever the quadratic term is positive definite on the
    constraint null space restricted to the face.
    """
    sp = model.stack(problem)
    n, n_x, n_s = sp.n, sp.n_x, sp.n_s
    if n_x > SIZE_CAP:
        raise SizeLimitError(
            f"enumeration supports at most {SIZE_CAP} stacked coordinates, got {n_x}"
        )
    M, s_vec, delta = sp.M, sp.s, sp.delta
    hess = np.zeros((n_x, n_x))
    hess[:n, :n] = 2.0 * problem.C

    best_obj = np.inf
    best_x = None
    best_sigma = None

    all_idx = np.arange(n_x)
    for mask in range(2**n_x):
        free = all_idx[(mask >> all_idx) & 1 == 1]
        nf = free.shape[0]
        if nf == 0:
            # x = 0 is stationary with zero multipliers whenever feasible:
            # the gradient of <u, C u> vanishes at the origin
            if n_s == 0 or np.abs(s_vec).max() <= 1e-14:
                if 0.0 < best_obj:
                    best_obj = 0.0
                    best_x = np.zeros(n_x)
                    best_sigma = (0,) * n_x
            continue

        mf = M[:, free]
        kkt = np.zeros((nf + n_s, nf + n_s))
        kkt[:nf, :nf] = hess[np.ix_(free, free)]
        kkt[:nf, nf:] = -mf.T
        kkt[nf:, :nf] = mf

        n_signs = 2**nf
        cols = np.arange(n_signs)
        signs = ((cols[None, :] >> np.arange(nf)[:, None]) & 1) * 2.0 - 1.0
        rhs = np.zeros((nf + n_s, n_signs))
        rhs[:nf] = -delta[free, None] * signs
        rhs[nf:] = s_vec[:, None]

        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        resid = kkt @ sol - rhs
        col_scale = 1.0 + np.abs(rhs).max(axis=0)
        ok = np.isfinite(sol).all(axis=0)
        ok &= np.abs(resid).max(axis=0) <= _RESID_RTOL * col_scale

        x_free = sol[:nf]
        mu = sol[nf:]
        ok &= (signs * x_free >= -_SIGN_TOL).all(axis=0)

        zero_idx = all_idx[(mask >> all_idx) & 1 == 0]
        if zero_idx.size:
            grad_zero = hess[np.ix_(zero_idx, free)] @ x_free
            dual_gap = np.abs(grad_zero - M[:, zero_idx].T @ mu)
            ok &= (dual_gap <= delta[zero_idx, None] + _DUAL_TOL).all(axis=0)

        if not ok.any():
            continue
        objs = 0.5 * np.einsum("ij,ij->j", x_free, kkt[:nf, :nf] @ x_free)
        objs += delta[free] @ np.abs(x_free)
        objs = np.where(ok, objs, np.inf)
        j = int(np.argmin(objs))
        if objs[j] < best_obj:
            best_obj = float(objs[j])
            best_x = np.zeros(n_x)
            best_x[free] = x_free[:, j]
            sigma = np.zeros(n_x, dtype=int)
            sigma[free] = signs[:, j].astype(int)
            best_sigma = tuple(int(v) for v in sigma)

    if best_x is None:
        raise InfeasibleProblemError(
            "no sign pattern admits a feasible stationary point"
        )
    return OracleSolution(
        u=best_x[:n],
        objective=best_obj,
        x=best_x,
        pattern=SignPattern(sigma=best_sigma),
    )
