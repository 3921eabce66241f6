"""ADMM baseline on the three-block reformulation.

The original problem gains two copies: v = u (carrying the first l1 term)
and d = D u (carrying the second).  Each iteration solves the quadratic
u-block by conjugate gradients, updates v and d by soft thresholding,
updates the scaled multipliers, and finally tries a one-dimensional
acceleration step along the last move of the primal variables, accepted if
it strictly decreases the augmented-Lagrangian merit at the current
multipliers.  Reports flag the acceleration variant as "AL_SOP-like".
"""

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from . import model
from .driver import IterationRecord, SolveReport
from .errors import NumericalError


@dataclass
class AdmmState:
    """Primal blocks, scaled multipliers and the penalty of one ADMM run."""

    u: np.ndarray
    v: np.ndarray
    d: np.ndarray
    mult_a: np.ndarray
    mult_v: np.ndarray
    mult_d: np.ndarray
    penalty: float


def _argmin_quadratic_plus_abs(a2, a1, c, e, weights):
    """Minimizer of t -> a2*t^2 + a1*t + sum_i weights_i * |c_i + e_i*t|.

    Requires a2 > 0.  Scans the breakpoints of the piecewise-linear
    derivative from the left; the derivative is nondecreasing, so the first
    segment whose unconstrained zero falls inside it gives the minimizer,
    and a zero falling before a segment pins the minimizer at the kink.
    """
    active = e != 0.0
    if not np.any(active):
        return -a1 / (2.0 * a2)
    t_break = -c[active] / e[active]
    w_break = weights[active] * np.abs(e[active])
    order = np.argsort(t_break, kind="stable")
    t_break = t_break[order]
    w_break = w_break[order]
    w_total = float(w_break.sum())
    prefix = np.concatenate([[0.0], np.cumsum(w_break)])
    n_seg = t_break.shape[0]
    for j in range(n_seg + 1):
        slope_shift = 2.0 * prefix[j] - w_total
        t_star = -(a1 + slope_shift) / (2.0 * a2)
        lo = -np.inf if j == 0 else t_break[j - 1]
        hi = np.inf if j == n_seg else t_break[j]
        if t_star < lo:
            return float(lo)
        if t_star <= hi:
            return float(t_star)
    return float(t_break[-1])


def admm_solve(problem, cfg):
    """Run the ADMM baseline on a :class:`ConstrainedL1Problem`.

    Stops when ||A u - b||, ||D u - d|| and ||u - v|| are all below
    ``cfg.tol_b``; the iteration cap is ``cfg.admm_max_outer``.
    """
    t0 = time.perf_counter()
    sp = model.stack(problem)
    n, q, m = problem.n, problem.q, problem.m
    rho = cfg.lam
    A, D, C, b = problem.A, problem.D, problem.C, problem.b
    tau1, tau2 = problem.tau1, problem.tau2

    # constant u-block Hessian: 2C + rho (A^T A + I + D^T D), always PD
    K = 2.0 * C + rho * (A.T @ A + np.eye(n) + D.T @ D)
    cg_cap = max(1, n // 2)

    st = AdmmState(
        u=np.zeros(n),
        v=np.zeros(n),
        d=np.zeros(q),
        mult_a=np.zeros(m),
        mult_v=np.zeros(n),
        mult_d=np.zeros(q),
        penalty=rho,
    )

    def merit(u, v, d):
        ra = A @ u - b + st.mult_a
        rv = u - v + st.mult_v
        rd = D @ u - d + st.mult_d
        return float(
            u @ (C @ u)
            + tau1 * np.abs(v).sum()
            + tau2 * np.abs(d).sum()
            + 0.5 * rho * (ra @ ra + rv @ rv + rd @ rd)
        )

    def cg_u_block(rhs, u0):
        u = u0.copy()
        r = rhs - K @ u
        rho0 = float(np.linalg.norm(r))
        if rho0 == 0.0:
            return u, 0
        p = r.copy()
        rs = float(r @ r)
        iters = 0
        for _ in range(cg_cap):
            kp = K @ p
            pkp = float(p @ kp)
            if not np.isfinite(pkp) or pkp <= 0.0:
                raise NumericalError("CG breakdown in the ADMM u-block")
            alpha = rs / pkp
            u += alpha * p
            r -= alpha * kp
            iters += 1
            rs_new = float(r @ r)
            if np.sqrt(rs_new) <= cfg.tol_cg * rho0:
                break
            p = r + (rs_new / rs) * p
            rs = rs_new
        return u, iters

    totals = {"cg": 0}
    trace = [] if cfg.keep_trace else None
    accel_taken = 0
    accel_rejected = 0
    termination = "max_outer"
    outer = 0
    try:
        while True:
            viol_a = float(np.linalg.norm(A @ st.u - b))
            viol_d = float(np.linalg.norm(D @ st.u - st.d))
            viol_v = float(np.linalg.norm(st.u - st.v))
            if trace is not None:
                trace.append(
                    IterationRecord(
                        k=outer,
                        branch="admm",
                        viol_constraint=viol_a,
                        viol_split=viol_d,
                        stacked_violation=float(np.hypot(viol_a, viol_d)),
                        gamma=float("nan"),
                    )
                )
            if viol_a <= cfg.tol_b and viol_d <= cfg.tol_b and viol_v <= cfg.tol_b:
                termination = "converged"
                break
            if outer >= cfg.admm_max_outer:
                termination = "max_outer"
                break

            u_old, v_old, d_old = st.u, st.v, st.d
            rhs = rho * (
                A.T @ (b - st.mult_a) + (st.v - st.mult_v) + D.T @ (st.d - st.mult_d)
            )
            st.u, it = cg_u_block(rhs, st.u)
            totals["cg"] += it
            st.v = kernels.soft_threshold_vec(st.u + st.mult_v, tau1 / rho)
            st.d = kernels.soft_threshold_vec(D @ st.u + st.mult_d, tau2 / rho)
            st.mult_a = st.mult_a + (A @ st.u - b)
            st.mult_v = st.mult_v + (st.u - st.v)
            st.mult_d = st.mult_d + (D @ st.u - st.d)

            du = st.u - u_old
            dv = st.v - v_old
            dd = st.d - d_old
            a_du = A @ du
            d_du = D @ du
            a2 = float(
                du @ (C @ du)
                + 0.5 * rho * (a_du @ a_du + (du - dv) @ (du - dv)
                               + (d_du - dd) @ (d_du - dd))
            )
            if a2 > 0.0:
                ra = A @ st.u - b + st.mult_a
                rv = st.u - st.v + st.mult_v
                rd = D @ st.u - st.d + st.mult_d
                a1 = float(
                    2.0 * st.u @ (C @ du)
                    + rho * (ra @ a_du + rv @ (du - dv) + rd @ (d_du - dd))
                )
                t_star = _argmin_quadratic_plus_abs(
                    a2,
                    a1,
                    np.concatenate([st.v, st.d]),
                    np.concatenate([dv, dd]),
                    np.concatenate([np.full(n, tau1), np.full(q, tau2)]),
                )
                if t_star != 0.0:
                    base = merit(st.u, st.v, st.d)
                    cand = merit(
                        st.u + t_star * du, st.v + t_star * dv, st.d + t_star * dd
                    )
                    if not np.isfinite(cand):
                        raise NumericalError("non-finite merit in ADMM acceleration")
                    if cand < base:
                        st.u = st.u + t_star * du
                        st.v = st.v + t_star * dv
                        st.d = st.d + t_star * dd
                        accel_taken += 1
                    else:
                        accel_rejected += 1
            outer += 1
    except NumericalError as exc:
        return SolveReport(
            solver="admm",
            x_final=np.concatenate([st.u, st.d]),
            outer_iters=outer,
            accel_steps_taken=accel_taken,
            accel_steps_rejected=accel_rejected,
            inner_iter_totals=totals,
            termination="numerical_error",
            wall_time=time.perf_counter() - t0,
            objective=float("nan"),
            trace=trace,
            details={"acceleration": "AL_SOP-like", "error": str(exc)},
        )

    x_final = np.concatenate([st.u, st.d])
    return SolveReport(
        solver="admm",
        x_final=x_final,
        outer_iters=outer,
        accel_steps_taken=accel_taken,
        accel_steps_rejected=accel_rejected,
        inner_iter_totals=totals,
        termination=termination,
        wall_time=time.perf_counter() - t0,
        objective=model.original_objective(sp, x_final),
        trace=trace,
        details={"acceleration": "AL_SOP-like"},
    )
