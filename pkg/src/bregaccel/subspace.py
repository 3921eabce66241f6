"""Machinery of the subspace-acceleration step.

An iterate's sign pattern partitions the coordinates into positive, negative
and zero sets.  When the optimality violation carried by the zero variables
(beta) is small relative to the violation carried by the nonzero ones (phi),
the subproblem is restricted to the affine closure of the orthant face fixed
by the zeros; the restriction is a smooth strictly convex quadratic, solved
loosely by conjugate gradients, and the resulting point is pulled back to
the face by a projected backtracking line search.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from . import model
from .errors import EmptyFaceError, LineSearchError, NumericalError

MAX_HALVINGS = 60


@dataclass(frozen=True)
class ActiveSetPartition:
    """Index sets of the positive, negative and zero coordinates."""

    plus: np.ndarray
    minus: np.ndarray
    zero: np.ndarray
    nonzero: np.ndarray


@dataclass(frozen=True)
class OptimalityMeasures:
    """Min-norm subgradient g and its zero/nonzero violation split."""

    g: np.ndarray
    beta: np.ndarray
    phi: np.ndarray


@dataclass
class GammaState:
    """Adaptive threshold of the switching test.

    Shrinks when an acceleration step is chosen (making the next test
    stricter) and grows otherwise.
    """

    gamma: float = 10.0
    decrease: float = 0.9
    increase: float = 1.1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def partition(x):
    """Sign-based partition of the coordinates (exact zero test)."""
    return ActiveSetPartition(
        plus=np.flatnonzero(x > 0.0),
        minus=np.flatnonzero(x < 0.0),
        zero=np.flatnonzero(x == 0.0),
        nonzero=np.flatnonzero(x != 0.0),
    )


def min_norm_subgradient(grad_g, delta, part):
    """Min-norm subgradient of the composite subproblem from a partition."""
    g = np.zeros_like(grad_g)
    gp = grad_g + delta
    gm = grad_g - delta
    g[part.plus] = gp[part.plus]
    g[part.minus] = gm[part.minus]
    z = part.zero
    g[z] = np.where(gp[z] < 0.0, gp[z], np.where(gm[z] > 0.0, gm[z], 0.0))
    return g


def compute_beta_phi(grad_g, delta, x):
    """Optimality measures at x: beta on the zero set, phi on the support.

    phi is clamped by the coordinate value itself, so it also accounts for
    how far a nonzero variable can move before leaving its orthant.
    """
    beta, phi = kernels.beta_phi(grad_g, delta, x)
    g = kernels.min_norm_subgrad(grad_g, delta, x)
    return OptimalityMeasures(g=g, beta=beta, phi=phi)


def switching_test(meas, gs):
    """Decide between acceleration and a standard step; adapts gamma.

    Accelerate iff ||beta|| <= gamma * ||phi|| (Euclidean norms).  gamma is
    multiplied by its decrease factor on an accelerate decision and by its
    increase factor otherwise.
    """
    accelerate = np.linalg.norm(meas.beta) <= gs.gamma * np.linalg.norm(meas.phi)
    gs.gamma *= gs.decrease if accelerate else gs.increase
    return accelerate


@dataclass(frozen=True)
class ReducedQuadratic:
    """Quadratic restriction of the subproblem to the free coordinates.

    minimize over w:  0.5 w^T Q w + lin^T w,  with Q = 2*C_ff + lam*Mf^T Mf
    and lin = nu - lam*Mf^T s_k, where nu_i = sign(x_i) * delta_i.
    """

    Q: np.ndarray
    lin: np.ndarray
    free: np.ndarray
    x0: np.ndarray

    @property
    def rhs(self):
        return -self.lin

    def objective(self, w):
        return float(0.5 * w @ (self.Q @ w) + self.lin @ w)

    def gradient(self, w):
        return self.Q @ w + self.lin


def restricted_problem(sp, state, part, x):
    """Build the smooth quadratic over the orthant face of x.

    The face fixes the zero coordinates; on it the l1 term is linear with
    per-coordinate slope sign(x_i) * delta_i.
    """
    free = part.nonzero
    if free.size == 0:
        raise EmptyFaceError("no nonzero coordinates to restrict to")
    mf = sp.M[:, free]
    q_mat = state.lam * (mf.T @ mf)
    n_free_u = int(np.searchsorted(free, sp.n))
    fu = free[:n_free_u]
    if fu.size:
        q_mat[:n_free_u, :n_free_u] += 2.0 * sp.C[np.ix_(fu, fu)]
    nu = np.sign(x[free]) * sp.delta[free]
    lin = nu - state.lam * (mf.T @ state.s_k)
    return ReducedQuadratic(Q=q_mat, lin=lin, free=free, x0=np.array(x[free]))


MIN_CG_ITERS = 8


def cg_solve(reduced, tol_cg, max_iters=None):
    """Conjugate gradients on the reduced system Q w = -lin.

    Starts from the current free coordinates.  Stops when the residual falls
    below tol_cg relative to the starting residual, or at the iteration cap:
    half the subproblem size, floored at MIN_CG_ITERS so that small faces
    still get solved (a 1-2 step budget cannot make progress on them and
    stalls the outer loop).  Returns (w, iterations, relative residual).
    """
    q_mat = reduced.Q
    rhs = reduced.rhs
    size = rhs.shape[0]
    if max_iters is None:
        max_iters = max(MIN_CG_ITERS, size // 2)
    w = np.array(reduced.x0, dtype=np.float64, copy=True)
    r = rhs - q_mat @ w
    rho0 = float(np.linalg.norm(r))
    if rho0 == 0.0:
        return w, 0, 0.0
    p = r.copy()
    rs = float(r @ r)
    iters = 0
    for _ in range(max_iters):
        qp = q_mat @ p
        p_qp = float(p @ qp)
        if not np.isfinite(p_qp):
            raise NumericalError("non-finite curvature in CG")
        if p_qp <= 0.0:
            raise NumericalError("CG breakdown: nonpositive curvature")
        alpha = rs / p_qp
        w += alpha * p
        r -= alpha * qp
        iters += 1
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol_cg * rho0:
            rs = rs_new
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    rel = float(np.sqrt(rs) / rho0)
    if not np.isfinite(w).all():
        raise NumericalError("non-finite CG iterate")
    return w, iters, rel


def project_onto_face(z, x_ref):
    """Project z onto the closed orthant face containing x_ref."""
    return kernels.project_face(z, x_ref)


def line_search(sp, state, x_k, z_next, eta, max_halvings=MAX_HALVINGS):
    """Projected backtracking from x_k toward z_next.

    Tries alpha in {1, 1/2, 1/4, ...}; each trial point is the projection of
    x_k + alpha*(z_next - x_k) onto the face of x_k, accepted on sufficient
    decrease of H_k against the face-restricted gradient.  Returns the
    accepted point and step.  Raises LineSearchError after ``max_halvings``
    failed halvings (the direction was not a descent direction).
    """
    d = z_next - x_k
    h_ref = model.composite_value(sp, state, x_k)
    _, grad_g = model.smooth_value_grad(sp, state, x_k)
    # gradient of the smooth face restriction, extended by zero on the zeros
    grad_face = np.where(x_k != 0.0, grad_g + np.sign(x_k) * sp.delta, 0.0)
    alpha = 1.0
    for _ in range(max_halvings + 1):
        cand = kernels.project_face(x_k + alpha * d, x_k)
        h_cand = model.composite_value(sp, state, cand)
        if not np.isfinite(h_cand):
            raise NumericalError("non-finite objective in line search")
        if h_cand - h_ref <= eta * float(grad_face @ (cand - x_k)):
            return cand, alpha
        alpha *= 0.5
    raise LineSearchError(
        f"no sufficient decrease after {max_halvings} halvings"
    )
