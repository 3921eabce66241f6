"""Problem data and the stacked single-variable reformulation.

The original problem is

    minimize  <u, C u> + tau1 * ||u||_1 + tau2 * ||D u||_1
    subject to  A u = b,

with C symmetric positive definite.  Introducing d = D u and x = [u; d]
turns it into a weighted-l1 problem over x with a single linear constraint
block M x = s, where M = [[A, 0], [D, -I]] and s = [b; 0].  Every solver in
the package works on that stacked form.

All types are immutable after construction; operations are pure functions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotPositiveDefiniteError

# Fixed seed for the power-iteration start vector: spectral norm estimates,
# and therefore whole solver runs, stay bit-reproducible.
_POWER_SEED = 20260808
_POWER_MAX_ITERS = 200
_POWER_RTOL = 1e-8
_POWER_SAFETY = 1.01

_SYM_RTOL = 1e-12


def _as_float_matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    return a


def _as_float_vector(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-d array, got ndim={a.ndim}")
    return a


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True)
class ConstrainedL1Problem:
    """Data of the original constrained problem.

    Parameters
    ----------
    C : (n, n) array
        Symmetric positive definite matrix of the quadratic term <u, C u>.
    tau1, tau2 : float
        Nonnegative weights of the two l1 terms.
    D : (q, n) array
        Linear operator inside the second l1 term (q may be 0).
    A : (m, n) array
        Equality-constraint matrix (m may be 0).
    b : (m,) array
        Equality-constraint right-hand side.
    c_blocks : tuple of arrays, optional
        Diagonal blocks of C when it is block diagonal with equal-sized
        blocks; enables a batched matvec.  Must concatenate exactly to C.
    """

    C: np.ndarray
    tau1: float
    tau2: float
    D: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c_blocks: tuple = None

    def __post_init__(self):
        C = _as_float_matrix(self.C, "C")
        D = _as_float_matrix(self.D, "D")
        A = _as_float_matrix(self.A, "A")
        b = _as_float_vector(self.b, "b")
        if C.shape[0] != C.shape[1]:
            raise DimensionMismatchError("C rows", C.shape, "C columns", C.shape)
        n = C.shape[0]
        if D.shape[1] != n:
            raise DimensionMismatchError("D", D.shape, "C", C.shape)
        if A.shape[1] != n:
            raise DimensionMismatchError("A", A.shape, "C", C.shape)
        if b.shape[0] != A.shape[0]:
            raise DimensionMismatchError("b", b.shape, "A", A.shape)
        if self.tau1 < 0 or self.tau2 < 0:
            raise ValueError("tau1 and tau2 must be nonnegative")
        for name, arr in (("C", C), ("D", D), ("A", A), ("b", b)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
        scale = np.abs(C).max() if C.size else 0.0
        if scale == 0.0 or np.abs(C - C.T).max() > _SYM_RTOL * scale:
            raise NotPositiveDefiniteError("C is not symmetric within tolerance")
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(f"C is not positive definite: {exc}") from exc
        blocks = self.c_blocks
        if blocks is not None:
            blocks = tuple(np.asarray(B, dtype=np.float64) for B in blocks)
            sizes = [B.shape[0] for B in blocks]
            if any(B.shape[0] != B.shape[1] for B in blocks) or sum(sizes) != n:
                raise DimensionMismatchError("c_blocks", sizes, "C", C.shape)
            if len(set(sizes)) > 1:
                raise ValueError("c_blocks must all have the same size")
            full = np.zeros_like(C)
            off = 0
            for B in blocks:
                full[off : off + B.shape[0], off : off + B.shape[0]] = B
                off += B.shape[0]
            if not np.array_equal(full, C):
                raise ValueError("c_blocks do not assemble to C")
            for B in blocks:
                B.flags.writeable = False
        _freeze(C, D, A, b)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "tau1", float(self.tau1))
        object.__setattr__(self, "tau2", float(self.tau2))
        object.__setattr__(self, "c_blocks", blocks)

    @property
    def n(self):
        return self.C.shape[0]

    @property
    def q(self):
        return self.D.shape[0]

    @property
    def m(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class StackedProblem:
    """Single-variable form of a :class:`ConstrainedL1Problem`.

    x = [u; d] with n u-coordinates and q d-coordinates; M = [[A, 0], [D, -I]]
    maps x to the stacked constraint residual basis, s = [b; 0], and delta
    holds the per-coordinate l1 weights (tau1 on u, tau2 on d).
    """

    C: np.ndarray
    A: np.ndarray
    D: np.ndarray
    M: np.ndarray
    s: np.ndarray
    delta: np.ndarray
    n: int
    q: int
    n_x: int
    n_s: int
    M_norm_sq: float
    smooth_lipschitz: float
    c_blocks: tuple = None
    # width of the shift when D is the first-difference operator over equal
    # asset blocks; 0 disables the shortcut
    diff_shift: int = 0
    # (n_blocks, block, block) view of c_blocks for the batched matvec
    c_stack: np.ndarray = None


@dataclass(frozen=True)
class SubproblemState:
    """Shifted right-hand side s_k and penalty of the current subproblem."""

    s_k: np.ndarray
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("penalty lam must be positive")
        s_k = _as_float_vector(self.s_k, "s_k")
        _freeze(s_k)
        object.__setattr__(self, "s_k", s_k)
        object.__setattr__(self, "lam", float(self.lam))


def _power_lambda_max(matvec, dim):
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    if dim == 0:
        return 0.0
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_MAX_ITERS):
        w = matvec(v)
        lam_new = float(np.dot(v, w))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # start vector fell in the null space; perturb and go on
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            continue
        v = w / norm_w
        if abs(lam_new - lam) <= _POWER_RTOL * max(abs(lam_new), 1e-30):
            return lam_new
        lam = lam_new
    return lam


def _detect_diff_shift(D, n, q):
    if q == 0 or q >= n:
        return 0
    shift = n - q
    rows = np.arange(q)
    expected = np.zeros((q, n))
    expected[rows, rows] = -1.0
    expected[rows, rows + shift] = 1.0
    return shift if np.array_equal(D, expected) else 0


def stack(problem):
    """Build the stacked single-variable form of ``problem``.

    The returned object caches an upper bound on ||M||^2 and a Lipschitz
    constant of the gradient of the smooth part F(x) = <u, C u>, both via
    power iteration inflated by a 1% safety factor.
    """
    n, q, m = problem.n, problem.q, problem.m
    n_x = n + q
    n_s = m + q
    A, D, C = problem.A, problem.D, problem.C

    M = np.zeros((n_s, n_x))
    M[:m, :n] = A
    M[m:, :n] = D
    M[m:, n:] = -np.eye(q)
    s = np.concatenate([problem.b, np.zeros(q)])
    delta = np.concatenate(
        [np.full(n, problem.tau1), np.full(q, problem.tau2)]
    )
    _freeze(M, s, delta)

    diff_shift = _detect_diff_shift(D, n, q)
    c_stack = None
    if problem.c_blocks is not None and len(problem.c_blocks) > 1:
        c_stack = np.stack(problem.c_blocks)
        c_stack.flags.writeable = False
    m_norm_sq = _POWER_SAFETY * _power_lambda_max(
        lambda v: M.T @ (M @ v), n_x
    )
    # gradient of <u, C u> is 2 C u, hence L = 2 lambda_max(C)
    lip = 2.0 * _POWER_SAFETY * _power_lambda_max(lambda v: C @ v, n)
    return StackedProblem(
        C=C,
        A=A,
        D=D,
        M=M,
        s=s,
        delta=delta,
        n=n,
        q=q,
        n_x=n_x,
        n_s=n_s,
        M_norm_sq=float(m_norm_sq),
        smooth_lipschitz=float(lip),
        c_blocks=problem.c_blocks,
        diff_shift=diff_shift,
        c_stack=c_stack,
    )


def initial_state(sp, lam):
    """State of the first subproblem: s_0 = 0."""
    return SubproblemState(s_k=np.zeros(sp.n_s), lam=lam)


def advance_state(sp, state, x):
    """Shift update s_{k} = s_{k-1} + s - M x."""
    return SubproblemState(s_k=state.s_k + sp.s - mat_vec(sp, x), lam=state.lam)


def mat_vec(sp, x):
    """M x computed blockwise: [A u; D u - d]."""
    u = x[: sp.n]
    d = x[sp.n :]
    if sp.diff_shift:
        du = u[sp.diff_shift :] - u[: sp.q]
    else:
        du = sp.D @ u
    return np.concatenate([sp.A @ u, du - d])


def mat_t_vec(sp, r):
    """M^T r computed blockwise: [A^T r_a + D^T r_d; -r_d]."""
    m = sp.n_s - sp.q
    ra = r[:m]
    rd = r[m:]
    top = sp.A.T @ ra
    if sp.diff_shift:
        top[: sp.q] -= rd
        top[sp.diff_shift :] += rd
    else:
        top += sp.D.T @ rd
    return np.concatenate([top, -rd])


def apply_C(sp, u):
    """C u, using the batched block product when blocks are available."""
    if sp.c_stack is not None:
        nb, na = sp.c_stack.shape[:2]
        return np.matmul(sp.c_stack, u.reshape(nb, na, 1)).reshape(sp.n)
    return sp.C @ u


def smooth_value(sp, state, x):
    """G_k(x) = <u, C u> + (lam/2) ||M x - s_k||^2."""
    u = x[: sp.n]
    r = mat_vec(sp, x) - state.s_k
    return float(u @ apply_C(sp, u) + 0.5 * state.lam * (r @ r))


def smooth_value_grad(sp, state, x):
    """Value and gradient of the smooth part of the current subproblem.

    grad G_k(x) = [2 C u; 0] + lam * M^T (M x - s_k).
    """
    if x.shape[0] != sp.n_x:
        raise DimensionMismatchError("x", x.shape, "M columns", sp.M.shape)
    u = x[: sp.n]
    cu = apply_C(sp, u)
    r = mat_vec(sp, x) - state.s_k
    value = float(u @ cu + 0.5 * state.lam * (r @ r))
    grad = state.lam * mat_t_vec(sp, r)
    grad[: sp.n] += 2.0 * cu
    return value, grad


def penalty_value(sp, x):
    """Weighted l1 term sum_i delta_i |x_i|."""
    return float(sp.delta @ np.abs(x))


def composite_value(sp, state, x):
    """H_k(x) = G_k(x) + sum_i delta_i |x_i|."""
    return smooth_value(sp, state, x) + penalty_value(sp, x)


def lipschitz_bound(sp, lam):
    """Upper bound 2*lambda_max(C) + lam*||M||^2 on the gradient Lipschitz
    constant of the smooth part, valid for every subproblem."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return sp.smooth_lipschitz + lam * sp.M_norm_sq


def constraint_violations(sp, x):
    """(||A u - b||, ||D u - d||) at the stacked point x."""
    r = mat_vec(sp, x) - sp.s
    m = sp.n_s - sp.q
    return float(np.linalg.norm(r[:m])), float(np.linalg.norm(r[m:]))


def stacked_violation(sp, x):
    """||M x - s|| against the original right-hand side."""
    return float(np.linalg.norm(mat_vec(sp, x) - sp.s))


def original_objective(sp, x):
    """Objective of the original problem at the u block of x.

    Evaluates <u, C u> + tau1 ||u||_1 + tau2 ||D u||_1 (with D u recomputed
    from u, not read from the d block).
    """
    u = x[: sp.n]
    if sp.diff_shift:
        du = u[sp.diff_shift :] - u[: sp.q]
    else:
        du = sp.D @ u
    tau1 = sp.delta[0] if sp.n else 0.0
    tau2 = sp.delta[sp.n] if sp.q else 0.0
    return float(
        u @ apply_C(sp, u)
        + tau1 * np.abs(u).sum()
        + tau2 * np.abs(du).sum()
    )
