"""Multi-period portfolio layer: moment estimation, model assembly, the
naive benchmark, and the financial quality metrics.

A model over m rebalancing periods and n_a assets has n = m * n_a holdings
stacked period-major in u.  The quadratic term is block diagonal with the
per-period covariance estimates; the equality constraints chain the budget
through the periods (invest xi_ini, reinvest the revalued wealth each
period, hit the target xi_fin at the end); the second l1 term penalizes
holding changes between consecutive periods.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotPositiveDefiniteError
from .model import ConstrainedL1Problem


@dataclass(frozen=True)
class ReturnPanel:
    """Per-period simple returns (decimals) for a universe of assets."""

    asset_names: tuple
    periods: tuple
    returns: np.ndarray

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=np.float64)
        if returns.ndim != 2:
            raise InputError("returns must be a 2-d array (periods x assets)")
        if returns.shape != (len(self.periods), len(self.asset_names)):
            raise InputError(
                f"returns shape {returns.shape} does not match "
                f"{len(self.periods)} periods x {len(self.asset_names)} assets"
            )
        if not np.isfinite(returns).all():
            raise InputError("returns contain missing or non-finite values")
        if (returns <= -1.0).any():
            raise InputError("returns must be greater than -1")
        returns.flags.writeable = False
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))
        object.__setattr__(self, "periods", tuple(self.periods))

    @property
    def n_assets(self):
        return len(self.asset_names)

    @property
    def n_periods(self):
        return len(self.periods)


def drop_most_volatile(panel, k):
    """Remove the k assets with the highest full-sample standard deviation."""
    if k <= 0:
        return panel
    if k >= panel.n_assets:
        raise InputError(f"cannot drop {k} of {panel.n_assets} assets")
    vols = panel.returns.std(axis=0, ddof=1)
    drop = set(np.argsort(-vols, kind="stable")[:k].tolist())
    keep = [i for i in range(panel.n_assets) if i not in drop]
    return ReturnPanel(
        asset_names=tuple(panel.asset_names[i] for i in keep),
        periods=panel.periods,
        returns=panel.returns[:, keep],
    )


def estimate_moments(panel, window, rebalance_stride, m, cov_divisor="unbiased",
                     ridge=0.0):
    """Rolling-window sample moments at each rebalancing date.

    Decision j (j = 0..m-1) uses the ``window`` periods ending just before
    row window + j*stride.  Covariance divisor is window-1 ("unbiased") or
    window ("biased").  A positive ``ridge`` adds ridge*I to every block.
    Raises NotPositiveDefiniteError naming the offending block.
    """
    if window < 2:
        raise InputError("window must span at least 2 periods")
    if rebalance_stride < 1 or m < 1:
        raise InputError("rebalance_stride and m must be positive")
    need = window + (m - 1) * rebalance_stride
    if need > panel.n_periods:
        raise InputError(
            f"panel too short: need {need} periods "
            f"(window {window} + {m - 1} strides of {rebalance_stride}), "
            f"have {panel.n_periods}"
        )
    if cov_divisor not in ("unbiased", "biased"):
        raise InputError("cov_divisor must be 'unbiased' or 'biased'")
    div = window - 1 if cov_divisor == "unbiased" else window

    c_blocks = []
    r_list = []
    for j in range(m):
        end = window + j * rebalance_stride
        w = panel.returns[end - window : end]
        r_j = w.mean(axis=0)
        centered = w - r_j
        c_j = (centered.T @ centered) / div
        c_j = 0.5 * (c_j + c_j.T)
        if ridge > 0.0:
            c_j = c_j + ridge * np.eye(panel.n_assets)
        try:
            np.linalg.cholesky(c_j)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                f"covariance block {j} is not positive definite "
                f"(window ending at period {end}); consider a longer window "
                f"or a ridge"
            ) from exc
        c_blocks.append(c_j)
        r_list.append(r_j)
    return tuple(c_blocks), tuple(r_list)


@dataclass(frozen=True)
class PortfolioModel:
    """Assembled fused-lasso portfolio program."""

    c_blocks: tuple
    r: tuple
    xi_ini: float
    xi_fin: float
    tau1: float
    tau2: float
    problem: ConstrainedL1Problem

    @property
    def n_assets(self):
        return self.c_blocks[0].shape[0]

    @property
    def n_periods(self):
        return len(self.c_blocks)


def build_model(c_blocks, r, xi_ini, xi_fin, tau1, tau2):
    """Assemble C, D, A, b from per-period moments.

    D differences consecutive periods of the same asset: row i has -1 at i
    and +1 at i + n_a.  A has m+1 rows: the budget row sums the first
    period; row j equates period j's budget with the revalued previous
    holdings; the last row prices the final holdings at 1 + r_m against
    xi_fin.  b = (xi_ini, 0, ..., 0, xi_fin).
    """
    m = len(c_blocks)
    if m < 1 or len(r) != m:
        raise InputError(f"need matching moment lists, got {len(c_blocks)} blocks "
                         f"and {len(r)} return vectors")
    n_a = np.asarray(c_blocks[0]).shape[0]
    n = m * n_a

    c_blocks = tuple(np.asarray(B, dtype=np.float64) for B in c_blocks)
    r = tuple(np.asarray(v, dtype=np.float64) for v in r)
    c_full = np.zeros((n, n))
    for j, blk in enumerate(c_blocks):
        c_full[j * n_a : (j + 1) * n_a, j * n_a : (j + 1) * n_a] = blk

    q = n - n_a
    d_mat = np.zeros((q, n))
    rows = np.arange(q)
    d_mat[rows, rows] = -1.0
    d_mat[rows, rows + n_a] = 1.0

    a_mat = np.zeros((m + 1, n))
    a_mat[0, :n_a] = 1.0
    for j in range(1, m):
        a_mat[j, j * n_a : (j + 1) * n_a] = 1.0
        a_mat[j, (j - 1) * n_a : j * n_a] = -(1.0 + r[j - 1])
    a_mat[m, (m - 1) * n_a :] = 1.0 + r[m - 1]
    b = np.zeros(m + 1)
    b[0] = xi_ini
    b[m] = xi_fin

    problem = ConstrainedL1Problem(
        C=c_full, tau1=tau1, tau2=tau2, D=d_mat, A=a_mat, b=b,
        c_blocks=c_blocks,
    )
    return PortfolioModel(
        c_blocks=c_blocks, r=r, xi_ini=float(xi_ini), xi_fin=float(xi_fin),
        tau1=float(tau1), tau2=float(tau2), problem=problem,
    )


def naive_wealth(r, n_a, xi_ini):
    """Equal-split benchmark: wealth recursion and the naive portfolio.

    At each rebalance the current wealth is split evenly over the assets;
    the period's return revalues it.  Returns (final wealth, naive u).
    """
    w = float(xi_ini)
    parts = []
    for r_j in r:
        r_j = np.asarray(r_j, dtype=np.float64)
        u_j = np.full(n_a, w / n_a)
        parts.append(u_j)
        w = float(u_j @ (1.0 + r_j))
    return w, np.concatenate(parts)


@dataclass(frozen=True)
class MetricSet:
    """One row of quality metrics for a portfolio vector."""

    ratio: float
    density_pct: float
    shorts: int
    t_cost: int
    v_norm1: int
    v_norm_inf: int


@dataclass(frozen=True)
class PortfolioMetrics:
    """Metrics on the thresholded solution and on the raw one."""

    thresholded: MetricSet
    raw: MetricSet
    eps1: float
    eps2: float


def _metric_set(u, u_naive, c_full, n_a, active_mask, vary_mask):
    n = u.shape[0]
    m = n // n_a
    risk_naive = float(u_naive @ (c_full @ u_naive))
    risk = float(u @ (c_full @ u))
    ratio = risk_naive / risk if risk > 0.0 else float("inf")
    density = 100.0 * int(active_mask.sum()) / n
    shorts = int((u[active_mask] < 0.0).sum())
    if m >= 2:
        vary = vary_mask.reshape(m - 1, n_a).T  # assets x period gaps
        t_cost = int(vary.sum())
        v_norm1 = int(vary.sum(axis=0).max())
        v_norm_inf = int(vary.sum(axis=1).max())
    else:
        t_cost = v_norm1 = v_norm_inf = 0
    return MetricSet(
        ratio=ratio,
        density_pct=density,
        shorts=shorts,
        t_cost=t_cost,
        v_norm1=v_norm1,
        v_norm_inf=v_norm_inf,
    )


def compute_metrics(u_opt, u_naive, c_full, n_a, eps1=1e-4, eps2=1e-4):
    """Quality metrics of a solution against the naive benchmark.

    The thresholded row zeroes entries below eps1 and counts weight changes
    of at least eps2; the raw row counts exact nonzeros, strictly negative
    entries and strictly nonzero changes.  The risk ratio of the thresholded
    row is computed on the thresholded vector.
    """
    if eps1 <= 0 or eps2 <= 0:
        raise InputError("eps1 and eps2 must be positive")
    u_opt = np.asarray(u_opt, dtype=np.float64)
    u_naive = np.asarray(u_naive, dtype=np.float64)
    n = u_opt.shape[0]
    if n % n_a or u_naive.shape[0] != n:
        raise InputError("u vectors must stack whole periods of n_a assets")

    u_thr = np.where(np.abs(u_opt) >= eps1, u_opt, 0.0)
    diffs_thr = np.abs(u_thr[n_a:] - u_thr[:-n_a])
    diffs_raw = np.abs(u_opt[n_a:] - u_opt[:-n_a])
    thresholded = _metric_set(
        u_thr, u_naive, c_full, n_a, np.abs(u_thr) > 0.0, diffs_thr >= eps2
    )
    raw = _metric_set(
        u_opt, u_naive, c_full, n_a, u_opt != 0.0, diffs_raw > 0.0
    )
    return PortfolioMetrics(thresholded=thresholded, raw=raw, eps1=eps1, eps2=eps2)
