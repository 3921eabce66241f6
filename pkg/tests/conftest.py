"""Shared helpers: independent enumeration oracle for unconstrained
composite quadratics, small instance factories, CSV fixtures."""

import csv
import itertools

import numpy as np
import pytest

from bregaccel import synth


def composite_quadratic_argmin(q_mat, lin, delta):
    """Enumeration oracle for min_w 0.5 w'Qw + lin'w + sum_i delta_i |w_i|.

    Q must be positive definite.  Checks the stationarity system over every
    sign pattern; independent of any solver code path.
    """
    q_mat = np.asarray(q_mat, dtype=float)
    lin = np.asarray(lin, dtype=float)
    delta = np.asarray(delta, dtype=float)
    n = lin.shape[0]
    best_val = np.inf
    best_w = None
    for sigma in itertools.product((-1, 0, 1), repeat=n):
        sigma = np.asarray(sigma)
        free = np.flatnonzero(sigma != 0)
        w = np.zeros(n)
        if free.size:
            rhs = -(lin[free] + sigma[free] * delta[free])
            try:
                w_free = np.linalg.solve(q_mat[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(sigma[free] * w_free < -1e-12):
                continue
            w[free] = w_free
        grad = q_mat @ w + lin
        zero = np.flatnonzero(sigma == 0)
        if np.any(np.abs(grad[zero]) > delta[zero] + 1e-9):
            continue
        val = 0.5 * w @ (q_mat @ w) + lin @ w + delta @ np.abs(w)
        if val < best_val:
            best_val = val
            best_w = w
    assert best_w is not None, "composite oracle found no stationary pattern"
    return best_w, best_val


def small_problem(seed, n_assets=2, periods=2, tau1=1e-2, tau2=1e-2):
    """Random tiny portfolio instance (n_x <= 10 for the defaults)."""
    pm = synth.random_model(seed=seed, n_assets=n_assets, periods=periods,
                            tau1=tau1, tau2=tau2)
    return pm.problem


def write_panel_csv(panel, path, percent=False):
    scale = 100.0 if percent else 1.0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.asset_names])
        for t, period in enumerate(panel.periods):
            writer.writerow([period, *(f"{v * scale:.17g}" for v in panel.returns[t])])


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
