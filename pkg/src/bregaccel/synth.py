"""Seed-deterministic random portfolio instances and their file format.

Covariance blocks are drawn as Q diag(lam) Q^T with Q a random orthogonal
factor and lam log-uniform over [eig_min, eig_max]; expected returns are
Gaussian.  The target wealth defaults to the naive benchmark's, so every
generated instance has a natural feasible point.  Files are JSON; floats
survive the round trip bit for bit.
"""

import json

import numpy as np

from .errors import InputError
from .portfolio import ReturnPanel, build_model, naive_wealth

FORMAT_TAG = "bregaccel-problem-v1"


def random_panel(seed, n_assets, n_periods, market_vol=0.02, beta_spread=0.25,
                 idio_vol_range=(0.004, 0.02), mean_range=(-0.002, 0.012),
                 market_mean=0.004):
    """Simulate a return panel from a one-factor model.

    Assets share a market component through per-asset loadings and carry
    idiosyncratic noise with log-uniform volatilities.  The strong common
    factor concentrates optimal portfolios on few holdings, which is the
    regime the subspace acceleration targets.
    """
    if n_assets < 1 or n_periods < 1:
        raise InputError("n_assets and n_periods must be positive")
    rng = np.random.default_rng(seed)
    beta = rng.normal(1.0, beta_spread, n_assets)
    lo, hi = idio_vol_range
    idio = np.exp(rng.uniform(np.log(lo), np.log(hi), n_assets))
    mu = rng.uniform(mean_range[0], mean_range[1], n_assets)
    mkt = rng.normal(market_mean, market_vol, n_periods)
    eps = rng.standard_normal((n_periods, n_assets)) * idio
    returns = np.maximum(mu + np.outer(mkt, beta) + eps, -0.6)
    return ReturnPanel(
        asset_names=tuple(f"A{i:02d}" for i in range(n_assets)),
        periods=tuple(f"p{t:04d}" for t in range(n_periods)),
        returns=returns,
    )


def random_model(seed, n_assets, periods, tau1=1e-2, tau2=1e-2,
                 eig_min=2e-4, eig_max=5e-2, mean_return=0.01,
                 return_spread=0.03, xi_ini=1.0):
    """Generate a random fused-lasso portfolio instance."""
    if n_assets < 1 or periods < 1:
        raise InputError("n_assets and periods must be positive")
    if not (0 < eig_min <= eig_max):
        raise InputError("need 0 < eig_min <= eig_max")
    rng = np.random.default_rng(seed)
    c_blocks = []
    r = []
    for _ in range(periods):
        g = rng.standard_normal((n_assets, n_assets))
        q_mat, _ = np.linalg.qr(g)
        lam = np.exp(rng.uniform(np.log(eig_min), np.log(eig_max), n_assets))
        blk = (q_mat * lam) @ q_mat.T
        blk = 0.5 * (blk + blk.T)
        c_blocks.append(blk)
        r.append(np.maximum(rng.normal(mean_return, return_spread, n_assets), -0.5))
    xi_fin, _ = naive_wealth(r, n_assets, xi_ini)
    return build_model(c_blocks, r, xi_ini, xi_fin, tau1, tau2)


def save_problem(pm, path, seed=None):
    """Serialize a PortfolioModel to a self-contained JSON file."""
    doc = {
        "format": FORMAT_TAG,
        "n_assets": pm.n_assets,
        "periods": pm.n_periods,
        "tau1": pm.tau1,
        "tau2": pm.tau2,
        "xi_ini": pm.xi_ini,
        "xi_fin": pm.xi_fin,
        "c_blocks": [blk.tolist() for blk in pm.c_blocks],
        "returns": [v.tolist() for v in pm.r],
    }
    if seed is not None:
        doc["seed"] = seed
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_problem(path):
    """Rebuild a PortfolioModel from a problem file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read problem file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if doc.get("format") != FORMAT_TAG:
        raise InputError(
            f"{path}: unknown problem format {doc.get('format')!r}, "
            f"expected {FORMAT_TAG}"
        )
    try:
        return build_model(
            c_blocks=[np.asarray(b, dtype=np.float64) for b in doc["c_blocks"]],
            r=[np.asarray(v, dtype=np.float64) for v in doc["returns"]],
            xi_ini=doc["xi_ini"],
            xi_fin=doc["xi_fin"],
            tau1=doc["tau1"],
            tau2=doc["tau2"],
        )
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from exc
