"""Pure-numpy implementations of the elementwise hot kernels.

Semantics here are the reference; the compiled backend must match bit for bit.
All functions treat zero coordinates with an exact ``== 0`` test, because
iterates produced by soft thresholding and face projection carry exact zeros.
"""

import numpy as np


def soft_threshold_vec(v, t):
    """Componentwise sign(v) * max(|v| - t, 0); ``t`` may be scalar or vector."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_grad_step(y, grad, step, delta):
    """One proximal gradient step: soft threshold of y - step*grad at step*delta."""
    return soft_threshold_vec(y - step * grad, step * delta)


def momentum_combine(z, z_prev, coef):
    """Extrapolated point z + coef * (z - z_prev)."""
    return z + coef * (z - z_prev)


def diff_norm2(a, b):
    """Squared Euclidean norm of a - b."""
    d = a - b
    return float(np.dot(d, d))


def min_norm_subgrad(grad, delta, x):
    """Minimum-norm subgradient of grad-smooth-part + weighted l1 at x.

    On nonzero coordinates the subgradient is grad +/- delta by the sign of x;
    on zero coordinates it is the nearest-to-zero element of [grad-delta, grad+delta].
    """
    gp = grad + delta
    gm = grad - delta
    zero_branch = np.where(gp < 0.0, gp, np.where(gm > 0.0, gm, 0.0))
    return np.where(x > 0.0, gp, np.where(x < 0.0, gm, zero_branch))


def beta_phi(grad, delta, x):
    """Optimality-violation split of the min-norm subgradient.

    beta carries the violation on zero coordinates, phi the violation on
    nonzero coordinates clamped by how far each coordinate can move before
    changing sign.  Returns (beta, phi).
    """
    gp = grad + delta
    gm = grad - delta
    zero_mask = x == 0.0
    beta = np.where(
        zero_mask & (gp < 0.0), gp, np.where(zero_mask & (gm > 0.0), gm, 0.0)
    )
    phi_pos = np.minimum(gp, np.maximum(x, gm))
    phi_neg = np.maximum(gm, np.minimum(x, gp))
    phi = np.where(x > 0.0, phi_pos, np.where(x < 0.0, phi_neg, 0.0))
    return beta, phi


def project_face(z, x_ref):
    """Project z onto the closed orthant face containing x_ref."""
    return np.where(
        x_ref > 0.0,
        np.maximum(z, 0.0),
        np.where(x_ref < 0.0, np.minimum(z, 0.0), 0.0),
    )
