import numpy as np
import pytest

from bregaccel import (
    ConstrainedL1Problem,
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SubproblemState,
    initial_state,
    lipschitz_bound,
    smooth_value_grad,
    stack,
)
from bregaccel import model as model_mod

from conftest import small_problem


def simple_problem(tau1=1e-2, tau2=1e-3):
    # A: 2x3, D: 2x3 -> M: 4x5, s = [b; 0, 0]
    return ConstrainedL1Problem(
        C=np.diag([1.0, 2.0, 3.0]),
        tau1=tau1,
        tau2=tau2,
        D=np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]),
        A=np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]]),
        b=np.array([1.0, 0.5]),
    )


class TestStack:
    def test_shapes(self):
        sp = stack(simple_problem())
        assert sp.M.shape == (4, 5)
        assert sp.n_s == 4 and sp.n_x == 5
        assert np.array_equal(sp.s, [1.0, 0.5, 0.0, 0.0])

    def test_delta_layout(self):
        sp = stack(simple_problem(tau1=0.01, tau2=0.001))
        assert np.array_equal(sp.delta, [0.01, 0.01, 0.01, 0.001, 0.001])

    def test_block_substitution(self):
        p = ConstrainedL1Problem(
            C=np.eye(2), tau1=1.0, tau2=1.0,
            D=np.array([[-1.0, 1.0]]), A=np.array([[1.0, 1.0]]), b=[1.0],
        )
        sp = stack(p)
        assert np.array_equal(sp.M, [[1.0, 1.0, 0.0], [-1.0, 1.0, -1.0]])
        assert np.array_equal(sp.s, [1.0, 0.0])

    def test_stacked_matvec_matches_blocks(self, rng):
        p = simple_problem()
        sp = stack(p)
        for _ in range(20):
            x = rng.standard_normal(sp.n_x)
            u, d = x[:3], x[3:]
            expected = np.concatenate([p.A @ u, p.D @ u - d])
            assert np.allclose(sp.M @ x, expected, rtol=1e-14, atol=1e-14)
            assert np.allclose(model_mod.mat_vec(sp, x), expected, rtol=1e-14, atol=1e-14)

    def test_mat_t_vec_is_adjoint(self, rng):
        sp = stack(simple_problem())
        for _ in range(20):
            x = rng.standard_normal(sp.n_x)
            r = rng.standard_normal(sp.n_s)
            lhs = np.dot(model_mod.mat_vec(sp, x), r)
            rhs = np.dot(x, model_mod.mat_t_vec(sp, r))
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_diff_shift_detection(self):
        p = small_problem(seed=0, n_assets=3, periods=2)
        sp = stack(p)
        assert sp.diff_shift == 3
        # structure-aware products agree with the dense M
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.standard_normal(sp.n_x)
            assert np.allclose(model_mod.mat_vec(sp, x), sp.M @ x, atol=1e-14)
            r = rng.standard_normal(sp.n_s)
            assert np.allclose(model_mod.mat_t_vec(sp, r), sp.M.T @ r, atol=1e-14)

    def test_m_norm_bounds_top_eigenvalue(self):
        sp = stack(simple_problem())
        lam_max = np.linalg.eigvalsh(sp.M.T @ sp.M).max()
        assert sp.M_norm_sq >= lam_max * (1 - 1e-6)
        assert sp.M_norm_sq <= lam_max * 1.02


class TestValidation:
    def test_dimension_mismatch_names_pair(self):
        with pytest.raises(DimensionMismatchError, match="D"):
            ConstrainedL1Problem(
                C=np.eye(2), tau1=0.1, tau2=0.1,
                D=np.zeros((1, 3)), A=np.zeros((1, 2)), b=[0.0],
            )
        with pytest.raises(DimensionMismatchError, match="b"):
            ConstrainedL1Problem(
                C=np.eye(2), tau1=0.1, tau2=0.1,
                D=np.zeros((1, 2)), A=np.zeros((1, 2)), b=[0.0, 1.0],
            )

    def test_rejects_asymmetric_c(self):
        with pytest.raises(NotPositiveDefiniteError):
            ConstrainedL1Problem(
                C=[[1.0, 0.5], [0.2, 1.0]], tau1=0.1, tau2=0.1,
                D=np.zeros((0, 2)), A=np.zeros((0, 2)), b=[],
            )

    def test_rejects_indefinite_c(self):
        with pytest.raises(NotPositiveDefiniteError):
            ConstrainedL1Problem(
                C=[[1.0, 2.0], [2.0, 1.0]], tau1=0.1, tau2=0.1,
                D=np.zeros((0, 2)), A=np.zeros((0, 2)), b=[],
            )

    def test_rejects_negative_tau(self):
        with pytest.raises(ValueError):
            ConstrainedL1Problem(
                C=np.eye(1), tau1=-0.1, tau2=0.0,
                D=np.zeros((0, 1)), A=np.zeros((0, 1)), b=[],
            )

    def test_rejects_non_finite_data(self):
        with pytest.raises(ValueError, match="non-finite"):
            ConstrainedL1Problem(
                C=np.eye(2), tau1=0.1, tau2=0.1,
                D=np.zeros((0, 2)), A=[[1.0, np.nan]], b=[1.0],
            )


class TestSmoothValueGrad:
    def test_hand_case(self):
        # C=[[1]], lam=1, M=[[1]] (one constraint row, no d block), s_k=0,
        # x=2: G = 4 + 2 = 6 and dG = 2*C*x + M'(Mx) = 4 + 2 = 6
        p = ConstrainedL1Problem(
            C=[[1.0]], tau1=0.0, tau2=0.0,
            D=np.zeros((0, 1)), A=[[1.0]], b=[0.0],
        )
        sp = stack(p)
        state = initial_state(sp, 1.0)
        val, grad = smooth_value_grad(sp, state, np.array([2.0]))
        assert val == pytest.approx(6.0)
        assert grad[0] == pytest.approx(6.0)

    def test_zero_point(self):
        sp = stack(simple_problem())
        state = initial_state(sp, 1.0)
        val, grad = smooth_value_grad(sp, state, np.zeros(sp.n_x))
        assert val == 0.0
        assert np.all(grad == 0.0)

    def test_gradient_matches_finite_differences(self, rng):
        sp = stack(small_problem(seed=1, n_assets=3, periods=2))
        state = SubproblemState(s_k=rng.standard_normal(sp.n_s), lam=1.0)
        for _ in range(10):
            x = rng.standard_normal(sp.n_x)
            _, grad = smooth_value_grad(sp, state, x)
            h = 1e-4
            for i in range(sp.n_x):
                e = np.zeros(sp.n_x)
                e[i] = h
                vp, _ = smooth_value_grad(sp, state, x + e)
                vm, _ = smooth_value_grad(sp, state, x - e)
                fd = (vp - vm) / (2 * h)
                assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestLipschitzBound:
    def test_identity_case(self):
        # C = 1x1 identity, M = 2x2 identity (via A = I, no D), lam = 1:
        # bound is 2 + 1 up to the 1% power-iteration safety factor
        p = ConstrainedL1Problem(
            C=[[1.0]], tau1=0.0, tau2=0.0,
            D=np.zeros((0, 1)), A=[[1.0]], b=[0.0],
        )
        sp = stack(p)
        assert lipschitz_bound(sp, 1.0) == pytest.approx(3.0, rel=0.02)

    def test_scaled_case(self):
        # C=[[2]] gives L=4; M with top eigenvalue of M'M equal 4 and
        # lam=0.5 adds 2
        p = ConstrainedL1Problem(
            C=[[2.0]], tau1=0.0, tau2=0.0,
            D=np.zeros((0, 1)), A=[[2.0]], b=[0.0],
        )
        sp = stack(p)
        assert lipschitz_bound(sp, 0.5) == pytest.approx(6.0, rel=0.02)

    def test_sampled_lipschitz_inequality(self, rng):
        sp = stack(small_problem(seed=2, n_assets=3, periods=2))
        state = SubproblemState(s_k=rng.standard_normal(sp.n_s), lam=1.0)
        lip = lipschitz_bound(sp, 1.0)
        for _ in range(100):
            y = rng.standard_normal(sp.n_x)
            z = rng.standard_normal(sp.n_x)
            _, gy = smooth_value_grad(sp, state, y)
            _, gz = smooth_value_grad(sp, state, z)
            assert np.linalg.norm(gy - gz) <= lip * np.linalg.norm(y - z) * (1 + 1e-12)

    def test_monotone_in_lambda(self):
        sp = stack(simple_problem())
        bounds = [lipschitz_bound(sp, lam) for lam in (0.1, 1.0, 10.0, 100.0)]
        assert all(b1 < b2 for b1, b2 in zip(bounds, bounds[1:]))

    def test_rejects_nonpositive_lambda(self):
        sp = stack(simple_problem())
        with pytest.raises(ValueError):
            lipschitz_bound(sp, 0.0)


class TestSubproblemState:
    def test_initial_state_is_zero(self):
        sp = stack(simple_problem())
        state = initial_state(sp, 1.0)
        assert np.all(state.s_k == 0.0)

    def test_advance(self, rng):
        sp = stack(simple_problem())
        state = initial_state(sp, 1.0)
        x = rng.standard_normal(sp.n_x)
        new = model_mod.advance_state(sp, state, x)
        assert np.allclose(new.s_k, sp.s - sp.M @ x, atol=1e-14)

    def test_rejects_nonpositive_lam(self):
        with pytest.raises(ValueError):
            SubproblemState(s_k=np.zeros(2), lam=0.0)
