import numpy as np
import pytest

from bregaccel import (
    GammaState,
    OptimalityMeasures,
    SubproblemState,
    cg_solve,
    composite_value,
    compute_beta_phi,
    line_search,
    min_norm_subgradient,
    partition,
    project_onto_face,
    restricted_problem,
    smooth_value_grad,
    stack,
    switching_test,
)
from bregaccel.errors import EmptyFaceError, LineSearchError
from bregaccel.subspace import ReducedQuadratic

from conftest import small_problem


class TestPartition:
    def test_mixed(self):
        part = partition(np.array([3.0, -4.0, 0.0]))
        assert part.plus.tolist() == [0]
        assert part.minus.tolist() == [1]
        assert part.zero.tolist() == [2]
        assert part.nonzero.tolist() == [0, 1]

    def test_all_zero(self):
        part = partition(np.zeros(4))
        assert part.zero.tolist() == [0, 1, 2, 3]
        assert part.nonzero.size == 0

    def test_no_zeros(self):
        part = partition(np.array([1.0, -2.0]))
        assert part.zero.size == 0

    def test_partition_is_exact(self, rng):
        for _ in range(20):
            x = rng.standard_normal(6)
            x[rng.integers(0, 6)] = 0.0
            part = partition(x)
            together = np.sort(
                np.concatenate([part.plus, part.minus, part.zero])
            )
            assert together.tolist() == list(range(6))


class TestMinNormSubgradient:
    def test_zero_branch_negative(self):
        part = partition(np.array([0.0]))
        g = min_norm_subgradient(np.array([-3.0]), np.array([1.0]), part)
        assert g[0] == -2.0

    def test_zero_branch_inside_box(self):
        part = partition(np.array([0.0]))
        g = min_norm_subgradient(np.array([0.5]), np.array([1.0]), part)
        assert g[0] == 0.0

    def test_positive_branch(self):
        part = partition(np.array([5.0]))
        g = min_norm_subgradient(np.array([2.0]), np.array([1.0]), part)
        assert g[0] == 3.0

    def test_agrees_with_measures(self, rng):
        for _ in range(50):
            x = rng.standard_normal(7)
            x[rng.integers(0, 7)] = 0.0
            grad = rng.standard_normal(7)
            delta = np.abs(rng.standard_normal(7))
            g1 = min_norm_subgradient(grad, delta, partition(x))
            g2 = compute_beta_phi(grad, delta, x).g
            assert np.array_equal(g1, g2)


class TestBetaPhi:
    def test_hand_case_both_branches(self):
        meas = compute_beta_phi(
            np.array([-3.0, 0.5]), np.array([1.0, 1.0]), np.array([0.0, 1.0])
        )
        assert meas.beta.tolist() == [-2.0, 0.0]
        assert meas.phi.tolist() == [0.0, 1.0]

    def test_negative_branch_clamp(self):
        meas = compute_beta_phi(np.array([0.0]), np.array([1.0]), np.array([-2.0]))
        assert meas.phi[0] == -1.0

    def test_stationary_point_vanishes(self):
        # x > 0 with grad = -delta satisfies the first stationarity branch
        meas = compute_beta_phi(np.array([-1.0]), np.array([1.0]), np.array([2.0]))
        assert meas.beta[0] == 0.0 and meas.phi[0] == 0.0 and meas.g[0] == 0.0

    def test_supports_are_disjoint(self, rng):
        for _ in range(100):
            x = rng.standard_normal(9)
            x[rng.integers(0, 9, size=3)] = 0.0
            grad = rng.standard_normal(9) * 3
            delta = np.abs(rng.standard_normal(9))
            meas = compute_beta_phi(grad, delta, x)
            assert np.all(meas.beta[x != 0.0] == 0.0)
            assert np.all(meas.phi[x == 0.0] == 0.0)

    def test_zero_measures_iff_zero_subgradient(self, rng):
        hit_stationary = 0
        for trial in range(200):
            x = rng.standard_normal(5)
            x[rng.integers(0, 5, size=2)] = 0.0
            delta = np.abs(rng.standard_normal(5)) + 0.1
            if trial % 4 == 0:
                # construct an exactly stationary gradient for this x
                grad = np.where(x > 0, -delta, np.where(x < 0, delta, 0.0))
                grad[x == 0.0] = 0.9 * delta[x == 0.0]
            else:
                grad = rng.standard_normal(5)
            meas = compute_beta_phi(grad, delta, x)
            both_zero = not meas.beta.any() and not meas.phi.any()
            g_zero = not meas.g.any()
            assert both_zero == g_zero
            hit_stationary += both_zero
        assert hit_stationary >= 50  # the constructed cases really are stationary


class TestSwitching:
    def test_zero_beta_accelerates(self):
        gs = GammaState(gamma=10.0)
        meas = OptimalityMeasures(
            g=np.zeros(2), beta=np.zeros(2), phi=np.array([1.0, 0.0])
        )
        assert switching_test(meas, gs)
        assert gs.gamma == pytest.approx(9.0)

    def test_standard_branch_grows_gamma(self):
        gs = GammaState(gamma=10.0)
        meas = OptimalityMeasures(
            g=np.zeros(1), beta=np.array([5.0]), phi=np.array([0.4])
        )
        assert not switching_test(meas, gs)
        assert gs.gamma == pytest.approx(11.0)

    def test_boundary_zero_zero(self):
        gs = GammaState(gamma=10.0)
        meas = OptimalityMeasures(g=np.zeros(1), beta=np.zeros(1), phi=np.zeros(1))
        assert switching_test(meas, gs)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            GammaState(gamma=0.0)


class TestRestrictedProblem:
    def test_no_zero_coordinates_keeps_full_size(self, rng):
        sp = stack(small_problem(seed=3, n_assets=2, periods=2))
        state = SubproblemState(s_k=rng.standard_normal(sp.n_s), lam=1.0)
        x = rng.standard_normal(sp.n_x)
        x[x == 0.0] = 1.0
        red = restricted_problem(sp, state, partition(x), x)
        assert red.free.size == sp.n_x
        # gradient of the reduced objective at x equals smooth grad + signed
        # l1 slopes
        _, grad = smooth_value_grad(sp, state, x)
        expected = grad + np.sign(x) * sp.delta
        assert np.allclose(red.gradient(x), expected, rtol=1e-10, atol=1e-12)

    def test_two_variable_case_reduces_to_one(self):
        p = small_problem(seed=4, n_assets=2, periods=1)
        sp = stack(p)
        state = SubproblemState(s_k=np.zeros(sp.n_s), lam=1.0)
        x = np.array([1.0, 0.0])
        red = restricted_problem(sp, state, partition(x), x)
        assert red.free.tolist() == [0]
        assert red.lin[0] == pytest.approx(sp.delta[0])

    def test_empty_face_raises(self):
        sp = stack(small_problem(seed=5))
        state = SubproblemState(s_k=np.zeros(sp.n_s), lam=1.0)
        x = np.zeros(sp.n_x)
        with pytest.raises(EmptyFaceError):
            restricted_problem(sp, state, partition(x), x)

    def test_reduced_gradient_matches_finite_differences(self, rng):
        sp = stack(small_problem(seed=6, n_assets=3, periods=2))
        state = SubproblemState(s_k=rng.standard_normal(sp.n_s), lam=1.0)
        x = rng.standard_normal(sp.n_x)
        x[rng.integers(0, sp.n_x, size=3)] = 0.0
        red = restricted_problem(sp, state, partition(x), x)
        w = rng.standard_normal(red.free.size)
        grad = red.gradient(w)
        h = 1e-5
        for i in range(w.size):
            e = np.zeros(w.size)
            e[i] = h
            fd = (red.objective(w + e) - red.objective(w - e)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestCgSolve:
    def test_diagonal_system(self):
        red = ReducedQuadratic(
            Q=np.diag([2.0, 4.0]), lin=np.array([-2.0, -4.0]),
            free=np.array([0, 1]), x0=np.zeros(2),
        )
        w, iters, rel = cg_solve(red, tol_cg=1e-12, max_iters=5)
        assert np.allclose(w, [1.0, 1.0], atol=1e-10)
        assert iters <= 2

    def test_zero_rhs_zero_start(self):
        red = ReducedQuadratic(
            Q=np.eye(3), lin=np.zeros(3), free=np.arange(3), x0=np.zeros(3)
        )
        w, iters, rel = cg_solve(red, tol_cg=1e-2)
        assert iters == 0
        assert np.all(w == 0.0) and rel == 0.0

    def test_capped_random_pd(self, rng):
        g = rng.standard_normal((8, 8))
        q_mat = g @ g.T + 8 * np.eye(8)
        lin = rng.standard_normal(8)
        red = ReducedQuadratic(Q=q_mat, lin=lin, free=np.arange(8), x0=np.zeros(8))
        w, iters, rel = cg_solve(red, tol_cg=1e-2, max_iters=4)
        assert iters <= 4
        assert rel <= 1e-2 or iters == 4
        # compare against the direct solve when converged
        if rel <= 1e-2:
            ref = np.linalg.solve(q_mat, -lin)
            assert np.linalg.norm(w - ref) <= 1e-1 * np.linalg.norm(ref)

    def test_exact_termination_property(self, rng):
        for trial in range(5):
            g = rng.standard_normal((6, 6))
            q_mat = g @ g.T + 6 * np.eye(6)
            lin = rng.standard_normal(6)
            red = ReducedQuadratic(Q=q_mat, lin=lin, free=np.arange(6),
                                   x0=np.zeros(6))
            w, iters, rel = cg_solve(red, tol_cg=1e-14, max_iters=12)
            assert rel <= 1e-10

    def test_default_cap_half_size_with_floor(self, rng):
        g = rng.standard_normal((24, 24))
        q_mat = g @ g.T + np.eye(24) * 1e-3
        lin = rng.standard_normal(24)
        red = ReducedQuadratic(Q=q_mat, lin=lin, free=np.arange(24),
                               x0=np.zeros(24))
        _, iters, _ = cg_solve(red, tol_cg=1e-16)
        assert iters <= 12
        # small faces get at least the floor, not a 1-2 step budget
        g = rng.standard_normal((3, 3))
        q_mat = g @ g.T + np.eye(3) * 1e-6
        red = ReducedQuadratic(Q=q_mat, lin=rng.standard_normal(3),
                               free=np.arange(3), x0=np.zeros(3))
        _, iters, rel = cg_solve(red, tol_cg=1e-10)
        assert rel <= 1e-10 or iters >= 3


class TestProjectOntoFace:
    def test_both_clipped(self):
        out = project_onto_face(np.array([-1.0, 2.0]), np.array([3.0, -4.0]))
        assert out.tolist() == [0.0, 0.0]

    def test_identity_inside_face(self):
        z = np.array([2.0, -1.0, 0.0])
        x_ref = np.array([1.0, -3.0, 0.0])
        assert np.array_equal(project_onto_face(z, x_ref), z)

    def test_zero_reference(self):
        assert np.all(project_onto_face(np.array([1.0, -1.0]), np.zeros(2)) == 0.0)

    def test_idempotent_and_in_face(self, rng):
        for _ in range(100):
            x_ref = rng.standard_normal(6)
            x_ref[rng.integers(0, 6, size=2)] = 0.0
            z = rng.standard_normal(6) * 3
            p1 = project_onto_face(z, x_ref)
            p2 = project_onto_face(p1, x_ref)
            assert np.array_equal(p1, p2)
            assert np.all(p1[x_ref == 0.0] == 0.0)
            assert np.all(p1[x_ref > 0.0] >= 0.0)
            assert np.all(p1[x_ref < 0.0] <= 0.0)


class TestLineSearch:
    def _setup(self, seed=7):
        sp = stack(small_problem(seed=seed, n_assets=3, periods=2))
        rng = np.random.default_rng(seed)
        state = SubproblemState(s_k=rng.standard_normal(sp.n_s) * 0.1, lam=1.0)
        return sp, state, rng

    def test_full_step_onto_face_minimizer(self):
        sp, state, rng = self._setup()
        x = np.abs(rng.standard_normal(sp.n_x)) + 0.5
        red = restricted_problem(sp, state, partition(x), x)
        z = np.linalg.solve(red.Q, red.rhs)
        if np.all(z > 0):
            x_new, alpha = line_search(sp, state, x, z, eta=0.1)
            assert alpha == 1.0
            assert np.allclose(x_new, z)

    def test_zero_direction(self):
        sp, state, rng = self._setup(8)
        x = rng.standard_normal(sp.n_x)
        x_new, alpha = line_search(sp, state, x, x.copy(), eta=0.1)
        assert alpha == 1.0
        assert np.array_equal(x_new, x)

    def test_step_leaving_face_gets_projected(self):
        sp, state, _ = self._setup(9)
        x = np.full(sp.n_x, 0.2)
        # target flips the sign of the first coordinates; the projection must
        # clip them at zero, never past it
        z = x.copy()
        z[:2] = -1.0
        x_new, alpha = line_search(sp, state, x, z, eta=1e-8)
        for i in range(sp.n_x):
            assert np.sign(x_new[i]) in (0.0, np.sign(x[i]))

    def test_never_increases_objective(self):
        sp, state, rng = self._setup(10)
        for _ in range(50):
            x = rng.standard_normal(sp.n_x)
            x[rng.integers(0, sp.n_x, size=2)] = 0.0
            if not np.any(x != 0.0):
                continue
            red = restricted_problem(sp, state, partition(x), x)
            w, _, _ = cg_solve(red, tol_cg=1e-2)
            z = np.zeros(sp.n_x)
            z[red.free] = w
            try:
                x_new, _ = line_search(sp, state, x, z, eta=0.1)
            except LineSearchError:
                continue
            assert composite_value(sp, state, x_new) <= composite_value(
                sp, state, x
            ) + 1e-12
            assert np.all(x_new[x == 0.0] == 0.0)
