import json

import numpy as np
import pytest

from bregaccel import InputError, SolverConfig, load_problem, random_model, save_problem, solve, stack
from bregaccel import synth


class TestRandomModel:
    def test_determinism(self):
        a = random_model(seed=42, n_assets=3, periods=2)
        b = random_model(seed=42, n_assets=3, periods=2)
        for ba_blk, bb_blk in zip(a.c_blocks, b.c_blocks):
            assert np.array_equal(ba_blk, bb_blk)
        assert np.array_equal(a.problem.A, b.problem.A)

    def test_dimensions(self):
        pm = random_model(seed=1, n_assets=3, periods=2)
        assert pm.problem.n == 6
        assert pm.problem.q == 3
        assert pm.problem.m == 3  # periods + 1 constraint rows

    def test_blocks_pass_cholesky(self):
        pm = random_model(seed=2, n_assets=6, periods=3)
        for blk in pm.c_blocks:
            np.linalg.cholesky(blk)

    def test_spectrum_bounds(self):
        pm = random_model(seed=3, n_assets=5, periods=1,
                          eig_min=1e-3, eig_max=1e-2)
        eigs = np.linalg.eigvalsh(pm.c_blocks[0])
        assert eigs.min() >= 1e-3 * 0.99
        assert eigs.max() <= 1e-2 * 1.01


class TestRandomPanel:
    def test_determinism_and_shape(self):
        a = synth.random_panel(seed=7, n_assets=4, n_periods=30)
        b = synth.random_panel(seed=7, n_assets=4, n_periods=30)
        assert np.array_equal(a.returns, b.returns)
        assert a.returns.shape == (30, 4)

    def test_returns_above_total_loss(self):
        panel = synth.random_panel(seed=8, n_assets=10, n_periods=200)
        assert panel.returns.min() > -1.0


class TestProblemFiles:
    def test_round_trip_bit_identical_file(self, tmp_path):
        pm = random_model(seed=42, n_assets=3, periods=2)
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_problem(pm, p1, seed=42)
        save_problem(pm, p2, seed=42)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_identical_solver_trace(self, tmp_path):
        pm = random_model(seed=9, n_assets=2, periods=2)
        path = tmp_path / "prob.json"
        save_problem(pm, path)
        pm2 = load_problem(path)
        for blk1, blk2 in zip(pm.c_blocks, pm2.c_blocks):
            assert np.array_equal(blk1, blk2)
        r1 = solve(stack(pm.problem), SolverConfig())
        r2 = solve(stack(pm2.problem), SolverConfig())
        assert np.array_equal(r1.x_final, r2.x_final)
        assert r1.outer_iters == r2.outer_iters

    def test_rejects_unknown_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "other"}))
        with pytest.raises(InputError, match="format"):
            load_problem(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="missing.json"):
            load_problem(tmp_path / "missing.json")
