"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import polytherm as pt


@pytest.fixture
def grid():
    return pt.GridSpec([8, 8, 8], [1.0, 1.0, 1.0])


def test_grid_basics(grid):
    assert grid.points() == 512
    assert grid.cell_volume() == pytest.approx((1.0 / 8) ** 3)


def test_diff_skew_adjointness(grid):
    rng = np.random.default_rng(1)
    f = rng.uniform(-1, 1, size=(8, 8, 8, 1))
    g = rng.uniform(-1, 1, size=(8, 8, 8, 1))
    for axis in (1, 2, 3):
        lhs = pt.inner(grid, pt.diff(grid, f, axis), g)
        rhs = -pt.inner(grid, f, pt.diff(grid, g, axis))
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_cof_det_identity():
    rng = np.random.default_rng(2)
    F = rng.uniform(-1, 1, size=(3, 3))
    C = pt.cof(F)
    d = pt.det(F)
    assert np.allclose(C.T @ F, d * np.eye(3), atol=1e-12)
    p = pt.phi(F)
    assert p.shape == (19,)
    assert p[18] == pytest.approx(d)


def test_equilibrium_run_conserves_energy(grid):
    cfg_text = """
[grid]
n = 8 8 8
length = 1 1 1
[model]
name = polyconvex
[time]
T = 0.01
h = 0.001
"""
    init = pt.initial_state_from_config(cfg_text)
    model = pt.make_model("polyconvex")
    sc = pt.StepConfig()
    sc.h = 1e-3
    traj = pt.run(init, 0.01, sc, model)
    assert not traj.failed
    assert traj.steps == 10
    energies = [pt.total_energy(s, model) for s in traj.states]
    assert max(energies) - min(energies) <= 1e-12 * (1 + abs(energies[0]))
    cert = pt.dissipation_certificate(traj, model)
    assert cert["pass"]


def test_solve_step_report(grid):
    rng = np.random.default_rng(3)
    y = 0.01 * rng.uniform(-1, 1, size=(8, 8, 8, 3))
    v = 0.1 * rng.uniform(-1, 1, size=(8, 8, 8, 3))
    eta = np.ones((8, 8, 8, 1))
    state = pt.make_state(grid, np.eye(3), y, v, eta)
    model = pt.make_model("polyconvex")
    sc = pt.StepConfig()
    sc.h = 1e-3
    r = np.zeros((8, 8, 8, 1))
    new_state, report = pt.solve_step(state, grid, r, sc, model)
    assert report["grad_norm_final"] <= 1e-9 * 2
    assert report["energy_after"] <= report["energy_before"] + 1e-6
    assert new_state.t == pytest.approx(1e-3)


def test_checkpoint_roundtrip(tmp_path, grid):
    cfg_text = """
[grid]
n = 8 8 8
length = 1 1 1
[model]
name = polyconvex
[init]
preset = smooth-wave
[time]
T = 0.002
h = 0.001
"""
    init = pt.initial_state_from_config(cfg_text)
    model = pt.make_model("polyconvex")
    sc = pt.StepConfig()
    sc.h = 1e-3
    traj = pt.run(init, 0.002, sc, model)
    path = str(tmp_path / "traj.ckpt")
    pt.checkpoint_save(traj, path)
    loaded = pt.checkpoint_load(path)
    assert loaded.steps == traj.steps
    a = traj.states[-1].v
    b = loaded.states[-1].v
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_model_hypotheses():
    model = pt.make_model("polyconvex")
    rep = pt.check_hypotheses(model, samples=200, seed=5)
    assert rep["passed"]
    bad = pt.make_model("nonconvex-probe")
    rep_bad = pt.check_hypotheses(bad, samples=200, seed=5)
    assert not rep_bad["passed"]
    assert rep_bad["hess_min"] < 0
