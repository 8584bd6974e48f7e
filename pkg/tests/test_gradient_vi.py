import numpy as np
import pytest

from fracvi import (Coefficients, DualDatum, PLaplace, ScalarField,
                    SolverConfig, SolverError, Unconstrained, VectorField,
                    build_grid, frac_gradient, interval_mask,
                    solve_gradient_vi, solve_vi)

from oracles import torsion_exact


def _F(grid, f0_vals):
    return DualDatum(ScalarField(grid, f0_vals),
                     VectorField(grid, [np.zeros(grid.size)
                                        for _ in range(grid.d)]))


def test_zero_data_zero_solution():
    g = build_grid(1, 2.0, 128)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=2.0, principal=PLaplace(1.0))
    gbound = ScalarField(g, np.ones(g.size))
    rep = solve_gradient_vi(co, _F(g, np.zeros(g.size)), gbound, 1.0, 0.8, mask)
    assert np.max(np.abs(rep.solution.values)) < 1e-10
    assert rep.converged


def test_inactive_bound_matches_unconstrained():
    g = build_grid(1, 2.0, 128)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=2.0, principal=PLaplace(1.0), beta=1.0)
    f0 = np.where(mask.inside, 0.3 * np.cos(np.pi * g.axis_coords() / 2), 0.0)
    F = _F(g, f0)
    s = 0.7
    free = solve_vi(co, F, Unconstrained(), s, mask, SolverConfig(tol=1e-11))
    gmax = float(np.max(frac_gradient(free.solution, s).magnitude()))
    gbound = ScalarField(g, np.full(g.size, 5.0 * gmax + 1.0))
    cfg = SolverConfig(tol=1e-9)
    rep = solve_gradient_vi(co, F, gbound, 1.0, s, mask, cfg)
    assert rep.converged
    assert np.max(np.abs(rep.solution.values - free.solution.values)) < 1e-6


def test_nu_floor_rejected():
    g = build_grid(1, 2.0, 64)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=2.0, principal=PLaplace(1.0))
    gbound = ScalarField(g, np.ones(g.size))
    with pytest.raises(SolverError, match="nu"):
        solve_gradient_vi(co, _F(g, np.zeros(g.size)), gbound, 0.0, 0.5, mask)


@pytest.mark.parametrize("N", [256, 512])
def test_elastoplastic_torsion(N):
    g = build_grid(1, 2.0, N)
    x = g.axis_coords()
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=2.0, principal=PLaplace(1.0))
    f0 = np.where(mask.inside, 2.0, 0.0)
    gbound = ScalarField(g, np.ones(g.size))
    cfg = SolverConfig(tol=1e-9, rho=50.0)
    rep = solve_gradient_vi(co, _F(g, f0), gbound, 1.0, 1.0, mask, cfg)
    assert rep.converged
    err = np.max(np.abs(rep.solution.values - torsion_exact(x)))
    assert err <= 5 * g.h


def test_feasibility_at_output():
    g = build_grid(1, 2.0, 256)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=2.0, principal=PLaplace(1.0))
    f0 = np.where(mask.inside, 2.0, 0.0)
    gbound = ScalarField(g, np.ones(g.size))
    cfg = SolverConfig(tol=1e-9, rho=50.0)
    rep = solve_gradient_vi(co, _F(g, f0), gbound, 1.0, 1.0, mask, cfg)
    viol = np.max(frac_gradient(rep.solution, 1.0).magnitude()
                  - gbound.values)
    assert viol <= cfg.tol * (1 + 1.0)
    feas, dual_res, gap = rep.kkt
    assert feas <= cfg.tol * 2
    assert dual_res <= cfg.tol
    assert gap >= -1e-12


def test_p3_gradient_constraint_active():
    g = build_grid(1, 2.0, 128)
    rng = np.random.default_rng(3)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=3.0, principal=PLaplace(1.0))
    f0 = np.where(mask.inside, 1.5, 0.0)
    gbound = ScalarField(g, np.full(g.size, 0.4))
    cfg = SolverConfig(tol=1e-8, rho=10.0)
    rep = solve_gradient_vi(co, _F(g, f0), gbound, 0.4, 0.8, mask, cfg)
    assert rep.converged
    mag = frac_gradient(rep.solution, 0.8).magnitude()
    assert np.max(mag) <= 0.4 + cfg.tol * 2
    assert np.max(mag) >= 0.39  # the constraint genuinely binds


def test_p15_with_beta_uses_second_block():
    g = build_grid(1, 2.0, 128)
    mask = interval_mask(g, -1.0, 1.0)
    co = Coefficients(p=1.5, principal=PLaplace(1.0), beta=0.5)
    f0 = np.where(mask.inside, 1.0, 0.0)
    gbound = ScalarField(g, np.full(g.size, 0.6))
    cfg = SolverConfig(tol=1e-7, rho=10.0, max_iters=20000)
    rep = solve_gradient_vi(co, _F(g, f0), gbound, 0.2, 0.6, mask, cfg)
    assert rep.converged
    assert np.max(frac_gradient(rep.solution, 0.6).magnitude()) <= 0.6 + 1e-6
