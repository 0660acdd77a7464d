import numpy as np
import pytest

from damflow import (DamGeometry, InvalidArgument, PenaltyConfig, build_grid,
                     classify_boundary, identity_field, make_barrier_data,
                     solve_stationary)
from damflow.evolution import EvolutionConfig, project_initial, solve_unsteady
from damflow.penalty import complementarity_bound, heaviside_eps
from damflow.problem_data import ProblemData


def _barrier_setup(n=32, eps=2e-2, alpha=0.3):
    geom = DamGeometry(1.0, 1.0)
    grid = build_grid(geom, n, n)
    phi0, phi1 = make_barrier_data(0.2, geom)
    tags = classify_boundary(grid, phi0)
    field = identity_field(geom)
    pen = PenaltyConfig(eps=eps, alpha=alpha)
    return geom, grid, tags, field, phi0, phi1, pen


def test_config_validation():
    pen = PenaltyConfig(eps=1e-2)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(dt=0.0, n_steps=5, penalty=pen)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(dt=0.1, n_steps=0, penalty=pen)
    cfg = EvolutionConfig(dt=0.1, n_steps=5, penalty=pen)
    assert cfg.T == pytest.approx(0.5)


def test_steady_state_is_a_fixed_point():
    geom, grid, tags, field, phi0, phi1, pen = _barrier_setup()
    tags1 = classify_boundary(grid, phi1)
    steady = solve_stationary(phi1, field, grid, tags1, pen)
    data = ProblemData(alpha=pen.alpha, T_final=0.1, eps0=0.2, phi=phi1,
                       u0=steady.v, chi0=steady.chi)
    cfg = EvolutionConfig(dt=0.01, n_steps=10, penalty=pen)
    traj = solve_unsteady(data, field, grid, tags1, cfg)
    dev = max(np.max(np.abs(s.u - steady.v)) for s in traj.snapshots)
    assert dev <= 1e-8


def test_drawdown_monotone_and_conservative():
    """Midpoint initial data over the lower-barrier head relaxes downward."""
    geom, grid, tags, field, phi0, phi1, pen = _barrier_setup(eps=3e-2)
    _, X2 = grid.coords()
    u_lo = np.maximum(0.2 - X2, 0.0)
    u_hi = np.maximum(0.8 - X2, 0.0)
    u0 = 0.5 * (u_lo + u_hi)
    chi0 = 0.5 * (np.where(X2 < 0.2, 1.0, 0.0) + np.where(X2 < 0.8, 1.0, 0.0))
    from damflow.geometry import dirichlet_values
    dvals = dirichlet_values(grid, tags, phi0)
    u0[tags.dirichlet_mask] = dvals[tags.dirichlet_mask]
    data = ProblemData(alpha=pen.alpha, T_final=0.3, eps0=0.2, phi=phi0, u0=u0, chi0=chi0)
    cfg = EvolutionConfig(dt=0.02, n_steps=15, penalty=pen)
    traj = solve_unsteady(data, field, grid, tags, cfg)

    assert len(traj) == 16
    # stored mass alpha*u + chi decreases as the mound drains out
    stored = [np.sum(pen.alpha * s.u + s.chi) for s in traj.snapshots]
    assert all(b < a + 1e-12 for a, b in zip(stored, stored[1:]))
    # per-step ledger stays at rounding level
    assert max(d.mass_balance_rel for d in traj.diagnostics) <= 1e-10
    # nodal positivity and the penalty complementarity bound
    for s in traj.snapshots[1:]:
        assert np.min(s.u) >= 0.0
        assert np.max(s.u * (1.0 - s.chi)) <= complementarity_bound(pen.eps) + 1e-12


def test_first_step_honors_given_saturation():
    """A chi0 inconsistent with H_eps(u0) changes the first-step outcome."""
    geom, grid, tags, field, phi0, phi1, pen = _barrier_setup(n=12, eps=6e-2)
    _, X2 = grid.coords()
    u0 = np.maximum(0.5 - X2, 0.0)
    from damflow.geometry import dirichlet_values
    dvals = dirichlet_values(grid, tags, phi0)
    u0[tags.dirichlet_mask] = dvals[tags.dirichlet_mask]
    chi_own = heaviside_eps(u0, pen.eps)
    chi_wet = np.minimum(chi_own + 0.4, 1.0)
    cfg = EvolutionConfig(dt=0.02, n_steps=1, penalty=pen)

    runs = {}
    for name, chi0 in (("own", chi_own), ("wet", chi_wet)):
        data = ProblemData(alpha=pen.alpha, T_final=0.02, eps0=0.2, phi=phi0,
                           u0=u0, chi0=chi0)
        runs[name] = solve_unsteady(data, field, grid, tags, cfg).final.u
    # the extra stored saturation must slow the drawdown
    assert np.max(np.abs(runs["wet"] - runs["own"])) > 1e-4
    assert np.min(runs["wet"] - runs["own"]) >= -1e-10


def test_project_initial_clips_under_barrier():
    geom, grid, tags, field, phi0, phi1, pen = _barrier_setup(n=12, eps=6e-2)
    tags1 = classify_boundary(grid, phi1)
    v1eps = solve_stationary(phi1, field, grid, tags1, pen)
    _, X2 = grid.coords()
    u0 = np.full(grid.shape, 0.9)
    chi0 = np.ones(grid.shape)
    data = ProblemData(alpha=pen.alpha, T_final=0.1, eps0=0.2, phi=phi0,
                       u0=u0, chi0=chi0)
    u0c, chi0c = project_initial(data, v1eps, pen)
    assert np.all(u0c <= v1eps.v + 1e-15)
    assert np.all(chi0c <= heaviside_eps(v1eps.v, pen.eps) + 1e-15)


def test_snapshot_chi_is_ramp_of_pressure():
    geom, grid, tags, field, phi0, phi1, pen = _barrier_setup(n=12, eps=6e-2)
    _, X2 = grid.coords()
    u0 = np.maximum(0.2 - X2, 0.0)
    from damflow.geometry import dirichlet_values
    dvals = dirichlet_values(grid, tags, phi0)
    u0[tags.dirichlet_mask] = dvals[tags.dirichlet_mask]
    data = ProblemData(alpha=pen.alpha, T_final=0.04, eps0=0.2, phi=phi0,
                       u0=u0, chi0=heaviside_eps(u0, pen.eps))
    cfg = EvolutionConfig(dt=0.02, n_steps=2, penalty=pen)
    traj = solve_unsteady(data, field, grid, tags, cfg)
    for idx, s in enumerate(traj.snapshots[1:], start=1):
        np.testing.assert_array_equal(s.chi, heaviside_eps(s.u, pen.eps))
        assert s.time == pytest.approx(traj.times[idx])
