"""Backward-Euler time stepping of the penalized unsteady problem.

Each step solves M (G_eps(u^{n+1}) - G_eps(u^n))/dt + S(u^{n+1}) = 0 with
lumped mass M and the stationary residual operator S; the saturation is
always reported as H_eps of the new pressure.
"""

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .assembly import (LinearSolver, Q1Assembler, apply_dirichlet_matrix,
                       apply_dirichlet_system)
from .errors import InvalidArgument, NonConvergence, StepFailure
from .geometry import dirichlet_values
from .nonlinear import newton_picard_solve
from .penalty import PenaltyConfig, g_eps, g_eps_derivative, heaviside_eps, heaviside_eps_derivative
from .problem_data import SolutionField
from .stationary import TOL_NEG, TOL_NEWTON, stationary_residual, stationary_jacobian

MAX_DT_RETRIES = 3


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    n_steps: int
    penalty: PenaltyConfig
    time_reg: float = 0.0
    mass_lumping: bool = True
    tol_newton: float = TOL_NEWTON
    method: str = "newton"

    def __post_init__(self):
        if self.dt <= 0 or self.n_steps < 1:
            raise InvalidArgument(f"need dt > 0 and n_steps >= 1, got {self.dt}, {self.n_steps}")

    @property
    def T(self):
        return self.dt * self.n_steps


@dataclass
class StepDiagnostics:
    time: float
    newton_iters: int
    residual_norm: float
    mass_balance_rel: float
    boundary_inflow: float
    method: str
    dt_halvings: int = 0


@dataclass
class Trajectory:
    """Snapshots at t = 0, dt, ..., T plus per-step solver diagnostics."""

    times: list
    snapshots: list
    diagnostics: list = dc_field(default_factory=list)

    def __len__(self):
        return len(self.snapshots)

    @property
    def final(self):
        return self.snapshots[-1]


def project_initial(data, v1eps, config):
    """Clip the initial pair under the penalized upper barrier.

    u0e = min(u0, v1e) and chi0e = min(chi0, H_eps(v1e)), both nodal.
    """
    return _clip_under_barrier(data.u0, data.chi0, v1eps, config)


def _clip_under_barrier(u0, chi0, v1eps, config):
    v1 = np.asarray(v1eps.v, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != v1.shape:
        raise InvalidArgument(f"initial data shape {u0.shape} != barrier shape {v1.shape}")
    return np.minimum(u0, v1), np.minimum(np.asarray(chi0, dtype=float),
                                          heaviside_eps(v1, config.eps))


class _Stepper:
    """Caches assembly shared by every step of one trajectory."""

    def __init__(self, field, grid, tags, phi, config):
        self.grid = grid
        self.tags = tags
        self.config = config
        self.asm = Q1Assembler(grid, field)
        self.phi_flat = dirichlet_values(grid, tags, phi).ravel() if callable(phi) \
            else grid.flatten(phi).copy()
        self.dmask = tags.dirichlet_mask.ravel()
        if not config.mass_lumping:
            raise InvalidArgument("only the lumped-mass scheme is implemented")
        self.mlump = self.asm.lumped_mass()
        self.linsolver = LinearSolver()

    def advance(self, u_flat, dt, u_prev_flat=None, chi_old=None):
        """One backward-Euler step; returns (u_next_flat, SolveStats).

        chi_old lets the caller carry a saturation that is not H_eps(u_old),
        as happens for the very first step of runs whose initial pair was
        given independently.
        """
        cfg = self.config
        pen = cfg.penalty
        if chi_old is None:
            g_old = g_eps(u_flat, pen)
        else:
            g_old = pen.alpha * u_flat + chi_old
        reg = cfg.time_reg

        def residual(u):
            r = self.mlump * (g_eps(u, pen) - g_old) / dt
            r += self.asm.stiffness() @ u
            vq = self.asm.interp_at_quad(u)
            r += self.asm.gravity_vector(heaviside_eps(vq, pen.eps))
            if reg > 0.0 and u_prev_flat is not None:
                r += reg * self.mlump * (u - 2.0 * u_flat + u_prev_flat) / dt
            r[self.dmask] = u[self.dmask] - self.phi_flat[self.dmask]
            return r

        def jacobian(u):
            diag = self.mlump * g_eps_derivative(u, pen) / dt
            if reg > 0.0 and u_prev_flat is not None:
                diag = diag + reg * self.mlump / dt
            vq = self.asm.interp_at_quad(u)
            J = (sp.diags(diag) + self.asm.stiffness()
                 + self.asm.gravity_jacobian(heaviside_eps_derivative(vq, pen.eps)))
            return apply_dirichlet_matrix(J, self.dmask)

        def picard(u):
            # freeze the gravity saturation at the current iterate, keep the
            # monotone storage term semi-implicit through its diagonal slope;
            # symmetric elimination keeps the system SPD for CG
            diag = self.mlump * g_eps_derivative(u, pen) / dt
            if reg > 0.0 and u_prev_flat is not None:
                diag = diag + reg * self.mlump / dt
            A0 = (sp.diags(diag) + self.asm.stiffness()).tocsr()
            rhs0 = A0 @ u - residual(u)  # Dirichlet rows overwritten below
            return apply_dirichlet_system(A0, self.dmask, self.phi_flat, rhs0)

        u0 = u_flat.copy()
        u0[self.dmask] = self.phi_flat[self.dmask]
        u_next, stats = newton_picard_solve(u0, residual, jacobian, picard, self.linsolver,
                                            tol_newton=cfg.tol_newton, method=cfg.method)
        return u_next, residual, stats

    def ledger(self, u_old_flat, u_new_flat, dt, chi_old=None):
        """Per-step mass balance: storage change vs boundary inflow.

        The PDE rows at free nodes are the imbalance between the two
        (discrete divergence theorem; the bottom contributes no flux);
        Dirichlet rows, negated, are the discrete inflow through the
        pervious boundary.  The imbalance is reported relative to the total
        stored mass.
        """
        pen = self.config.penalty
        if chi_old is None:
            g_old = g_eps(u_old_flat, pen)
        else:
            g_old = pen.alpha * u_old_flat + chi_old
        vq = self.asm.interp_at_quad(u_new_flat)
        pde = (self.mlump * (g_eps(u_new_flat, pen) - g_old) / dt
               + self.asm.stiffness() @ u_new_flat
               + self.asm.gravity_vector(heaviside_eps(vq, pen.eps)))
        inflow = -float(np.sum(pde[self.dmask])) * dt
        imbalance = float(np.sum(pde[~self.dmask])) * dt
        scale = max(float(np.sum(self.mlump * np.abs(g_eps(u_new_flat, pen)))), abs(inflow), 1e-30)
        return imbalance, inflow, scale


def step(state, config, field, grid, tags, phi, u_prev=None, stepper=None):
    """Advance one snapshot by dt with dt-halving retries on failure."""
    if stepper is None:
        stepper = _Stepper(field, grid, tags, phi, config)
    u_flat = grid.flatten(state.u).copy()
    chi_flat = grid.flatten(state.chi).copy()
    u_prev_flat = grid.flatten(u_prev) if u_prev is not None else None

    dt = config.dt
    halvings = 0
    while True:
        try:
            u = u_flat
            chi_old = chi_flat
            ledgers = []
            for _ in range(2 ** halvings):
                u_next, _, stats = stepper.advance(u, dt, u_prev_flat, chi_old=chi_old)
                ledgers.append(stepper.ledger(u, u_next, dt, chi_old=chi_old))
                u = u_next
                chi_old = None  # substeps after the first carry H_eps(u)
            break
        except NonConvergence as exc:
            halvings += 1
            if halvings > MAX_DT_RETRIES:
                raise StepFailure(f"step at t={state.time} failed after {MAX_DT_RETRIES} "
                                  f"dt halvings: {exc}", step_index=round(state.time / config.dt),
                                  residual_norm=exc.residual_norm) from exc
            dt = dt / 2.0

    u_min = float(np.min(u))
    if u_min < -TOL_NEG:
        raise StepFailure(f"pressure undershoot {u_min:.3e} at t={state.time + config.dt}",
                          step_index=round(state.time / config.dt), residual_norm=stats.residual_norm)
    u = np.maximum(u, 0.0)
    imbalance = sum(entry[0] for entry in ledgers)
    inflow = sum(entry[1] for entry in ledgers)
    scale = max(max(entry[2] for entry in ledgers), 1e-30)
    mass_rel = abs(imbalance) / scale
    new = SolutionField(u=u.reshape(grid.shape),
                        chi=heaviside_eps(u.reshape(grid.shape), config.penalty.eps),
                        time=state.time + config.dt)
    diag = StepDiagnostics(time=new.time, newton_iters=stats.iters,
                           residual_norm=stats.residual_norm, mass_balance_rel=mass_rel,
                           boundary_inflow=inflow, method=stats.method, dt_halvings=halvings)
    return new, diag


def solve_unsteady(data, field, grid, tags, config, u0=None, chi0=None,
                   v1eps: Optional[object] = None):
    """Time-step the penalized problem from the (projected) initial data.

    When a penalized upper barrier is supplied the initial pair is first
    clipped under it; otherwise (u0, chi0) (or data.u0, data.chi0) is used
    as given.
    """
    if u0 is None:
        u0, chi0 = data.u0, data.chi0
    if v1eps is not None:
        u0, chi0 = _clip_under_barrier(u0, chi0, v1eps, config.penalty)

    stepper = _Stepper(field, grid, tags, data.phi, config)
    first = SolutionField(u=np.asarray(u0, dtype=float).reshape(grid.shape),
                          chi=np.asarray(chi0, dtype=float).reshape(grid.shape), time=0.0)
    traj = Trajectory(times=[0.0], snapshots=[first], diagnostics=[])
    state = first
    prev_u = None
    for n in range(config.n_steps):
        new, diag = step(state, config, field, grid, tags, data.phi,
                         u_prev=prev_u, stepper=stepper)
        traj.times.append(new.time)
        traj.snapshots.append(new)
        traj.diagnostics.append(diag)
        prev_u = state.u
        state = new
    return traj
