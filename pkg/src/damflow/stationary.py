"""Penalized stationary dam solves.

Find v with v = phi on the pervious boundary and
``integral a(x)(grad v + H_eps(v) e) . grad(xi) = 0`` for all xi vanishing
there; the impervious bottom carries the natural no-flux condition.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .assembly import (LinearSolver, Q1Assembler, apply_dirichlet_matrix,
                       apply_dirichlet_system)
from .errors import InvalidArgument, NonConvergence
from .geometry import dirichlet_values
from .nonlinear import newton_picard_solve
from .penalty import heaviside_eps, heaviside_eps_derivative
from .problem_data import SolutionField

TOL_NEWTON = 1e-9
MAX_ITERS = 50
TOL_NEG = 1e-10
TOL_CHI = 1e-2


@dataclass
class StationarySolve:
    """Converged penalized stationary solution plus solver diagnostics."""

    v: np.ndarray
    chi: np.ndarray
    residual_norm: float
    newton_iters: int
    eps_used: float
    method: str = "newton"
    diagnostics: dict = dc_field(default_factory=dict)

    def solution_field(self):
        return SolutionField(u=self.v, chi=self.chi, time=0.0)


def stationary_residual(v_flat, asm, tags, config, phi_flat):
    """Discrete weak-form residual; Dirichlet rows read v - phi."""
    vq = asm.interp_at_quad(v_flat)
    r = asm.stiffness() @ v_flat + asm.gravity_vector(heaviside_eps(vq, config.eps))
    dmask = tags.dirichlet_mask.ravel()
    r[dmask] = v_flat[dmask] - phi_flat[dmask]
    return r


def assemble_stationary_residual(v, field, grid, tags, config, n_gauss=2):
    """Residual of the penalized stationary weak form for a nodal field v.

    v must already carry its own Dirichlet values (those rows come back 0).
    """
    v_flat = grid.flatten(v)
    if v_flat.size != grid.n_nodes:
        raise InvalidArgument(f"field has {v_flat.size} values, grid has {grid.n_nodes} nodes")
    asm = Q1Assembler(grid, field, n_gauss=n_gauss)
    return stationary_residual(v_flat, asm, tags, config, v_flat)


def stationary_jacobian(v_flat, asm, tags, config):
    vq = asm.interp_at_quad(v_flat)
    J = asm.stiffness() + asm.gravity_jacobian(heaviside_eps_derivative(vq, config.eps))
    return apply_dirichlet_matrix(J, tags.dirichlet_mask.ravel())


def hydrostatic_initial_guess(grid, tags, phi_flat):
    """Hydrostatic extension of the boundary data, exact for hydrostatic runs.

    Uses the highest head seen on the wetted pervious boundary:
    v0(x) = (k* - x2)+ with k* = max(phi + x2 over {phi > 0}), clipped to
    [0, K].  Dry pervious nodes carry no head information (their phi + x2
    would just report their own elevation), so they are excluded.
    """
    _, X2 = grid.coords()
    dmask = tags.dirichlet_mask
    phi2d = phi_flat.reshape(grid.shape)
    wet = dmask & (phi2d > 0.0)
    heads = phi2d[wet] + X2[wet]
    k_star = float(np.max(heads, initial=0.0))
    v = np.clip(np.maximum(k_star - X2, 0.0), 0.0, grid.geometry.K).ravel()
    v[dmask.ravel()] = phi_flat[dmask.ravel()]
    return v


def _positivity_polish(v, asm, tags, config, phi_flat, linsolver, tol_newton, max_iters):
    """Active-set enforcement of the nonnegativity constraint v >= 0.

    The sharp penalty ramp is subgrid once eps drops below roughly 2h/3 and
    the plain Galerkin solution then carries tiny negative ripples in the
    unsaturated tail.  The continuous penalized solution is nonnegative, so
    those nodes are clamped to zero (treated as an obstacle contact set) and
    the free nodes re-solved; the loop repeats until the contact set is
    complementary: v >= 0 everywhere, reaction >= 0 on clamped nodes.
    Returns (v, stats, n_clamped).
    """
    dmask = tags.dirichlet_mask.ravel()
    active = np.zeros(v.size, dtype=bool)
    stats = None
    for _ in range(10):
        r = stationary_residual(v, asm, tags, config, phi_flat)
        grow = (v < -TOL_NEG) & ~dmask & ~active
        release = active & (r < -TOL_NEG)
        if not grow.any() and not release.any():
            break
        active = (active | grow) & ~release
        pinned = dmask | active
        vals = np.where(dmask, phi_flat, 0.0)

        def residual(w):
            rr = stationary_residual(w, asm, tags, config, phi_flat)
            rr[active] = w[active]
            return rr

        def jacobian(w):
            J = stationary_jacobian(w, asm, tags, config)
            return apply_dirichlet_matrix(J, active) if active.any() else J

        def picard(w):
            vq = asm.interp_at_quad(w)
            rhs = -asm.gravity_vector(heaviside_eps(vq, config.eps))
            return apply_dirichlet_system(asm.stiffness(), pinned, vals, rhs)

        v = np.where(active, 0.0, v)
        v, stats = newton_picard_solve(v, residual, jacobian, picard, linsolver,
                                       tol_newton=tol_newton, max_iters=max_iters)
    return v, stats, int(active.sum())


# continuation kicks in once the penalty ramp is thinner than this many cells
_EPS_RESOLVED_CELLS = 0.7
_EPS_LADDER_RATIO = 0.65


def solve_stationary(phi, field, grid, tags, config, tol_newton=TOL_NEWTON,
                     max_iters=MAX_ITERS, method="newton", asm=None):
    """Solve the penalized stationary problem for boundary head ``phi``.

    phi may be a callable (x1, x2) -> head or a nodal array.  Returns a
    StationarySolve whose chi is H_eps(v) nodally.  Subgrid eps is reached
    by continuation in eps (warm-started ladder), and residual nodal
    negativity beyond TOL_NEG is removed by an obstacle-style active-set
    polish, so the returned v is nonnegative up to rounding.
    """
    from .penalty import PenaltyConfig

    if asm is None:
        asm = Q1Assembler(grid, field)
    if callable(phi):
        phi_flat = dirichlet_values(grid, tags, phi).ravel()
    else:
        phi_flat = grid.flatten(phi).copy()
    dmask = tags.dirichlet_mask.ravel()
    if np.any(phi_flat[dmask] < 0):
        raise InvalidArgument("boundary head must be nonnegative")

    linsolver = LinearSolver()

    # eps ladder: start where the ramp spans ~a cell, walk down geometrically
    eps_resolved = _EPS_RESOLVED_CELLS * grid.h2
    ladder = []
    e = eps_resolved
    while e > config.eps * (1.0 + 1e-12):
        ladder.append(e)
        e *= _EPS_LADDER_RATIO
    ladder.append(config.eps)

    v = hydrostatic_initial_guess(grid, tags, phi_flat)
    stats = None
    total_iters = 0
    for eps_k in ladder:
        cfg_k = config if eps_k == config.eps else PenaltyConfig(eps=eps_k, alpha=config.alpha)

        def residual(w, cfg_k=cfg_k):
            return stationary_residual(w, asm, tags, cfg_k, phi_flat)

        def jacobian(w, cfg_k=cfg_k):
            return stationary_jacobian(w, asm, tags, cfg_k)

        def picard(w, cfg_k=cfg_k):
            vq = asm.interp_at_quad(w)
            rhs = -asm.gravity_vector(heaviside_eps(vq, cfg_k.eps))
            return apply_dirichlet_system(asm.stiffness(), dmask, phi_flat, rhs)

        v, stats = newton_picard_solve(v, residual, jacobian, picard, linsolver,
                                       tol_newton=tol_newton, max_iters=max_iters,
                                       method=method)
        total_iters += stats.iters

    v, pstats, n_clamped = _positivity_polish(v, asm, tags, config, phi_flat, linsolver,
                                              tol_newton, max_iters)
    if pstats is not None:
        stats = pstats
        total_iters += pstats.iters

    v_min = float(np.min(v))
    if v_min < -TOL_NEG:
        raise NonConvergence(f"pressure undershoot {v_min:.3e} exceeds -{TOL_NEG}",
                             residual_norm=stats.residual_norm)
    v = np.maximum(v, 0.0).reshape(grid.shape)
    chi = heaviside_eps(v, config.eps)
    return StationarySolve(v=v, chi=chi, residual_norm=stats.residual_norm,
                           newton_iters=total_iters, eps_used=config.eps, method=stats.method,
                           diagnostics={"initial_residual_norm": stats.initial_residual_norm,
                                        "line_search_failures": stats.line_search_failures,
                                        "linear_fallbacks": linsolver.fallbacks,
                                        "clamped_nodes": n_clamped,
                                        "continuation_steps": len(ladder)})
