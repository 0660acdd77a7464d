"""Boundary heads, barrier data, initial data and the hydrostatic family."""

import csv
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidData


@dataclass
class SolutionField:
    """Nodal pressure/saturation pair at one instant."""

    u: np.ndarray
    chi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.chi = np.asarray(self.chi, dtype=float)
        if self.u.shape != self.chi.shape:
            raise InvalidArgument(f"u/chi shape mismatch: {self.u.shape} vs {self.chi.shape}")

    def complementarity_residual(self):
        """max over nodes of u*(1-chi)."""
        return float(np.max(self.u * (1.0 - self.chi)))


@dataclass
class ProblemData:
    """Physical constants, boundary head and initial pair for one run."""

    alpha: float
    T_final: float
    eps0: float
    phi: Callable
    u0: np.ndarray
    chi0: np.ndarray
    M: float = dc_field(default=0.0)

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidData(f"alpha must be >= 0, got {self.alpha}")
        if self.T_final <= 0:
            raise InvalidData(f"T must be positive, got {self.T_final}")
        self.u0 = np.asarray(self.u0, dtype=float)
        self.chi0 = np.asarray(self.chi0, dtype=float)
        if not self.M:
            self.M = float(np.max(self.u0, initial=0.0))
        if np.any(self.u0 < 0) or np.any(self.u0 > self.M):
            raise InvalidData("initial pressure must satisfy 0 <= u0 <= M at every node")
        if np.any(self.chi0 < 0) or np.any(self.chi0 > 1):
            raise InvalidData("initial saturation must lie in [0, 1] at every node")


def make_barrier_data(eps0, geometry):
    """Lower/upper barrier heads for strip height eps0 in (0, K/2).

    Returns callables phi0(x1, x2) = (eps0 - x2)+ and
    phi1(x1, x2) = (K - eps0 - x2)+; both vanish on the top edge.
    """
    K = geometry.K
    if not (0.0 < eps0 < K / 2.0):
        raise InvalidArgument(f"eps0 must lie in (0, K/2)=(0, {K / 2}), got {eps0}")

    def phi0(x1, x2):
        return max(eps0 - x2, 0.0)

    def phi1(x1, x2):
        return max(K - eps0 - x2, 0.0)

    return phi0, phi1


def hydrostatic_head(k):
    """Boundary head (k - x2)+ on the whole pervious boundary."""

    def phi(x1, x2):
        return max(k - x2, 0.0)

    return phi


def two_reservoir_head(h_left, h_right, geometry):
    """Classical dam data: hydrostatic reservoirs of heights h_left/h_right
    on the lateral walls, dry top edge."""
    if h_left < 0 or h_right < 0:
        raise InvalidArgument("reservoir heights must be nonnegative")
    L = geometry.L

    def phi(x1, x2):
        if x1 <= 0.0:
            return max(h_left - x2, 0.0)
        if x1 >= L:
            return max(h_right - x2, 0.0)
        return 0.0

    return phi


def hydrostatic_profile(k, grid):
    """Exact stationary pair u = (k - x2)+, chi = 1_{x2 < k}.

    Nodes exactly at x2 = k count as dry (the wet set is open).
    """
    K = grid.geometry.K
    if not (0.0 < k < K):
        raise InvalidArgument(f"water level k must lie in (0, K)=(0, {K}), got {k}")
    _, X2 = grid.coords()
    u = np.maximum(k - X2, 0.0)
    chi = np.where(X2 < k, 1.0, 0.0)
    return SolutionField(u=u, chi=chi, time=0.0)


@dataclass(frozen=True)
class OrderingReport:
    """Max violations of a pointwise order interval."""

    max_below_lower: float
    max_above_upper: float
    tol: float

    @property
    def passed(self):
        return self.max_below_lower <= self.tol and self.max_above_upper <= self.tol


def validate_initial(data, v0, v1, gamma0, gamma1, tol_order=1e-9):
    """Check the initial pair lies in the stationary order interval.

    Reports the worst violations of v0 <= u0 <= v1 and gamma0 <= chi0 <=
    gamma1; passes iff both are within tol_order.
    """
    below = max(float(np.max(v0 - data.u0, initial=0.0)),
                float(np.max(gamma0 - data.chi0, initial=0.0)))
    above = max(float(np.max(data.u0 - v1, initial=0.0)),
                float(np.max(data.chi0 - gamma1, initial=0.0)))
    return OrderingReport(max_below_lower=below, max_above_upper=above, tol=tol_order)


def load_solution_csv(path, grid, time=0.0):
    """Load a nodal pair from CSV rows ``i,j,...,u,chi`` (u, chi last)."""
    u = np.full(grid.shape, np.nan)
    chi = np.full(grid.shape, np.nan)
    with open(path, newline="") as f:
        for row in csv.reader(f):
            if not row or row[0].strip().startswith(("i", "#")):
                continue
            i, j = int(row[0]), int(row[1])
            u[j, i], chi[j, i] = float(row[-2]), float(row[-1])
    if np.any(np.isnan(u)) or np.any(np.isnan(chi)):
        raise InvalidData(f"CSV {path} does not cover every grid node")
    return SolutionField(u=u, chi=chi, time=time)
