"""Heterogeneous symmetric permeability tensors and assumption checks.

A permeability field maps points of the closed rectangle to symmetric
positive-definite 2x2 tensors.  Built-in kinds cover the identity, layered
diagonal fields affine in x2, smooth analytic fields, and fields sampled on
a grid with bilinear interpolation (loadable from CSV).
"""

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolation, InvalidArgument, OutOfDomain

KIND_IDENTITY = "IDENTITY"
KIND_LAYERED = "LAYERED"
KIND_SMOOTH_ANALYTIC = "SMOOTH_ANALYTIC"
KIND_GRID_SAMPLED = "GRID_SAMPLED"


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 2x2 tensor; a21 is structurally identical to a12."""

    a11: float
    a12: float
    a22: float

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 ** 2

    def is_positive_definite(self):
        return self.a11 > 0 and self.det > 0

    def apply(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([self.a11 * xi[0] + self.a12 * xi[1],
                         self.a12 * xi[0] + self.a22 * xi[1]])

    def eigenvalues(self):
        tr = self.a11 + self.a22
        disc = np.sqrt((self.a11 - self.a22) ** 2 / 4.0 + self.a12 ** 2)
        return tr / 2.0 - disc, tr / 2.0 + disc


@dataclass(frozen=True)
class PermeabilityField:
    """Tensor-valued coefficient field on the closed rectangle.

    ``tensor`` evaluates (a11, a12, a22) on numpy arrays of coordinates.
    ``div_ae`` is the analytic divergence of the column a(x)e when known,
    i.e. d(a12)/dx1 + d(a22)/dx2; ``None`` means estimate by finite
    differences.
    """

    kind: str
    tensor: Callable
    div_ae: Optional[Callable] = None
    geometry: object = None
    params: dict = None

    def __call__(self, x1, x2):
        return self.tensor(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


@dataclass(frozen=True)
class AssumptionReport:
    """Sampled estimates of the ellipticity/regularity constants."""

    lambda_est: float
    Lambda_est: float
    N_est: float
    div_ae_min: float
    symmetric: bool = True
    div_sign_ok: bool = True

    def as_dict(self):
        return {
            "lambda_est": self.lambda_est,
            "Lambda_est": self.Lambda_est,
            "N_est": self.N_est,
            "div_ae_min": self.div_ae_min,
            "symmetric": self.symmetric,
            "div_sign_ok": self.div_sign_ok,
        }


def identity_field(geometry=None):
    def tensor(x1, x2):
        one = np.ones(np.broadcast(x1, x2).shape)
        return one, np.zeros_like(one), one

    return PermeabilityField(KIND_IDENTITY, tensor, div_ae=lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
                             geometry=geometry, params={})


def layered_field(a11=1.0, a22_base=1.0, a22_slope=0.0, geometry=None):
    """Diagonal field diag(a11, a22_base + a22_slope * x2)."""

    def tensor(x1, x2):
        shape = np.broadcast(x1, x2).shape
        return (np.full(shape, float(a11)), np.zeros(shape),
                np.broadcast_to(a22_base + a22_slope * np.asarray(x2, dtype=float), shape).copy())

    def div_ae(x1, x2):
        return np.full(np.broadcast(x1, x2).shape, float(a22_slope))

    return PermeabilityField(KIND_LAYERED, tensor, div_ae=div_ae, geometry=geometry,
                             params={"a11": a11, "a22_base": a22_base, "a22_slope": a22_slope})


def smooth_field(a11, a12, a22, div_ae=None, geometry=None, params=None):
    """Analytic field from three callables (x1, x2) -> entry value."""

    def tensor(x1, x2):
        shape = np.broadcast(x1, x2).shape
        x1 = np.broadcast_to(np.asarray(x1, dtype=float), shape)
        x2 = np.broadcast_to(np.asarray(x2, dtype=float), shape)
        return (np.broadcast_to(a11(x1, x2), shape).astype(float),
                np.broadcast_to(a12(x1, x2), shape).astype(float),
                np.broadcast_to(a22(x1, x2), shape).astype(float))

    return PermeabilityField(KIND_SMOOTH_ANALYTIC, tensor, div_ae=div_ae, geometry=geometry,
                             params=params or {})


def constant_anisotropic_field(a11=1.0, a12=0.0, a22=1.0, geometry=None):
    return smooth_field(lambda x1, x2: np.full(x1.shape, float(a11)),
                        lambda x1, x2: np.full(x1.shape, float(a12)),
                        lambda x1, x2: np.full(x1.shape, float(a22)),
                        div_ae=lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
                        geometry=geometry, params={"a11": a11, "a12": a12, "a22": a22})


def grid_sampled_field(grid, a11_nodes, a12_nodes, a22_nodes):
    """Field given by nodal samples, interpolated bilinearly between nodes."""
    a11_nodes = np.asarray(a11_nodes, dtype=float).reshape(grid.shape)
    a12_nodes = np.asarray(a12_nodes, dtype=float).reshape(grid.shape)
    a22_nodes = np.asarray(a22_nodes, dtype=float).reshape(grid.shape)

    def interp(nodes, x1, x2):
        s = np.clip(np.asarray(x1, dtype=float) / grid.h1, 0.0, grid.nx)
        t = np.clip(np.asarray(x2, dtype=float) / grid.h2, 0.0, grid.ny)
        i0 = np.minimum(s.astype(int), grid.nx - 1)
        j0 = np.minimum(t.astype(int), grid.ny - 1)
        fs, ft = s - i0, t - j0
        return ((1 - fs) * (1 - ft) * nodes[j0, i0] + fs * (1 - ft) * nodes[j0, i0 + 1]
                + fs * ft * nodes[j0 + 1, i0 + 1] + (1 - fs) * ft * nodes[j0 + 1, i0])

    def tensor(x1, x2):
        return (interp(a11_nodes, x1, x2), interp(a12_nodes, x1, x2), interp(a22_nodes, x1, x2))

    return PermeabilityField(KIND_GRID_SAMPLED, tensor, div_ae=None,
                             geometry=grid.geometry, params={"nx": grid.nx, "ny": grid.ny})


def load_field_csv(path, grid):
    """Load a GRID_SAMPLED field from CSV rows ``x1,x2,a11,a12,a22``."""
    a11 = np.full(grid.shape, np.nan)
    a12 = np.full(grid.shape, np.nan)
    a22 = np.full(grid.shape, np.nan)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for row in reader:
            if not row or row[0].strip().startswith(("x1", "#")):
                continue
            x1, x2, v11, v12, v22 = (float(c) for c in row[:5])
            i = int(round(x1 / grid.h1))
            j = int(round(x2 / grid.h2))
            if not (0 <= i <= grid.nx and 0 <= j <= grid.ny):
                raise InvalidArgument(f"CSV point ({x1}, {x2}) is not a grid node")
            a11[j, i], a12[j, i], a22[j, i] = v11, v12, v22
    if np.any(np.isnan(a11)):
        raise InvalidArgument(f"CSV field {path} does not cover every grid node")
    return grid_sampled_field(grid, a11, a12, a22)


def eval_tensor(field, x):
    """Evaluate the tensor at one point of the closed rectangle."""
    x1, x2 = float(x[0]), float(x[1])
    geom = field.geometry
    if geom is not None:
        if not (0.0 <= x1 <= geom.L and 0.0 <= x2 <= geom.K):
            raise OutOfDomain(f"point ({x1}, {x2}) outside [0,{geom.L}]x[0,{geom.K}]")
    a11, a12, a22 = field(x1, x2)
    return SymTensor2(float(a11), float(a12), float(a22))


def validate_assumptions(field, grid, tol_div=1e-10):
    """Sample ellipticity, boundedness and Lipschitz estimates on the grid.

    Raises AssumptionViolation if any sampled tensor fails positive
    definiteness; otherwise returns the report, with the sign condition on
    div(a(x)e) flagged (not raised) when violated beyond tol_div.
    """
    X1, X2 = grid.coords()
    a11, a12, a22 = field(X1, X2)
    a11 = np.broadcast_to(a11, grid.shape)
    a12 = np.broadcast_to(a12, grid.shape)
    a22 = np.broadcast_to(a22, grid.shape)

    det = a11 * a22 - a12 ** 2
    bad = (a11 <= 0) | (det <= 0)
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise AssumptionViolation(
            f"tensor not positive definite at ({X1[j, i]}, {X2[j, i]}): "
            f"a11={a11[j, i]}, det={det[j, i]}",
            point=(X1[j, i], X2[j, i]))

    # eigenvalues of a symmetric 2x2: (tr/2) -/+ sqrt((a11-a22)^2/4 + a12^2)
    half_tr = (a11 + a22) / 2.0
    disc = np.sqrt((a11 - a22) ** 2 / 4.0 + a12 ** 2)
    lambda_est = float(np.min(half_tr - disc))
    Lambda_est = float(np.max(half_tr + disc))

    n_est = 0.0
    for entry in (a11, a12, a22):
        gj, gi = np.gradient(entry, grid.h2, grid.h1)
        n_est = max(n_est, float(np.max(np.abs(gj))), float(np.max(np.abs(gi))))

    if field.div_ae is not None:
        div = np.broadcast_to(field.div_ae(X1, X2), grid.shape)
    else:
        d12 = np.gradient(a12, grid.h1, axis=1)
        d22 = np.gradient(a22, grid.h2, axis=0)
        div = d12 + d22
    div_min = float(np.min(div))

    return AssumptionReport(lambda_est=lambda_est, Lambda_est=Lambda_est, N_est=n_est,
                            div_ae_min=div_min, symmetric=True,
                            div_sign_ok=bool(div_min >= -tol_div))
