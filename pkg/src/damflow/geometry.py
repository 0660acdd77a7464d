"""Rectangular dam geometry, structured grid and boundary classification.

The domain is the open rectangle (0, L) x (0, K).  Its boundary splits into
the impervious bottom edge (including both bottom corners, so the bottom-flux
condition stays contiguous) and the pervious remainder, which is further
partitioned into wet and dry Dirichlet parts by the sign of the boundary
head.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidArgument, InvalidData


class NodeKind(IntEnum):
    INTERIOR = 0
    IMPERVIOUS = 1      # bottom edge, natural no-flux condition
    DIRICHLET_WET = 2   # pervious boundary where the head is positive
    DIRICHLET_DRY = 3   # pervious boundary where the head vanishes


@dataclass(frozen=True)
class DamGeometry:
    """Rectangle (0, L) x (0, K)."""

    L: float
    K: float

    def __post_init__(self):
        if not (self.L > 0 and self.K > 0):
            raise InvalidArgument(f"dam dimensions must be positive, got L={self.L}, K={self.K}")

    @property
    def area(self):
        return self.L * self.K


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid on the closed rectangle.

    Nodes are indexed (i, j) with coordinate (i*h1, j*h2); arrays over nodes
    use shape (ny+1, nx+1) with j (the vertical index) as the leading axis.
    """

    geometry: DamGeometry
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InvalidArgument(f"need at least 2 cells per axis, got nx={self.nx}, ny={self.ny}")

    @property
    def h1(self):
        return self.geometry.L / self.nx

    @property
    def h2(self):
        return self.geometry.K / self.ny

    @property
    def shape(self):
        return (self.ny + 1, self.nx + 1)

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_cells(self):
        return self.nx * self.ny

    def coords(self):
        """Node coordinate arrays (X1, X2), each of shape (ny+1, nx+1)."""
        x1 = np.arange(self.nx + 1) * self.h1
        x2 = np.arange(self.ny + 1) * self.h2
        return np.meshgrid(x1, x2)

    def node_index(self, i, j):
        """Flat index of node (i, j)."""
        return j * (self.nx + 1) + i

    def flatten(self, a):
        return np.asarray(a).reshape(self.n_nodes)

    def unflatten(self, a):
        return np.asarray(a).reshape(self.shape)


@dataclass(frozen=True)
class BoundaryTags:
    """Per-node boundary labels and outward normals.

    ``kind`` has shape (ny+1, nx+1) with interior nodes labeled INTERIOR.
    ``normal`` holds the outward unit normal at boundary nodes (zeros inside);
    at the top corners, which belong to both a lateral edge and the top edge,
    the lateral normal is used.
    """

    kind: np.ndarray
    normal: np.ndarray = field(repr=False)

    @property
    def boundary_mask(self):
        return self.kind != NodeKind.INTERIOR

    @property
    def dirichlet_mask(self):
        """Nodes with an essential condition (the pervious boundary)."""
        return (self.kind == NodeKind.DIRICHLET_WET) | (self.kind == NodeKind.DIRICHLET_DRY)

    @property
    def free_mask(self):
        """Unknowns of the discrete system: interior plus impervious nodes."""
        return ~self.dirichlet_mask


def build_grid(geometry, nx, ny):
    """Build the uniform structured grid with nx*ny cells."""
    if nx < 2 or ny < 2:
        raise InvalidArgument(f"need at least 2 cells per axis, got nx={nx}, ny={ny}")
    return Grid(geometry=geometry, nx=int(nx), ny=int(ny))


def classify_boundary(grid, phi):
    """Label boundary nodes from the boundary head ``phi(x1, x2)``.

    The bottom edge (j=0, corners included) is impervious.  Every other
    boundary node is wet iff phi at the node is strictly positive, dry iff it
    is zero.  A negative head anywhere on the pervious boundary is rejected.
    """
    ny1, nx1 = grid.shape
    X1, X2 = grid.coords()
    kind = np.full(grid.shape, NodeKind.INTERIOR, dtype=np.int8)
    normal = np.zeros(grid.shape + (2,))

    boundary = np.zeros(grid.shape, dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, 0] = boundary[:, -1] = True

    # lateral normals first, top overrides interior-top only, bottom last
    normal[:, 0] = (-1.0, 0.0)
    normal[:, -1] = (1.0, 0.0)
    normal[-1, 1:-1] = (0.0, 1.0)
    normal[0, :] = (0.0, -1.0)
    normal[~boundary] = 0.0

    pervious = boundary.copy()
    pervious[0, :] = False

    head = np.zeros(grid.shape)
    head[pervious] = np.vectorize(phi)(X1[pervious], X2[pervious])
    if np.any(head[pervious] < 0):
        j, i = np.argwhere(pervious & (head < 0))[0]
        raise InvalidData(f"negative boundary head {head[j, i]} at node ({X1[j, i]}, {X2[j, i]})")

    kind[0, :] = NodeKind.IMPERVIOUS
    kind[pervious] = np.where(head[pervious] > 0.0, NodeKind.DIRICHLET_WET, NodeKind.DIRICHLET_DRY)
    return BoundaryTags(kind=kind, normal=normal)


def dirichlet_values(grid, tags, phi):
    """Nodal array holding phi at Dirichlet nodes and 0 elsewhere."""
    X1, X2 = grid.coords()
    vals = np.zeros(grid.shape)
    mask = tags.dirichlet_mask
    vals[mask] = np.vectorize(phi)(X1[mask], X2[mask])
    return vals
