import numpy as np
import pytest

from damflow import (DamGeometry, InvalidArgument, InvalidData, NodeKind,
                     build_grid, classify_boundary, dirichlet_values,
                     hydrostatic_head)


def test_geometry_rejects_nonpositive_sides():
    with pytest.raises(InvalidArgument):
        DamGeometry(L=0.0, K=1.0)
    with pytest.raises(InvalidArgument):
        DamGeometry(L=2.0, K=-1.0)


def test_grid_spacing_and_shape():
    grid = build_grid(DamGeometry(2.0, 1.0), nx=8, ny=4)
    assert grid.h1 == pytest.approx(0.25)
    assert grid.h2 == pytest.approx(0.25)
    assert grid.shape == (5, 9)
    assert grid.n_nodes == 45
    X1, X2 = grid.coords()
    assert X1[0, -1] == pytest.approx(2.0)
    assert X2[-1, 0] == pytest.approx(1.0)


def test_flatten_unflatten_roundtrip():
    grid = build_grid(DamGeometry(1.0, 1.0), 3, 5)
    v = np.arange(grid.n_nodes, dtype=float).reshape(grid.shape)
    assert np.array_equal(grid.unflatten(grid.flatten(v)), v)


def test_bottom_row_is_impervious_including_corners():
    grid = build_grid(DamGeometry(1.0, 1.0), 4, 4)
    tags = classify_boundary(grid, hydrostatic_head(0.5))
    assert np.all(tags.kind[0, :] == NodeKind.IMPERVIOUS)
    # the corners belong to the bottom, not to the lateral sides
    assert tags.kind[0, 0] == NodeKind.IMPERVIOUS
    assert tags.kind[0, -1] == NodeKind.IMPERVIOUS


def test_pervious_boundary_split_by_wetting():
    grid = build_grid(DamGeometry(1.0, 1.0), 4, 4)
    tags = classify_boundary(grid, hydrostatic_head(0.5))
    # lateral nodes below the reservoir level carry positive head
    assert tags.kind[1, 0] == NodeKind.DIRICHLET_WET
    assert tags.kind[3, 0] == NodeKind.DIRICHLET_DRY
    assert tags.kind[4, 2] == NodeKind.DIRICHLET_DRY  # top edge
    assert tags.kind[2, 2] == NodeKind.INTERIOR


def test_dirichlet_mask_matches_kinds():
    grid = build_grid(DamGeometry(1.0, 1.0), 6, 6)
    tags = classify_boundary(grid, hydrostatic_head(0.3))
    wetdry = (tags.kind == NodeKind.DIRICHLET_WET) | (tags.kind == NodeKind.DIRICHLET_DRY)
    assert np.array_equal(tags.dirichlet_mask, wetdry)
    assert np.array_equal(tags.free_mask, ~tags.dirichlet_mask)


def test_negative_head_rejected():
    grid = build_grid(DamGeometry(1.0, 1.0), 4, 4)
    with pytest.raises(InvalidData):
        classify_boundary(grid, lambda x1, x2: x2 - 2.0)


def test_dirichlet_values_zero_off_boundary():
    grid = build_grid(DamGeometry(1.0, 1.0), 4, 4)
    phi = hydrostatic_head(0.5)
    tags = classify_boundary(grid, phi)
    vals = dirichlet_values(grid, tags, phi)
    assert vals[2, 2] == 0.0
    assert vals[1, 0] == pytest.approx(0.25)
