import math

import numpy as np
import pytest

from perronlab.domain import builtin_domain
from perronlab.exhaust import (
    EmptyExhaustionError,
    GridSpec,
    build_cellset,
    exhaustion_table,
    make_grid,
    node_masks,
)

from oracles import square_cells_inside

DOMAINS = ["unit_square", "disc(1)", "annulus(0.05,1)", "l_shape"]


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_unit_square_cell_count(k):
    cells = build_cellset(builtin_domain("unit_square"), k)
    assert cells.num_cells == square_cells_inside(2**k) == (2**k - 2) ** 2


def test_empty_exhaustion_is_signalled():
    with pytest.raises(EmptyExhaustionError):
        build_cellset(builtin_domain("unit_square"), 1)
    cells = build_cellset(builtin_domain("unit_square"), 1, allow_empty=True)
    assert cells.is_empty


@pytest.mark.parametrize("k", range(2, 9))
def test_disc_area_bounded_by_pi(k):
    assert build_cellset(builtin_domain("disc(1)"), k).area <= math.pi


@pytest.mark.parametrize("name", DOMAINS)
def test_included_cells_lie_inside(name):
    d = builtin_domain(name)
    cells = build_cellset(d, 6)
    rng = np.random.default_rng(0)
    j, i = np.nonzero(cells.included)
    # Dense sampling of each included closed cell, including its edges.
    s = np.concatenate([rng.uniform(0, 1, (64, 2)), [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0], [0, 0.5]]])
    x = cells.origin[0] + (i[:, None] + s[None, :, 0]) * cells.h
    y = cells.origin[1] + (j[:, None] + s[None, :, 1]) * cells.h
    assert np.all(d.sdf(np.stack([x, y], axis=-1)) < 0)


@pytest.mark.parametrize("name", DOMAINS)
def test_cellsets_nest_under_refinement(name):
    d = builtin_domain(name)
    for k in range(2, 8):
        coarse = build_cellset(d, k, allow_empty=True).refine(k + 1)
        fine = build_cellset(d, k + 1).included
        assert not np.any(coarse & ~fine), f"level {k} not inside level {k + 1}"


@pytest.mark.parametrize("name", DOMAINS)
def test_masks_partition_nest_and_are_well_posed(name):
    d = builtin_domain(name)
    K = 7
    grid = make_grid(d, K)
    prev = None
    for k in range(1, K + 1):
        m = node_masks(build_cellset(d, k, allow_empty=True), grid, d)
        total = m.free.astype(int) + m.clamped.astype(int) + m.exterior.astype(int)
        assert np.all(total == 1)
        assert m.is_well_posed()
        if prev is not None:
            assert not np.any(prev & ~m.free)
        prev = m.free


def test_unit_square_free_nodes_at_fine_level():
    # N = 8 cells per side: (N-2)^2 cell block has (N-3)^2 interior nodes.
    d = builtin_domain("unit_square")
    grid = make_grid(d, 3)
    m = node_masks(build_cellset(d, 3), grid, d)
    assert m.num_free == 25
    assert np.array_equal(np.argwhere(m.free).min(axis=0), [2, 2])
    assert np.array_equal(np.argwhere(m.free).max(axis=0), [6, 6])


def test_empty_cellset_clamps_every_inside_node():
    d = builtin_domain("disc(1)")
    grid = make_grid(d, 5)
    m = node_masks(build_cellset(d, 1, allow_empty=True), grid, d)
    assert m.num_free == 0
    assert np.array_equal(m.clamped, d.sdf(grid.points()) <= 0)


def test_disc_exhaustion_area_boundary_layer():
    d = builtin_domain("disc(1)")
    K = 8
    h = make_grid(d, K).h
    area = build_cellset(d, K).area
    assert abs(area - math.pi) <= 4 * d.perimeter * h


def test_exhaustion_area_increases_toward_domain_area():
    rows = exhaustion_table(builtin_domain("l_shape"), 8)
    areas = [r["area"] for r in rows]
    assert areas == sorted(areas)
    assert 0.75 - areas[-1] < 0.75 - areas[3]


def test_mask_level_above_grid_rejected():
    d = builtin_domain("disc(1)")
    with pytest.raises(ValueError):
        node_masks(build_cellset(d, 6), make_grid(d, 5), d)


def test_grid_covers_bbox():
    for name in DOMAINS:
        d = builtin_domain(name)
        g = make_grid(d, 6)
        assert g.origin[0] + (g.nx - 1) * g.h >= d.bbox[2]
        assert g.origin[1] + (g.ny - 1) * g.h >= d.bbox[3]


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(origin=(0, 0), h=0.0, nx=5, ny=5, K=2)
    with pytest.raises(ValueError):
        GridSpec(origin=(0, 0), h=0.5, nx=2, ny=5, K=1)
