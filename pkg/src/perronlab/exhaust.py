"""Dyadic inner exhaustion of a domain and the fine-grid node masks.

Level ``k`` uses square cells of side ``bbox_side / 2**k`` aligned with the
lower-left corner of the bounding box.  All fields live on the single fine
grid of level ``K``; a level only decides which fine nodes are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Domain


class EmptyExhaustionError(ValueError):
    """No cell of the requested level fits inside the domain."""


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    K: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per axis")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two ``(ny, nx)`` arrays; row index is y."""
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        return np.meshgrid(x, y)

    def points(self) -> np.ndarray:
        X, Y = self.coords()
        return np.stack([X, Y], axis=-1)

    def nearest_node(self, p) -> tuple[int, int]:
        i = int(round((p[0] - self.origin[0]) / self.h))
        j = int(round((p[1] - self.origin[1]) / self.h))
        return j, i


def make_grid(domain: Domain, K: int) -> GridSpec:
    """Fine grid with spacing ``bbox_side * 2**-K`` covering the bounding box."""
    if K < 1:
        raise ValueError(f"fine level K must be >= 1, got {K}")
    x0, y0, x1, y1 = domain.bbox
    h = domain.bbox_side / 2**K
    nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 1
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 1
    return GridSpec(origin=(x0, y0), h=h, nx=nx, ny=ny, K=K)


@dataclass(frozen=True)
class CellSet:
    level: int
    h: float
    origin: tuple[float, float]
    included: np.ndarray  # (cells_y, cells_x) bool

    @property
    def num_cells(self) -> int:
        return int(self.included.sum())

    @property
    def area(self) -> float:
        return self.num_cells * self.h * self.h

    @property
    def is_empty(self) -> bool:
        return self.num_cells == 0

    def refine(self, level: int) -> np.ndarray:
        """Inclusion array expressed on the cells of a finer level."""
        if level < self.level:
            raise ValueError("can only refine to a finer level")
        r = 2 ** (level - self.level)
        return np.kron(self.included, np.ones((r, r), dtype=bool))


def containment_margin(domain: Domain, cell_h: float) -> float:
    return 0.0 if domain.convex else 0.5 * cell_h


def build_cellset(domain: Domain, k: int, *, allow_empty: bool = False) -> CellSet:
    """Cells of level ``k`` whose closure lies in the domain.

    A cell is kept when the signed distance at its four corners and its
    center is below ``-delta``; ``delta`` is zero for convex shapes and half
    the cell side otherwise.
    """
    if k < 1:
        raise ValueError(f"level must be >= 1, got {k}")
    x0, y0, x1, y1 = domain.bbox
    hk = domain.bbox_side / 2**k
    cx = int(math.ceil((x1 - x0) / hk - 1e-9))
    cy = int(math.ceil((y1 - y0) / hk - 1e-9))
    xs = x0 + hk * np.arange(cx + 1)
    ys = y0 + hk * np.arange(cy + 1)
    X, Y = np.meshgrid(xs, ys)
    corner = domain.sdf(np.stack([X, Y], axis=-1))
    Xc, Yc = np.meshgrid(xs[:-1] + 0.5 * hk, ys[:-1] + 0.5 * hk)
    center = domain.sdf(np.stack([Xc, Yc], axis=-1))

    delta = containment_margin(domain, hk)
    worst = np.maximum.reduce(
        [corner[:-1, :-1], corner[:-1, 1:], corner[1:, :-1], corner[1:, 1:], center]
    )
    cells = CellSet(level=k, h=hk, origin=(x0, y0), included=worst < -delta)
    if cells.is_empty and not allow_empty:
        raise EmptyExhaustionError(f"no level-{k} cell of side {hk:g} fits inside {domain.name}")
    return cells


@dataclass(frozen=True)
class NodeMask:
    free: np.ndarray
    clamped: np.ndarray
    exterior: np.ndarray

    @property
    def inside(self) -> np.ndarray:
        """Nodes of the closed domain: free or clamped."""
        return ~self.exterior

    @property
    def num_free(self) -> int:
        return int(self.free.sum())

    def is_well_posed(self) -> bool:
        """True when no free node touches an exterior node or the grid edge."""
        f = self.free
        if f[0, :].any() or f[-1, :].any() or f[:, 0].any() or f[:, -1].any():
            return False
        ext = self.exterior
        c = f[1:-1, 1:-1]
        bad = (ext[:-2, 1:-1] | ext[2:, 1:-1] | ext[1:-1, :-2] | ext[1:-1, 2:]) & c
        return not bad.any()


def inside_closure(domain: Domain, grid: GridSpec) -> np.ndarray:
    return domain.sdf(grid.points()) <= 0.0


def node_masks(cells: CellSet, grid: GridSpec, domain: Domain) -> NodeMask:
    """Free nodes: all four incident fine cells belong to the refined cell set.

    Clamped nodes are the remaining nodes of the closed domain; they carry the
    extension values.  Everything else is exterior.
    """
    if cells.level > grid.K:
        raise ValueError(f"cell level {cells.level} exceeds fine level {grid.K}")
    fine = cells.refine(grid.K)
    ny, nx = grid.shape
    if fine.shape != (ny - 1, nx - 1):
        raise ValueError(f"cell set shape {fine.shape} does not match grid {grid.shape}")
    free = np.zeros(grid.shape, dtype=bool)
    free[1:-1, 1:-1] = fine[:-1, :-1] & fine[:-1, 1:] & fine[1:, :-1] & fine[1:, 1:]
    closure = inside_closure(domain, grid)
    clamped = closure & ~free
    return NodeMask(free=free, clamped=clamped, exterior=~(free | clamped))


def exhaustion_table(domain: Domain, K: int, levels=None) -> list[dict]:
    """Rows ``{k, num_cells, area, num_free_nodes}`` for each level."""
    grid = make_grid(domain, K)
    rows = []
    for k in levels if levels is not None else range(1, K + 1):
        cells = build_cellset(domain, k, allow_empty=True)
        mask = node_masks(cells, grid, domain)
        rows.append(
            {"k": k, "num_cells": cells.num_cells, "area": cells.area, "num_free_nodes": mask.num_free}
        )
    return rows
