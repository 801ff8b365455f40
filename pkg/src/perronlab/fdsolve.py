"""Discrete Dirichlet principle on the fine grid.

The discrete energy of a node field is the plain edge-difference sum
``sum (v_i - v_j)**2`` over grid edges whose endpoints both lie in the closed
domain.  In two dimensions the ``h`` factors of ``|grad v|**2 dx`` cancel, so
this is a Riemann sum for the Dirichlet integral with no extra scaling.
Minimizing it over the free nodes gives the 5-point Laplace equation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import BoundaryData, Domain
from .exhaust import GridSpec, NodeMask, inside_closure

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class IllPosedMaskError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        self.values.setflags(write=False)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    tolerance: float


def _check_same_grid(a: ScalarField, b: ScalarField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def sample_phi(data: BoundaryData, grid: GridSpec, domain: Domain) -> ScalarField:
    """Evaluate the extension at every node of the closed domain; 0 elsewhere."""
    closure = inside_closure(domain, grid)
    pts = grid.points()
    values = np.zeros(grid.shape)
    with np.errstate(all="ignore"):
        values[closure] = data.phi(pts[closure])
    if not np.all(np.isfinite(values[closure])):
        bad = np.argwhere(closure & ~np.isfinite(values))[0]
        raise ValueError(f"extension {data.name} is not finite at node {tuple(bad)}")
    return ScalarField(grid, values)


def _neg_laplacian(v: np.ndarray) -> np.ndarray:
    """``4 v_ij - sum of 4 neighbours`` on interior nodes, zero on the rim."""
    out = np.zeros_like(v)
    out[1:-1, 1:-1] = 4.0 * v[1:-1, 1:-1] - v[:-2, 1:-1] - v[2:, 1:-1] - v[1:-1, :-2] - v[1:-1, 2:]
    return out


def solve_dirichlet(
    mask: NodeMask,
    phi_field: ScalarField,
    tol: float = DEFAULT_TOL,
    *,
    initial: ScalarField | None = None,
    max_iter: int | None = None,
) -> tuple[ScalarField, SolveReport]:
    """Jacobi-preconditioned CG for the free-node system, ``phi`` clamped elsewhere.

    The iterate starts from ``initial`` on the free nodes when given (warm
    start from a coarser level) and from the sampled extension otherwise.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not mask.is_well_posed():
        raise IllPosedMaskError("a free node has an exterior neighbour")
    grid = phi_field.grid
    free = mask.free
    if max_iter is None:
        max_iter = 50 * max(grid.nx, grid.ny)

    u = np.where(free, 0.0, phi_field.values)
    # Right-hand side: clamped neighbour values seen by each free node.
    b = np.where(free, -_neg_laplacian(u), 0.0)
    bnorm = float(np.sqrt(np.sum(b * b)))
    if initial is not None:
        _check_same_grid(initial, phi_field)
        u[free] = initial.values[free]
    else:
        u[free] = phi_field.values[free]

    if bnorm == 0.0:
        u[free] = 0.0
        return ScalarField(grid, u), SolveReport(0, 0.0, tol)

    diag = 4.0
    r = np.where(free, -_neg_laplacian(u), 0.0)
    z = r / diag
    p = z.copy()
    rz = float(np.sum(r * z))
    res = float(np.sqrt(np.sum(r * r))) / bnorm
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"CG did not reach tol={tol:g} in {max_iter} iterations (residual {res:.3e})",
                residual=res,
                iterations=it,
            )
        Ap = np.where(free, _neg_laplacian(p), 0.0)
        alpha = rz / float(np.sum(p * Ap))
        u += alpha * p
        r -= alpha * Ap
        z = r / diag
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = float(np.sqrt(np.sum(r * r))) / bnorm
        it += 1

    # Report the true residual, not the recursive one.
    r = np.where(free, -_neg_laplacian(u), 0.0)
    res = float(np.sqrt(np.sum(r * r))) / bnorm
    log.debug("CG converged in %d iterations, residual %.3e", it, res)
    return ScalarField(grid, u), SolveReport(iterations=it, residual=res, tolerance=tol)


def _edge_diffs(v: np.ndarray, inside: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = np.where(inside[:, 1:] & inside[:, :-1], v[:, 1:] - v[:, :-1], 0.0)
    dy = np.where(inside[1:, :] & inside[:-1, :], v[1:, :] - v[:-1, :], 0.0)
    return dx, dy


def energy(field: ScalarField, inside: np.ndarray) -> float:
    """Discrete Dirichlet energy over edges with both endpoints in ``inside``."""
    dx, dy = _edge_diffs(field.values, inside)
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def energy_form(a: ScalarField, b: ScalarField, inside: np.ndarray) -> float:
    """Bilinear form of :func:`energy`: ``sum (a_i - a_j)(b_i - b_j)``."""
    _check_same_grid(a, b)
    ax, ay = _edge_diffs(a.values, inside)
    bx, by = _edge_diffs(b.values, inside)
    return float(np.sum(ax * bx) + np.sum(ay * by))


def h1_distance(a: ScalarField, b: ScalarField, inside: np.ndarray) -> tuple[float, float]:
    """``(energy(a - b), h**2 * sum (a - b)**2)`` over the closed domain."""
    _check_same_grid(a, b)
    d = a - b
    h = a.grid.h
    return energy(d, inside), float(h * h * np.sum(np.where(inside, d.values, 0.0) ** 2))


def interpolate(field: ScalarField, point) -> float:
    """Bilinear interpolation of the node values at ``point``."""
    g = field.grid
    fx = (point[0] - g.origin[0]) / g.h
    fy = (point[1] - g.origin[1]) / g.h
    i = min(max(int(np.floor(fx)), 0), g.nx - 2)
    j = min(max(int(np.floor(fy)), 0), g.ny - 2)
    tx, ty = fx - i, fy - j
    v = field.values
    return float(
        (1 - tx) * (1 - ty) * v[j, i]
        + tx * (1 - ty) * v[j, i + 1]
        + (1 - tx) * ty * v[j + 1, i]
        + tx * ty * v[j + 1, i + 1]
    )


# --- text dump ---------------------------------------------------------------


def format_float(x: float) -> str:
    return "%.17g" % x


def write_field(path, field: ScalarField) -> None:
    """Header ``nx ny h x0 y0`` then ``ny`` rows of ``nx`` values, bottom row first."""
    g = field.grid
    lines = [" ".join([str(g.nx), str(g.ny)] + [format_float(v) for v in (g.h, *g.origin)])]
    for row in field.values:
        lines.append(" ".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path, K: int = 0) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().split()
        nx, ny = int(header[0]), int(header[1])
        h, x0, y0 = (float(t) for t in header[2:5])
        values = np.loadtxt(fh, ndmin=2)
    if values.shape != (ny, nx):
        raise ValueError(f"field body has shape {values.shape}, header says {(ny, nx)}")
    return ScalarField(GridSpec(origin=(x0, y0), h=h, nx=nx, ny=ny, K=K), values)
