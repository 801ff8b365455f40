"""Closed-form 2D domains and boundary data.

Every domain carries an exact signed distance function (negative inside), an
open-set membership predicate and an axis-aligned bounding box.  Boundary data
bundle the boundary function ``g`` with one continuous extension ``phi`` to
the closure, plus the harmonic solution when it is known in closed form.

All callables act on point arrays of shape ``(..., 2)`` and return arrays of
shape ``(...)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

PointFn = Callable[[np.ndarray], np.ndarray]

DOMAIN_NAMES = ("unit_square", "disc(r)", "annulus(rho, 1)", "l_shape")
DATA_NAMES = (
    "constant(c)",
    "affine(a,b,c)",
    "saddle",
    "fourier_mode(m)",
    "annulus_indicator",
    "hadamard_partial(M)",
)
HADAMARD_MAX_TERMS = 7


class UnknownNameError(ValueError):
    """Raised for a domain or data identifier outside the built-in corpus."""


class ParameterError(ValueError):
    """Raised for a known identifier with invalid parameters."""


class DomainMismatchError(ValueError):
    """Raised when boundary data cannot live on the requested domain."""


def _xy(p) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1]


@dataclass(frozen=True)
class Domain:
    name: str
    inside: PointFn
    sdf: PointFn
    bbox: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    diameter: float
    area: float
    perimeter: float
    convex: bool
    boundary_sampler: Callable[[int], np.ndarray] = field(repr=False)
    params: tuple[float, ...] = ()

    @property
    def kind(self) -> str:
        return self.name.split("(")[0]

    @property
    def bbox_diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def bbox_side(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return max(x1 - x0, y1 - y0)

    def boundary_points(self, n: int) -> np.ndarray:
        """Return ``n`` points on the boundary, roughly uniform in arclength."""
        return self.boundary_sampler(n)


@dataclass(frozen=True)
class BoundaryData:
    name: str
    g: PointFn
    phi: PointFn
    has_analytic_solution: Optional[PointFn] = None


def parse_call(text: str) -> tuple[str, tuple[float, ...]]:
    """Split ``"name(a, b)"`` into ``("name", (a, b))``."""
    m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*(?:\((.*)\))?\s*", text)
    if m is None:
        raise ParameterError(f"cannot parse identifier {text!r}")
    name, argtext = m.group(1), m.group(2)
    if argtext is None or not argtext.strip():
        return name, ()
    try:
        args = tuple(float(a) for a in argtext.split(","))
    except ValueError:
        raise ParameterError(f"non-numeric argument in {text!r}") from None
    return name, args


def _fmt(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


# --- signed distances --------------------------------------------------------


def _box_sdf(x, y, x0, y0, x1, y1):
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    qx = np.abs(x - cx) - 0.5 * (x1 - x0)
    qy = np.abs(y - cy) - 0.5 * (y1 - y0)
    outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
    return outside + np.minimum(np.maximum(qx, qy), 0.0)


def _segment_distance(x, y, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    t = np.clip(((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    return np.hypot(x - (ax + t * dx), y - (ay + t * dy))


_L_VERTICES = ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0))


def _l_inside(p):
    x, y = _xy(p)
    return (x > 0) & (x < 1) & (y > 0) & (y < 1) & ~((x >= 0.5) & (y >= 0.5))


def _l_sdf(p):
    x, y = _xy(p)
    n = len(_L_VERTICES)
    d = np.full(np.shape(x), np.inf)
    for i in range(n):
        d = np.minimum(d, _segment_distance(x, y, _L_VERTICES[i], _L_VERTICES[(i + 1) % n]))
    return np.where(_l_inside(p), -d, d)


def _polyline_sampler(vertices):
    verts = np.asarray(vertices + (vertices[0],), dtype=float)
    seg = np.hypot(*np.diff(verts, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])

    def sample(n: int) -> np.ndarray:
        s = np.arange(n) * (cum[-1] / n)
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        t = ((s - cum[idx]) / seg[idx])[:, None]
        return verts[idx] * (1 - t) + verts[idx + 1] * t

    return sample


def _circle_points(n: int, r: float) -> np.ndarray:
    theta = 2 * np.pi * np.arange(n) / n
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def unit_square() -> Domain:
    def inside(p):
        x, y = _xy(p)
        return (x > 0) & (x < 1) & (y > 0) & (y < 1)

    def sdf(p):
        x, y = _xy(p)
        return _box_sdf(x, y, 0.0, 0.0, 1.0, 1.0)

    return Domain(
        name="unit_square",
        inside=inside,
        sdf=sdf,
        bbox=(0.0, 0.0, 1.0, 1.0),
        diameter=math.sqrt(2.0),
        area=1.0,
        perimeter=4.0,
        convex=True,
        boundary_sampler=_polyline_sampler(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))),
    )


def disc(r: float = 1.0) -> Domain:
    if not r > 0:
        raise ParameterError(f"disc radius must be positive, got {r}")

    def inside(p):
        x, y = _xy(p)
        return np.hypot(x, y) < r

    def sdf(p):
        x, y = _xy(p)
        return np.hypot(x, y) - r

    return Domain(
        name=f"disc({_fmt(r)})",
        inside=inside,
        sdf=sdf,
        bbox=(-r, -r, r, r),
        diameter=2 * r,
        area=math.pi * r * r,
        perimeter=2 * math.pi * r,
        convex=True,
        boundary_sampler=lambda n: _circle_points(n, r),
        params=(r,),
    )


def annulus(rho: float, outer: float = 1.0) -> Domain:
    if outer != 1.0:
        raise ParameterError(f"annulus outer radius must be 1, got {outer}")
    if not 0 < rho < 1:
        raise ParameterError(f"annulus inner radius must satisfy 0 < rho < 1, got {rho}")

    def inside(p):
        x, y = _xy(p)
        r = np.hypot(x, y)
        return (r > rho) & (r < 1.0)

    def sdf(p):
        x, y = _xy(p)
        r = np.hypot(x, y)
        return np.maximum(rho - r, r - 1.0)

    def sampler(n: int) -> np.ndarray:
        n_in = max(1, int(round(n * rho / (1 + rho))))
        return np.concatenate([_circle_points(n_in, rho), _circle_points(n - n_in, 1.0)])

    return Domain(
        name=f"annulus({_fmt(rho)},1)",
        inside=inside,
        sdf=sdf,
        bbox=(-1.0, -1.0, 1.0, 1.0),
        diameter=2.0,
        area=math.pi * (1 - rho * rho),
        perimeter=2 * math.pi * (1 + rho),
        convex=False,
        boundary_sampler=sampler,
        params=(rho, 1.0),
    )


def l_shape() -> Domain:
    """``[0,1]^2`` minus ``[0.5,1]^2``; reentrant corner at ``(0.5, 0.5)``."""
    return Domain(
        name="l_shape",
        inside=_l_inside,
        sdf=_l_sdf,
        bbox=(0.0, 0.0, 1.0, 1.0),
        diameter=math.sqrt(2.0),
        area=0.75,
        perimeter=4.0,
        convex=False,
        boundary_sampler=_polyline_sampler(_L_VERTICES),
    )


def builtin_domain(name: str) -> Domain:
    """Build a domain from its identifier, e.g. ``"annulus(0.05,1)"``."""
    kind, args = parse_call(name)
    if kind == "unit_square" and not args:
        return unit_square()
    if kind == "l_shape" and not args:
        return l_shape()
    if kind == "disc" and len(args) <= 1:
        return disc(*args)
    if kind == "annulus" and len(args) in (1, 2):
        return annulus(*args)
    raise UnknownNameError(
        f"unknown domain {name!r}; valid names: {', '.join(DOMAIN_NAMES)}"
    )


# --- boundary data -----------------------------------------------------------


def _harmonic(name: str, fn: PointFn) -> BoundaryData:
    # g, phi and the solution all coincide for harmonic polynomials.
    return BoundaryData(name=name, g=fn, phi=fn, has_analytic_solution=fn)


def _complex(p) -> np.ndarray:
    x, y = _xy(p)
    return x + 1j * y


def _int_arg(value: float, what: str) -> int:
    if value != int(value):
        raise ParameterError(f"{what} must be an integer, got {value}")
    return int(value)


def hadamard_partial_sum(M: int) -> BoundaryData:
    """Truncated lacunary series ``sum_{n<=M} n^-2 r^(n!) sin(n! theta)`` on the unit disc."""
    if not 1 <= M <= HADAMARD_MAX_TERMS:
        raise ParameterError(f"hadamard_partial needs 1 <= M <= {HADAMARD_MAX_TERMS}, got {M}")
    modes = [(math.factorial(n), 1.0 / n**2) for n in range(1, M + 1)]

    def phi(p):
        z = _complex(p)
        out = np.zeros(z.shape)
        for m, c in modes:
            out += c * np.imag(z**m)
        return out

    return _harmonic(f"hadamard_partial({M})", phi)


def hadamard_energy(M: int) -> float:
    """Exact Dirichlet energy of the ``M``-term partial sum: ``pi * sum n!/n^4``."""
    return math.pi * sum(math.factorial(n) / n**4 for n in range(1, M + 1))


def builtin_data(name: str, domain: Domain) -> BoundaryData:
    kind, args = parse_call(name)
    if kind == "constant" and len(args) == 1:
        (c,) = args
        return _harmonic(f"constant({_fmt(c)})", lambda p: np.full(np.shape(p)[:-1], c, dtype=float))
    if kind == "affine" and len(args) == 3:
        a, b, c = args

        def affine(p):
            x, y = _xy(p)
            return a * x + b * y + c

        return _harmonic(f"affine({_fmt(a)},{_fmt(b)},{_fmt(c)})", affine)
    if kind == "saddle" and not args:

        def saddle(p):
            x, y = _xy(p)
            return x * x - y * y

        return _harmonic("saddle", saddle)
    if kind == "fourier_mode" and len(args) == 1:
        m = _int_arg(args[0], "fourier_mode order")
        if m < 0:
            raise ParameterError(f"fourier_mode order must be >= 0, got {m}")
        return _harmonic(f"fourier_mode({m})", lambda p: np.real(_complex(p) ** m))
    if kind == "annulus_indicator" and not args:
        if domain.kind != "annulus":
            raise DomainMismatchError(f"annulus_indicator needs an annulus domain, got {domain.name}")
        rho = domain.params[0]

        def solution(p):
            x, y = _xy(p)
            r = np.maximum(np.hypot(x, y), 1e-300)
            return np.clip(np.log(1.0 / r) / math.log(1.0 / rho), 0.0, 1.0)

        def g(p):
            x, y = _xy(p)
            return np.where(np.hypot(x, y) < 0.5 * (1.0 + rho), 1.0, 0.0)

        return BoundaryData("annulus_indicator", g=g, phi=solution, has_analytic_solution=solution)
    if kind == "hadamard_partial" and len(args) == 1:
        if domain.kind != "disc" or domain.params != (1.0,):
            raise DomainMismatchError(f"hadamard_partial lives on disc(1), got {domain.name}")
        return hadamard_partial_sum(_int_arg(args[0], "hadamard_partial M"))
    raise UnknownNameError(f"unknown boundary data {name!r}; valid names: {', '.join(DATA_NAMES)}")
