"""Experiment suites run on the built-in corpus.

Each suite returns a result object with ``passed``, ``worst_metric``,
``columns`` and ``rows()``; the CLI writes the rows as CSV and collects the
rest into the summary.

* exhaustion: nested solves ``u_k`` on the dyadic exhaustion against the
  level-``K`` minimizer ``u``; checks energy monotonicity, the parallelogram
  identity, the convexity bound on ``energy(u_k - u)`` and the discrete
  Friedrichs link.
* compare: minimizer against an independent walk-on-spheres estimate.
* boundary: approach to the boundary datum along the inward normal.
* hadamard: energies of truncated lacunary series on the unit disc.
* annulus: harmonic measure of the inner circle of an annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .domain import BoundaryData, Domain, builtin_data, builtin_domain, hadamard_energy, hadamard_partial_sum
from .exhaust import EmptyExhaustionError, build_cellset, make_grid, node_masks
from .fdsolve import (
    DEFAULT_TOL,
    ConvergenceError,
    ScalarField,
    energy,
    h1_distance,
    interpolate,
    sample_phi,
    solve_dirichlet,
)
from .wos import WosConfig, wos_grid

MONOTONE_SLACK = 10.0  # multiples of tol * E_1
PARALLELOGRAM_RTOL = 1e-12


class SuiteError(RuntimeError):
    pass


# --- corpus ------------------------------------------------------------------

EXHAUSTION_DOMAINS = ("unit_square", "disc(1)", "annulus(0.05,1)", "l_shape")
EXHAUSTION_DATA = ("affine(1,-0.5,0.25)", "saddle", "fourier_mode(1)", "fourier_mode(2)", "fourier_mode(3)")

SQUARE_PROBES = ((0.5, 0.5), (0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.7, 0.6))
L_PROBES = ((0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.4, 0.4), (0.2, 0.5))
COMPARE_CASES = (
    ("disc(1)", "fourier_mode(1)", ((0.5, 0.0), (0.0, 0.3), (-0.2, -0.2))),
    ("unit_square", "saddle", SQUARE_PROBES),
    ("l_shape", "fourier_mode(2)", L_PROBES),
)
CALIBRATION_DATA = ("saddle", "fourier_mode(3)", "fourier_mode(4)", "fourier_mode(5)")

BOUNDARY_CASES = (
    ("disc(1)", "fourier_mode(1)", (1.0, 0.0)),
    ("unit_square", "saddle", (1.0, 0.5)),
    ("l_shape", "affine(1,-0.5,0.25)", (0.5, 0.5)),
)
HADAMARD_M = (1, 2, 3, 4)
HADAMARD_MIN_K = 9
ANNULUS_RHOS = (0.05, 0.1, 0.2)
ANNULUS_PROBE = 0.3
ANNULUS_MIN_K = 9


def level_solution(domain: Domain, data: BoundaryData, K: int, tol: float = DEFAULT_TOL) -> ScalarField:
    """Minimizer over the largest discrete admissible class (level ``K``)."""
    grid = make_grid(domain, K)
    mask = node_masks(build_cellset(domain, K), grid, domain)
    u, _ = solve_dirichlet(mask, sample_phi(data, grid, domain), tol)
    return u


# --- exhaustion --------------------------------------------------------------


@dataclass
class LevelRecord:
    k: int
    empty: bool
    num_free: int
    E_k: float
    gap: float
    parallelogram_residual: float
    h1_grad: float
    l2: float
    iterations: int
    residual: float


@dataclass
class EnergyLedger:
    domain: str
    data: str
    K: int
    tol: float
    E_full: float
    L: float
    levels: list[LevelRecord]
    fields: dict = field(default_factory=dict, repr=False)
    phi: ScalarField | None = field(default=None, repr=False)
    inside: np.ndarray | None = field(default=None, repr=False)

    columns = (
        "domain", "data", "k", "empty", "num_free", "E_k", "E_full", "gap",
        "parallelogram_residual", "h1_grad", "l2", "iterations", "residual",
    )

    @property
    def case(self) -> str:
        return f"{self.domain}/{self.data}"

    @property
    def E_1(self) -> float:
        return self.levels[0].E_k

    @property
    def slack(self) -> float:
        return MONOTONE_SLACK * self.tol * self.E_1

    def checks(self) -> dict[str, float]:
        """Largest ``lhs - rhs`` of each inequality; a check passes when <= 0."""
        s = self.slack
        lv = self.levels
        mono = max((b.E_k - a.E_k - s for a, b in zip(lv, lv[1:])), default=-s)
        mono = max(mono, max(self.E_full - r.E_k - s for r in lv))
        return {
            "monotone": mono,
            "gap_nonnegative": max(-r.gap - s for r in lv),
            "convexity_bound": max(0.25 * r.h1_grad - 0.5 * r.gap - s for r in lv),
            "parallelogram": max(
                r.parallelogram_residual - PARALLELOGRAM_RTOL * (r.E_k + self.E_full) for r in lv
            ),
            "friedrichs_link": max(r.l2 - self.L**2 * r.h1_grad for r in lv),
        }

    @property
    def worst_metric(self) -> float:
        return max(self.checks().values())

    @property
    def passed(self) -> bool:
        return all(v <= 0.0 for v in self.checks().values())

    def gaps_strictly_decreasing(self, k_from: int, k_to: int) -> bool:
        gaps = [r.gap for r in self.levels if k_from <= r.k <= k_to]
        return all(b < a for a, b in zip(gaps, gaps[1:]))

    def rows(self) -> list[list]:
        return [
            [self.domain, self.data, r.k, int(r.empty), r.num_free, r.E_k, self.E_full, r.gap,
             r.parallelogram_residual, r.h1_grad, r.l2, r.iterations, r.residual]
            for r in self.levels
        ]


def run_exhaustion_suite(
    domain: Domain,
    data: BoundaryData,
    K: int,
    k_range: Iterable[int],
    tol: float = DEFAULT_TOL,
    *,
    keep_fields: bool = False,
) -> EnergyLedger:
    ks = sorted(set(k_range))
    if not ks or ks[0] < 1 or ks[-1] > K:
        raise ValueError(f"k_range must lie in [1, {K}], got {ks}")
    grid = make_grid(domain, K)
    phi = sample_phi(data, grid, domain)
    solved: dict[int, tuple] = {}
    previous = None
    for k in sorted(set(ks) | {K}):
        cells = build_cellset(domain, k, allow_empty=True)
        if cells.is_empty and k == K:
            raise EmptyExhaustionError(f"fine level {K} has no cells inside {domain.name}")
        mask = node_masks(cells, grid, domain)
        try:
            u_k, report = solve_dirichlet(mask, phi, tol, initial=previous)
        except ConvergenceError as exc:
            raise SuiteError(f"{domain.name}/{data.name}: solve failed at level {k}: {exc}") from exc
        solved[k] = (cells.is_empty, mask.num_free, u_k, report)
        previous = u_k

    inside = ~node_masks(build_cellset(domain, K), grid, domain).exterior
    u = solved[K][2]
    E_full = energy(u, inside)
    records = []
    for k in ks:
        empty, nfree, u_k, report = solved[k]
        E_k = energy(u_k, inside)
        half_diff = (u - u_k).scaled(0.5)
        half_sum = (u + u_k).scaled(0.5)
        para = abs(energy(half_diff, inside) + energy(half_sum, inside) - 0.5 * E_k - 0.5 * E_full)
        grad, l2 = h1_distance(u_k, u, inside)
        records.append(
            LevelRecord(k, empty, nfree, E_k, E_k - E_full, para, grad, l2, report.iterations, report.residual)
        )
    return EnergyLedger(
        domain=domain.name,
        data=data.name,
        K=K,
        tol=tol,
        E_full=E_full,
        L=domain.bbox_side,
        levels=records,
        fields={k: solved[k][2] for k in ks} if keep_fields else {},
        phi=phi if keep_fields else None,
        inside=inside if keep_fields else None,
    )


# --- minimizer vs walk-on-spheres --------------------------------------------


def calibrate_c_disc(
    domain: Domain,
    K: int,
    probes: Sequence,
    tol: float = DEFAULT_TOL,
    data_names: Sequence[str] = CALIBRATION_DATA,
) -> float:
    """Twice the largest ``|u_h - exact| / h**2`` over analytic cases at the probes."""
    h = make_grid(domain, K).h
    worst = 0.0
    for name in data_names:
        data = builtin_data(name, domain)
        u = level_solution(domain, data, K, tol)
        for p in probes:
            exact = float(data.has_analytic_solution(np.asarray(p, dtype=float)))
            worst = max(worst, abs(interpolate(u, p) - exact) / h**2)
    return 2.0 * worst


@dataclass
class ProbeResult:
    point: tuple[float, float]
    u_value: float
    wos_mean: float
    wos_stderr: float
    discretization_bound: float
    passed: bool
    skipped: str = ""

    @property
    def ratio(self) -> float:
        if self.skipped:
            return 0.0
        return abs(self.u_value - self.wos_mean) / (3 * self.wos_stderr + self.discretization_bound)


@dataclass
class ComparisonReport:
    domain: str
    data: str
    K: int
    h: float
    c_disc: float
    probes: list[ProbeResult]

    columns = ("domain", "data", "x", "y", "u_value", "wos_mean", "wos_stderr",
               "discretization_bound", "c_disc", "pass", "skipped")

    @property
    def case(self) -> str:
        return f"{self.domain}/{self.data}"

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.probes if not p.skipped) and any(not p.skipped for p in self.probes)

    @property
    def worst_metric(self) -> float:
        return max((p.ratio for p in self.probes), default=0.0)

    def rows(self) -> list[list]:
        nan = float("nan")
        return [
            [self.domain, self.data, p.point[0], p.point[1],
             nan if p.skipped else p.u_value, nan if p.skipped else p.wos_mean,
             nan if p.skipped else p.wos_stderr, p.discretization_bound, self.c_disc,
             int(p.passed), p.skipped]
            for p in self.probes
        ]


def compare_minimizer_vs_perron(
    domain: Domain,
    data: BoundaryData,
    K: int,
    probes: Sequence,
    wos_cfg: WosConfig,
    tol: float = DEFAULT_TOL,
    *,
    c_disc: float | None = None,
) -> ComparisonReport:
    grid = make_grid(domain, K)
    h = grid.h
    pts = [tuple(float(c) for c in p) for p in probes]
    depth = -domain.sdf(np.asarray(pts, dtype=float).reshape(-1, 2))
    usable = [p for p, d in zip(pts, depth) if d >= 10 * h]
    if c_disc is None:
        names = list(CALIBRATION_DATA)
        if data.has_analytic_solution is not None and data.name not in names:
            names.append(data.name)
        c_disc = calibrate_c_disc(domain, K, usable, tol, names) if usable else 0.0
    bound = c_disc * h * h

    u = level_solution(domain, data, K, tol)
    estimates = iter(wos_grid(domain, data.g, usable, wos_cfg))
    results = []
    for p, d in zip(pts, depth):
        if d < 10 * h:
            results.append(ProbeResult(p, math.nan, math.nan, math.nan, bound, False,
                                       skipped=f"within 10h of boundary (depth {d:.3g})"))
            continue
        est = next(estimates)
        uv = interpolate(u, p)
        ok = abs(uv - est.mean) <= 3 * est.stderr + bound
        results.append(ProbeResult(p, uv, est.mean, est.stderr, bound, ok))
    return ComparisonReport(domain.name, data.name, K, h, c_disc, results)


# --- boundary approach -------------------------------------------------------


@dataclass
class BoundaryTable:
    domain: str
    data: str
    xi: tuple[float, float]
    normal: tuple[float, float]
    corner: bool
    osc_g: float
    distances: list[float]
    deviations: list[float]

    columns = ("domain", "data", "xi_x", "xi_y", "d", "x", "y", "deviation", "corner")
    DECREASE_SLACK = 1e-12
    FINAL_FRACTION = 0.05

    @property
    def case(self) -> str:
        return f"{self.domain}/{self.data}"

    @property
    def decreasing(self) -> bool:
        dv = self.deviations
        return all(b <= a + self.DECREASE_SLACK for a, b in zip(dv, dv[1:]))

    @property
    def final_ok(self) -> bool:
        return self.deviations[-1] <= self.FINAL_FRACTION * self.osc_g + self.DECREASE_SLACK

    @property
    def passed(self) -> bool:
        return self.decreasing and self.final_ok

    @property
    def worst_metric(self) -> float:
        limit = self.FINAL_FRACTION * self.osc_g
        return self.deviations[-1] / limit if limit > 0 else self.deviations[-1]

    def rows(self) -> list[list]:
        out = []
        for d, dev in zip(self.distances, self.deviations):
            x = self.xi[0] + d * self.normal[0]
            y = self.xi[1] + d * self.normal[1]
            out.append([self.domain, self.data, self.xi[0], self.xi[1], d, x, y, dev, int(self.corner)])
        return out


def inward_normal(domain: Domain, xi) -> tuple[np.ndarray, bool]:
    """Inward unit normal at a boundary point; angle bisector at a corner.

    At a corner the central-difference gradient of the distance function is
    the average of the two one-sided normals, so its length drops below one
    and its direction is the bisector.
    """
    step = 1e-6 * domain.diameter
    p = np.asarray(xi, dtype=float)
    gx = (domain.sdf(p + [step, 0]) - domain.sdf(p - [step, 0])) / (2 * step)
    gy = (domain.sdf(p + [0, step]) - domain.sdf(p - [0, step])) / (2 * step)
    grad = np.array([float(gx), float(gy)])
    norm = float(np.hypot(*grad))
    if norm == 0:
        raise ValueError(f"normal undefined at {tuple(p)}")
    return -grad / norm, norm < 0.99


def boundary_convergence_suite(
    domain: Domain, data: BoundaryData, K: int, xi, tol: float = DEFAULT_TOL, m_range=range(2, 7)
) -> BoundaryTable:
    xi = tuple(float(c) for c in xi)
    if abs(float(domain.sdf(np.asarray(xi)))) > 1e-9:
        raise ValueError(f"{xi} is not on the boundary of {domain.name}")
    normal, corner = inward_normal(domain, xi)
    u = level_solution(domain, data, K, tol)
    g_xi = float(data.g(np.asarray(xi)))
    gb = data.g(domain.boundary_points(4096))
    osc = float(np.max(gb) - np.min(gb))
    distances, deviations = [], []
    for m in m_range:
        d = 2.0**-m * domain.diameter
        x = np.asarray(xi) + d * normal
        if not domain.inside(x):
            raise ValueError(f"probe at distance {d:g} from {xi} left the domain")
        distances.append(d)
        deviations.append(abs(interpolate(u, x) - g_xi))
    return BoundaryTable(domain.name, data.name, xi, (float(normal[0]), float(normal[1])),
                         corner, osc, distances, deviations)


# --- lacunary series energies ------------------------------------------------


class ResolutionError(ValueError):
    pass


@dataclass
class HadamardTable:
    K: int
    M: list[int]
    energies: list[float]
    exact: list[float]

    columns = ("M", "max_mode", "E_h", "E_exact", "rel_error", "ratio_prev", "ratio_first")
    REL_TOL = 0.10
    MIN_GROWTH_4_1 = 1.25

    case = "disc(1)/hadamard_partial"

    @property
    def rel_errors(self) -> list[float]:
        return [abs(e - x) / x for e, x in zip(self.energies, self.exact)]

    def ratio(self, a: int, b: int) -> float:
        return self.energies[self.M.index(a)] / self.energies[self.M.index(b)]

    @property
    def passed(self) -> bool:
        ok = all(r <= self.REL_TOL for r in self.rel_errors)
        if 1 in self.M and 4 in self.M:
            ok = ok and self.ratio(4, 1) >= self.MIN_GROWTH_4_1
        return ok

    @property
    def worst_metric(self) -> float:
        return max(self.rel_errors)

    def rows(self) -> list[list]:
        out = []
        for i, (M, e, x) in enumerate(zip(self.M, self.energies, self.exact)):
            prev = e / self.energies[i - 1] if i else float("nan")
            out.append([M, math.factorial(M), e, x, abs(e - x) / x, prev, e / self.energies[0]])
        return out


def hadamard_energy_growth(M_range: Iterable[int], K: int) -> HadamardTable:
    domain = builtin_domain("disc(1)")
    grid = make_grid(domain, K)
    Ms = sorted(M_range)
    for M in Ms:
        if math.factorial(M) * grid.h > 0.1:
            raise ResolutionError(
                f"mode {math.factorial(M)} needs n!*h <= 0.1 but h = {grid.h:g} at K={K}; raise K"
            )
    inside = ~node_masks(build_cellset(domain, K), grid, domain).exterior
    energies = [energy(sample_phi(hadamard_partial_sum(M), grid, domain), inside) for M in Ms]
    return HadamardTable(K, Ms, energies, [hadamard_energy(M) for M in Ms])


# --- annulus harmonic measure ------------------------------------------------


def annulus_law(rho: float, r: float) -> float:
    return math.log(1.0 / r) / math.log(1.0 / rho)


@dataclass
class AnnulusTable:
    r_probe: float
    K: int
    rhos: list[float]
    solver: list[float]
    wos: list[tuple[float, float]]

    columns = ("rho", "r", "exact", "u_value", "u_rel_error", "wos_mean", "wos_stderr", "wos_rel_error")
    REL_TOL = 0.02
    case = "annulus/annulus_indicator"

    def _errors(self):
        for rho, u, (m, _) in zip(self.rhos, self.solver, self.wos):
            x = annulus_law(rho, self.r_probe)
            yield abs(u - x) / x, abs(m - x) / x

    @property
    def passed(self) -> bool:
        return all(a <= self.REL_TOL and b <= self.REL_TOL for a, b in self._errors())

    @property
    def worst_metric(self) -> float:
        return max(max(a, b) for a, b in self._errors())

    def rows(self) -> list[list]:
        out = []
        for (rho, u, (m, se)), (eu, ew) in zip(zip(self.rhos, self.solver, self.wos), self._errors()):
            out.append([rho, self.r_probe, annulus_law(rho, self.r_probe), u, eu, m, se, ew])
        return out


def annulus_measure_law(
    rho_list: Sequence[float], r_probe: float, K: int, wos_cfg: WosConfig, tol: float = DEFAULT_TOL
) -> AnnulusTable:
    solver, wos = [], []
    for rho in rho_list:
        if not rho < r_probe < 1:
            raise ValueError(f"need rho < r < 1, got rho={rho}, r={r_probe}")
        domain = builtin_domain(f"annulus({rho},1)")
        h = make_grid(domain, K).h
        if rho < 4 * h:
            raise ResolutionError(f"inner radius {rho} is below 4h = {4 * h:g} at K={K}")
        data = builtin_data("annulus_indicator", domain)
        u = level_solution(domain, data, K, tol)
        solver.append(interpolate(u, (r_probe, 0.0)))
        est = wos_grid(domain, data.g, [(r_probe, 0.0)], wos_cfg)[0]
        wos.append((est.mean, est.stderr))
    return AnnulusTable(r_probe, K, list(rho_list), solver, wos)


# --- corpus drivers ----------------------------------------------------------


def exhaustion_corpus(K: int, k_range: Iterable[int], tol: float = DEFAULT_TOL):
    for dname in EXHAUSTION_DOMAINS:
        domain = builtin_domain(dname)
        for name in EXHAUSTION_DATA:
            yield run_exhaustion_suite(domain, builtin_data(name, domain), K, k_range, tol)


def compare_corpus(K: int, wos_cfg: WosConfig, tol: float = DEFAULT_TOL):
    for dname, name, probes in COMPARE_CASES:
        domain = builtin_domain(dname)
        yield compare_minimizer_vs_perron(domain, builtin_data(name, domain), K, probes, wos_cfg, tol)


def boundary_corpus(K: int, tol: float = DEFAULT_TOL):
    for dname, name, xi in BOUNDARY_CASES:
        domain = builtin_domain(dname)
        yield boundary_convergence_suite(domain, builtin_data(name, domain), K, xi, tol)

