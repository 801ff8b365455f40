import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perronlab.domain import builtin_data, builtin_domain
from perronlab.exhaust import NodeMask, build_cellset, make_grid, node_masks
from perronlab.fdsolve import (
    ConvergenceError,
    IllPosedMaskError,
    ScalarField,
    energy,
    energy_form,
    h1_distance,
    interpolate,
    read_field,
    sample_phi,
    solve_dirichlet,
    write_field,
)

from oracles import grid_edge_energy_of_x

DOMAINS = ["unit_square", "disc(1)", "annulus(0.05,1)", "l_shape"]


def setup(domain_name, data_name, K=6, k=None):
    d = builtin_domain(domain_name)
    data = builtin_data(data_name, d)
    grid = make_grid(d, K)
    mask = node_masks(build_cellset(d, k or K), grid, d)
    return d, data, grid, mask, sample_phi(data, grid, d)


def test_sample_constant():
    d, _, grid, mask, phi = setup("disc(1)", "constant(7)")
    assert np.all(phi.values[mask.inside] == 7.0)
    assert np.all(phi.values[mask.exterior] == 0.0)


def test_sample_affine_is_node_x():
    d, _, grid, mask, phi = setup("unit_square", "affine(1,0,0)")
    X, _ = grid.coords()
    assert np.array_equal(phi.values[mask.inside], X[mask.inside])


def test_sample_saddle_near_point():
    d, _, grid, mask, phi = setup("disc(1)", "saddle", K=7)
    j, i = grid.nearest_node((0.3, 0.4))
    X, Y = grid.coords()
    assert phi.values[j, i] == pytest.approx(X[j, i] ** 2 - Y[j, i] ** 2, abs=1e-15)
    assert phi.values[j, i] == pytest.approx(-0.07, abs=2 * grid.h)


@pytest.mark.parametrize("N_exp", [3, 4, 6])
def test_energy_of_x_on_unit_square(N_exp):
    d, _, grid, mask, phi = setup("unit_square", "affine(1,0,0)", K=N_exp)
    N = 2**N_exp
    assert energy(phi, mask.inside) == pytest.approx(grid_edge_energy_of_x(N), rel=1e-14)


def test_energy_of_constant_is_zero():
    d, _, grid, mask, phi = setup("l_shape", "constant(3)")
    assert energy(phi, mask.inside) == 0.0


def test_saddle_energy_converges_to_8_over_3():
    errs = []
    for K in (5, 6, 7, 8):
        d, _, grid, mask, phi = setup("unit_square", "saddle", K=K)
        errs.append(abs(energy(phi, mask.inside) - 8 / 3))
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 2 * make_grid(builtin_domain("unit_square"), 8).h * 8 / 3


@pytest.mark.parametrize("domain_name", DOMAINS)
@pytest.mark.parametrize("data_name", ["affine(1,-0.5,0.25)", "saddle", "constant(2)", "fourier_mode(3)"])
def test_discretely_harmonic_data_reproduced(domain_name, data_name):
    d, _, grid, mask, phi = setup(domain_name, data_name, K=6)
    u, rep = solve_dirichlet(mask, phi)
    assert rep.residual <= rep.tolerance
    assert np.max(np.abs(u.values - phi.values)) <= 1e-10


def test_stencil_identity_for_squares():
    # (x+h)^2 - 2x^2 + (x-h)^2 = 2h^2, so x^2 - y^2 is annihilated.
    x, h = 0.37, 0.125
    assert (x + h) ** 2 - 2 * x**2 + (x - h) ** 2 == pytest.approx(2 * h * h, rel=1e-14)


def test_cold_start_matches_solution():
    d, _, grid, mask, phi = setup("disc(1)", "fourier_mode(5)", K=6)
    u, rep = solve_dirichlet(mask, phi, 1e-12)
    u0, _ = solve_dirichlet(mask, phi, 1e-12, initial=ScalarField(grid, np.zeros(grid.shape)))
    assert np.max(np.abs(u.values - u0.values)) < 1e-9
    assert rep.iterations > 0


def _poisson_residual(u, mask):
    v = u.values
    r = np.zeros_like(v)
    r[1:-1, 1:-1] = 4 * v[1:-1, 1:-1] - v[:-2, 1:-1] - v[2:, 1:-1] - v[1:-1, :-2] - v[1:-1, 2:]
    return np.abs(r[mask.free]).max()


def test_solution_satisfies_stencil_and_clamps():
    d, _, grid, mask, phi = setup("l_shape", "fourier_mode(6)", K=6, k=4)
    u, rep = solve_dirichlet(mask, phi, 1e-12)
    assert np.array_equal(u.values[~mask.free], phi.values[~mask.free])
    assert _poisson_residual(u, mask) < 1e-9


@pytest.fixture(scope="module")
def solved_annulus():
    d, data, grid, mask, phi = setup("annulus(0.05,1)", "fourier_mode(4)", K=6, k=5)
    tol = 1e-10
    u, _ = solve_dirichlet(mask, phi, tol)
    return grid, mask, u, tol


def test_variational_characterization(solved_annulus):
    grid, mask, u, tol = solved_annulus
    rng = np.random.default_rng(0)
    E = energy(u, mask.inside)
    for _ in range(100):
        w = np.where(mask.free, rng.normal(size=grid.shape), 0.0) * rng.uniform(1e-6, 1.0)
        assert energy(u + ScalarField(grid, w), mask.inside) >= E - 10 * tol * E


def test_galerkin_orthogonality(solved_annulus):
    grid, mask, u, tol = solved_annulus
    rng = np.random.default_rng(1)
    E = energy(u, mask.inside)
    for _ in range(20):
        w = ScalarField(grid, np.where(mask.free, rng.normal(size=grid.shape), 0.0))
        assert abs(energy_form(u, w, mask.inside)) <= 10 * tol * np.sqrt(E * energy(w, mask.inside)) + 1e-12


def test_discrete_maximum_principle(solved_annulus):
    grid, mask, u, tol = solved_annulus
    clamped = u.values[mask.clamped]
    free = u.values[mask.free]
    spread = clamped.max() - clamped.min()
    assert free.min() >= clamped.min() - tol * spread
    assert free.max() <= clamped.max() + tol * spread


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_parallelogram_identity(seed, scale):
    d = builtin_domain("disc(1)")
    grid = make_grid(d, 4)
    inside = d.sdf(grid.points()) <= 0
    rng = np.random.default_rng(seed)
    a = ScalarField(grid, scale * rng.normal(size=grid.shape))
    b = ScalarField(grid, rng.normal(size=grid.shape))
    lhs = energy((a - b).scaled(0.5), inside) + energy((a + b).scaled(0.5), inside)
    rhs = 0.5 * energy(a, inside) + 0.5 * energy(b, inside)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("domain_name", DOMAINS)
def test_discrete_friedrichs(domain_name):
    d = builtin_domain(domain_name)
    grid = make_grid(d, 6)
    L = d.bbox_side
    rng = np.random.default_rng(7)
    for k in range(3, 7):
        m = node_masks(build_cellset(d, k), grid, d)
        for _ in range(100):
            w = ScalarField(grid, np.where(m.free, rng.normal(size=grid.shape), 0.0))
            _, l2 = h1_distance(w, ScalarField(grid, np.zeros(grid.shape)), m.inside)
            assert l2 <= L**2 * energy(w, m.inside)


def test_h1_distance_examples():
    d, _, grid, mask, phi = setup("unit_square", "affine(1,0,0)", K=4)
    zero = ScalarField(grid, np.zeros(grid.shape))
    assert h1_distance(phi, phi, mask.inside) == (0.0, 0.0)
    c = ScalarField(grid, np.full(grid.shape, 3.0))
    grad, l2 = h1_distance(c, zero, mask.inside)
    assert grad == 0.0
    assert l2 == pytest.approx(grid.h**2 * mask.inside.sum() * 9.0)
    grad, _ = h1_distance(phi, zero, mask.inside)
    assert grad == pytest.approx(grid_edge_energy_of_x(16))


def test_h1_distance_grid_mismatch():
    a = sample_phi(builtin_data("saddle", builtin_domain("disc(1)")), make_grid(builtin_domain("disc(1)"), 4), builtin_domain("disc(1)"))
    b = sample_phi(builtin_data("saddle", builtin_domain("disc(1)")), make_grid(builtin_domain("disc(1)"), 5), builtin_domain("disc(1)"))
    with pytest.raises(ValueError):
        h1_distance(a, b, np.ones(a.grid.shape, bool))


def test_ill_posed_mask_rejected():
    d, _, grid, mask, phi = setup("disc(1)", "saddle", K=4)
    free = mask.free.copy()
    free[0, 0] = True
    bad = NodeMask(free=free, clamped=mask.clamped & ~free, exterior=mask.exterior & ~free)
    with pytest.raises(IllPosedMaskError):
        solve_dirichlet(bad, phi)


def test_nonconvergence_reports_residual():
    d, _, grid, mask, phi = setup("disc(1)", "fourier_mode(6)", K=6)
    with pytest.raises(ConvergenceError) as info:
        solve_dirichlet(mask, phi, 1e-14, max_iter=3)
    assert info.value.residual > 1e-14
    assert info.value.iterations == 3


def test_interpolation_exact_for_bilinear():
    d, _, grid, mask, _ = setup("unit_square", "saddle", K=4)
    X, Y = grid.coords()
    f = ScalarField(grid, 2 * X - 3 * Y + 0.5 * X * Y)
    for p in [(0.3, 0.7), (0.51, 0.2), (0.0625, 0.9375)]:
        assert interpolate(f, p) == pytest.approx(2 * p[0] - 3 * p[1] + 0.5 * p[0] * p[1], abs=1e-14)


def test_field_dump_round_trip(tmp_path):
    d, _, grid, mask, phi = setup("l_shape", "fourier_mode(4)", K=4)
    path = tmp_path / "u.txt"
    write_field(path, phi)
    lines = path.read_text().splitlines()
    assert lines[0].split()[:2] == [str(grid.nx), str(grid.ny)]
    assert len(lines) == grid.ny + 1
    back = read_field(path, K=grid.K)
    assert back.grid == grid
    assert np.array_equal(back.values, phi.values)
