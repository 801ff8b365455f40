"""Independent reference computations used to freeze expected values.

Nothing here imports the package; each routine recomputes its quantity by a
different route (quadrature, enumeration, ODE residuals).
"""

import math

import numpy as np


def polar_dirichlet_energy(grad_polar, n_r=400, n_theta=4096):
    """Integrate ``u_r**2 + (u_theta / r)**2`` over the unit disc.

    Gauss-Legendre in r, trapezoid in theta (exact for trigonometric
    polynomials of degree below ``n_theta``).
    """
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(r, theta, indexing="ij")
    ur, ut = grad_polar(R, T)
    integrand = (ur**2 + (ut / R) ** 2) * R
    return float(np.sum(integrand * wr[:, None]) * (2 * np.pi / n_theta))


def lacunary_gradient(M):
    """Polar partials of ``sum_{n<=M} n^-2 r^(n!) sin(n! theta)``."""

    def grad(R, T):
        ur = np.zeros_like(R)
        ut = np.zeros_like(R)
        for n in range(1, M + 1):
            m = math.factorial(n)
            c = 1.0 / n**2
            ur += c * m * R ** (m - 1) * np.sin(m * T)
            ut += c * m * R**m * np.cos(m * T)
        return ur, ut

    return grad


def poisson_integral(g_of_theta, x, y, n=8192):
    """Harmonic extension into the unit disc via the Poisson kernel."""
    theta = 2 * np.pi * np.arange(n) / n
    r2 = x * x + y * y
    dist2 = (np.cos(theta) - x) ** 2 + (np.sin(theta) - y) ** 2
    kernel = (1 - r2) / dist2
    return float(np.mean(kernel * g_of_theta(theta)))


def radial_ode_residual(f, r, dr=1e-4):
    """``f'' + f'/r`` by central differences; zero for radial harmonics."""
    d1 = (f(r + dr) - f(r - dr)) / (2 * dr)
    d2 = (f(r + dr) - 2 * f(r) + f(r - dr)) / dr**2
    return d2 + d1 / r


def square_cells_inside(N):
    """Count cells ``[i/N,(i+1)/N] x [j/N,(j+1)/N]`` contained in the open unit square."""
    count = 0
    for i in range(N):
        for j in range(N):
            if i / N > 0 and (i + 1) / N < 1 and j / N > 0 and (j + 1) / N < 1:
                count += 1
    return count


def grid_edge_energy_of_x(N):
    """Hand count: N horizontal edges per row, N+1 rows, each difference 1/N."""
    return N * (N + 1) * (1.0 / N) ** 2
