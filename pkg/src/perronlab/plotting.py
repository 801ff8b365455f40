"""Matplotlib figures for suite results.

Figures are written with a fixed SVG hash salt and no date metadata so that
repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 4.0),
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "image.cmap": "viridis",
    "svg.hashsalt": "perronlab",
    "svg.fonttype": "path",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt in ("svg", "pdf") else {}
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def field_heatmap(field, inside: np.ndarray, path, title: str = "", *, cmap: str | None = None) -> Path:
    """Node values on the closed domain; exterior nodes left blank."""
    g = field.grid
    data = np.ma.masked_where(~inside, field.values)
    extent = (
        g.origin[0] - g.h / 2,
        g.origin[0] + (g.nx - 0.5) * g.h,
        g.origin[1] - g.h / 2,
        g.origin[1] + (g.ny - 0.5) * g.h,
    )
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        im = ax.imshow(data, origin="lower", extent=extent, cmap=cmap, interpolation="nearest")
        ax.set_aspect("equal")
        ax.grid(False)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.85)
        return _save(fig, path)


def energy_gap_plot(ledger, path) -> Path:
    ks = [r.k for r in ledger.levels if r.k < ledger.K]
    gap = [r.gap for r in ledger.levels if r.k < ledger.K]
    grad = [0.25 * r.h1_grad for r in ledger.levels if r.k < ledger.K]
    l2 = [r.l2 for r in ledger.levels if r.k < ledger.K]
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        floor = np.finfo(float).tiny
        ax.semilogy(ks, np.maximum(gap, floor), "o-", label="E_k - E_K")
        ax.semilogy(ks, np.maximum(grad, floor), "s--", label="energy(u_k - u) / 4")
        ax.semilogy(ks, np.maximum(l2, floor), "^:", label="h^2 sum (u_k - u)^2")
        ax.set_xlabel("level k")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_title(f"{ledger.case}, K={ledger.K}")
        ax.legend()
        return _save(fig, path)


def comparison_plot(report, path) -> Path:
    rows = [p for p in report.probes if not p.skipped]
    idx = np.arange(len(rows))
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        ax.errorbar(idx, [p.wos_mean for p in rows], yerr=[3 * p.wos_stderr for p in rows],
                    fmt="o", capsize=3, label="walk on spheres (3 s.e.)")
        ax.plot(idx, [p.u_value for p in rows], "x", ms=8, label="grid minimizer")
        ax.set_xticks(idx, [f"({p.point[0]:g},{p.point[1]:g})" for p in rows], rotation=30)
        ax.set_title(report.case)
        ax.legend()
        return _save(fig, path)


def hadamard_plot(table, path) -> Path:
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(table.M, table.exact, "o-", label="exact series energy")
        ax.plot(table.M, table.energies, "x--", label=f"grid energy, K={table.K}")
        ax.set_xlabel("terms M")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_ylabel("Dirichlet energy")
        ax.legend()
        return _save(fig, path)


def annulus_plot(table, path) -> Path:
    from .verify import annulus_law

    rho = np.geomspace(min(table.rhos) / 10, 0.25, 200)
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(rho, [annulus_law(r, table.r_probe) for r in rho], "-", label="log(1/r)/log(1/rho)")
        ax.semilogx(table.rhos, table.solver, "x", ms=8, label="grid minimizer")
        ax.errorbar(table.rhos, [m for m, _ in table.wos], yerr=[3 * s for _, s in table.wos],
                    fmt="o", capsize=3, mfc="none", label="walk on spheres")
        ax.set_xlabel("inner radius rho")
        ax.set_ylabel(f"u(r={table.r_probe:g})")
        ax.legend()
        return _save(fig, path)
