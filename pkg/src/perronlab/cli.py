"""Command-line entry point: ``perronlab {exhaust,solve,wos,verify,report}``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration
error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import verify as V
from .config import ConfigError, RunConfig, load_config, validate
from .domain import builtin_data, builtin_domain
from .exhaust import build_cellset, exhaustion_table, make_grid, node_masks
from .fdsolve import energy, sample_phi, solve_dirichlet, write_field
from .reports import summary_entry, write_csv, write_json
from .wos import WosConfig, wos_grid

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SUITES = ("exhaustion", "compare", "boundary", "hadamard", "annulus")

log = logging.getLogger("perronlab")


class CheckFailed(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default", help="config file path, or 'default'")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="walk-on-spheres seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="perronlab", description="Dirichlet minimizer vs Perron solution lab.")
    sub = p.add_subparsers(dest="command", required=True, metavar="{exhaust,solve,wos,verify,report}")
    sub.add_parser("exhaust", parents=[common], help="per-level exhaustion table")
    sub.add_parser("solve", parents=[common], help="solve at the fine level, dump the field")
    w = sub.add_parser("wos", parents=[common], help="walk-on-spheres estimates at points")
    w.add_argument("--points", help="inline points 'x,y;x,y;...'")
    w.add_argument("--points-file", help="file with one 'x y' pair per line")
    w.add_argument("--epsilon", type=float)
    w.add_argument("--walks", type=int)
    v = sub.add_parser("verify", parents=[common], help="run experiment suites")
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    v.add_argument("--walks", type=int)
    v.add_argument("--svg", action="store_true", help="also render figures")
    sub.add_parser("report", parents=[common], help="exhaustion ledger with figures for the configured case")
    return p


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    updates = {}
    if args.out is not None:
        updates["out"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "walks", None) is not None:
        updates["n_walks"] = args.walks
    if getattr(args, "epsilon", None) is not None:
        updates["epsilon"] = args.epsilon
    if getattr(args, "svg", False):
        updates["emit_svg"] = True
    cfg = dataclasses.replace(cfg, **updates)
    problems = validate(cfg)
    if problems:
        raise ConfigError([msg for _, msg in problems])
    return cfg


def _wos_config(cfg: RunConfig) -> WosConfig:
    return WosConfig(epsilon=cfg.epsilon, max_steps=cfg.max_steps, n_walks=cfg.n_walks, seed=cfg.seed)


def cmd_exhaust(cfg: RunConfig, out: Path) -> list[str]:
    domain = builtin_domain(cfg.domain)
    rows = exhaustion_table(domain, cfg.K)
    write_csv(out / "exhaust.csv", ("k", "num_cells", "area", "num_free_nodes"),
              [[r["k"], r["num_cells"], r["area"], r["num_free_nodes"]] for r in rows])
    failures = []
    grid = make_grid(domain, cfg.K)
    prev = None
    for k in range(1, cfg.K + 1):
        mask = node_masks(build_cellset(domain, k, allow_empty=True), grid, domain)
        if not mask.is_well_posed():
            failures.append(f"exhaust {domain.name}: level {k} mask has a free node next to an exterior node")
        if prev is not None and np.any(prev & ~mask.free):
            failures.append(f"exhaust {domain.name}: free nodes of level {k - 1} not contained in level {k}")
        prev = mask.free
    return failures


def cmd_solve(cfg: RunConfig, out: Path) -> list[str]:
    domain = builtin_domain(cfg.domain)
    data = builtin_data(cfg.data, domain)
    grid = make_grid(domain, cfg.K)
    mask = node_masks(build_cellset(domain, cfg.K), grid, domain)
    u, report = solve_dirichlet(mask, sample_phi(data, grid, domain), cfg.tol)
    out.mkdir(parents=True, exist_ok=True)
    write_field(out / "field.txt", u)
    write_json(out / "solve_report.json", {
        "iterations": report.iterations,
        "residual": report.residual,
        "energy": energy(u, mask.inside),
    })
    return []


def _read_points(args) -> list[tuple[float, float]]:
    pts = []
    if args.points:
        for chunk in args.points.split(";"):
            if chunk.strip():
                x, y = chunk.split(",")
                pts.append((float(x), float(y)))
    if args.points_file:
        with open(args.points_file) as fh:
            for line in fh:
                if line.strip() and not line.lstrip().startswith("#"):
                    x, y = line.split()[:2]
                    pts.append((float(x), float(y)))
    return pts


def cmd_wos(cfg: RunConfig, out: Path, points) -> list[str]:
    domain = builtin_domain(cfg.domain)
    data = builtin_data(cfg.data, domain)
    estimates = wos_grid(domain, data.g, points, _wos_config(cfg))
    write_csv(out / "wos.csv", ("x", "y", "mean", "stderr", "mean_steps", "truncated"),
              [[p[0], p[1], e.mean, e.stderr, e.mean_steps, e.truncated_walks]
               for p, e in zip(points, estimates)])
    return [f"wos ({p[0]:g},{p[1]:g}): {e.truncated_walks} truncated walks exceed 1%"
            for p, e in zip(points, estimates) if e.truncation_warning]


def _run_suite(name: str, cfg: RunConfig) -> list:
    wcfg = _wos_config(cfg)
    if name == "exhaustion":
        return list(V.exhaustion_corpus(cfg.K, cfg.levels, cfg.tol))
    if name == "compare":
        return list(V.compare_corpus(cfg.K, wcfg, cfg.tol))
    if name == "boundary":
        return list(V.boundary_corpus(cfg.K, cfg.tol))
    if name == "hadamard":
        return [V.hadamard_energy_growth(V.HADAMARD_M, max(cfg.K, V.HADAMARD_MIN_K))]
    if name == "annulus":
        return [V.annulus_measure_law(V.ANNULUS_RHOS, V.ANNULUS_PROBE, max(cfg.K, V.ANNULUS_MIN_K), wcfg, cfg.tol)]
    raise ValueError(name)


def _figures(name: str, results: list, figdir: Path) -> None:
    from . import plotting

    for i, res in enumerate(results):
        if name == "exhaustion":
            plotting.energy_gap_plot(res, figdir / f"exhaustion_{i:02d}.svg")
        elif name == "compare":
            plotting.comparison_plot(res, figdir / f"compare_{i:02d}.svg")
        elif name == "hadamard":
            plotting.hadamard_plot(res, figdir / "hadamard.svg")
        elif name == "annulus":
            plotting.annulus_plot(res, figdir / "annulus.svg")


def cmd_verify(cfg: RunConfig, out: Path, suite: str) -> list[str]:
    names = SUITES if suite == "all" else (suite,)
    summary, failures = [], []
    for name in names:
        try:
            results = _run_suite(name, cfg)
        except (V.SuiteError, V.ResolutionError, ValueError) as exc:
            summary.append({"suite": name, "case": "-", "pass": False, "worst_metric": None})
            failures.append(f"{name}: {exc}")
            continue
        rows = [row for res in results for row in res.rows()]
        write_csv(out / f"{name}.csv", results[0].columns, rows)
        for res in results:
            entry = summary_entry(name, res)
            summary.append(entry)
            status = "PASS" if entry["pass"] else "FAIL"
            print(f"{status} {name} {res.case} worst_metric={entry['worst_metric']}")
            if not entry["pass"]:
                failures.append(f"{name} {res.case}: worst_metric={entry['worst_metric']}")
        if cfg.emit_svg:
            _figures(name, results, out / "figures")
    write_json(out / "summary.json", summary)
    return failures


def cmd_report(cfg: RunConfig, out: Path) -> list[str]:
    from . import plotting

    domain = builtin_domain(cfg.domain)
    data = builtin_data(cfg.data, domain)
    ledger = V.run_exhaustion_suite(domain, data, cfg.K, cfg.levels, cfg.tol, keep_fields=True)
    rdir = out / "report"
    write_csv(rdir / "ledger.csv", ledger.columns, ledger.rows())
    write_json(rdir / "summary.json", [summary_entry("exhaustion", ledger)])
    plotting.energy_gap_plot(ledger, rdir / "energy_gaps.svg")
    for k, u_k in ledger.fields.items():
        plotting.field_heatmap(u_k, ledger.inside, rdir / f"u_level{k:02d}.svg", f"u_{k}, {ledger.case}")
        diff = np.abs((u_k - ledger.phi).values)
        plotting.field_heatmap(dataclasses.replace(u_k, values=diff), ledger.inside,
                               rdir / f"absdiff_level{k:02d}.svg", f"|u_{k} - phi|", cmap="magma")
    if not ledger.passed:
        return [f"report {ledger.case}: " + ", ".join(f"{k}={v:.3g}" for k, v in ledger.checks().items() if v > 0)]
    return []


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(cfg.out)
    try:
        if args.command == "exhaust":
            failures = cmd_exhaust(cfg, out)
        elif args.command == "solve":
            failures = cmd_solve(cfg, out)
        elif args.command == "wos":
            try:
                points = _read_points(args)
            except ValueError as exc:
                print(f"bad point list: {exc}", file=sys.stderr)
                return EXIT_USAGE
            if not points:
                print("wos needs --points or --points-file", file=sys.stderr)
                return EXIT_USAGE
            failures = cmd_wos(cfg, out, points)
        elif args.command == "verify":
            failures = cmd_verify(cfg, out, args.suite)
        else:
            failures = cmd_report(cfg, out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"FAIL {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL

    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
