"""Command-line interface.

Subcommands::

    koopwend kernel show --d 3 --k 1
    koopwend interpolate --kernel 2,1 --centers X.csv --values f.csv --eval Z.csv
    koopwend simulate --system duffing --grid 0.2 --dt 0.02 --out data/
    koopwend kedmd run --config run.ini
    koopwend reproduce --experiment duffing-table1 --out results/
    koopwend bound h1 --system duffing --dt 0.02
    koopwend rates --table results/table.csv

All file I/O is headerless or single-header CSV with '.' decimals and 17
significant digits.  Exit status is 0 on success, 2 for configuration
problems, 3 for resource limits, 1 otherwise; failures emit a one-line JSON
error summary on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from koopwend import csvio
from koopwend.analysis import convergence_rate, h1_bound, ErrorReport
from koopwend.config import load_config
from koopwend.domain import BoxDomain
from koopwend.dynamics import FlowMap, design_grid, duffing, lorenz
from koopwend.errors import ConfigError, KernelConfigError, KoopwendError, ResourceLimitError
from koopwend.experiments import (
    DEFAULT_BUDGET_GB,
    DEFAULT_MAX_POINTS,
    reproduce_table,
    run_experiment,
    skipped_cells,
)
from koopwend.interpolation import CenterSet, evaluate, gram_factorization, interpolate
from koopwend.wendland import build_wendland

_ERROR_MODULE = {
    "KernelConfigError": "wendland_kernel",
    "FactorizationError": "interpolation",
    "IntegrationError": "dynamics",
    "ResourceLimitError": "dynamics",
    "ConfigError": "cli",
}

_SYSTEM_BOX = {
    "duffing": BoxDomain.cube(-2.0, 2.0, 2),
    "lorenz": BoxDomain.cube(-0.5, 0.5, 3),
}


def _system_field(name: str):
    return {"duffing": duffing, "lorenz": lorenz}[name]()


def _parse_kernel(spec: str, scale: float):
    try:
        d_str, k_str = spec.split(",")
        return build_wendland(int(d_str), int(k_str), scale)
    except ValueError as exc:
        if isinstance(exc, KernelConfigError):
            raise
        raise ConfigError([f"--kernel expects 'd,k', got {spec!r}"])


def _cmd_kernel_show(args) -> int:
    kern = build_wendland(args.d, args.k, args.scale)
    coeffs = ", ".join(str(c) for c in kern.poly.coeffs)
    print(f"profile coefficients (ascending powers of r): {coeffs}")
    print(f"degree: {kern.poly.degree}")
    print(f"sigma: {kern.sigma} (= {float(kern.sigma):g})")
    print(f"support scale: {csvio.fmt(kern.scale)}")
    return 0


def _cmd_interpolate(args) -> int:
    kern = _parse_kernel(args.kernel, args.scale)
    X = CenterSet(csvio.load_points(args.centers))
    values = csvio.load_values(args.values)
    Z = csvio.load_points(args.eval)
    interp = interpolate(gram_factorization(kern, X), values)
    out = evaluate(interp, Z)
    if args.out == "-":
        for v in out:
            print(csvio.fmt(v))
    else:
        csvio.write_points(args.out, out)
    return 0


def _cmd_simulate(args) -> int:
    field = _system_field(args.system)
    box = _SYSTEM_BOX[args.system]
    grid = design_grid(box, args.grid, args.max_points, mode=args.mode)
    X = grid.nodes()
    fm = FlowMap(field, args.dt, args.substeps)
    AX = fm(X.points)
    os.makedirs(args.out, exist_ok=True)
    csvio.write_points(os.path.join(args.out, "X.csv"), X.points)
    csvio.write_points(os.path.join(args.out, "AX.csv"), AX)
    print(f"wrote {len(X)} samples (grid spacing {csvio.fmt(grid.spacings[0])}, "
          f"fill distance {csvio.fmt(grid.fill_distance)}) to {args.out}")
    return 0


def _cmd_kedmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_experiment(cfg)
    for (variant, h), rep in sorted(summary.items()):
        print(f"{variant} h={h:g}: sup_error={rep.sup_error:.6g} l2_error={rep.l2_error:.6g}")
    print(f"outputs written to {cfg.out_dir}")
    return 0


def _cmd_reproduce(args) -> int:
    result = reproduce_table(
        args.experiment, args.out, budget_gb=args.budget_gb, max_points=args.max_points
    )
    spec = result.spec
    for variant in spec.variants:
        for k in spec.ks:
            parts = []
            for h in spec.hs:
                cell = result.cells[(variant, k, h)]
                parts.append(
                    f"h={h:g}: " + ("skipped" if cell.report is None else f"{cell.report.sup_error:.5f}")
                )
            print(f"{spec.name} {variant} k={k}  " + "  ".join(parts))
    skipped = skipped_cells(result)
    if skipped:
        print(f"{len(skipped)} cell(s) skipped:")
        for key, reason in sorted(skipped.items()):
            print(f"  {key}: {reason}")
    print(f"outputs written to {args.out}")
    return 0


def _cmd_bound_h1(args) -> int:
    field = _system_field(args.system)
    box = _SYSTEM_BOX[args.system]
    fm = FlowMap(field, args.dt, args.substeps)
    grid = design_grid(box, args.grid, DEFAULT_MAX_POINTS, mode=args.mode)
    samples = CenterSet(np.vstack([grid.nodes().points, grid.cell_centers().points]))
    fd_step = args.fd_step if args.fd_step is not None else 1e-5 * box.diameter
    bound = h1_bound(fm, samples, fd_step)
    print(csvio.fmt(bound))
    return 0


def _cmd_rates(args) -> int:
    import csv as _csv

    with open(args.table, "r", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        hs = [float(v) for v in header[3:]]
        rows = list(reader)
    out_rows = []
    for row in rows:
        variant, norm, k = row[0], row[1], row[2]
        pairs = [
            (h, float(v)) for h, v in zip(hs, row[3:]) if v != "skipped"
        ]
        if len(pairs) < 2:
            continue
        reports = [
            ErrorReport(sup_error=e, l2_error=e, per_point=np.array([e]), grid_h=h)
            for h, e in pairs
        ]
        rate = convergence_rate(reports)
        out_rows.append([variant, norm, k, str(len(pairs)), f"{rate.slope:.17g}"])
    header_out = ["variant", "norm", "k", "n_h", "slope"]
    if args.out == "-":
        print(",".join(header_out))
        for row in out_rows:
            print(",".join(row))
    else:
        csvio.write_csv(args.out, out_rows, header=header_out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopwend",
        description="Koopman prediction with compactly supported Wendland kernels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    kernel = sub.add_parser("kernel", help="kernel inspection")
    kernel_sub = kernel.add_subparsers(dest="subcommand", required=True)
    show = kernel_sub.add_parser("show", help="print the exact profile polynomial")
    show.add_argument("--d", type=int, required=True)
    show.add_argument("--k", type=int, required=True)
    show.add_argument("--scale", type=float, default=1.0)
    show.set_defaults(func=_cmd_kernel_show)

    interp = sub.add_parser("interpolate", help="kernel interpolation of center values")
    interp.add_argument("--kernel", required=True, metavar="D,K")
    interp.add_argument("--scale", type=float, default=1.0)
    interp.add_argument("--centers", required=True)
    interp.add_argument("--values", required=True)
    interp.add_argument("--eval", required=True)
    interp.add_argument("--out", default="-", help="output CSV (default stdout)")
    interp.set_defaults(func=_cmd_interpolate)

    sim = sub.add_parser("simulate", help="write one-step flow samples X.csv / AX.csv")
    sim.add_argument("--system", choices=("duffing", "lorenz"), required=True)
    sim.add_argument("--grid", type=float, required=True, metavar="H")
    sim.add_argument("--mode", choices=("spacing", "fill"), default="spacing")
    sim.add_argument("--dt", type=float, default=0.02)
    sim.add_argument("--substeps", type=int, default=4)
    sim.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    kedmd = sub.add_parser("kedmd", help="kernel EDMD runs")
    kedmd_sub = kedmd.add_subparsers(dest="subcommand", required=True)
    run = kedmd_sub.add_parser("run", help="run a configured prediction experiment")
    run.add_argument("--config", required=True)
    run.set_defaults(func=_cmd_kedmd_run)

    rep = sub.add_parser("reproduce", help="reproduce a benchmark table")
    rep.add_argument(
        "--experiment",
        required=True,
        choices=("duffing-table1", "duffing-table2", "lorenz-table3"),
    )
    rep.add_argument("--out", required=True)
    rep.add_argument("--budget-gb", type=float, default=DEFAULT_BUDGET_GB)
    rep.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS)
    rep.set_defaults(func=_cmd_reproduce)

    bound = sub.add_parser("bound", help="operator-norm bounds")
    bound_sub = bound.add_subparsers(dest="subcommand", required=True)
    h1 = bound_sub.add_parser("h1", help="sample-based H1 operator-norm bound of the flow")
    h1.add_argument("--system", choices=("duffing", "lorenz"), required=True)
    h1.add_argument("--dt", type=float, default=0.02)
    h1.add_argument("--substeps", type=int, default=4)
    h1.add_argument("--grid", type=float, default=0.1, metavar="H")
    h1.add_argument("--mode", choices=("spacing", "fill"), default="spacing")
    h1.add_argument("--fd-step", type=float, default=None)
    h1.set_defaults(func=_cmd_bound_h1)

    rates = sub.add_parser("rates", help="log-log convergence slopes from a table.csv")
    rates.add_argument("--table", required=True)
    rates.add_argument("--out", default="-")
    rates.set_defaults(func=_cmd_rates)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KernelConfigError) as exc:
        _emit_error(exc)
        return 2
    except ResourceLimitError as exc:
        _emit_error(exc)
        return 3
    except (KoopwendError, ValueError, OSError) as exc:
        _emit_error(exc)
        return 1


def _emit_error(exc: Exception) -> None:
    name = type(exc).__name__
    payload = {
        "error": name,
        "module": _ERROR_MODULE.get(name, "koopwend"),
        "message": str(exc),
    }
    if isinstance(exc, ConfigError):
        payload["violations"] = exc.violations
    print(json.dumps(payload), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
