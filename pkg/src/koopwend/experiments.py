"""Benchmark experiment presets and the table-reproduction pipeline.

Each preset sweeps kernel smoothness against a ladder of grid resolutions,
learns one-step predictions of the coordinate observables, and measures
sup/quadrature errors on a validation grid of cell centers.  Cells whose
kernel matrices exceed the memory budget are skipped and recorded rather
than attempted.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from koopwend.analysis import (
    ErrorReport,
    RateEstimate,
    convergence_rate,
    error_field_export,
    error_report,
)
from koopwend.csvio import write_csv
from koopwend.domain import BoxDomain
from koopwend.dynamics import (
    FlowMap,
    VectorField,
    bounding_box,
    design_grid,
    duffing,
    lorenz,
)
from koopwend.errors import ResourceLimitError
from koopwend.interpolation import CenterSet
from koopwend.koopman import (
    FlowSamples,
    apply_from_flow_values,
    apply_from_Y_values,
    build_model,
    multistep_from_flow_values,
    multistep_self,
    predict,
)
from koopwend.wendland import build_wendland

DEFAULT_BUDGET_GB = 6.5
DEFAULT_MAX_POINTS = 200_000

# Margin added to the automatic image-domain bounding box so containment
# checks are not defeated by boundary equality.
AUTO_DOMAIN_MARGIN = 1e-9


@dataclass(frozen=True)
class TableSpec:
    """One benchmark table: smoothness sweep x resolution ladder."""

    name: str
    system: VectorField
    dt: float
    substeps: int
    domain_x: BoxDomain
    domain_y: Optional[BoxDomain]  # None: smallest box containing the flow images
    ks: tuple[int, ...]
    hs: tuple[float, ...]
    variants: tuple[str, ...]
    observables: tuple[int, ...]
    validation: str  # "from-finest" | "per-train"
    grid_mode: str = "spacing"
    scale: float = 1.0
    steps: int = 1


def preset_table(name: str) -> TableSpec:
    """Built-in experiment definitions for the benchmark tables."""
    common = dict(dt=0.02, substeps=4, ks=(1, 2, 3), hs=(0.2, 0.1, 0.05, 0.025))
    if name == "duffing-table1":
        return TableSpec(
            name=name,
            system=duffing(),
            domain_x=BoxDomain.cube(-2.0, 2.0, 2),
            domain_y=BoxDomain.cube(-3.0, 3.0, 2),
            variants=("A-samples", "Y-centers"),
            observables=(0, 1),
            validation="from-finest",
            **common,
        )
    if name == "duffing-table2":
        return TableSpec(
            name=name,
            system=duffing(),
            domain_x=BoxDomain.cube(-2.0, 2.0, 2),
            domain_y=BoxDomain.cube(-2.0, 2.0, 2),
            variants=("X-self",),
            observables=(0, 1),
            validation="from-finest",
            **common,
        )
    if name == "lorenz-table3":
        return TableSpec(
            name=name,
            system=lorenz(),
            domain_x=BoxDomain.cube(-0.5, 0.5, 3),
            domain_y=None,
            variants=("A-samples", "Y-centers"),
            observables=(0, 1, 2),
            validation="per-train",
            **common,
        )
    raise ValueError(f"unknown experiment {name!r}; known: duffing-table1, duffing-table2, lorenz-table3")


@dataclass(frozen=True, eq=False)
class CellResult:
    report: Optional[ErrorReport]
    skipped: Optional[str] = None
    n_centers: int = 0
    n_y: int = 0


@dataclass(frozen=True, eq=False)
class TableResult:
    spec: TableSpec
    cells: dict  # (variant, k, h) -> CellResult
    rates: dict  # (variant, norm, k) -> RateEstimate
    out_dir: Optional[str]

    def report(self, variant: str, k: int, h: float) -> Optional[ErrorReport]:
        cell = self.cells.get((variant, k, h))
        return cell.report if cell is not None else None


def _gram_bytes(n: int) -> int:
    return 8 * n * n


def _model_bytes(n: int, m: int = 0) -> int:
    return _gram_bytes(n) + (_gram_bytes(m) + 8 * n * m if m else 0)


def _flow_n(fm: FlowMap, pts: np.ndarray, steps: int) -> np.ndarray:
    out = pts
    for _ in range(steps):
        out = fm(out)
    return out


def run_table(
    spec: TableSpec,
    out_dir: Optional[str] = None,
    budget_gb: float = DEFAULT_BUDGET_GB,
    max_points: int = DEFAULT_MAX_POINTS,
) -> TableResult:
    """Run a full benchmark table, writing CSV outputs when out_dir is given."""
    budget = int(budget_gb * 2**30)
    fm = FlowMap(spec.system, spec.dt, spec.substeps)
    obs = list(spec.observables)
    cells: dict = {}
    fields_dir = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        fields_dir = os.path.join(out_dir, "fields")

    V_fixed = AV_fixed = None
    if spec.validation == "from-finest":
        finest = design_grid(spec.domain_x, min(spec.hs), max_points, mode=spec.grid_mode)
        V_fixed = finest.cell_centers()
        AV_fixed = _flow_n(fm, V_fixed.points, spec.steps)

    for h in spec.hs:
        try:
            gX = design_grid(spec.domain_x, h, max_points, mode=spec.grid_mode)
        except ResourceLimitError as exc:
            for k in spec.ks:
                for variant in spec.variants:
                    cells[(variant, k, h)] = CellResult(None, skipped=str(exc))
            continue
        X = gX.nodes()
        AX = fm(X.points)
        if spec.validation == "per-train":
            V = gX.cell_centers()
            AV = _flow_n(fm, V.points, spec.steps)
        else:
            V, AV = V_fixed, AV_fixed
        box_y = spec.domain_y or bounding_box(AX, margin=AUTO_DOMAIN_MARGIN)
        samples = FlowSamples.create(X, AX, domain_Y=box_y)
        truth = AV[:, obs]

        want_Y = "Y-centers" in spec.variants
        Y = None
        y_skip = None
        if want_Y:
            try:
                Y = design_grid(box_y, h, max_points, mode=spec.grid_mode).nodes()
            except ResourceLimitError as exc:
                y_skip = str(exc)

        n = len(X)
        for k in spec.ks:
            if _model_bytes(n) > budget:
                reason = (
                    f"memory budget: factorizing {n} centers needs "
                    f"{_model_bytes(n) / 2**30:.1f} GiB > {budget_gb} GiB"
                )
                for variant in spec.variants:
                    cells[(variant, k, h)] = CellResult(None, skipped=reason, n_centers=n)
                continue
            with_Y = (
                want_Y
                and Y is not None
                and _model_bytes(n, len(Y)) <= budget
            )
            if want_Y and not with_Y and y_skip is None:
                y_skip = (
                    f"memory budget: Y-variant with {len(Y)} image centers needs "
                    f"{_model_bytes(n, len(Y)) / 2**30:.1f} GiB > {budget_gb} GiB"
                )
            kern = build_wendland(spec.system.dim, k, spec.scale)
            model = build_model(kern, samples, Y=Y if with_Y else None, keep_matrices=False)
            for variant in spec.variants:
                if variant == "A-samples":
                    coeffs = multistep_from_flow_values(model, AX[:, obs], spec.steps)
                elif variant == "X-self":
                    coeffs = multistep_self(model, X.points[:, obs], spec.steps)
                elif variant == "Y-centers":
                    if not with_Y:
                        cells[(variant, k, h)] = CellResult(None, skipped=y_skip, n_centers=n)
                        continue
                    coeffs = apply_from_Y_values(model, Y.points[:, obs])
                else:
                    raise ValueError(f"unknown variant {variant!r}")
                pred = predict(coeffs, V)
                rep = error_report(
                    truth, pred, grid=V, h=h, domain=spec.domain_x,
                    kernel=(spec.system.dim, k), variant=variant,
                )
                cells[(variant, k, h)] = CellResult(
                    rep, n_centers=n, n_y=len(Y) if with_Y else 0
                )
                if fields_dir is not None:
                    vdir = os.path.join(fields_dir, variant)
                    os.makedirs(vdir, exist_ok=True)
                    error_field_export(
                        rep, V, os.path.join(vdir, f"errors_{k}_{h:g}.csv")
                    )
            del model

    rates: dict = {}
    for variant in spec.variants:
        for k in spec.ks:
            reports = [
                cells[(variant, k, h)].report
                for h in spec.hs
                if cells[(variant, k, h)].report is not None
            ]
            for norm in ("sup", "l2"):
                if len(reports) >= 2:
                    rates[(variant, norm, k)] = convergence_rate(reports, norm=norm)

    result = TableResult(spec=spec, cells=cells, rates=rates, out_dir=out_dir)
    if out_dir is not None:
        write_table_csv(os.path.join(out_dir, "table.csv"), result)
        write_rates_csv(os.path.join(out_dir, "rates.csv"), result)
    return result


def reproduce_table(
    experiment: str,
    out_dir: Optional[str] = None,
    budget_gb: float = DEFAULT_BUDGET_GB,
    max_points: int = DEFAULT_MAX_POINTS,
) -> TableResult:
    """Run one of the built-in benchmark tables by name."""
    return run_table(preset_table(experiment), out_dir, budget_gb, max_points)


def write_table_csv(path: str, result: TableResult) -> None:
    """Wide-format error table: rows (variant, norm, k), one column per h."""
    spec = result.spec
    header = ["variant", "norm", "k"] + [f"{h:g}" for h in spec.hs]
    rows = []
    for variant in spec.variants:
        for norm in ("sup", "l2"):
            for k in spec.ks:
                row = [variant, norm, str(k)]
                for h in spec.hs:
                    cell = result.cells[(variant, k, h)]
                    if cell.report is None:
                        row.append("skipped")
                    else:
                        val = cell.report.sup_error if norm == "sup" else cell.report.l2_error
                        row.append(f"{val:.17g}")
                rows.append(row)
    write_csv(path, rows, header=header)


def write_rates_csv(path: str, result: TableResult) -> None:
    header = ["variant", "norm", "k", "n_h", "slope"]
    rows = []
    for (variant, norm, k), rate in sorted(
        result.rates.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])
    ):
        rows.append([variant, norm, str(k), str(len(rate.hs)), f"{rate.slope:.17g}"])
    write_csv(path, rows, header=header)


def skipped_cells(result: TableResult) -> dict:
    return {
        key: cell.skipped for key, cell in result.cells.items() if cell.report is None
    }


def _field_from_config(cfg) -> Optional[VectorField]:
    if cfg.system_id == "duffing":
        return duffing()
    if cfg.system_id == "lorenz":
        return lorenz(**cfg.system_params)
    if cfg.system_id == "identity":
        from koopwend.dynamics import identity_field

        return identity_field(cfg.domain_x.dim)
    if cfg.system_id == "linear":
        from koopwend.dynamics import linear_field

        return linear_field(np.asarray(cfg.system_params["matrix"], dtype=float))
    return None  # csv-backed samples


def run_experiment(cfg) -> dict:
    """Execute a single kEDMD run from a validated ExperimentConfig.

    Writes, per grid resolution and variant, the canonical coefficients and
    the predicted observable values on the validation grid, plus one error
    summary across all runs (when the true flow is available).  Returns the
    summary rows keyed by (variant, h).
    """
    from koopwend.csvio import load_points, write_points

    os.makedirs(cfg.out_dir, exist_ok=True)
    budget = int(cfg.memory_budget_gb * 2**30)
    kern = build_wendland(cfg.kernel_d, cfg.kernel_k, cfg.kernel_scale)
    field_ = _field_from_config(cfg)
    fm = FlowMap(field_, cfg.dt, cfg.substeps) if field_ is not None else None
    obs = list(cfg.observables)
    summary = {}

    if cfg.system_id == "csv":
        datasets = [(float("nan"), CenterSet(load_points(cfg.x_csv)), load_points(cfg.ax_csv), None)]
    else:
        datasets = []
        V_fixed = None
        if cfg.validation == "from-finest":
            finest = design_grid(cfg.domain_x, min(cfg.hs), cfg.max_points, mode=cfg.grid_mode)
            V_fixed = finest.cell_centers()
        for h in cfg.hs:
            gX = design_grid(cfg.domain_x, h, cfg.max_points, mode=cfg.grid_mode)
            X = gX.nodes()
            AX = fm(X.points)
            V = V_fixed if cfg.validation == "from-finest" else gX.cell_centers()
            datasets.append((h, X, AX, V))

    rows = []
    for h, X, AX, V in datasets:
        if AX.shape != X.points.shape:
            raise ValueError("flow-sample CSV pair has mismatched shapes")
        box_y = cfg.domain_y
        if box_y is None and cfg.y_mode != "same-as-x":
            box_y = bounding_box(AX, margin=AUTO_DOMAIN_MARGIN)
        samples = FlowSamples.create(X, AX, domain_Y=box_y if cfg.y_mode != "same-as-x" else cfg.domain_x)
        if cfg.y_mode == "same-as-x":
            Y = X
        elif cfg.y_mode == "a-of-x":
            Y = CenterSet(AX)
        else:
            Y = design_grid(box_y, cfg.y_h or h, cfg.max_points, mode=cfg.grid_mode).nodes()
        need_Y = "Y-centers" in cfg.variants
        n, m = len(X), len(Y) if need_Y else 0
        if _model_bytes(n, m) > budget:
            raise ResourceLimitError(
                f"model with {n} centers{f' and {m} image centers' if m else ''} needs "
                f"{_model_bytes(n, m) / 2**30:.1f} GiB > budget {cfg.memory_budget_gb} GiB"
            )
        model = build_model(kern, samples, Y=Y if need_Y else None, keep_matrices=False)
        Z = V if V is not None else X
        truth = _flow_n(fm, Z.points, cfg.steps)[:, obs] if fm is not None and V is not None else None
        tag = "" if np.isnan(h) else f"_h{h:g}"
        for variant in cfg.variants:
            if variant == "A-samples":
                coeffs = multistep_from_flow_values(model, AX[:, obs], cfg.steps)
            elif variant == "X-self":
                coeffs = multistep_self(model, X.points[:, obs], cfg.steps)
            else:
                coeffs = apply_from_Y_values(model, Y.points[:, obs])
            pred = predict(coeffs, Z)
            write_points(os.path.join(cfg.out_dir, f"coefficients_{variant}{tag}.csv"), coeffs.alpha)
            write_points(
                os.path.join(cfg.out_dir, f"predicted_{variant}{tag}.csv"),
                np.column_stack([Z.points, pred]),
            )
            if truth is not None:
                rep = error_report(
                    truth, pred, grid=Z, h=h, domain=cfg.domain_x,
                    kernel=(kern.d, kern.k), variant=variant,
                )
                summary[(variant, h)] = rep
                rows.append(
                    [variant, f"{cfg.kernel_k}", f"{h:.17g}", str(n),
                     f"{rep.sup_error:.17g}", f"{rep.l2_error:.17g}"]
                )
        del model
    if rows:
        write_csv(
            os.path.join(cfg.out_dir, "error_summary.csv"),
            rows,
            header=["variant", "k", "h", "n_centers", "sup_error", "l2_error"],
        )
    return summary
