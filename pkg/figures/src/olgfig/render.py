"""Figure construction from simulator tables.

Three figure kinds:

* ``grid-heatmap``: welfare change over the (safe, risky) plane with the
  zero-welfare contour and, for the Cobb-Douglas branch, the analytic
  boundary where the safe and risky gross rates multiply to one
  ((1 + s/100)(1 + r/100) = 1 at annual rates).
* ``path-fan``: debt-share percentile bands (5/25/50/75/95) across
  simulated rollover paths, with an optional deterministic spaghetti
  overlay capped at 100 paths.
* ``welfare-trajectory``: per-generation mean welfare change split by
  eventual success and failure.

Rendering never mutates inputs; every figure also returns the numbers it
drew so tests can check them against independent recomputation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import SchemaError, Table, read_table, require_columns

__all__ = ["FigureSpec", "RenderResult", "render", "FAN_PERCENTILES",
           "cobb_douglas_boundary", "SPAGHETTI_CAP"]

FAN_PERCENTILES = (5.0, 25.0, 50.0, 75.0, 95.0)
SPAGHETTI_CAP = 100

KIND_TABLES = {
    "grid-heatmap": ("transfer_grid",),
    "path-fan": ("rollover_paths",),
    "welfare-trajectory": ("rollover_summary",),
}


@dataclass(frozen=True)
class FigureSpec:
    input_path: str
    output_path: str
    kind: str = "auto"            # or one of KIND_TABLES
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple | None = None
    ylim: tuple | None = None
    spaghetti: bool = False
    dpi: int = 150


@dataclass
class RenderResult:
    kind: str
    output_path: str
    drawn: dict = field(default_factory=dict)


def _resolve_kind(spec: FigureSpec, table: Table) -> str:
    if spec.kind != "auto":
        expected = KIND_TABLES.get(spec.kind)
        if expected is None:
            raise SchemaError(f"unknown figure kind {spec.kind!r}")
        if table.kind not in expected:
            raise SchemaError(
                f"{table.path}: table kind {table.kind!r} does not match "
                f"figure kind {spec.kind!r} (expected one of {expected})")
        return spec.kind
    for kind, tables in KIND_TABLES.items():
        if table.kind in tables:
            return kind
    raise SchemaError(
        f"{table.path}: no figure kind renders table {table.kind!r}")


def cobb_douglas_boundary(risky_annual: np.ndarray) -> np.ndarray:
    """Safe rate (percent/year) where gross safe x gross risky equals one."""
    return 100.0 * (1.0 / (1.0 + np.asarray(risky_annual) / 100.0) - 1.0)


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; raises before writing anything on bad input."""
    table = read_table(spec.input_path)
    if len(table) == 0:
        raise SchemaError(f"{table.path}: empty table, nothing to draw")
    kind = _resolve_kind(spec, table)
    if kind == "grid-heatmap":
        return _render_grid(spec, table)
    if kind == "path-fan":
        return _render_fan(spec, table)
    return _render_trajectory(spec, table)


def _finish(fig, ax, spec: FigureSpec, default_title: str):
    ax.set_title(spec.title or default_title)
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=spec.dpi)
    plt.close(fig)


def _render_grid(spec: FigureSpec, table: Table) -> RenderResult:
    require_columns(table, ("safe_annual", "risky_annual",
                            "welfare_change_pct"))
    safe = table["safe_annual"]
    risky = table["risky_annual"]
    welfare = table["welfare_change_pct"]
    s_axis = np.unique(safe)
    r_axis = np.unique(risky)
    grid = np.full((s_axis.size, r_axis.size), np.nan)
    s_idx = np.searchsorted(s_axis, safe)
    r_idx = np.searchsorted(r_axis, risky)
    grid[s_idx, r_idx] = welfare

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    mesh = ax.pcolormesh(r_axis, s_axis, grid, shading="nearest",
                         cmap="RdBu_r",
                         vmin=-np.nanmax(np.abs(grid)),
                         vmax=np.nanmax(np.abs(grid)))
    fig.colorbar(mesh, ax=ax, label="welfare change (%)")

    contour_vertices = np.empty((0, 2))
    if np.nanmin(grid) < 0.0 < np.nanmax(grid):
        masked = np.ma.masked_invalid(grid)
        cs = ax.contour(r_axis, s_axis, masked, levels=[0.0],
                        colors="black", linewidths=1.5)
        segs = [s for level in cs.allsegs for s in level]
        if segs:
            contour_vertices = np.vstack(segs)

    branch = _branch_of(table)
    boundary = None
    if branch == "cobb_douglas":
        rr = np.linspace(r_axis.min(), r_axis.max(), 200)
        boundary = cobb_douglas_boundary(rr)
        ax.plot(rr, boundary, "k--", linewidth=1.0,
                label="gross safe x risky = 1")
        ax.legend(loc="best", fontsize=8)
    elif branch == "linear" and s_axis.min() < 0.0 < s_axis.max():
        ax.axhline(0.0, color="black", linestyle="--", linewidth=1.0)

    ax.set_xlabel(spec.xlabel or "risky rate minus growth (%/yr)")
    ax.set_ylabel(spec.ylabel or "safe rate minus growth (%/yr)")
    fraction = table.meta.get("transfer_fraction", "")
    _finish(fig, ax, spec, f"Welfare change, transfer {fraction} of saving")
    return RenderResult(kind="grid-heatmap", output_path=spec.output_path,
                        drawn={"grid": grid, "safe_axis": s_axis,
                               "risky_axis": r_axis,
                               "zero_contour": contour_vertices})


def _branch_of(table: Table) -> str:
    branch = table.meta.get("branch")
    if branch:
        return str(branch)
    config = table.meta.get("config")
    if isinstance(config, dict):
        return str(config.get("branch", ""))
    return ""


def _render_fan(spec: FigureSpec, table: Table) -> RenderResult:
    require_columns(table, ("path", "generation", "debt_share"))
    paths = table["path"].astype(int)
    gens = table["generation"].astype(int)
    share = table["debt_share"]
    n_gen = gens.max() + 1
    n_path = paths.max() + 1
    matrix = np.full((n_path, n_gen), np.nan)
    matrix[paths, gens] = share

    bands = {p: np.nanpercentile(matrix, p, axis=0) for p in FAN_PERCENTILES}
    x = np.arange(n_gen)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    ax.fill_between(x, bands[5.0], bands[95.0], alpha=0.25, color="C0",
                    label="5-95 pct")
    ax.fill_between(x, bands[25.0], bands[75.0], alpha=0.45, color="C0",
                    label="25-75 pct")
    ax.plot(x, bands[50.0], color="C0", linewidth=2.0, label="median")

    sampled = []
    if spec.spaghetti:
        step = max(1, n_path // SPAGHETTI_CAP)
        sampled = list(range(0, n_path, step))[:SPAGHETTI_CAP]
        for pid in sampled:
            ax.plot(x, matrix[pid], color="gray", alpha=0.3, linewidth=0.6)

    ax.set_xlabel(spec.xlabel or "generation")
    ax.set_ylabel(spec.ylabel or "debt / average pre-debt saving")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, ax, spec, "Debt rollover paths")
    return RenderResult(kind="path-fan", output_path=spec.output_path,
                        drawn={"percentiles": bands, "generations": x,
                               "sampled_paths": sampled})


def _render_trajectory(spec: FigureSpec, table: Table) -> RenderResult:
    require_columns(table, ("generation", "mean_welfare_all"))
    x = table["generation"]
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    drawn = {"generation": x}
    styles = {"all": ("C0", "-"), "success": ("C2", "-"), "failure": ("C3", "--")}
    for label, (color, ls) in styles.items():
        column = f"mean_welfare_{label}"
        if column in table.columns:
            y = table[column]
            if np.all(np.isnan(y)):
                continue
            ax.plot(x, y, color=color, linestyle=ls, marker="o", label=label)
            drawn[column] = y
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel(spec.xlabel or "generation")
    ax.set_ylabel(spec.ylabel or "welfare change vs no-debt twin (%)")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, ax, spec, "Rollover welfare by generation")
    return RenderResult(kind="welfare-trajectory",
                        output_path=spec.output_path, drawn=drawn)
