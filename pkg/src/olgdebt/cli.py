"""Command-line entry point: configuration, campaign orchestration, tables.

Subcommands: calibrate, steady-state, transfer-grid, rollover, scenarios,
ingest.  Two parameter bundles ship by default: "original" (the global
low-rates setup: safe -1%, risky 2%, grid safe [-2,1] x risky [0,4]) and
"indonesia" (safe -0.5%, risky 3%, grid safe [-3,2] x risky [1,5]); any
field can be overridden by flags or a TOML config file.  Exit status 0 on
success, 1 on numerical failure, 2 on usage or validation errors.

Every output table embeds the resolved configuration and package version,
so any figure built from a table is reproducible from its own header.  The
``OLGDEBT_OUTPUT_DIR`` environment variable overrides the output directory
(and nothing else).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .calibration import CalibrationError, calibrate
from .experiments import (
    DEFAULT_SEED,
    RolloverSpec,
    TransferGridSpec,
    initialize_steady_state,
    run_rollover,
    run_scenarios,
    run_transfer_grid,
)
from .household import InsolvencyError, NoSolutionError
from .ingest import (
    SeriesFormatError,
    compute_differentials,
    derive_target_ranges,
    read_rate_series,
    summarize,
)
from .model import COBB_DOUGLAS, LINEAR, EconomyParams, RateTargets
from .tables import write_table

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

BUNDLES = {
    "original": {
        "safe_annual": -1.0,
        "risky_annual": 2.0,
        "safe_range": (-2.0, 1.0),
        "risky_range": (0.0, 4.0),
    },
    "indonesia": {
        "safe_annual": -0.5,
        "risky_annual": 3.0,
        "safe_range": (-3.0, 2.0),
        "risky_range": (1.0, 5.0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved run settings; round-trips through TOML bit-identically."""

    command: str = ""
    bundle: str = "original"
    branch: str = LINEAR
    # structural choices
    beta: float = 0.25
    b: float = 1.0 / 3.0
    sigma: float = 0.2
    mu_gauge: float = -0.02          # Cobb-Douglas units gauge (E[A] = 1)
    endowment_fraction: float = 1.0
    old_share: float = 1.0
    period_years: float = 25.0
    # targets and grid ranges (None means: take the bundle's default)
    safe_annual: float | None = None
    risky_annual: float | None = None
    safe_range: tuple | None = None
    risky_range: tuple | None = None
    grid_step: float = 0.5
    # campaign sizes
    transfer_fraction: float = 0.05
    realizations: int = 2000
    init_draws: int = 30_000
    burn_in: int = 100
    # rollover settings
    initial_debt_fraction: float = 0.15
    failure_threshold: float = 1.15
    post_failure_level: float = 0.40
    paths: int = 1000
    generations: int = 6
    failure_rule: str = "reset"
    # ingest settings
    alignment: str = "annual"
    margin: float = 1.0
    # run plumbing
    master_seed: int = DEFAULT_SEED
    output_dir: str = "."
    workers: int = 1

    def resolved(self) -> "RunConfig":
        bundle = BUNDLES[self.bundle]
        updates = {}
        for key in ("safe_annual", "risky_annual", "safe_range", "risky_range"):
            if getattr(self, key) is None:
                updates[key] = bundle[key]
        out = replace(self, **updates) if updates else self
        return replace(out, safe_range=tuple(out.safe_range),
                       risky_range=tuple(out.risky_range))

    def structural(self) -> EconomyParams:
        eta = math.inf if self.branch == LINEAR else 1.0
        if self.branch not in (LINEAR, COBB_DOUGLAS):
            raise ValueError(f"unknown branch: {self.branch}")
        mu = self.mu_gauge if self.branch == COBB_DOUGLAS else 0.0
        return EconomyParams(beta=self.beta, b=self.b, sigma=self.sigma,
                             mu=mu, eta=eta,
                             endowment_fraction=self.endowment_fraction,
                             old_share=self.old_share,
                             period_years=self.period_years)

    def targets(self) -> RateTargets:
        return RateTargets(self.safe_annual, self.risky_annual)


def save_config(cfg: RunConfig, path) -> None:
    """Write as a flat TOML table; floats use repr so loads are exact."""
    lines = ["[run]"]
    for f in sorted(fields(cfg), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_toml_value(value)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"unsupported config value: {value!r}")


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    table = data.get("run", data)
    names = {f.name for f in fields(RunConfig)}
    unknown = set(table) - names
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "safe_range" in table:
        table["safe_range"] = tuple(table["safe_range"])
    if "risky_range" in table:
        table["risky_range"] = tuple(table["risky_range"])
    return RunConfig(**table)


def _meta(cfg: RunConfig, table_kind: str, **extra) -> dict:
    meta = {
        "olgdebt": __version__,
        "table": table_kind,
        "config": {k: v for k, v in asdict(cfg).items() if v is not None},
    }
    meta.update(extra)
    return meta


def _out_path(cfg: RunConfig, name: str) -> str:
    out_dir = os.environ.get("OLGDEBT_OUTPUT_DIR", cfg.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_calibrate(cfg: RunConfig) -> int:
    targets = cfg.targets()
    res = calibrate(targets, cfg.structural(), draws=cfg.init_draws,
                    burn_in=cfg.burn_in, master_seed=cfg.master_seed)
    p = res.params
    columns = {
        "target_safe_annual": [targets.safe_annual],
        "target_risky_annual": [targets.risky_annual],
        "gamma": [p.gamma],
        "beta": [p.beta],
        "mu": [p.mu],
        "endowment": [p.endowment],
        "achieved_risky_annual": [res.achieved_risky_annual],
        "achieved_safe_annual": [res.achieved_safe_annual],
        "residual_risky_pp": [res.achieved_risky_annual - targets.risky_annual],
        "residual_safe_pp": [res.achieved_safe_annual - targets.safe_annual],
        "mean_capital": [res.mean_capital],
        "mean_saving": [res.mean_saving],
    }
    path = _out_path(cfg, "calibration.tsv")
    write_table(path, columns, _meta(cfg, "calibration"))
    print(path)
    return EXIT_OK


def cmd_steady_state(cfg: RunConfig) -> int:
    res = calibrate(cfg.targets(), cfg.structural(), draws=cfg.init_draws,
                    burn_in=cfg.burn_in, master_seed=cfg.master_seed)
    ss = initialize_steady_state(res.params, realizations=cfg.init_draws,
                                 master_seed=cfg.master_seed,
                                 burn_in=cfg.burn_in)
    columns = {
        "mean_capital": [ss.mean_capital],
        "mean_saving": [ss.mean_saving],
        "mean_wage": [ss.mean_wage],
        "endowment": [res.params.endowment],
        "achieved_risky_annual": [ss.achieved_risky_annual],
        "achieved_safe_annual": [ss.achieved_safe_annual],
        "mean_log_spread": [ss.mean_log_spread],
    }
    path = _out_path(cfg, "steady_state.tsv")
    write_table(path, columns, _meta(cfg, "steady_state"))
    print(path)
    return EXIT_OK


def _grid_spec(cfg: RunConfig) -> TransferGridSpec:
    return TransferGridSpec(
        safe_range=cfg.safe_range, risky_range=cfg.risky_range,
        transfer_fraction=cfg.transfer_fraction, branch=cfg.branch,
        realizations=cfg.realizations, step=cfg.grid_step,
        init_draws=cfg.init_draws, burn_in=cfg.burn_in,
        master_seed=cfg.master_seed, workers=cfg.workers)


def cmd_transfer_grid(cfg: RunConfig) -> int:
    res = run_transfer_grid(_grid_spec(cfg), cfg.structural())
    path = _out_path(cfg, "transfer_grid.tsv")
    write_table(path, res.cells,
                _meta(cfg, "transfer_grid",
                      transfer_fraction=cfg.transfer_fraction,
                      branch=cfg.branch, master_seed=cfg.master_seed))
    print(path)
    return EXIT_OK


def _rollover_spec(cfg: RunConfig) -> RolloverSpec:
    return RolloverSpec(
        targets=cfg.targets(), branch=cfg.branch,
        initial_debt_fraction=cfg.initial_debt_fraction,
        failure_threshold=cfg.failure_threshold,
        post_failure_level=cfg.post_failure_level,
        paths=cfg.paths, generations=cfg.generations,
        failure_rule=cfg.failure_rule, init_draws=cfg.init_draws,
        burn_in=cfg.burn_in, master_seed=cfg.master_seed, workers=cfg.workers)


def _rollover_tables(cfg: RunConfig, res, prefix: str = "rollover") -> list:
    paths_written = []
    n_paths, gens = res.debt_share.shape
    path_id = np.repeat(np.arange(n_paths), gens)
    generation = np.tile(np.arange(gens), n_paths)
    long_cols = {
        "path": path_id,
        "generation": generation,
        "debt_share": res.debt_share.ravel(),
        "debt_due_share": res.debt_due_share.ravel(),
        "welfare_change_pct": res.welfare_change.ravel(),
        "failed": np.repeat(res.failed, gens),
        "failure_generation": np.repeat(res.failure_generation, gens),
        "insolvent": np.repeat(res.insolvent, gens),
    }
    meta = _meta(cfg, f"{prefix}_paths", branch=cfg.branch,
                 master_seed=cfg.master_seed,
                 mean_saving=res.steady.mean_saving,
                 failure_threshold=res.spec.failure_threshold,
                 initial_debt_fraction=res.spec.initial_debt_fraction)
    p1 = _out_path(cfg, f"{prefix}_paths.tsv")
    write_table(p1, long_cols, meta)
    paths_written.append(p1)

    p2 = _out_path(cfg, f"{prefix}_summary.tsv")
    write_table(p2, res.summary(), _meta(cfg, f"{prefix}_summary"))
    paths_written.append(p2)
    return paths_written


def cmd_rollover(cfg: RunConfig) -> int:
    res = run_rollover(_rollover_spec(cfg), cfg.structural())
    for p in _rollover_tables(cfg, res):
        print(p)
    return EXIT_OK


def cmd_scenarios(cfg: RunConfig) -> int:
    grid_spec = _grid_spec(cfg) if cfg.branch == COBB_DOUGLAS else None
    out = run_scenarios(_rollover_spec(cfg), cfg.structural(),
                        grid_spec=grid_spec)
    rows = {key: [] for key in (
        "variation", "generation", "base_mean_welfare", "variant_mean_welfare",
        "paired_welfare_diff", "base_failures", "variant_failures",
        "base_max_debt_due", "variant_max_debt_due")}
    grid_rows = {key: [] for key in (
        "variation", "base_min", "base_max", "variant_min", "variant_max")}
    for name, comparison in out.items():
        base, variant = comparison.base_rollover, comparison.variant_rollover
        diff = comparison.paired_welfare_diff()
        base_mean = np.nanmean(base.welfare_change, axis=0)
        var_mean = np.nanmean(variant.welfare_change, axis=0)
        for g in range(base.debt_share.shape[1]):
            rows["variation"].append(name)
            rows["generation"].append(g)
            rows["base_mean_welfare"].append(base_mean[g])
            rows["variant_mean_welfare"].append(var_mean[g])
            rows["paired_welfare_diff"].append(diff[g])
            rows["base_failures"].append(int(base.failed.sum()))
            rows["variant_failures"].append(int(variant.failed.sum()))
            rows["base_max_debt_due"].append(
                float(np.nanmax(base.debt_due_share)))
            rows["variant_max_debt_due"].append(
                float(np.nanmax(variant.debt_due_share)))
        if comparison.base_grid is not None:
            wb = comparison.base_grid.cells["welfare_change_pct"]
            wv = comparison.variant_grid.cells["welfare_change_pct"]
            grid_rows["variation"].append(name)
            grid_rows["base_min"].append(float(np.nanmin(wb)))
            grid_rows["base_max"].append(float(np.nanmax(wb)))
            grid_rows["variant_min"].append(float(np.nanmin(wv)))
            grid_rows["variant_max"].append(float(np.nanmax(wv)))
    written = []
    p1 = _out_path(cfg, "scenario_summary.tsv")
    write_table(p1, rows, _meta(cfg, "scenario_summary"))
    written.append(p1)
    if grid_rows["variation"]:
        p2 = _out_path(cfg, "scenario_grid_ranges.tsv")
        write_table(p2, grid_rows, _meta(cfg, "scenario_grid_ranges"))
        written.append(p2)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_ingest(cfg: RunConfig, safe_path, lending_path, growth_path) -> int:
    growth = read_rate_series(growth_path, kind="nominal-growth")
    stats_rows = {key: [] for key in (
        "series", "grain", "n_obs", "median", "mean", "max", "min", "q1", "q3")}
    per_series = {}
    for label, path in (("safe", safe_path), ("risky", lending_path)):
        if path is None:
            continue
        kind = "safe-yield" if label == "safe" else "lending-rate"
        series = read_rate_series(path, kind=kind)
        grains = [("annual", "annual")]
        if cfg.alignment == "exact":
            grains = [("exact", "exact")]
        elif any(m != 0 for (_, m), _v in series.observations):
            grains.append(("exact", "exact"))
        for grain_label, rule in grains:
            try:
                diff = compute_differentials(series, growth, rule)
            except ValueError:
                continue
            st = summarize(diff)
            per_series.setdefault(label, st)  # annual grain drives the ranges
            stats_rows["series"].append(label)
            stats_rows["grain"].append(grain_label)
            stats_rows["n_obs"].append(len(diff))
            for field_name in ("median", "mean", "max", "min", "q1", "q3"):
                stats_rows[field_name].append(getattr(st, field_name))
    if not stats_rows["series"]:
        raise ValueError("no differential series could be computed")
    written = []
    p1 = _out_path(cfg, "ingest_stats.tsv")
    write_table(p1, stats_rows, _meta(cfg, "ingest_stats"))
    written.append(p1)
    if "safe" in per_series and "risky" in per_series:
        ranges = derive_target_ranges(per_series["safe"], per_series["risky"],
                                      volatility_margin_pp=cfg.margin)
        cols = {
            "safe_lo": [ranges["safe_range"][0]],
            "safe_hi": [ranges["safe_range"][1]],
            "risky_lo": [ranges["risky_range"][0]],
            "risky_hi": [ranges["risky_range"][1]],
            "margin_pp": [cfg.margin],
        }
        p2 = _out_path(cfg, "ingest_ranges.tsv")
        write_table(p2, cols, _meta(cfg, "ingest_ranges"))
        written.append(p2)
    for p in written:
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser):
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--bundle", choices=sorted(BUNDLES))
    parser.add_argument("--branch", choices=[LINEAR, COBB_DOUGLAS])
    parser.add_argument("--beta", type=float)
    parser.add_argument("--b", type=float, help="capital share parameter")
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--endowment-fraction", type=float,
                        dest="endowment_fraction")
    parser.add_argument("--old-share", type=float, dest="old_share")
    parser.add_argument("--period-years", type=float, dest="period_years")
    parser.add_argument("--safe", type=float, dest="safe_annual")
    parser.add_argument("--risky", type=float, dest="risky_annual")
    parser.add_argument("--init-draws", type=int, dest="init_draws")
    parser.add_argument("--burn-in", type=int, dest="burn_in")
    parser.add_argument("--seed", type=int, dest="master_seed")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--save-config", dest="save_config_path",
                        help="write the resolved config to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olgdebt",
        description="Stochastic OLG transfer and debt-rollover simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit parameters to rate targets")
    _add_common(p)

    p = sub.add_parser("steady-state", help="no-transfer steady state averages")
    _add_common(p)

    p = sub.add_parser("transfer-grid",
                       help="welfare grid for a fixed transfer")
    _add_common(p)
    p.add_argument("--safe-range", type=float, nargs=2, dest="safe_range")
    p.add_argument("--risky-range", type=float, nargs=2, dest="risky_range")
    p.add_argument("--grid-step", type=float, dest="grid_step")
    p.add_argument("--transfer-fraction", type=float,
                   dest="transfer_fraction")
    p.add_argument("--realizations", type=int)

    p = sub.add_parser("rollover", help="debt rollover Monte Carlo")
    _add_common(p)
    p.add_argument("--initial-debt-fraction", type=float,
                   dest="initial_debt_fraction")
    p.add_argument("--failure-threshold", type=float,
                   dest="failure_threshold")
    p.add_argument("--post-failure-level", type=float,
                   dest="post_failure_level")
    p.add_argument("--paths", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--failure-rule", dest="failure_rule",
                   choices=["reset", "payoff", "flag_only"])

    p = sub.add_parser("scenarios", help="parameter-variation comparisons")
    _add_common(p)
    p.add_argument("--safe-range", type=float, nargs=2, dest="safe_range")
    p.add_argument("--risky-range", type=float, nargs=2, dest="risky_range")
    p.add_argument("--grid-step", type=float, dest="grid_step")
    p.add_argument("--transfer-fraction", type=float,
                   dest="transfer_fraction")
    p.add_argument("--realizations", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--failure-threshold", type=float,
                   dest="failure_threshold")

    p = sub.add_parser("ingest", help="rate series to differential statistics")
    _add_common(p)
    p.add_argument("--safe-yields", dest="safe_yields")
    p.add_argument("--lending-rates", dest="lending_rates")
    p.add_argument("--growth", required=True)
    p.add_argument("--alignment", choices=["annual", "exact"])
    p.add_argument("--margin", type=float)
    return parser


def _config_from_args(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    ns = vars(args).copy()
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    save_path = ns.pop("save_config_path", None)
    io_args = {k: ns.pop(k, None)
               for k in ("safe_yields", "lending_rates", "growth")}
    provided = {k: v for k, v in ns.items() if v is not None}
    for key in ("safe_range", "risky_range"):
        if key in provided:
            provided[key] = tuple(provided[key])
    cfg = load_config(config_path) if config_path else RunConfig()
    cfg = replace(cfg, command=command, **provided)
    cfg = cfg.resolved()
    if save_path:
        save_config(cfg, save_path)
    return cfg, io_args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, io_args = _config_from_args(args)
        if cfg.command == "calibrate":
            return cmd_calibrate(cfg)
        if cfg.command == "steady-state":
            return cmd_steady_state(cfg)
        if cfg.command == "transfer-grid":
            return cmd_transfer_grid(cfg)
        if cfg.command == "rollover":
            return cmd_rollover(cfg)
        if cfg.command == "scenarios":
            return cmd_scenarios(cfg)
        if cfg.command == "ingest":
            if io_args.get("growth") is None:
                parser.error("ingest requires --growth")
            if not (io_args.get("safe_yields") or io_args.get("lending_rates")):
                parser.error(
                    "ingest requires --safe-yields and/or --lending-rates")
            return cmd_ingest(cfg, io_args.get("safe_yields"),
                              io_args.get("lending_rates"), io_args["growth"])
        parser.error(f"unknown command {cfg.command}")
    except (SeriesFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CalibrationError, NoSolutionError, InsolvencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
