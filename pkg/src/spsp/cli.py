"""Command-line interface: ``spsp paths|select|simulate|sweep-r|screen``.

Settings resolve as command-line flags > ``--config`` JSON file > defaults,
and the effective settings are written to ``manifest.json`` in the output
directory.  Passing that manifest back through ``--config`` reruns the command
with identical outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BadD, ConfigError, SPSPError, UnknownMethod
from .io import (
    fmt,
    json_number,
    read_table,
    selection_json,
    write_boundary_csv,
    write_criterion_csv,
    write_json,
    write_path_csv,
    write_replicates_csv,
    write_stability_csv,
    write_summary_csv,
    write_sweep_csv,
    write_table,
)
from .partition import refit, spsp_select
from .paths import PENALTIES, PenaltyConfig, fit_path, make_lambda_grid, original_scale, standardize
from .simulation import (
    DESIGNS,
    METHODS,
    ExperimentOptions,
    build_design,
    marginal_correlations,
    run_experiment,
    run_r_sweep,
    sis_ranking,
)
from .tuning import cross_validate, information_criterion, stability_selection

log = logging.getLogger("spsp")

COMMANDS = ("paths", "select", "simulate", "sweep-r", "screen")
SELECT_METHODS = ("spsp", "cv", "gcv", "aic", "bic", "ebic", "stability")

DEFAULTS = {
    "input": None,
    "output": None,
    "penalty": "lasso",
    "alpha": 1.0,
    "k_grid": 100,
    "min_ratio": None,
    "method": "spsp",
    "design": "M1",
    "reps": 100,
    "seed": 0,
    "r_override": None,
    "fallback_r": 5.0,
    "folds": 10,
    "stab_b": 100,
    "stab_pi": 0.6,
    "ebic_gamma": 1.0,
    "d": None,
    "r_grid": "1:10:0.5",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spsp", description="Variable selection by partitioning penalized solution paths.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "paths": "fit a solution path and export it",
        "select": "select variables with SPSP or a tuning criterion",
        "simulate": "run a replicated simulation study",
        "sweep-r": "sensitivity of SPSP to a fixed R",
        "screen": "keep the covariates most correlated with y",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON file with settings (a previous manifest.json works)")
        p.add_argument("--input", help="CSV with a header and a column named y")
        p.add_argument("--output", help="output directory")
        p.add_argument("--penalty", help="penalty (simulate: comma-separated list)")
        p.add_argument("--alpha", type=float, help="elastic-net mixing parameter")
        p.add_argument("--k-grid", dest="k_grid", type=int, help="number of lambda values")
        p.add_argument("--min-ratio", dest="min_ratio", type=float)
        p.add_argument("--method", help="selection method (simulate: comma-separated list)")
        p.add_argument("--design", help=f"simulation design, one of {', '.join(DESIGNS)}")
        p.add_argument("--reps", type=int, help="replicates")
        p.add_argument("--seed", type=int)
        p.add_argument("--r-override", dest="r_override", type=float, help="fixed R instead of the estimate")
        p.add_argument("--fallback-r", dest="fallback_r", type=float)
        p.add_argument("--folds", type=int)
        p.add_argument("--stab-b", dest="stab_b", type=int)
        p.add_argument("--stab-pi", dest="stab_pi", type=float)
        p.add_argument("--ebic-gamma", dest="ebic_gamma", type=float)
        p.add_argument("--d", type=int, help="number of covariates kept by screen")
        p.add_argument("--r-grid", dest="r_grid", help="start:stop:step for sweep-r")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config_file(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(obj, dict) and "config" in obj and isinstance(obj["config"], dict):
        obj = obj["config"]
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    obj = {k.replace("-", "_"): v for k, v in obj.items()}
    unknown = sorted(set(obj) - set(DEFAULTS) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return obj


def _split(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def parse_r_grid(spec) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        vals = np.asarray(spec, dtype=float)
    else:
        try:
            start, stop, step = (float(x) for x in str(spec).split(":"))
        except ValueError as exc:
            raise ConfigError(f"r_grid must look like start:stop:step, got {spec!r}") from exc
        if step <= 0 or stop < start:
            raise ConfigError("r_grid needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = np.round(start + step * np.arange(count), 10)
    if vals.size == 0 or np.any(vals <= 0):
        raise ConfigError("R values must be positive")
    return vals


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        file_cfg = load_config_file(args.config)
        if file_cfg.get("command", args.command) != args.command:
            raise ConfigError(f"config was written for {file_cfg['command']!r}, not {args.command!r}")
        file_cfg.pop("command", None)
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    validate_config(args.command, cfg)
    return cfg


def validate_config(command: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg["output"] is not None, "--output is required")
    if command in ("paths", "select", "screen"):
        need(cfg["input"] is not None, "--input is required")
    pens = _split(cfg["penalty"])
    need(pens and all(p in PENALTIES for p in pens), f"penalty must be among {PENALTIES}")
    if command != "simulate":
        need(len(pens) == 1, "only one penalty allowed here")
    need(0 < float(cfg["alpha"]) <= 1, "alpha must lie in (0, 1]")
    need(int(cfg["k_grid"]) >= 2, "k_grid must be at least 2")
    if cfg["min_ratio"] is not None:
        need(0 < float(cfg["min_ratio"]) < 1, "min_ratio must lie in (0, 1)")
    methods = _split(cfg["method"])
    if command == "select":
        if len(methods) != 1 or methods[0] not in SELECT_METHODS:
            raise UnknownMethod(f"method must be one of {SELECT_METHODS}")
    if command == "simulate":
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise UnknownMethod(f"unknown methods {bad}; expected among {METHODS}")
    need(str(cfg["design"]).upper() in DESIGNS, f"design must be one of {DESIGNS}")
    need(int(cfg["reps"]) >= 2, "reps must be at least 2")
    if cfg["r_override"] is not None:
        need(float(cfg["r_override"]) > 0, "r_override must be positive")
    need(float(cfg["fallback_r"]) > 0, "fallback_r must be positive")
    need(int(cfg["folds"]) >= 2, "folds must be at least 2")
    need(int(cfg["stab_b"]) >= 2, "stab_b must be at least 2")
    need(0.5 < float(cfg["stab_pi"]) <= 1, "stab_pi must lie in (0.5, 1]")
    need(float(cfg["ebic_gamma"]) >= 0, "ebic_gamma must be nonnegative")
    if cfg["d"] is not None:
        need(int(cfg["d"]) >= 1, "d must be at least 1")
    if command == "screen":
        need(cfg["d"] is not None, "--d is required for screen")
    if command == "sweep-r":
        parse_r_grid(cfg["r_grid"])


def _penalty(cfg) -> PenaltyConfig:
    return PenaltyConfig(kind=_split(cfg["penalty"])[0], alpha=float(cfg["alpha"]))


def _outdir(cfg) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(command: str, cfg: dict, **extra) -> dict:
    return {"command": command, "version": __version__, "config": {"command": command, **cfg}, **extra}


def _load_data(cfg):
    table = read_table(cfg["input"])
    return table, standardize(table.X, table.y, names=table.names)


def _standardization_info(data) -> dict:
    return {
        "n": data.n,
        "p": data.p,
        "y_mean": json_number(data.y_mean),
        "column_means": [json_number(v) for v in data.column_means],
        "column_scales": [json_number(v) for v in data.column_scales],
    }


def cmd_paths(cfg) -> None:
    table, data = _load_data(cfg)
    pen = _penalty(cfg)
    grid = make_lambda_grid(data, int(cfg["k_grid"]), cfg["min_ratio"], pen)
    path = fit_path(data, grid, pen)
    out = _outdir(cfg)
    write_path_csv(out / "paths.csv", path, list(table.names))
    sidecar = {
        "penalty": {k: getattr(pen, k) for k in ("kind", "alpha", "scad_a", "mcp_gamma", "adaptive_power", "tol", "max_iter")},
        "grid": {"K": grid.K, "min_ratio": json_number(grid.min_ratio), "lambda": [json_number(v) for v in grid.values]},
        "scale": "standardized",
        "variables": list(table.names),
        "nonzero_per_lambda": [int(c) for c in np.count_nonzero(path.coefs, axis=1)],
        "intercepts": [json_number(v) for v in path.intercepts],
        "standardization": _standardization_info(data),
    }
    write_json(out / "paths.json", sidecar)
    write_json(out / "manifest.json", _manifest("paths", cfg))


def cmd_select(cfg) -> None:
    table, data = _load_data(cfg)
    names = list(table.names)
    pen = _penalty(cfg)
    method = _split(cfg["method"])[0]
    grid = make_lambda_grid(data, int(cfg["k_grid"]), cfg["min_ratio"], pen)
    out = _outdir(cfg)
    record = {"method": method, "penalty": pen.kind}
    if method == "spsp":
        path = fit_path(data, grid, pen)
        res = spsp_select(data, path, cfg["r_override"], float(cfg["fallback_r"]))
        record.update(selection_json(res, names))
        write_boundary_csv(out / "boundary.csv", res)
    else:
        if method == "stability":
            prof = stability_selection(data, pen, int(cfg["stab_b"]), float(cfg["stab_pi"]), int(cfg["seed"]), grid=grid)
            selected = prof.selected
            record["metadata"] = {
                "B": prof.B,
                "pi": json_number(prof.threshold),
                "subsample_size": prof.subsample_size,
                "max_frequency": {names[j]: json_number(v) for j, v in enumerate(prof.freq.max(axis=0))},
            }
            write_stability_csv(out / "stability.csv", prof, names)
        else:
            path = fit_path(data, grid, pen)
            if method == "cv":
                cv = cross_validate(data, pen, int(cfg["folds"]), int(cfg["seed"]), grid=grid, path=path)
                k = cv.chosen
                record["metadata"] = {"folds": int(cfg["folds"]), "cv_error": [json_number(v) for v in cv.cv_error]}
            else:
                scores, k = information_criterion(path, data, method.upper(), float(cfg["ebic_gamma"]))
                write_criterion_csv(out / "criterion.csv", grid.values, scores)
                record["metadata"] = {"ebic_gamma": json_number(cfg["ebic_gamma"])} if method == "ebic" else {}
            selected = tuple(int(j) for j in np.flatnonzero(path.coefs[k]))
            slopes, icpt = original_scale(data, path.coefs[k])
            record["metadata"].update(
                {
                    "chosen_index": int(k),
                    "chosen_lambda": json_number(grid.values[k]),
                    "penalized_coef": {str(j): json_number(slopes[j]) for j in selected},
                    "penalized_intercept": json_number(icpt),
                }
            )
        fit = refit(data, selected)
        record.update(
            {
                "selected": list(selected),
                "selected_names": [names[j] for j in selected],
                "refit": {str(j): json_number(fit.coef[j]) for j in selected},
                "intercept": json_number(fit.intercept),
                "refit_used_ridge": fit.used_ridge,
            }
        )
    write_json(out / "selection.json", record)
    write_json(out / "manifest.json", _manifest("select", cfg))


def _options(cfg) -> ExperimentOptions:
    return ExperimentOptions(
        K=int(cfg["k_grid"]),
        min_ratio=cfg["min_ratio"],
        folds=int(cfg["folds"]),
        stab_B=int(cfg["stab_b"]),
        stab_pi=float(cfg["stab_pi"]),
        ebic_gamma=float(cfg["ebic_gamma"]),
        R_override=cfg["r_override"],
        fallback_R=float(cfg["fallback_r"]),
    )


def cmd_simulate(cfg) -> None:
    spec = build_design(str(cfg["design"]))
    penalties = _split(cfg["penalty"])
    methods = _split(cfg["method"])
    summary = run_experiment(spec, penalties, methods, int(cfg["reps"]), int(cfg["seed"]), _options(cfg))
    out = _outdir(cfg)
    write_summary_csv(out / "summary.csv", summary, methods)
    write_replicates_csv(out / "replicates.csv", summary)
    write_json(
        out / "manifest.json",
        _manifest(
            "simulate",
            cfg,
            seeds=list(summary.seeds),
            failures=[list(f) for f in summary.failures],
            defaults={"stab_subsample": "floor(n/2)", "bootstrap_resamples": 500, "cv_rule": "minimum"},
        ),
    )


def cmd_sweep_r(cfg) -> None:
    spec = build_design(str(cfg["design"]))
    R_values = parse_r_grid(cfg["r_grid"])
    sweep = run_r_sweep(spec, R_values, int(cfg["reps"]), int(cfg["seed"]), _split(cfg["penalty"])[0], _options(cfg))
    out = _outdir(cfg)
    write_sweep_csv(out / "sweep.csv", sweep)
    write_json(
        out / "manifest.json",
        _manifest(
            "sweep-r",
            cfg,
            seeds=list(sweep.seeds),
            mean_estimated_R=json_number(sweep.mean_estimated_R),
            estimated_R_fpr=json_number(sweep.estimated_fpr),
            estimated_R_fnr=json_number(sweep.estimated_fnr),
        ),
    )


def cmd_screen(cfg) -> None:
    table = read_table(cfg["input"])
    d = int(cfg["d"])
    p = table.X.shape[1]
    if d > p:
        raise BadD(f"d={d} exceeds the number of covariates ({p})")
    order = sis_ranking(table.X, table.y)
    keep = sorted(int(j) for j in order[:d])
    out = _outdir(cfg)
    write_table(out / "screened.csv", [table.names[j] for j in keep], table.X[:, keep], table.y)
    corr = marginal_correlations(table.X, table.y)
    with open(out / "ranking.csv", "w", encoding="utf-8") as fh:
        fh.write("rank,variable,abs_correlation\n")
        for r, j in enumerate(order, start=1):
            fh.write(f"{r},{table.names[j]},{fmt(abs(corr[j]))}\n")
    write_json(out / "manifest.json", _manifest("screen", cfg))


HANDLERS = {
    "paths": cmd_paths,
    "select": cmd_select,
    "simulate": cmd_simulate,
    "sweep-r": cmd_sweep_r,
    "screen": cmd_screen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        HANDLERS[args.command](cfg)
    except SPSPError as exc:
        print(f"spsp {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
