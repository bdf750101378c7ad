"""Command-line orchestration with reproducible, auditable run configs.

Five subcommands cover the pipeline: ``simulate`` writes synthetic curve
and response files, ``fit`` runs the sampler and archives draws,
``summarize`` runs the decision analysis and posterior summaries on an
archive, ``evaluate`` scores summaries against a known truth, and
``replicate`` drives a multi-method replicated study with resume support.

Every run resolves its configuration from defaults, an optional config
file, and command-line overrides (in that order), rejects unknown keys,
writes the resolved snapshot next to the outputs, and stamps each output
table with the configuration hash.  Exit codes distinguish configuration
errors, I/O failures, and numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from sofreg.basis import BSplineBasis, Domain
from sofreg.decision import Partition, analyze
from sofreg.dhs import DhsConfig
from sofreg.funcdata import (
    build_design,
    fit_curves,
    read_curves,
    read_scalars,
    write_curves,
    write_scalars,
)
from sofreg.gibbs import (
    FitConfig,
    NumericalError,
    fit,
    load_draws,
    save_draws,
    stable_hash,
    summarize_coefficient,
)
from sofreg.methods import MethodSettings, build_methods
from sofreg.simulate import (
    GpSettings,
    LocallyConstantTruth,
    SimulationDesign,
    SmoothTruth,
    evaluate,
    replicate_data,
    run_replicate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class ConfigError(Exception):
    """Bad or unknown configuration; exits with the config error code."""


# --- configuration plumbing ---------------------------------------------------------

_COMMON = {"seed": 0, "out_dir": ".", "threads": 1}

_GRID = {"lo": 0.0, "hi": 1.0, "points": 101}
_GP = {"seasonal": True, "period": 365.0 / 295.0, "sigma_x": 0.7, "length_scale": 0.01}
_TRUTH = {"kind": "smooth", "breakpoints": [0.35, 0.65], "levels": [2.0, 0.0, -2.0]}
_SIGNAL = {"route": "spline", "basis_size": 53}


def _defaults(command: str) -> dict:
    shared_study = {
        "n": 100,
        "snr": 5.0,
        "replicates": 1,
        "grid": dict(_GRID),
        "gp": dict(_GP),
        "truth": dict(_TRUTH),
        "signal": dict(_SIGNAL),
    }
    if command == "simulate":
        return {**_COMMON, **copy.deepcopy(shared_study)}
    if command == "fit":
        return {
            **_COMMON,
            "curves": None,
            "scalars": None,
            "basis": {"curve_size": 53, "coef_size": 53, "degree": 3},
            "sampler": {
                "prior": "dhs",
                "burnin": 10000,
                "draws": 10000,
                "thin": 1,
                "var_shape": 0.01,
                "var_rate": 0.01,
                "scale_shape": 0.01,
                "scale_rate": 0.01,
                "refresh": 5,
            },
        }
    if command == "summarize":
        return {
            **_COMMON,
            "archive": None,
            "curves": None,
            "scalars": None,
            "basis": {"curve_size": 53, "degree": 3},
            "epsilon": 0.10,
            "zero_tol": 0.0,
            "pred_draws": 1000,
            "grid_points": 101,
            "partition_cells": None,
        }
    if command == "evaluate":
        return {
            **_COMMON,
            "beta_summary": None,
            "windows": None,
            "truth": copy.deepcopy(_TRUTH),
        }
    if command == "replicate":
        return {
            **_COMMON,
            "study": copy.deepcopy(shared_study) | {"replicates": 2},
            "methods": ["dhs"],
            "pipeline": {
                "curve_basis_size": 53,
                "coef_basis_size": 53,
                "degree": 3,
                "burnin": 2000,
                "draws": 2000,
                "thin": 1,
                "refresh": 1,
                "epsilon": 0.10,
                "zero_tol": 0.0,
                "pred_draws": 500,
                "partition_cells": None,
            },
        }
    raise ConfigError(f"unknown command {command!r}")


def _merge(defaults: dict, user: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        dotted = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key: {dotted}")
        base = defaults[key]
        if isinstance(base, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {dotted} must be a section")
            out[key] = _merge(base, value, prefix=f"{dotted}.")
        elif isinstance(base, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"config key {dotted} must be true/false")
            out[key] = value
        elif isinstance(base, int) and value is not None:
            out[key] = int(value)
        elif isinstance(base, float) and value is not None:
            out[key] = float(value)
        else:
            out[key] = value
    return out


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults <- config file <- command-line flags, with unknown-key checks."""
    user: dict = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        loaded = yaml.safe_load(path.read_text())
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a key-value mapping")
        user = loaded
    resolved = _merge(_defaults(command), user)
    for flag in ("seed", "out_dir", "threads"):
        value = getattr(args, flag, None)
        if value is not None:
            resolved[flag] = value
    for flag in (
        "curves",
        "scalars",
        "archive",
        "beta_summary",
        "windows",
        "epsilon",
        "zero_tol",
        "methods",
    ):
        value = getattr(args, flag, None)
        if value is not None:
            resolved[flag] = value
    return resolved


def _snapshot(resolved: dict, command: str) -> str:
    """Write the resolved config next to the outputs; returns its hash."""
    out_dir = Path(resolved["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = stable_hash({"command": command, "config": resolved})
    payload = dict(resolved)
    payload["config_hash"] = cfg_hash
    (out_dir / f"{command}_config.yaml").write_text(
        yaml.safe_dump(payload, sort_keys=True)
    )
    return cfg_hash


def _write_table(path, header: list[str], rows, cfg_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Read a hash-stamped table, skipping comment lines."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise ValueError(f"{path}: empty table")
    return header, [row for row in reader if row]


# --- shared assembly helpers ----------------------------------------------------------


def _truth_from_cfg(cfg: dict):
    kind = cfg["kind"]
    if kind == "smooth":
        return SmoothTruth()
    if kind == "locally_constant":
        return LocallyConstantTruth(
            breakpoints=tuple(cfg["breakpoints"]), levels=tuple(cfg["levels"])
        )
    raise ConfigError(f"unknown truth kind {kind!r}")


def _design_from_cfg(resolved: dict, study_key: str | None = None) -> SimulationDesign:
    cfg = resolved if study_key is None else resolved[study_key]
    grid = np.linspace(cfg["grid"]["lo"], cfg["grid"]["hi"], cfg["grid"]["points"])
    return SimulationDesign(
        n=cfg["n"],
        snr=cfg["snr"],
        grid=grid,
        gp=GpSettings(**cfg["gp"]),
        truth=_truth_from_cfg(cfg["truth"]),
        replicates=cfg["replicates"],
        seed=resolved["seed"],
        signal_route=cfg["signal"]["route"],
        signal_basis_size=cfg["signal"]["basis_size"],
    )


def _require_file(resolved: dict, key: str) -> Path:
    value = resolved.get(key)
    if value is None:
        raise ConfigError(f"missing required input: {key}")
    path = Path(value)
    if not path.exists():
        raise FileNotFoundError(f"{key} file not found: {path}")
    return path


def _load_dataset(resolved: dict):
    curves = read_curves(_require_file(resolved, "curves"))
    scalars_path = resolved.get("scalars")
    covariates = None
    y = None
    if scalars_path is not None:
        ids, y, columns = read_scalars(_require_file(resolved, "scalars"))
        if ids != [c.subject_id for c in curves]:
            raise ConfigError("scalar file subjects do not match the curve file")
        covariates = columns or None
    return curves, y, covariates


def _assemble(curves, y, covariates, curve_size: int, coef_size: int, degree: int):
    lo = min(c.domain.lo for c in curves)
    hi = max(c.domain.hi for c in curves)
    domain = Domain(lo, hi)
    curve_basis = BSplineBasis(domain, curve_size, degree)
    coef_basis = BSplineBasis(domain, coef_size, degree)
    coef_curves = fit_curves(curves, curve_basis)
    design = build_design(coef_curves, coef_basis, y, scalars=covariates)
    return coef_curves, design


# --- commands --------------------------------------------------------------------------


def cmd_simulate(resolved: dict) -> int:
    design = _design_from_cfg(resolved)
    cfg_hash = _snapshot(resolved, "simulate")
    out_dir = Path(resolved["out_dir"])
    meta_rows = []
    for rep in range(design.replicates):
        curves, y, sigma = replicate_data(design, rep)
        write_curves(out_dir / f"curves_rep{rep:03d}.csv", curves)
        write_scalars(
            out_dir / f"scalars_rep{rep:03d}.csv", [c.subject_id for c in curves], y
        )
        meta_rows.append([rep, repr(sigma), design.n, design.grid.size])
    _write_table(
        out_dir / "simulate_meta.csv",
        ["replicate", "sigma", "n", "grid_points"],
        meta_rows,
        cfg_hash,
    )
    return EXIT_OK


def cmd_fit(resolved: dict) -> int:
    curves, y, covariates = _load_dataset(resolved)
    if y is None:
        raise ConfigError("fit needs a scalar file with the response column")
    cfg_hash = _snapshot(resolved, "fit")
    basis_cfg = resolved["basis"]
    _, design = _assemble(
        curves, y, covariates, basis_cfg["curve_size"], basis_cfg["coef_size"], basis_cfg["degree"]
    )
    s = resolved["sampler"]
    config = FitConfig(
        prior=s["prior"],
        burnin=s["burnin"],
        draws=s["draws"],
        thin=s["thin"],
        var_shape=s["var_shape"],
        var_rate=s["var_rate"],
        scale_shape=s["scale_shape"],
        scale_rate=s["scale_rate"],
        dhs=DhsConfig(refresh=s["refresh"]),
    )
    draws = fit(design, config, seed=resolved["seed"])
    archive_hash = save_draws(draws, Path(resolved["out_dir"]) / "archive")
    print(f"archive written (config {cfg_hash}, draws {archive_hash})")
    return EXIT_OK


def cmd_summarize(resolved: dict) -> int:
    archive = _require_file(resolved, "archive")
    curves, y, covariates = _load_dataset(resolved)
    if y is None:
        raise ConfigError("summarize needs the scalar file used for the fit")
    cfg_hash = _snapshot(resolved, "summarize")
    out_dir = Path(resolved["out_dir"])
    draws = load_draws(archive)
    basis_cfg = resolved["basis"]
    coef_curves, design = _assemble(
        curves, y, covariates, basis_cfg["curve_size"], draws.basis.size, basis_cfg["degree"]
    )
    if design.z_names != draws.alpha_names:
        raise ConfigError("scalar columns do not match the archived fit")

    grid = np.linspace(
        draws.basis.domain.lo, draws.basis.domain.hi, resolved["grid_points"]
    )
    beta = summarize_coefficient(draws, grid=grid)
    _write_table(
        out_dir / "beta_summary.csv",
        ["t", "mean", "lower50", "upper50", "lower95", "upper95"],
        [
            [repr(float(v)) for v in row]
            for row in zip(
                beta.grid, beta.mean, beta.lower50, beta.upper50, beta.lower95, beta.upper95
            )
        ],
        cfg_hash,
    )

    cells = resolved["partition_cells"]
    if cells is None:
        breaks = np.unique(np.concatenate([c.t for c in curves]))
        partition = Partition.from_grid(breaks)
    else:
        partition = Partition.regular(draws.basis.domain, int(cells))
    summary = analyze(
        draws,
        design,
        coef_curves,
        partition,
        np.asarray(y, dtype=float),
        np.random.default_rng(resolved["seed"]),
        epsilon=resolved["epsilon"],
        zero_tol=resolved["zero_tol"],
        pred_draws=resolved["pred_draws"],
    )
    diag, family = summary.diagnostics, summary.family
    need = max(1, int(np.ceil(family.epsilon * diag.percent_increase.shape[1])))
    path_rows = []
    for i in range(diag.lambdas.size):
        draws_row = np.sort(diag.percent_increase[i])
        path_rows.append(
            [
                repr(float(diag.lambdas[i])),
                int(diag.n_level_changes[i] + 1),
                repr(float(diag.empirical[i])),
                repr(float(diag.percent_increase[i].mean())),
                repr(float(draws_row[need - 1])),
                repr(float(draws_row[-1])),
                int(family.members[i]),
                int(i == family.idx_lambda_min),
                int(i == family.idx_simplest),
            ]
        )
    _write_table(
        out_dir / "path_table.csv",
        [
            "lambda",
            "n_levels",
            "empirical_mse",
            "mean_pct_increase",
            "pct_increase_lo",
            "pct_increase_hi",
            "acceptable",
            "is_lambda_min",
            "is_simplest",
        ],
        path_rows,
        cfg_hash,
    )
    _write_table(
        out_dir / "windows.csv",
        ["start", "end", "level", "label"],
        [
            [repr(w.start), repr(w.end), repr(w.level), w.label]
            for w in summary.windows
        ],
        cfg_hash,
    )
    print(
        f"summaries written (config {cfg_hash}, "
        f"{diag.lambdas.size} path entries, {len(summary.windows)} windows)"
    )
    return EXIT_OK


def _selection_from_windows(grid: np.ndarray, rows: list[list[str]]) -> np.ndarray:
    labels = {"+": 1, "-": -1, "0": 0}
    sel = np.zeros(grid.size, dtype=int)
    for start, end, _level, label in rows:
        mask = (grid >= float(start)) & (grid <= float(end))
        sel[mask] = labels[label]
    return sel


def cmd_evaluate(resolved: dict) -> int:
    beta_path = _require_file(resolved, "beta_summary")
    cfg_hash = _snapshot(resolved, "evaluate")
    header, rows = read_table(beta_path)
    cols = {name: i for i, name in enumerate(header)}
    data = np.array([[float(v) for v in row] for row in rows])
    grid = data[:, cols["t"]]
    truth = _truth_from_cfg(resolved["truth"])
    selection = None
    if resolved.get("windows") is not None:
        _, win_rows = read_table(_require_file(resolved, "windows"))
        selection = _selection_from_windows(grid, win_rows)
    metrics = evaluate(
        grid,
        data[:, cols["mean"]],
        data[:, cols["lower95"]],
        data[:, cols["upper95"]],
        np.asarray(truth(grid), dtype=float),
        selection,
    )
    out_rows = [[k, repr(float(v))] for k, v in metrics.as_dict().items()]
    out_rows.append(["width_finite", str(int(metrics.width_finite))])
    _write_table(Path(resolved["out_dir"]) / "metrics.csv", ["metric", "value"], out_rows, cfg_hash)
    return EXIT_OK


def _replicate_worker(design: SimulationDesign, names: list[str], pipeline: dict, rep: int):
    methods = build_methods(names, MethodSettings(**pipeline))
    return rep, run_replicate(design, methods, rep)


def cmd_replicate(resolved: dict) -> int:
    design = _design_from_cfg(resolved, "study")
    names = list(resolved["methods"])
    build_methods(names, MethodSettings(**resolved["pipeline"]))  # validate early
    cfg_hash = _snapshot(resolved, "replicate")
    out_dir = Path(resolved["out_dir"])
    part_dir = out_dir / "replicates"
    part_dir.mkdir(parents=True, exist_ok=True)

    header = ["replicate", "method", "metric", "value"]
    pending = []
    for rep in range(design.replicates):
        if not (part_dir / f"rep_{rep:04d}.csv").exists():
            pending.append(rep)

    def store(rep: int, rows: list[dict]) -> None:
        _write_table(
            part_dir / f"rep_{rep:04d}.csv",
            header,
            [[r["replicate"], r["method"], r["metric"], r["value"]] for r in rows],
            cfg_hash,
        )

    threads = int(resolved["threads"])
    if threads > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_replicate_worker, design, names, resolved["pipeline"], rep)
                for rep in pending
            ]
            for fut in futures:
                rep, rows = fut.result()
                store(rep, rows)
    else:
        for rep in pending:
            _, rows = _replicate_worker(design, names, resolved["pipeline"], rep)
            store(rep, rows)

    merged: list[list[str]] = []
    for rep in range(design.replicates):
        _, rows = read_table(part_dir / f"rep_{rep:04d}.csv")
        merged.extend(rows)
    _write_table(out_dir / "study.csv", header, merged, cfg_hash)
    print(
        f"study written (config {cfg_hash}, {design.replicates} replicates, "
        f"{len(pending)} computed now)"
    )
    return EXIT_OK


# --- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sofreg",
        description="Scalar-on-function regression: simulate, fit, summarize, evaluate, replicate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "simulate": "generate synthetic curve and response files",
        "fit": "run the Gibbs sampler and archive posterior draws",
        "summarize": "decision analysis and posterior summaries for an archive",
        "evaluate": "score summary tables against a configured truth",
        "replicate": "replicated multi-method study with resume support",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        p.add_argument("--threads", type=int, help="worker processes for replicate")
        if name in ("fit", "summarize"):
            p.add_argument("--curves", help="curve data file")
            p.add_argument("--scalars", help="response/covariate file")
        if name == "summarize":
            p.add_argument("--archive", help="draw archive directory")
            p.add_argument("--epsilon", type=float, help="acceptable-family level")
            p.add_argument("--zero-tol", dest="zero_tol", type=float, help="zero-label tolerance")
        if name == "evaluate":
            p.add_argument("--beta-summary", dest="beta_summary", help="summary table to score")
            p.add_argument("--windows", help="windows table for the selection labels")
        if name == "replicate":
            p.add_argument(
                "--methods",
                type=lambda v: [m.strip() for m in v.split(",") if m.strip()],
                help="comma-separated method list",
            )
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "summarize": cmd_summarize,
    "evaluate": cmd_evaluate,
    "replicate": cmd_replicate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        resolved = resolve_config(args.command, args)
        return _COMMANDS[args.command](resolved)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
