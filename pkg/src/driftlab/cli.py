"""Command-line front end: simulate | estimate | experiment | report | calibrate.

Configuration is a YAML document with a strict schema (unknown keys are
rejected).  Either a ``canned`` block names one of the benchmark families
(ips, table1, table2) or a ``scenario`` block spells the generative model
out in full; ``reps``, ``seed`` and pipeline settings follow the same
structure as :class:`driftlab.montecarlo.ExperimentSpec`.

Seed precedence: ``--seed`` flag, then ``seed`` in the config, then the
``DRIFTLAB_SEED`` environment variable, then the library default.

Exit codes: 0 on success, 1 on validation errors, 2 on I/O errors.  All
output files are written atomically (write to a temporary name, then
rename).  CSV floats use the shortest round-trip decimal representation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np
import yaml

from . import __version__
from .grid import PathEnsemble, TimeGrid
from .montecarlo import (
    DEFAULT_SEED,
    ExperimentSpec,
    calibrate_penalty,
    canned_ips,
    canned_table1,
    canned_table2,
    run_experiment,
)
from .basis import TrigBasis
from .estimators import (
    compute_coefficients,
    estimate_b,
    gbm_drift_estimate,
    ips_backtransform,
)
from .noise import RngStream, toeplitz_corr
from .scenarios import (
    FractionalRandomEffect,
    GbmCorrelated,
    InteractingParticles,
    SegmentedFbm,
    gamma_matrix,
    polynomial_drift,
    risk_rate,
    simulate_scenario,
)
from .selection import DEFAULT_PENALTY_CONST, adaptive_estimate

__all__ = ["main"]


class _ValidationFailure(Exception):
    """Raised for anything the user can fix in the config or arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ValidationFailure(message)


# ---------------------------------------------------------------------------
# config schema


def _take(mapping, allowed, required, context):
    """Enforce key sets on one config block and return it as a dict."""
    if not isinstance(mapping, dict):
        raise _ValidationFailure(f"{context} must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise _ValidationFailure(
            f"unknown key(s) in {context}: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )
    missing = set(required) - set(mapping)
    if missing:
        raise _ValidationFailure(f"missing key(s) in {context}: {', '.join(sorted(missing))}")
    return mapping


def _polynomial(block, context):
    block = _take(block, {"polynomial"}, {"polynomial"}, context)
    coeffs = block["polynomial"]
    if not isinstance(coeffs, (list, tuple)) or not coeffs:
        raise _ValidationFailure(f"{context}.polynomial must be a nonempty coefficient list")
    return [float(c) for c in coeffs]


def _build_scenario(block, copies):
    kind = block.get("kind")
    if kind == "gbm":
        _take(
            block,
            {"kind", "initial", "sigma", "drift", "correlation"},
            {"kind", "sigma", "drift", "correlation"},
            "scenario",
        )
        corr_block = _take(
            block["correlation"], {"kind", "gamma"}, {"kind"}, "scenario.correlation"
        )
        if corr_block["kind"] == "identity":
            corr = np.eye(copies)
        elif corr_block["kind"] == "toeplitz":
            if "gamma" not in corr_block:
                raise _ValidationFailure("scenario.correlation.toeplitz requires gamma")
            corr = toeplitz_corr(float(corr_block["gamma"]), copies)
        else:
            raise _ValidationFailure(
                f"scenario.correlation.kind must be identity or toeplitz, got {corr_block['kind']!r}"
            )
        drift, _, integral = polynomial_drift(_polynomial(block["drift"], "scenario.drift"))
        return GbmCorrelated(
            initial=float(block.get("initial", 1.0)),
            sigma=float(block["sigma"]),
            drift=drift,
            correlation=corr,
            drift_integral=integral,
        )
    if kind == "fractional":
        _take(
            block,
            {"kind", "initial", "sigma", "sigma_phi", "hurst", "drift"},
            {"kind", "sigma", "sigma_phi", "hurst", "drift"},
            "scenario",
        )
        drift, _, integral = polynomial_drift(_polynomial(block["drift"], "scenario.drift"))
        return FractionalRandomEffect(
            initial=float(block.get("initial", 0.0)),
            sigma=float(block["sigma"]),
            sigma_phi=float(block["sigma_phi"]),
            hurst=float(block["hurst"]),
            drift=drift,
            drift_integral=integral,
        )
    if kind == "particles":
        _take(block, {"kind", "start", "sigma", "drift"}, {"kind", "start", "sigma", "drift"}, "scenario")
        drift, deriv, integral = polynomial_drift(_polynomial(block["drift"], "scenario.drift"))
        return InteractingParticles(
            start=float(block["start"]),
            sigma=float(block["sigma"]),
            drift=drift,
            drift_derivative=deriv,
            drift_integral=integral,
        )
    if kind == "segmented":
        _take(block, {"kind", "hurst", "sigma", "delta", "drift"}, {"kind", "hurst", "sigma", "delta", "drift"}, "scenario")
        drift = np.polynomial.Polynomial(_polynomial(block["drift"], "scenario.drift"))
        return SegmentedFbm(
            hurst=float(block["hurst"]),
            sigma=float(block["sigma"]),
            delta=int(block["delta"]),
            periodic_drift=drift,
        )
    raise _ValidationFailure(
        f"scenario.kind must be gbm, fractional, particles or segmented, got {kind!r}"
    )


_TOP_KEYS = {
    "canned",
    "scenario",
    "grid",
    "copies",
    "reps",
    "pipeline",
    "estimator",
    "selection",
    "seed",
    "label",
}


def _resolve_seed(config, args):
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("DRIFTLAB_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _spec_from_config(config, args) -> tuple:
    """Build an ExperimentSpec plus the resolved (re-runnable) config echo."""
    _take(config, _TOP_KEYS, set(), "config")
    if ("canned" in config) == ("scenario" in config):
        raise _ValidationFailure("config must contain exactly one of: canned, scenario")
    seed = _resolve_seed(config, args)
    reps = int(config.get("reps", 100))

    if "canned" in config:
        block = _take(
            config["canned"],
            {"family", "hurst", "delta", "gamma", "penalty_const"},
            {"family"},
            "canned",
        )
        family = block["family"]
        extra = set(config) - {"canned", "reps", "seed"}
        if extra:
            raise _ValidationFailure(
                f"canned configs accept only reps and seed on top of the canned block; "
                f"found: {', '.join(sorted(extra))}"
            )
        if family == "ips":
            _take(block, {"family"}, {"family"}, "canned(ips)")
            spec = canned_ips(reps=reps, master_seed=seed)
        elif family == "table1":
            _take(block, {"family", "hurst", "delta"}, {"family", "hurst", "delta"}, "canned(table1)")
            spec = canned_table1(
                float(block["hurst"]), int(block["delta"]), reps=reps, master_seed=seed
            )
        elif family == "table2":
            _take(block, {"family", "gamma", "penalty_const"}, {"family", "gamma"}, "canned(table2)")
            spec = canned_table2(
                float(block["gamma"]),
                penalty_const=float(block.get("penalty_const", DEFAULT_PENALTY_CONST)),
                reps=reps,
                master_seed=seed,
            )
        else:
            raise _ValidationFailure(
                f"canned.family must be ips, table1 or table2, got {family!r}"
            )
        echo = {"canned": dict(block), "reps": reps, "seed": seed}
        return spec, echo

    grid_block = _take(
        config.get("grid", {}), {"horizon", "subintervals"}, {"horizon", "subintervals"}, "grid"
    )
    grid = TimeGrid(float(grid_block["horizon"]), int(grid_block["subintervals"]))
    copies = int(config.get("copies", 0))
    if copies < 1:
        raise _ValidationFailure("copies must be a positive integer")
    pipeline = config.get("pipeline")
    if pipeline is None:
        raise _ValidationFailure("config requires a pipeline")
    scenario = _build_scenario(dict(config["scenario"]), copies)

    max_dim = None
    candidates = None
    penalty_const = DEFAULT_PENALTY_CONST
    if "estimator" in config:
        est_block = _take(config["estimator"], {"max_dim"}, {"max_dim"}, "estimator")
        max_dim = int(est_block["max_dim"])
    if "selection" in config:
        sel_block = _take(
            config["selection"], {"candidates", "penalty_const"}, {"candidates"}, "selection"
        )
        cand = sel_block["candidates"]
        if isinstance(cand, dict):
            cand = _take(cand, {"from", "to"}, {"from", "to"}, "selection.candidates")
            candidates = tuple(range(int(cand["from"]), int(cand["to"]) + 1))
        elif isinstance(cand, (list, tuple)):
            candidates = tuple(int(m) for m in cand)
        else:
            raise _ValidationFailure("selection.candidates must be a list or a from/to mapping")
        penalty_const = float(sel_block.get("penalty_const", DEFAULT_PENALTY_CONST))

    try:
        spec = ExperimentSpec(
            scenario=scenario,
            grid=grid,
            n_copies=copies,
            reps=reps,
            pipeline=pipeline,
            master_seed=seed,
            max_dim=max_dim,
            candidates=candidates,
            penalty_const=penalty_const,
            label=str(config.get("label", "")),
        )
    except ValueError as exc:
        raise _ValidationFailure(str(exc)) from exc

    echo = {k: config[k] for k in config if k != "seed"}
    echo["seed"] = seed
    echo["reps"] = reps
    return spec, echo


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = yaml.safe_load(handle)
    except OSError:
        raise
    except yaml.YAMLError as exc:
        raise _ValidationFailure(f"config {path} is not valid YAML: {exc}") from exc
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise _ValidationFailure(f"config {path} must be a mapping at top level")
    return config


# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(x) -> str:
    """Shortest decimal representation that round-trips the float."""
    return repr(float(x))


def _write_text_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-driftlab-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _ensemble_csv(ensemble: PathEnsemble) -> str:
    header = "t," + ",".join(f"x{i + 1}" for i in range(ensemble.n_paths))
    lines = [header]
    for row, t in enumerate(ensemble.grid.points):
        values = ",".join(_fmt(v) for v in ensemble.paths[:, row])
        lines.append(f"{_fmt(t)},{values}")
    return "\n".join(lines) + "\n"


def _read_ensemble_csv(path) -> PathEnsemble:
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        columns = header.split(",")
        expected = ["t"] + [f"x{i + 1}" for i in range(len(columns) - 1)]
        if columns != expected or len(columns) < 2:
            raise _ValidationFailure(
                f"data file {path} must have header t,x1,...,xN; got {header!r}"
            )
        try:
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise _ValidationFailure(f"data file {path} is not numeric CSV: {exc}") from exc
    if data.shape[1] != len(columns):
        raise _ValidationFailure(
            f"data file {path}: rows have {data.shape[1]} fields, header has {len(columns)}"
        )
    t = data[:, 0]
    steps = np.diff(t)
    if t[0] != 0.0 or steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise _ValidationFailure(f"data file {path}: t column must be a uniform grid from 0")
    grid = TimeGrid(float(t[-1]), len(t) - 1)
    return PathEnsemble(grid, data[:, 1:].T)


def _summary_dict(report, echo):
    # wall-clock runtime is the only entry that varies between identical runs
    summary = {
        "label": report.spec.label,
        "pipeline": report.spec.pipeline,
        "copies": report.spec.n_copies,
        "reps": report.spec.reps,
        "seed": report.spec.master_seed,
        "mean_mise": report.mean_mise,
        "std_mise": report.std_mise,
        "mean_m_hat": report.mean_m_hat,
        "std_m_hat": report.std_m_hat,
        "single_rep": report.single_rep,
        "runtime_seconds": report.runtime_seconds,
        "version": __version__,
        "config": echo,
    }
    return summary


def _report_csv(report) -> str:
    lines = ["rep,mise,m_hat"]
    for record in report.records:
        m_hat = "" if record.m_hat is None else str(record.m_hat)
        lines.append(f"{record.rep},{_fmt(record.mise)},{m_hat}")
    return "\n".join(lines) + "\n"


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args):
    config = _load_config(args.config)
    spec, echo = _spec_from_config(config, args)
    ensemble = simulate_scenario(spec.scenario, spec.grid, spec.n_copies, RngStream(spec.master_seed, 0))
    out = os.path.join(args.out, "ensemble.csv")
    _write_text_atomic(out, _ensemble_csv(ensemble))
    print(out)
    return 0


def _estimate_columns(spec, ensemble):
    """Run the spec's pipeline on one ensemble; returns (columns, selection)."""
    bhat = estimate_b(ensemble)
    columns = {"b_hat": bhat.values}
    selection = None
    if spec.pipeline == "ips-backtransform":
        columns["tt_b_hat"] = ips_backtransform(bhat).values
    elif spec.pipeline == "derivative-with-selection":
        basis = TrigBasis(ensemble.grid.horizon, spec.max_dim)
        coeffs = compute_coefficients(bhat, basis, spec.max_dim)
        rate = risk_rate(gamma_matrix(spec.scenario, spec.n_copies, ensemble.grid.horizon))
        estimate, selection = adaptive_estimate(
            coeffs, spec.candidates, rate, spec.penalty_const
        )
        columns["b_prime_hat"] = estimate.values
        if isinstance(spec.scenario, GbmCorrelated):
            columns["tt_b_hat"] = gbm_drift_estimate(estimate, spec.scenario.sigma).values
    return columns, selection


def _cmd_estimate(args):
    config = _load_config(args.config)
    spec, echo = _spec_from_config(config, args)
    ensemble = _read_ensemble_csv(args.data)
    if ensemble.grid != spec.grid:
        raise _ValidationFailure(
            f"data grid {ensemble.grid} does not match the configured grid {spec.grid}"
        )
    if ensemble.n_paths != spec.n_copies:
        raise _ValidationFailure(
            f"data has {ensemble.n_paths} copies, config expects {spec.n_copies}"
        )
    columns, selection = _estimate_columns(spec, ensemble)
    order = ["b_hat", "b_prime_hat", "tt_b_hat"]
    names = [name for name in order if name in columns]
    lines = ["t," + ",".join(names)]
    for row, t in enumerate(ensemble.grid.points):
        values = ",".join(_fmt(columns[name][row]) for name in names)
        lines.append(f"{_fmt(t)},{values}")
    csv_path = os.path.join(args.out, "estimate.csv")
    _write_text_atomic(csv_path, "\n".join(lines) + "\n")
    outputs = [csv_path]
    if selection is not None:
        payload = {
            "m_hat": selection.chosen,
            "candidates": list(selection.candidates),
            "criterion": [float(c) for c in selection.criterion],
            "penalty_const": selection.penalty_const,
            "rate": selection.rate,
            "config": echo,
            "version": __version__,
        }
        json_path = os.path.join(args.out, "selection.json")
        _write_text_atomic(json_path, _json_text(payload))
        outputs.append(json_path)
    print("\n".join(outputs))
    return 0


def _cmd_experiment(args):
    config = _load_config(args.config)
    outputs = []
    if args.table1:
        _take(config, {"reps", "seed"}, set(), "config (with --table1)")
        seed = _resolve_seed(config, args)
        reps = int(config.get("reps", 100))
        summaries = {}
        for hurst in (0.6, 0.9):
            for delta in (1, 2):
                spec = canned_table1(hurst, delta, reps=reps, master_seed=seed)
                report = run_experiment(spec, threads=args.threads)
                echo = {
                    "canned": {"family": "table1", "hurst": hurst, "delta": delta},
                    "reps": reps,
                    "seed": seed,
                }
                summaries[f"hurst={hurst},delta={delta}"] = _summary_dict(report, echo)
                csv_path = os.path.join(
                    args.out, f"report_table1_h{hurst}_d{delta}.csv"
                )
                _write_text_atomic(csv_path, _report_csv(report))
                outputs.append(csv_path)
        json_path = os.path.join(args.out, "summary_table1.json")
        _write_text_atomic(json_path, _json_text({"cells": summaries, "version": __version__}))
        outputs.append(json_path)
    else:
        spec, echo = _spec_from_config(config, args)
        report = run_experiment(spec, threads=args.threads)
        csv_path = os.path.join(args.out, "report.csv")
        _write_text_atomic(csv_path, _report_csv(report))
        json_path = os.path.join(args.out, "summary.json")
        _write_text_atomic(json_path, _json_text(_summary_dict(report, echo)))
        outputs = [csv_path, json_path]
    print("\n".join(outputs))
    return 0


def _load_summaries(paths):
    summaries = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        if "cells" in payload:
            summaries.extend(payload["cells"].values())
        else:
            summaries.append(payload)
    return summaries


def _markdown_report(summaries) -> str:
    cells = {}
    for summary in summaries:
        canned = (summary.get("config") or {}).get("canned") or {}
        if canned.get("family") == "table1":
            cells[(float(canned["hurst"]), int(canned["delta"]))] = summary

    lines = []
    if cells:
        hursts = sorted({k[0] for k in cells})
        deltas = sorted({k[1] for k in cells})
        lines.append("| H \\ delta | " + " | ".join(f"delta={d}" for d in deltas) + " |")
        lines.append("|---" * (len(deltas) + 1) + "|")
        for h in hursts:
            row = [f"H={h}"]
            for d in deltas:
                cell = cells.get((h, d))
                if cell is None:
                    row.append("missing")
                else:
                    row.append(f"{cell['mean_mise']:.3e} ({cell['std_mise']:.3e})")
            lines.append("| " + " | ".join(row) + " |")
        covered = {id(c) for c in cells.values()}
        summaries = [s for s in summaries if id(s) not in covered]
        lines.append("")

    if summaries:
        lines.append("| label | mean MISE (StD) | mean m_hat (StD) |")
        lines.append("|---|---|---|")
        for summary in summaries:
            label = summary.get("label") or summary.get("pipeline") or "experiment"
            mise_cell = f"{summary['mean_mise']:.3e} ({summary['std_mise']:.3e})"
            if summary.get("mean_m_hat") is None:
                m_cell = "-"
            else:
                m_cell = f"{summary['mean_m_hat']:.2f} ({summary['std_m_hat']:.3f})"
            lines.append(f"| {label} | {mise_cell} | {m_cell} |")
        lines.append("")

    seeds = {}
    all_cells = list(cells.values()) + summaries
    for summary in all_cells:
        seeds.setdefault(summary.get("seed"), []).append(
            summary.get("label") or "experiment"
        )
    if len(seeds) > 1:
        lines.append("")
        lines.append("Seeds are not uniform across cells:")
        for seed in sorted(seeds, key=lambda s: (s is None, s)):
            lines.append(f"- seed {seed}: {', '.join(seeds[seed])}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _cmd_report(args):
    summaries = _load_summaries(args.summaries)
    if not summaries:
        raise _ValidationFailure("no summaries to report on")
    text = _markdown_report(summaries)
    if args.out is not None:
        path = os.path.join(args.out, "report.md")
        _write_text_atomic(path, text)
        print(path)
    else:
        print(text, end="")
    return 0


def _cmd_calibrate(args):
    config = _load_config(args.config)
    spec, echo = _spec_from_config(config, args)
    constants = tuple(float(c) for c in args.constants.split(","))
    try:
        result = calibrate_penalty(spec, constants=constants, threads=args.threads)
    except ValueError as exc:
        raise _ValidationFailure(str(exc)) from exc
    payload = {
        "chosen": result.chosen,
        "constants": list(result.constants),
        "mean_mises": list(result.mean_mises),
        "slack": result.slack,
        "config": echo,
        "version": __version__,
    }
    path = os.path.join(args.out, "calibration.json")
    _write_text_atomic(path, _json_text(payload))
    print(path)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> _Parser:
    parser = _Parser(prog="driftlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"driftlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=1, help="worker thread count")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("simulate", help="write one simulated ensemble as CSV")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate drifts from an ensemble CSV")
    common(p)
    p.add_argument("--data", required=True, help="ensemble CSV from `simulate`")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("experiment", help="run a replicated experiment")
    common(p)
    p.add_argument(
        "--table1",
        action="store_true",
        help="run the four segmented-fBm benchmark cells in one go",
    )
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="format summaries as Markdown tables")
    p.add_argument("summaries", nargs="+", help="summary JSON paths")
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("calibrate", help="sweep the selection penalty constant")
    common(p)
    p.add_argument(
        "--constants",
        default="0.5,1,2,4",
        help="comma-separated penalty constants to sweep",
    )
    p.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ValidationFailure as exc:
        print(f"driftlab: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"driftlab: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"driftlab: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
