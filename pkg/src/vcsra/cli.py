"""Command-line front end.

Subcommands: ``analytic`` (closed forms only), ``simulate`` (Monte-Carlo
point estimate), ``sweep`` (one axis, CSV table), ``reproduce``
(fig5..fig13 result grids), and ``calibrate`` (threshold from a target).
Every run writes a CSV whose commented header echoes the fully resolved
configuration; sweeps and reproductions also render a PNG next to the CSV
unless ``--no-plot`` is given.

Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or configuration
error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analytic
from .analytic import AvailabilityTarget, InterferenceTarget, calibrate_lambda
from .channel import SIMPLIFIED
from .config import parse_config, parse_kv_overrides
from .errors import ConfigError, ConfigFamilyError, DegenerateThreshold, RuntimeFamilyError
from .montecarlo import (
    ExperimentSpec,
    estimate_p_av,
    estimate_p_sc_curve,
    estimate_rates,
    reproduce_figure,
    sweep,
)
from .numerics import db_to_linear
from .report import render_figure, write_csv

_VERSION = "0.1.0"
_FIGURES = [f"fig{i}" for i in range(5, 14)]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (flat key = value lines)")
    common.add_argument("--out", help="output CSV path (default vcsra_<command>.csv)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap for trial-parallel runs (default $VCSRA_DEFAULT_THREADS or 1)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="inline scenario override; wins over the config file")

    parser = argparse.ArgumentParser(prog="vcsra", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("analytic", parents=[common],
                   help="evaluate the closed-form availability/rate approximations (no sampling)")

    p_sim = sub.add_parser("simulate", parents=[common], help="Monte-Carlo estimate at the configured point")
    p_sim.add_argument("--trials", type=int, default=10_000)

    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep one axis and tabulate estimates")
    p_sweep.add_argument("--axis", required=True, choices=["lambda_db", "n_r", "m", "n_c"])
    p_sweep.add_argument("--grid", required=True,
                         help="grid as start:stop:step (inclusive) or comma-separated values")
    p_sweep.add_argument("--trials", type=int, default=10_000)
    p_sweep.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    p_rep = sub.add_parser("reproduce", parents=[common], help="reproduce a result-figure grid")
    p_rep.add_argument("figure", choices=_FIGURES)
    p_rep.add_argument("--trials-scale", type=float, default=1.0,
                       help="scale the default 10^4 trials per grid point, in (0, 1]")
    p_rep.add_argument("--no-plot", action="store_true")

    p_cal = sub.add_parser("calibrate", parents=[common], help="find the sensing threshold for a target")
    p_cal.add_argument("--target-pav", type=float, help="multi-channel availability target in (0, 1)")
    p_cal.add_argument("--nc", type=int, default=None, help="channel count for the availability target")
    p_cal.add_argument("--interference-budget", type=float,
                       help="per-assigned-UE interference budget (linear), closed form only")
    p_cal.add_argument("--trials", type=int, default=10_000,
                       help="sensing draws for the empirical curve (practical model)")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("VCSRA_DEFAULT_THREADS", "1")))


def _metadata(config, command: str, overrides, extra: dict | None = None) -> dict:
    md = {"artifact": f"vcsra {_VERSION}", "command": command}
    md.update(config.as_dict())
    if overrides:
        md["overrides"] = ";".join(sorted(f"{k}={v}" for k, v in overrides.items()))
    md.update(extra or {})
    return md


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:step")
        start, stop, step = (float(p) for p in pieces)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        return list(np.arange(start, stop + step / 2, step))
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def _cmd_analytic(args, config, overrides, out_path) -> int:
    params = config.analytic_params()
    p_sc = analytic.p_av_single(params)
    p_mc = analytic.p_av_multi(p_sc, config.channels)
    try:
        interference = analytic.ra_interference_expectation(params)
    except DegenerateThreshold:
        interference = float("nan")
    row = {
        "lambda_db": config.threshold_db,
        "n_c": config.channels,
        "n_r": config.ra_ues,
        "p_av_single": p_sc,
        "p_av_multi": p_mc,
        "ra_interference": interference,
    }
    for kind, fn in (("cb", analytic.asymptotic_sinr_cb), ("zf", analytic.asymptotic_sinr_zf)):
        try:
            gamma = fn(params)
            row[f"sinr_{kind}"] = gamma
            row[f"rate_{kind}"] = analytic.asymptotic_rate(gamma)
            row[f"sum_rate_{kind}"] = config.assigned_ues * row[f"rate_{kind}"]
        except RuntimeFamilyError:
            row[f"sinr_{kind}"] = row[f"rate_{kind}"] = row[f"sum_rate_{kind}"] = float("nan")
    write_csv(out_path, [row], _metadata(config, "analytic", overrides))
    print(f"analytic: p_av_single={p_sc:.6g} p_av_multi={p_mc:.6g} -> {out_path}")
    return 0


def _cmd_simulate(args, config, overrides, out_path) -> int:
    spec = ExperimentSpec(config, trials=args.trials, master_seed=config.seed, threads=_threads(args))
    pav = estimate_p_av(spec)
    rep = estimate_rates(spec)
    row = {
        "lambda_db": config.threshold_db,
        "n_c": config.channels,
        "n_r": config.ra_ues,
        "p_av": pav.p_hat,
        "p_av_ci": pav.ci_halfwidth,
        "p_sc": pav.p_sc_hat,
        "rate_assigned": rep.per_assigned_rate,
        "rate_assigned_ci": rep.ci_halfwidth["per_assigned_rate"],
        "rate_upper": rep.baseline_rates.get("upper_no_ra", float("nan")),
        "rate_lower": rep.baseline_rates.get("lower_unfiltered", float("nan")),
        "ra_sum_rate": rep.ra_sum_rate,
        "total_sum_rate": rep.total_sum_rate,
        "acceptance_rate": rep.acceptance_rate,
    }
    write_csv(out_path, [row], _metadata(config, "simulate", overrides,
                                         {"trials": spec.trials, "master_seed": spec.master_seed}))
    print(
        f"simulate: p_av={pav.p_hat:.4f}(+-{pav.ci_halfwidth:.4f}) "
        f"rate_assigned={rep.per_assigned_rate:.4f} total={rep.total_sum_rate:.4f} -> {out_path}"
    )
    return 0


def _cmd_sweep(args, config, overrides, out_path) -> int:
    grid = _parse_grid(args.grid)
    spec = ExperimentSpec(config, trials=args.trials, master_seed=config.seed, threads=_threads(args))
    rows = sweep(spec, args.axis, grid)
    write_csv(out_path, rows, _metadata(config, "sweep", overrides,
                                        {"axis": args.axis, "trials": args.trials, "master_seed": spec.master_seed}))
    files = [out_path]
    if not args.no_plot:
        png = os.path.splitext(out_path)[0] + ".png"
        y_cols = [c for c in ("p_sim", "p_analytic") if c in rows[0]]
        if not y_cols or all(np.isnan(rows[0].get(c, float("nan"))) for c in y_cols):
            y_cols = [c for c in ("rate_assigned", "rate_upper", "rate_lower", "rate_analytic") if c in rows[0]]
        render_figure(png, rows, args.axis, y_cols, None, f"sweep over {args.axis}")
        files.append(png)
    print(f"sweep: {len(rows)} rows over {args.axis} -> {', '.join(files)}")
    return 0


def _cmd_reproduce(args, config, overrides, out_path) -> int:
    table = reproduce_figure(args.figure, args.trials_scale, seed=config.seed, threads=_threads(args))
    write_csv(out_path, table.rows, _metadata(config, "reproduce", overrides,
                                              {"figure": args.figure, **table.meta}))
    files = [out_path]
    if not args.no_plot:
        png = os.path.splitext(out_path)[0] + ".png"
        render_figure(png, table.rows, table.x_column, table.y_columns, table.series_column, args.figure)
        files.append(png)
    print(f"reproduce {args.figure}: {len(table.rows)} rows -> {', '.join(files)}")
    return 0


def _cmd_calibrate(args, config, overrides, out_path) -> int:
    if (args.target_pav is None) == (args.interference_budget is None):
        raise ConfigError("calibrate needs exactly one of --target-pav or --interference-budget")
    params = config.analytic_params()
    rows = []
    if args.target_pav is not None:
        n_c = args.nc if args.nc is not None else config.channels
        target = AvailabilityTarget(args.target_pav, n_c)
        if config.model == SIMPLIFIED:
            lam_db = calibrate_lambda(target, params)
            source = "closed-form"
            achieved = analytic.p_av_multi(
                analytic.p_av_single(config.analytic_params(threshold_db=lam_db)), n_c
            )
        else:
            spec = ExperimentSpec(config, trials=args.trials, master_seed=config.seed, threads=_threads(args))
            curve = estimate_p_sc_curve(spec, np.arange(-10.0, 12.5, 0.5))
            lam_db = calibrate_lambda(target, params, p_sc_curve=curve)
            source = "empirical-curve"
            rows.extend({"kind": "curve", "lambda_db": l, "p_sc": p}
                        for l, p in zip(curve.lambda_db, curve.p_sc))
            p_sc_at = float(np.interp(lam_db, curve.lambda_db, np.maximum.accumulate(curve.p_sc)))
            achieved = analytic.p_av_multi(p_sc_at, n_c)
        rows.append({"kind": "result", "lambda_db": lam_db, "target_p_av": args.target_pav,
                     "n_c": n_c, "achieved": achieved, "source": source})
        summary = f"calibrate: lambda={lam_db:.3f} dB for p_av={args.target_pav} over {n_c} channels ({source})"
    else:
        target = InterferenceTarget(args.interference_budget)
        lam_db = calibrate_lambda(target, params)
        rows.append({"kind": "result", "lambda_db": lam_db,
                     "target_interference": args.interference_budget, "n_r": config.ra_ues,
                     "source": "closed-form"})
        summary = f"calibrate: lambda={lam_db:.3f} dB for interference budget {args.interference_budget}"
    write_csv(out_path, rows, _metadata(config, "calibrate", overrides))
    print(f"{summary} -> {out_path}")
    return 0


_COMMANDS = {
    "analytic": _cmd_analytic,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "reproduce": _cmd_reproduce,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = parse_kv_overrides(args.set)
        config = parse_config(args.config, overrides)
        if args.seed is not None:
            config = config.replace(seed=args.seed)
        out_path = args.out or f"vcsra_{args.command}.csv"
        return _COMMANDS[args.command](args, config, overrides, out_path)
    except ConfigFamilyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except RuntimeFamilyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
