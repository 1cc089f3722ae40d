"""Command line interface.

Subcommands: synthesize (write a model file), simulate (write a terminal
sample CSV), verify (write or print a consistency report, exit 3 on a fail
verdict), figure-data (write the reference figure tables).  All input
errors exit with code 2 and a machine-readable token on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import modelio
from .engines import SimConfig, simulate_terminal
from .errors import InvalidParameters, SpeedlawError
from .measures import TargetMeasure, build_builtin, from_call_prices_csv, from_samples_csv
from .synthesis import martingale_class, synthesize
from .verification import consistency_report

FIG1_WRONSKIANS = (0.25, 0.5, 1.0, 1.5, 2.0)
FIG2_STARTS = (0.0, 0.5, -1.0)


def figure_data(name: str):
    """Reference figure tables: (column names, row array).

    fig1: speed densities of the two-sided exponential target (rate 1,
    lam = 1/2, x0 = 0) across Wronskian levels; the canonical level 2 gives
    the constant density 1 (standard Brownian motion).
    fig2: speed densities of the uniform target on [-1, 1] (lam = 1/2,
    w = 1) for starts 0, 1/2 and the left endpoint -1.
    """
    if name == "fig1":
        lam = 0.5
        target = build_builtin("laplace", [1.0])
        xs = np.linspace(-4.0, 4.0, 801)
        cols = ["x"]
        data = [xs]
        for w in FIG1_WRONSKIANS:
            model = synthesize(target, 0.0, lam, w)
            cols.append(f"W={w:g}")
            data.append(np.asarray(model.speed_density(xs), dtype=float))
        return cols, np.column_stack(data)
    if name == "fig2":
        lam = 0.5
        target = build_builtin("uniform", [-1.0, 1.0])
        xs = np.linspace(-1.0, 1.0, 201)
        cols = ["x"]
        data = [xs]
        for x0 in FIG2_STARTS:
            model = synthesize(target, x0, lam, 1.0)
            cols.append(f"X0={x0:g}")
            data.append(np.asarray(model.speed_density(xs), dtype=float))
        return cols, np.column_stack(data)
    raise InvalidParameters(f"unknown figure {name!r}", code="unknown-figure")


def _parse_target(args) -> TargetMeasure:
    if args.target is not None and args.target_csv is not None:
        raise InvalidParameters("--target and --target-csv are mutually exclusive")
    if args.target is not None:
        spec = args.target
        if ":" not in spec:
            raise InvalidParameters(f"target spec {spec!r} must look like family:p1,p2")
        family, _, tail = spec.partition(":")
        try:
            params = [float(v) for v in tail.split(",") if v.strip()]
        except ValueError:
            raise InvalidParameters(f"non-numeric parameter in target spec {spec!r}")
        return build_builtin(family, params)
    if args.target_csv is not None:
        if args.kind == "samples":
            return from_samples_csv(args.target_csv)
        if args.kind == "calls":
            return from_call_prices_csv(args.target_csv)
        raise InvalidParameters('--kind must be "samples" or "calls" with --target-csv')
    raise InvalidParameters("a target is required: --target or --target-csv")


def _parse_w(text):
    if text is None or text == "canonical":
        return "canonical"
    try:
        return float(text)
    except ValueError:
        raise InvalidParameters(f'--w must be a number or "canonical", got {text!r}')


def _add_target_args(p: argparse.ArgumentParser):
    p.add_argument("--target", help="builtin target, e.g. uniform:-1,1 laplace:1 gaussian:0,1")
    p.add_argument("--target-csv", help="CSV file with samples or call prices")
    p.add_argument("--kind", choices=("samples", "calls"), default="samples",
                   help="interpretation of --target-csv")
    p.add_argument("--x0", type=float, required=True, help="starting point")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="rate of the exponential clock")
    p.add_argument("--w", default="canonical",
                   help='Wronskian level in (0, W_max] or "canonical"')


def _add_sim_args(p: argparse.ArgumentParser, default_engine: str):
    p.add_argument("--engine", choices=("sde", "ctmc", "both"), default=default_engine)
    p.add_argument("--n", type=int, default=10_000, help="number of paths")
    p.add_argument("--dt", type=float, default=1e-3, help="Euler step for the SDE engine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncation", type=float, default=1e-6,
                   help="guard quantile for infinite supports")
    p.add_argument("--n-sites", type=int, default=400, help="chain grid size")
    p.add_argument("--horizon", type=float, default=None,
                   help="cap on simulated time (default 40/lambda)")


def _sim_config(args, engine=None) -> SimConfig:
    return SimConfig(
        n_paths=args.n,
        dt=args.dt,
        truncation_quantile=args.truncation,
        max_horizon=args.horizon,
        seed=args.seed,
        engine=engine if engine is not None else args.engine,
        n_sites=args.n_sites,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speedlaw",
        description="Synthesize, simulate and verify exponential-time-law diffusions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_syn = sub.add_parser("synthesize", help="write a model file")
    _add_target_args(p_syn)
    p_syn.add_argument("--grid-points", type=int, default=201,
                       help="rows in the model file's table")
    p_syn.add_argument("--out", required=True, help="output model path")

    p_sim = sub.add_parser("simulate", help="write a terminal sample CSV")
    _add_target_args(p_sim)
    _add_sim_args(p_sim, default_engine="sde")
    p_sim.add_argument("--out", required=True, help="output CSV path")

    p_ver = sub.add_parser("verify", help="run consistency checks")
    _add_target_args(p_ver)
    _add_sim_args(p_ver, default_engine="both")
    p_ver.add_argument("--out", help="report JSON path (stdout when omitted)")

    p_fig = sub.add_parser("figure-data", help="write a reference figure table")
    p_fig.add_argument("--figure", required=True, help="fig1 or fig2")
    p_fig.add_argument("--out", required=True, help="output CSV path")
    return parser


def _cmd_synthesize(args) -> int:
    target = _parse_target(args)
    model = synthesize(target, args.x0, args.lam, _parse_w(args.w))
    grid = modelio.default_table_grid(model, args.grid_points)
    modelio.write_model(model, args.out, grid)
    print(
        f"wrote {args.out}: w={model.wronskian:g} (sup {model.wronskian_sup:g}), "
        f"boundaries {model.boundaries[0].value}/{model.boundaries[1].value}, "
        f"{martingale_class(model).value}"
    )
    return 0


def _cmd_simulate(args) -> int:
    target = _parse_target(args)
    model = synthesize(target, args.x0, args.lam, _parse_w(args.w))
    if args.engine == "both":
        raise InvalidParameters('simulate needs a single engine; verify accepts "both"')
    cfg = _sim_config(args)
    sample = simulate_terminal(model, cfg)
    modelio.write_samples(sample, model, args.out, json.dumps(asdict(cfg)))
    print(
        f"wrote {args.out}: {cfg.n_paths} paths via {cfg.engine}, "
        f"{sample.truncation_hits} truncation hits, {sample.elapsed_seconds:.2f}s"
    )
    return 0


def _cmd_verify(args) -> int:
    target = _parse_target(args)
    model = synthesize(target, args.x0, args.lam, _parse_w(args.w))
    report = consistency_report(model, _sim_config(args))
    payload = report.to_dict()
    payload["model_hash"] = modelio.model_hash(model)
    text = modelio.report_to_json(payload)
    if args.out:
        modelio.atomic_write(args.out, text)
        print(f"wrote {args.out}: verdict {report.verdict}")
    else:
        print(text, end="")
    return 0 if report.verdict == "pass" else 3


def _cmd_figure_data(args) -> int:
    cols, rows = figure_data(args.figure)
    modelio.atomic_write(args.out, modelio.table_to_csv(cols, rows))
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "synthesize": _cmd_synthesize,
        "simulate": _cmd_simulate,
        "verify": _cmd_verify,
        "figure-data": _cmd_figure_data,
    }
    try:
        return handlers[args.command](args)
    except SpeedlawError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
