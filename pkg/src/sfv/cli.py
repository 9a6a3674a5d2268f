"""Command-line interface.

Verbs: generate, path, rank, predict, diagram, simulate.  All data
output goes to stdout or files as CSV/SVG; diagnostics go to stderr.
Exit status 0 on success, 2 on usage errors, 1 on runtime failures.
Stochastic commands require an explicit --seed; there is no wall-clock
default.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .design import (
    Decaying,
    DesignSpec,
    Equi,
    Family,
    SignalSpec,
    generate_dataset,
    load_design_csv,
    write_matrix_csv,
)
from .diagram import diagram_csv, double_ranking, least_squares_tstats
from .experiments import (
    PRESET_NAMES,
    config_from_json,
    preset_config,
    run_experiment,
)
from .paths import (
    Method,
    forward_stepwise_path,
    lars_path,
    lasso_lars_path,
    trace_csv,
)
from .prediction import predicted_rank
from .ranking import first_spurious_rank, rank_report_csv_row
from .svgplot import emit_svg_scatter

_ENGINES = {
    "lars": lars_path,
    "lasso": lasso_lars_path,
    "stepwise": forward_stepwise_path,
}


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_blocks(text: str) -> tuple[tuple[int, float], ...]:
    blocks = []
    for part in text.split(","):
        if not part:
            continue
        try:
            count, mag = part.split(":")
            blocks.append((int(count), float(mag)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"expected count:magnitude pairs like '40:387.2', got {part!r}"
            )
    return tuple(blocks)


def _load_xy(args):
    X = load_design_csv(args.design, standardize=args.standardize)
    y = load_design_csv(args.response).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(
            f"design has {X.shape[0]} rows but response has {y.shape[0]}"
        )
    return X, y


def _load_support(args) -> frozenset[int]:
    if args.support is not None:
        return frozenset(args.support)
    lines = Path(args.support_file).read_text().split()
    return frozenset(int(v) for v in lines)


def _write_or_stdout(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# Verb handlers
# ---------------------------------------------------------------------------


def _cmd_predict(args) -> int:
    lines = ["k,cutoff,regime,predicted_rank,predicted_log_rank"]
    for k in args.k:
        pred = predicted_rank(args.n, args.p, k)
        lines.append(
            f"{k},{repr(pred.cutoff)},{pred.regime.value},"
            f"{repr(pred.rank)},{repr(pred.log_rank)}"
        )
    _write_or_stdout("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_generate(args) -> int:
    family = {
        "gaussian": Family.GAUSSIAN_IID,
        "rademacher": Family.BERNOULLI_RADEMACHER,
        "correlated": Family.GAUSSIAN_CORRELATED,
    }[args.family]
    correlation = None
    if args.family == "correlated":
        if args.correlation is None or args.rho is None:
            raise ValueError("--correlation and --rho are required for --family correlated")
        correlation = Equi(args.rho) if args.correlation == "equi" else Decaying(args.rho)
    design = DesignSpec(
        n=args.n, p=args.p, family=family, scale=args.scale, correlation=correlation
    )
    if args.blocks is not None:
        blocks = args.blocks
    elif args.k is not None:
        if args.magnitude is None:
            raise ValueError("--magnitude is required with --k")
        blocks = ((args.k, args.magnitude),)
    else:
        blocks = ()
    signal = SignalSpec(p=args.p, blocks=blocks, noise_sigma=args.sigma)
    data = generate_dataset(
        design, signal, args.seed, shuffle_support=args.shuffle_support
    )
    write_matrix_csv(args.out_x, data.X)
    if args.out_y:
        write_matrix_csv(args.out_y, data.y[:, None])
    if args.out_meta:
        support = sorted(data.support)
        lines = ["variable,beta"]
        lines += [f"{j},{repr(float(data.beta[j]))}" for j in support]
        Path(args.out_meta).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_path(args) -> int:
    X, y = _load_xy(args)
    trace = _ENGINES[args.method](X, y, max_steps=args.max_steps)
    _write_or_stdout(trace_csv(trace), args.out)
    return 0


def _cmd_rank(args) -> int:
    X, y = _load_xy(args)
    support = _load_support(args)
    trace = _ENGINES[args.method](X, y, max_steps=args.max_steps)
    report = first_spurious_rank(trace, support)
    header = "method,seed,k,T,signals_before,drops_before_first_noise"
    row = rank_report_csv_row(args.method, args.seed_label, len(support), report)
    _write_or_stdout(header + "\n" + row + "\n", args.out)
    return 0


def _cmd_diagram(args) -> int:
    X, y = _load_xy(args)
    support = _load_support(args)
    trace = _ENGINES[args.method](X, y, max_steps=args.max_steps)
    tstats = least_squares_tstats(X, y)
    table = double_ranking(trace, tstats, support)
    _write_or_stdout(diagram_csv(table), args.out_csv)
    if args.out_svg:
        entered = [r.h_rank for r in table.rows if r.h_rank is not None]
        band = (max(entered) if entered else 0) + 2
        pts = [
            (
                float(r.h_rank if r.h_rank is not None else band),
                float(r.v_rank),
                "signal" if r.is_signal else "noise",
            )
            for r in table.rows
        ]
        svg = emit_svg_scatter(pts, x_label="path rank", y_label="least-squares rank")
        Path(args.out_svg).write_text(svg)
    return 0


def _cmd_simulate(args) -> int:
    if (args.preset is None) == (args.config is None):
        raise ValueError("exactly one of --preset or --config is required")
    if args.preset is not None:
        if args.seed is None:
            raise ValueError("--seed is required with --preset")
        methods = (
            tuple(Method(m) for m in args.methods.split(","))
            if args.methods
            else (Method.LEAST_ANGLE, Method.LASSO, Method.FORWARD_STEPWISE)
        )
        config = preset_config(
            args.preset,
            seed=args.seed,
            scale=args.scale,
            replicates=args.replicates,
            methods=methods,
        )
        if args.shuffle_support:
            from dataclasses import replace

            config = replace(config, shuffle_support=True)
    else:
        config = config_from_json(Path(args.config).read_text())
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.replicates is not None:
            overrides["replicates"] = args.replicates
        if args.methods:
            overrides["methods"] = tuple(Method(m) for m in args.methods.split(","))
        if args.shuffle_support:
            overrides["shuffle_support"] = True
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
    run_experiment(config, out_dir=args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfv",
        description="Sequential selection paths and first-false-selection analysis.",
    )
    parser.add_argument("--version", action="version", version=f"sfv {__version__}")
    sub = parser.add_subparsers(dest="verb")

    p = sub.add_parser("predict", help="closed-form rank prediction")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=_parse_int_list, required=True,
                   help="comma-separated sparsity levels")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_predict)

    g = sub.add_parser("generate", help="draw a synthetic dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--family", choices=("gaussian", "rademacher", "correlated"),
                   default="gaussian")
    g.add_argument("--scale", type=float, default=None,
                   help="per-entry variance (default 1/n)")
    g.add_argument("--correlation", choices=("equi", "decaying"), default=None)
    g.add_argument("--rho", type=float, default=None)
    g.add_argument("--k", type=int, default=None, help="number of signal variables")
    g.add_argument("--magnitude", type=float, default=None, help="signal magnitude")
    g.add_argument("--blocks", type=_parse_blocks, default=None,
                   help="count:magnitude[,count:magnitude...] signal blocks")
    g.add_argument("--sigma", type=float, default=0.0, help="noise level")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--shuffle-support", action="store_true",
                   help="place signals on random columns instead of 0..k-1")
    g.add_argument("--out-x", required=True, help="design matrix CSV")
    g.add_argument("--out-y", default=None, help="response CSV")
    g.add_argument("--out-meta", default=None, help="nonzero-coefficient CSV")
    g.set_defaults(func=_cmd_generate)

    def add_xy_options(sp, needs_support):
        sp.add_argument("--method", choices=tuple(_ENGINES), required=True)
        sp.add_argument("--design", required=True, help="design matrix CSV")
        sp.add_argument("--response", required=True, help="response CSV")
        sp.add_argument("--standardize", action="store_true",
                        help="standardize design columns after loading")
        sp.add_argument("--max-steps", type=int, default=None)
        if needs_support:
            grp = sp.add_mutually_exclusive_group(required=True)
            grp.add_argument("--support", type=_parse_int_list, default=None,
                             help="comma-separated signal indices")
            grp.add_argument("--support-file", default=None,
                             help="file of whitespace-separated signal indices")

    t = sub.add_parser("path", help="run one path engine on CSV inputs")
    add_xy_options(t, needs_support=False)
    t.add_argument("--out", default=None, help="output CSV (default stdout)")
    t.set_defaults(func=_cmd_path)

    r = sub.add_parser("rank", help="first false-selection rank of a path")
    add_xy_options(r, needs_support=True)
    r.add_argument("--seed-label", default="",
                   help="seed column value for the report row")
    r.add_argument("--out", default=None, help="output CSV (default stdout)")
    r.set_defaults(func=_cmd_rank)

    d = sub.add_parser("diagram", help="double-ranking table and scatter")
    add_xy_options(d, needs_support=True)
    d.add_argument("--out-csv", default=None, help="table CSV (default stdout)")
    d.add_argument("--out-svg", default=None, help="scatter SVG path")
    d.set_defaults(func=_cmd_diagram)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    s.add_argument("--preset", choices=PRESET_NAMES, default=None)
    s.add_argument("--scale", type=float, default=0.25,
                   help="dimension/replicate scale for presets")
    s.add_argument("--config", default=None, help="experiment JSON file")
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--methods", default=None,
                   help="comma-separated subset of lars,lasso,stepwise")
    s.add_argument("--shuffle-support", action="store_true",
                   help="place signals on random columns in every replicate")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=_cmd_simulate)

    return parser


def parse_and_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if getattr(args, "verb", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
