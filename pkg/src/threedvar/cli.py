"""Command line interface.

Exit codes: 0 success, 1 a verification check failed, 2 invalid
configuration or input, 3 numerical divergence.
"""

import argparse
import sys

from . import csvio
from .bounds import asymptotic_bounds
from .dynamics import grid_ratio
from .errors import Divergence, ThreeDVarError
from .filter_continuous import run_continuous
from .filter_discrete import assimilate, perturbed_start
from .harness.config import ExperimentSpec, load_config
from .harness.experiments import (
    continuous_config,
    discrete_config,
    make_truth,
    run_decay,
    run_slope,
    write_decay,
    write_slope,
)
from .harness.plotting import emit_plot_script
from .harness.verify import render_report, run_verify

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3

# generic filter settings when neither flags nor a config file give eta / eps
FILTER_DEFAULTS = {"eta": 0.1, "eps": 0.01}

_SPEC_FLAGS = {
    "alpha": float, "b": float, "r": float, "eta": float, "eps": float, "h": float,
    "dt": float, "horizon": float, "ensemble": int, "seed": int,
    "burn_in": float, "record_every": float, "init_error": float, "t_burn": float,
    "averaging": str, "ensemble_horizon": float,
}


def _common(parser):
    for name, typ in _SPEC_FLAGS.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, type=typ, default=None, dest=name)
    parser.add_argument("--eps-grid", default=None, dest="eps_grid",
                        help="comma-separated eps values for slope runs")
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--out", default=None, help="output path (stdout if omitted)")
    parser.add_argument("--workers", type=int, default=1, help="worker threads")


def build_parser():
    ap = argparse.ArgumentParser(prog="threedvar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub_specs = {
        "truth": "integrate a reference Lorenz trajectory",
        "filter-discrete": "run the discrete-time filter once",
        "filter-continuous": "run the continuous-time filter once",
        "bounds": "evaluate the stability and accuracy constants",
        "decay": "error decay experiment",
        "slope": "log-log MSE versus eps experiment",
        "verify": "run the verification suites",
        "plot": "emit a gnuplot script for a result CSV",
    }
    parsers = {}
    for name, help_ in sub_specs.items():
        parsers[name] = p = sub.add_parser(name, help=help_)
        _common(p)
    parsers["bounds"].add_argument("--csv", default=None, help="also write key,value CSV here")
    for name in ("decay", "slope"):
        parsers[name].add_argument("--continuous", action="store_true",
                                   help="use the continuous-time filter")
        parsers[name].add_argument("--plot", default=None, help="also write a gnuplot script here")
    parsers["plot"].add_argument("csv_path")
    parsers["plot"].add_argument("--kind", choices=("decay", "slope"), required=True)
    parsers["plot"].add_argument("--image", default=None, help="PNG path for the script to render")
    return ap


def spec_from_args(args, kind):
    """Defaults, then the config file, then explicit flags.

    The command fixes the experiment family; a config file may still pick
    the discrete or continuous variant unless ``--continuous`` is given.
    """
    spec = ExperimentSpec(kind=kind)
    if args.config:
        spec = load_config(args.config, spec)
    family = kind.split("_")[0]
    if not spec.kind.startswith(family) or getattr(args, "continuous", False):
        spec = spec.with_(kind=kind)
    changes = {k: getattr(args, k) for k in _SPEC_FLAGS if getattr(args, k) is not None}
    if args.eps_grid is not None:
        changes["eps_grid"] = tuple(float(x) for x in args.eps_grid.replace(",", " ").split())
    if args.out is not None:
        changes["out"] = args.out
    return spec.with_(**changes)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _value(spec, name):
    v = getattr(spec, name)
    return FILTER_DEFAULTS[name] if v is None else v


def cmd_truth(args):
    spec = spec_from_args(args, "verify")
    traj = make_truth(spec)
    cols = {"t": traj.times, "x": traj.states[:, 0], "y": traj.states[:, 1], "z": traj.states[:, 2]}
    _emit(csvio.render_csv(["t", "x", "y", "z"], cols, spec.header_lines()), spec.out)
    return EXIT_OK


def cmd_filter(args, continuous):
    spec = spec_from_args(args, "verify")
    spec = spec.with_(eta=_value(spec, "eta"), eps=_value(spec, "eps"))
    truth = make_truth(spec)
    if continuous:
        m0 = perturbed_start(truth.states[0], spec.init_error, spec.seed)
        run = run_continuous(truth, m0, continuous_config(spec), spec.params,
                             stride=grid_ratio(spec.record_every, spec.dt))
    else:
        run = assimilate(truth, discrete_config(spec), spec.seed, None, spec.init_error, spec.params)
    e = run.errors
    _emit(csvio.render_csv(e.COLUMNS, e.columns(), spec.header_lines()), spec.out)
    return EXIT_OK


def cmd_bounds(args):
    spec = spec_from_args(args, "verify")
    report = asymptotic_bounds(_value(spec, "eta"), _value(spec, "eps"), spec.h, spec.params,
                               strict=False)
    _emit(report.render(), spec.out)
    if args.csv:
        _emit(report.render_csv(), args.csv)
    return EXIT_OK


def _experiment_kind(args, family):
    return f"{family}_{'continuous' if args.continuous else 'discrete'}"


def cmd_decay(args):
    spec = spec_from_args(args, _experiment_kind(args, "decay"))
    result = run_decay(spec, args.workers)
    out = spec.out or "decay.csv"
    write_decay(result, spec, out)
    print(result.summary())
    if args.plot:
        emit_plot_script(out, "decay", args.plot)
    return EXIT_OK


def cmd_slope(args):
    spec = spec_from_args(args, _experiment_kind(args, "slope"))
    result = run_slope(spec, args.workers)
    out = spec.out or "slope.csv"
    write_slope(result, spec, out)
    for line in result.summary_lines():
        print(line)
    if args.plot:
        emit_plot_script(out, "slope", args.plot)
    return EXIT_OK


def cmd_verify(args):
    spec = spec_from_args(args, "verify")
    results = run_verify(spec)
    _emit(render_report(results), spec.out)
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK


def cmd_plot(args):
    text = emit_plot_script(args.csv_path, args.kind, args.out, args.eps, args.image)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "truth": cmd_truth,
    "filter-discrete": lambda a: cmd_filter(a, continuous=False),
    "filter-continuous": lambda a: cmd_filter(a, continuous=True),
    "bounds": cmd_bounds,
    "decay": cmd_decay,
    "slope": cmd_slope,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Divergence as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ThreeDVarError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
