"""Command line interface: `tracking-control <command> ...` or
`python -m tracking_control <command> ...`.

Exit codes: 0 on success, 2 for an invalid configuration, 3 for a numerical
failure.
"""
from __future__ import annotations
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence
import numpy as np
import pandas as pd
import sympy as sp
from tracking_control.errors import ConfigError, NumericalError
from tracking_control.logging_config import configure_logging
from tracking_control.moving import build_single_diffeo, build_double_diffeo, determinant_signs
from tracking_control.flatness import SeriesTarget, build_series, series_controls, controls_frame
from tracking_control.discretization import CoefficientSet, build_mesh, build_time_grid
from tracking_control.solvers import solve_forward
from .config import ExperimentConfig, CONFIG_SCHEMA
from .runner import run_tracking, run_example, run_example1_sweep, replay_summary, RunSummary
from .obstruction import obstruction_refinement
from .output import FLOAT_FORMAT
from .waveforms import build_trajectory


logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _print_summary(summary: RunSummary):
    print(f"{summary.name}: epsilon = {summary.epsilon:g}")
    for i, e in enumerate(summary.errors, start=1):
        print(f"  E_{i} = {e:.6e}")
    print(f"  combined = {summary.combined:.6e}")
    print(f"  J = {summary.objective:.12e} after {summary.iterations} iterations ({summary.reason})")
    for name, path in summary.artifacts.items():
        print(f"  {name}: {path}")


def _parse_trajectory(spec: str, horizon: float):
    """'sine:c,A', 'constant:v' or 'expression:<formula in t>'."""
    kind, _, args = spec.partition(':')
    try:
        if kind == 'sine':
            center, amplitude = (float(v) for v in args.split(','))
            return build_trajectory('sine', {'center': center, 'amplitude': amplitude}, horizon)
        if kind == 'constant':
            return build_trajectory('constant', {'value': float(args)}, horizon)
        if kind == 'expression':
            return build_trajectory('expression', {'expression': args}, horizon)
    except ValueError as exc:
        raise ConfigError('traj', f"cannot parse {spec!r}: {exc}") from None
    raise ConfigError('traj', f"unknown trajectory {spec!r}; use sine:c,A, constant:v or expression:<h(t)>")


def _cmd_track(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    config = config.with_overrides(directory=args.out, plot=True if args.plot else None)
    _print_summary(run_tracking(config))
    return 0


def _cmd_example(args) -> int:
    plot = True if args.plot else None
    if args.n == 1 and args.eps is None:
        summaries = run_example1_sweep(args.ne, args.nt, args.out, plot, parallel=not args.serial)
    else:
        summaries = [run_example(args.n, args.eps, args.ne, args.nt, args.out, plot)]
    for summary in summaries:
        _print_summary(summary)
    return 0


def _cmd_obstruction(args) -> int:
    frame = obstruction_refinement(args.variant, args.levels, args.ne, args.nt)
    print(frame.to_string(index=False, float_format=lambda v: f'{v:.4e}'))
    return 0


def _emit_csv(frame: pd.DataFrame, out: str | None) -> None:
    """Writes `frame` to the file `out`, or to stdout."""
    if out is None:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info("wrote %s", path)


def _cmd_diffeo(args) -> int:
    h = _parse_trajectory(args.traj, args.horizon)
    if args.k is None:
        diffeo = build_single_diffeo(h)
        logger.info("single map: n = %d, straightened point %.6g", diffeo.n, diffeo.straightened_points[0])
    else:
        diffeo = build_double_diffeo(args.k, h)
        logger.info(
            "double map: n = %d, r = %d, straightened points %s",
            diffeo.n, diffeo.r, ', '.join(f'{p:.6g}' for p in diffeo.straightened_points)
        )
        for name, values in determinant_signs(diffeo).items():
            logger.info("max %s determinant: %.4e", name, values.max())
    frame = diffeo.to_frame(build_time_grid(args.horizon, args.steps)).reset_index()
    logger.info("min d(chi)/dx over [0, T]: %.6e", frame['margin'].min())
    _emit_csv(frame, args.out)
    return 0


def _cmd_flatness(args) -> int:
    targets = SeriesTarget.from_expressions(args.w1, args.w2)
    solution = build_series(targets, args.x1)
    logger.info("y(t, x) = %s", sp.expand(solution.symbolic))
    timegrid = build_time_grid(args.horizon, args.steps)
    frame = controls_frame(solution, timegrid.times)
    if args.demo:
        # simulate the sampled controls; the FE state starts from zero
        mesh = build_mesh(1.0, args.ne)
        state = solve_forward(mesh, timegrid, CoefficientSet.constant(1.0), series_controls(solution).sampled(timegrid))
        frame['w1'] = solution.evaluate(timegrid.times, args.x1)
        frame['trace'] = np.concatenate([[0.0], state.traces(args.x1)])
    logger.info("max |y_t - y_xx| on [0, T] x [0, 1]: %.3e", frame['residual'].max())
    _emit_csv(frame, args.out)
    return 0


def _cmd_schema(args) -> int:
    print(json.dumps(CONFIG_SCHEMA, indent=2))
    return 0


def _cmd_replay(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    errors = replay_summary(config, args.csv)
    for i, e in enumerate(errors.per_target, start=1):
        print(f"E_{i} = {e:.17g}")
    print(f"combined = {errors.combined:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tracking-control',
        description='Pointwise tracking boundary control of 1D parabolic equations.'
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='log warnings only')
    commands = parser.add_subparsers(dest='command', required=True)

    track = commands.add_parser('track', help='run an experiment from a JSON configuration')
    track.add_argument('--config', required=True, help='path of the JSON configuration')
    track.add_argument('--out', help='output root (overrides the configuration)')
    track.add_argument('--plot', action='store_true', help='save PNG charts')
    track.set_defaults(handler=_cmd_track)

    example = commands.add_parser('example', help='run one of the four reference examples')
    example.add_argument('n', type=int, choices=(1, 2, 3, 4))
    example.add_argument('--eps', type=float, help='tracking tolerance')
    example.add_argument('--ne', type=int, help='number of elements')
    example.add_argument('--nt', type=int, help='number of time steps')
    example.add_argument('--out', help='output root')
    example.add_argument('--plot', action='store_true', help='save PNG charts')
    example.add_argument('--serial', action='store_true', help='run the two tolerances of example 1 one after the other')
    example.set_defaults(handler=_cmd_example)

    obstruction = commands.add_parser('obstruction', help='dual elements with vanishing observed flux')
    obstruction.add_argument('variant', choices=('one-control', 'two-controls'))
    obstruction.add_argument('--levels', type=int, default=3, help='number of mesh refinements')
    obstruction.add_argument('--ne', type=int, default=20, help='elements on the coarsest mesh')
    obstruction.add_argument('--nt', type=int, default=100, help='number of time steps')
    obstruction.set_defaults(handler=_cmd_obstruction)

    diffeo = commands.add_parser('diffeo', help='straighten a moving observation point (CSV of the map coefficients)')
    diffeo.add_argument('--traj', required=True, help="trajectory, e.g. 'sine:0.5,0.15'")
    diffeo.add_argument('--k', type=float, help='fixed observation point (builds the double map)')
    diffeo.add_argument('--horizon', type=float, default=0.5, help='time horizon T')
    diffeo.add_argument('--steps', type=int, default=200, help='number of time intervals of the table')
    diffeo.add_argument('--out', help='CSV file (default: stdout)')
    diffeo.set_defaults(handler=_cmd_diffeo)

    flatness = commands.add_parser('flatness', help='series controls for polynomial targets (CSV)')
    flatness.add_argument('--w1', default='t**2', help='trace target at x1')
    flatness.add_argument('--w2', default='0', help='flux target at x1')
    flatness.add_argument('--x1', type=float, default=0.5, help='anchor point')
    flatness.add_argument('--horizon', type=float, default=1.0, help='time horizon T')
    flatness.add_argument('--steps', type=int, default=100, help='number of time intervals of the table')
    flatness.add_argument('--demo', action='store_true', help='also simulate the controls and tabulate the trace at x1')
    flatness.add_argument('--ne', type=int, default=40, help='number of elements of the --demo simulation')
    flatness.add_argument('--out', help='CSV file (default: stdout)')
    flatness.set_defaults(handler=_cmd_flatness)

    schema = commands.add_parser('schema', help='print the JSON schema of configurations')
    schema.set_defaults(handler=_cmd_schema)

    replay = commands.add_parser('replay', help='re-simulate the controls of a result CSV')
    replay.add_argument('--config', required=True)
    replay.add_argument('--csv', required=True)
    replay.set_defaults(handler=_cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    configure_logging(level)
    try:
        return args.handler(args)
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
