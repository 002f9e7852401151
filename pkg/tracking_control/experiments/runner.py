"""The tracking pipeline: configuration -> dual minimization -> controls ->
forward simulation -> errors and result files."""
from __future__ import annotations
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any
import numpy as np
from tracking_control.solvers import BoundaryControls
from tracking_control.duality import (
    TrackingProblem,
    DualObjective,
    recover_controls,
    tracking_error,
    TrackingErrors
)
from tracking_control.optimization import minimize, OptimReport
from .config import ExperimentConfig
from .builtin import example_config, EXAMPLE1_EPSILONS
from .output import series_frame, write_series, write_summary, read_controls


logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    """Outcome of a tracking run.

    `errors` holds E_i = ||y(., x_i) - w_i|| per target and `combined` their
    Euclidean combination; `history` is the objective J per optimizer
    iteration.
    """
    name: str
    epsilon: float
    errors: list[float]
    combined: float
    objective: float
    history: list[float]
    iterations: int
    reason: str
    wall_time: float
    config: dict[str, Any]
    artifacts: dict[str, str] = field(default_factory=dict)
    adjoint_solves: int = 0

    @property
    def converged(self) -> bool:
        return self.reason in ('gradient tolerance', 'objective stalled')

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'epsilon': self.epsilon,
            'errors': list(self.errors),
            'combined': self.combined,
            'objective': self.objective,
            'history': list(self.history),
            'iterations': self.iterations,
            'reason': self.reason,
            'converged': self.converged,
            'wall_time': self.wall_time,
            'adjoint_solves': self.adjoint_solves,
            'config': self.config,
            'artifacts': dict(self.artifacts),
        }


def solve_tracking(problem: TrackingProblem, config: ExperimentConfig) -> tuple[BoundaryControls, OptimReport, DualObjective]:
    """Minimizes the dual functional of `problem` from f = 0 and returns the
    recovered controls with the optimizer report."""
    objective = DualObjective(problem)
    x0 = np.zeros(problem.dimension)
    x, report = minimize(objective.value, objective.gradient, x0, config.optimizer.options())
    if not report.converged:
        logger.warning("%s: optimizer stopped early (%s)", config.name, report.reason)
    controls = recover_controls(problem, x)
    return controls, report, objective


def _write_artifacts(
    config: ExperimentConfig,
    problem: TrackingProblem,
    controls: BoundaryControls,
    errors: TrackingErrors,
    directory: Path
) -> dict[str, str]:
    artifacts: dict[str, str] = {}
    frame = series_frame(problem.timegrid, problem.targets, errors.traces, controls)
    artifacts['series'] = str(write_series(frame, directory / 'series.csv'))
    config.to_json(directory / 'config.json')
    artifacts['config'] = str(directory / 'config.json')
    if config.output.write_fields:
        artifacts['state'] = str(errors.state.to_csv(directory / 'state.csv'))
    if config.output.plot:
        artifacts.update(plot_results(problem, controls, errors, directory))
    return artifacts


def plot_results(
    problem: TrackingProblem,
    controls: BoundaryControls,
    errors: TrackingErrors,
    directory: Path
) -> dict[str, str]:
    """Saves the traces-versus-targets chart and the space-time map of the
    state as PNG files."""
    from tracking_control.charts import LineChart, SpaceTimeChart

    t = problem.timegrid.solve_times
    chart = LineChart(size=(8, 5))
    for i in range(problem.target_count):
        chart.add_xy_data(f'target {i + 1}', t, problem.targets[i], style_props={'linestyle': '--'})
        chart.add_xy_data(f'trace {i + 1}', t, errors.traces[i])
    for side in controls.sides:
        chart.add_xy_data(f'control {side}', t, getattr(controls, side), secondary=True, style_props={'alpha': 0.6})
    chart.x.add_title('t')
    chart.x.scale(0.0, problem.timegrid.horizon)
    chart.y1.add_title('y(t, x_i)')
    if chart.y2 is not None:
        chart.y2.add_title('control')
    chart.add_legend(columns=3)
    traces_path = chart.save('traces', directory)

    field_chart = SpaceTimeChart(size=(7, 5))
    state = errors.state
    field_chart.set_field(state.mesh.nodes, state.timegrid.times, state.values, colorbar_title='y')
    field_chart.x.add_title('x')
    field_chart.x.scale(0.0, state.mesh.length)
    field_chart.y1.add_title('t')
    field_chart.y1.scale(0.0, state.timegrid.horizon)
    field_chart.y1.format_ticks('%.3g')
    state_path = field_chart.save('state', directory, with_grid=False)
    return {'traces_plot': str(traces_path), 'state_plot': str(state_path)}


def run_tracking(config: ExperimentConfig, write: bool = True) -> RunSummary:
    """Runs the tracking experiment described by `config`.

    The result files (time series CSV, config echo, optional state CSV and
    charts, JSON summary) go to `<output root>/<config.name>/` when `write`
    is True.
    """
    start = time.perf_counter()
    problem = config.build_problem()
    logger.info(
        "%s: %d unknowns, N_e = %d, N_t = %d, epsilon = %g",
        config.name, problem.dimension, problem.mesh.element_count,
        problem.timegrid.step_count, problem.epsilon
    )
    controls, report, objective = solve_tracking(problem, config)
    errors = tracking_error(problem, controls)
    summary = RunSummary(
        name=config.name,
        epsilon=config.epsilon,
        errors=[float(e) for e in errors.per_target],
        combined=errors.combined,
        objective=report.objective,
        history=list(report.history),
        iterations=report.iterations,
        reason=report.reason,
        wall_time=0.0,
        config=config.to_dict(),
        adjoint_solves=objective.adjoint_solves
    )
    if write:
        directory = config.output.root() / config.name
        summary.artifacts = _write_artifacts(config, problem, controls, errors, directory)
        summary.artifacts['summary'] = str(directory / 'summary.json')
    summary.wall_time = time.perf_counter() - start
    if write:
        write_summary(summary.to_dict(), summary.artifacts['summary'])
    logger.info(
        "%s: E = %s (combined %.6e) after %d iterations, %.1f s",
        config.name, ', '.join(f'{e:.6e}' for e in summary.errors),
        summary.combined, summary.iterations, summary.wall_time
    )
    return summary


def example_run_config(
    n: int,
    epsilon: float | None = None,
    elements: int | None = None,
    steps: int | None = None,
    directory: str | None = None,
    plot: bool | None = None
) -> ExperimentConfig:
    """Configuration of reference example `n` with the given overrides. The
    runs of example 1 are named after their ε so that both can share an
    output root."""
    config = example_config(n).with_overrides(epsilon, elements, steps, directory, plot)
    if n == 1:
        config = replace(config, name=f"example1_eps{config.epsilon:g}")
    return config


def run_example(
    n: int,
    epsilon: float | None = None,
    elements: int | None = None,
    steps: int | None = None,
    directory: str | None = None,
    plot: bool | None = None,
    write: bool = True
) -> RunSummary:
    """Runs reference example `n` (1 to 4)."""
    return run_tracking(example_run_config(n, epsilon, elements, steps, directory, plot), write)


def _run_config(config: ExperimentConfig) -> RunSummary:
    return run_tracking(config)


def run_example1_sweep(
    elements: int | None = None,
    steps: int | None = None,
    directory: str | None = None,
    plot: bool | None = None,
    parallel: bool = True
) -> list[RunSummary]:
    """Runs example 1 for both of its tolerances, in separate processes when
    `parallel` is True."""
    configs = [example_run_config(1, eps, elements, steps, directory, plot) for eps in EXAMPLE1_EPSILONS]
    if not parallel:
        return [_run_config(c) for c in configs]
    with ProcessPoolExecutor(max_workers=len(configs)) as executor:
        return list(executor.map(_run_config, configs))


def replay_summary(config: ExperimentConfig, csv_path: str | Path) -> TrackingErrors:
    """Re-simulates the controls stored in a time-series CSV and returns the
    tracking errors they achieve for `config`."""
    problem = config.build_problem()
    controls = read_controls(csv_path, problem.timegrid)
    missing = set(problem.sides) - set(controls.sides)
    if missing:
        raise ValueError(f"{csv_path} lacks the control column(s) for {sorted(missing)}")
    return tracking_error(problem, controls)
