"""Result files of a tracking run.

The time-series CSV has the columns

    t, target_1..N, trace_1..N, control_left (if controlled), control_right (if controlled)

with one row per solve time, written with 17 significant digits so that the
controls read back are bit-identical to the ones computed.
"""
from __future__ import annotations
import json
from pathlib import Path
from typing import Any
import numpy as np
import pandas as pd
from tracking_control.discretization import TimeGrid
from tracking_control.solvers import BoundaryControls


FLOAT_FORMAT = '%.17g'


def series_frame(
    timegrid: TimeGrid,
    targets: np.ndarray,
    traces: np.ndarray,
    controls: BoundaryControls
) -> pd.DataFrame:
    """Collects targets, traces and controls on the solve times in a
    `DataFrame`."""
    data: dict[str, np.ndarray] = {'t': timegrid.solve_times}
    for i, w in enumerate(np.atleast_2d(targets), start=1):
        data[f'target_{i}'] = w
    for i, y in enumerate(np.atleast_2d(traces), start=1):
        data[f'trace_{i}'] = y
    for side in controls.sides:
        data[f'control_{side}'] = getattr(controls, side)
    return pd.DataFrame(data)


def write_series(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_series(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no result file at {path}")
    frame = pd.read_csv(path, float_precision='round_trip')
    if 't' not in frame.columns:
        raise ValueError(f"{path} is not a tracking result file (no column 't')")
    return frame


def read_controls(path: str | Path, timegrid: TimeGrid | None = None) -> BoundaryControls:
    """Reads the control columns of a time-series CSV back into
    `BoundaryControls`; with `timegrid`, the time column is checked against
    its solve times."""
    frame = read_series(path)
    if timegrid is not None:
        t = frame['t'].to_numpy()
        if len(t) != timegrid.step_count or not np.allclose(t, timegrid.solve_times, rtol=0, atol=1e-12):
            raise ValueError(
                f"time column of {path} does not match the time grid "
                f"({len(t)} rows, {timegrid.step_count} solve times)"
            )
    columns = {side: f'control_{side}' for side in ('left', 'right')}
    present = {side: frame[col].to_numpy() for side, col in columns.items() if col in frame.columns}
    if not present:
        raise ValueError(f"{path} holds no control columns")
    return BoundaryControls(present.get('left'), present.get('right'))


def write_summary(summary: dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, default=_json_default))
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
