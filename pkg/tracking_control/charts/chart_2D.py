from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from .axes import XAxis, YAxis, SecondaryYAxis


@dataclass
class Legend:
    y1: YAxis
    y2: SecondaryYAxis | None = None
    anchor: str = 'upper center'
    position: tuple[float, float] = (0.5, -0.12)
    columns: int = 2

    def draw(self):
        handles, labels = self.y1.axes.get_legend_handles_labels()
        if self.y2 is not None:
            h2, l2 = self.y2.axes.get_legend_handles_labels()
            handles.extend(h2)
            labels.extend(l2)
        self.y1.axes.legend(
            handles, labels,
            loc=self.anchor, ncol=self.columns, bbox_to_anchor=self.position
        )


class Chart(ABC):

    def __init__(
        self,
        size: tuple[float, float] | None = None,
        dpi: int | None = None,
        constructs: tuple[Figure, Axes] | None = None
    ):
        if constructs is not None:
            self.figure, self.axes = constructs
        else:
            self.figure, self.axes = plt.subplots(figsize=size, dpi=dpi, layout='constrained')
        self.x: XAxis = XAxis(self.axes)
        self.y1: YAxis = YAxis(self.axes)
        self.y2: SecondaryYAxis | None = None
        self.legend: Legend | None = None

    def add_y2_axis(self):
        """Add a secondary y-axis at the right of the chart."""
        self.y2 = SecondaryYAxis(self.axes)

    def add_legend(
        self,
        anchor: str = 'upper center',
        position: tuple[float, float] = (0.5, -0.12),
        columns: int = 2
    ):
        """Add legend to chart.

        Parameters
        ----------
        anchor:
            Reference point on the border of the legend (a matplotlib `loc`
            string such as 'upper center').
        position:
            Coordinates of the anchor with respect to the origin of the axes.
            By default, the legend sits centered under the x-axis.
        columns:
            Number of label columns.
        """
        self.legend = Legend(self.y1, self.y2, anchor, position, columns)

    def add_title(self, title: str):
        self.axes.set_title(title)

    @abstractmethod
    def _draw_data(self):
        pass

    def draw(self, with_grid: bool = True):
        """Only draw the chart (but don't show it)."""
        self._draw_data()
        if self.legend:
            self.legend.draw()
        self.axes.grid(with_grid)

    def show(self, with_grid: bool = True):
        self.draw(with_grid)
        plt.show()

    def save(
        self,
        name: str,
        location: str | Path | None = None,
        fmt: str = 'png',
        with_grid: bool = True
    ) -> Path:
        """Draw and save the chart on disk; returns the file path."""
        self.draw(with_grid)
        path = Path(location or Path.cwd()) / f'{name}.{fmt}'
        self.figure.savefig(path, bbox_inches='tight')
        plt.close(self.figure)
        return path


class LineChart(Chart):
    """Curves sharing the horizontal axis, optionally some of them on a
    secondary y-axis."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.datasets: dict[str, dict[str, Any]] = {}

    def add_xy_data(
        self,
        label: str,
        x_values: Iterable | np.ndarray,
        y_values: Iterable | np.ndarray,
        secondary: bool = False,
        style_props: dict[str, Any] | None = None
    ):
        """
        Add a curve to the chart.

        `style_props` can be a dictionary with values for properties that style
        the plot (e.g. {'linestyle': '--'}). With `secondary=True` the curve is
        drawn against the secondary y-axis (created if needed).
        """
        if secondary and self.y2 is None:
            self.add_y2_axis()
        self.datasets[label] = {
            'x_values': x_values,
            'y_values': y_values,
            'secondary': secondary,
            'style_props': style_props or {}
        }

    def _draw_data(self):
        for label, dataset in self.datasets.items():
            axis = self.y2 if dataset['secondary'] else self.y1
            axis.axes.plot(
                dataset['x_values'],
                dataset['y_values'],
                label=label,
                **dataset['style_props']
            )


class SpaceTimeChart(Chart):
    """Color map of a field over the (x, t) plane."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._field: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.colormap = 'viridis'
        self.colorbar_title = ''

    def set_field(self, x: np.ndarray, t: np.ndarray, values: np.ndarray, colorbar_title: str = ''):
        """`values` has one row per time in `t` and one column per node in `x`."""
        values = np.asarray(values)
        if values.shape != (len(t), len(x)):
            raise ValueError(f"field values must have shape {(len(t), len(x))}, got {values.shape}")
        self._field = (np.asarray(x), np.asarray(t), values)
        self.colorbar_title = colorbar_title

    def _draw_data(self):
        if self._field is None:
            return
        x, t, values = self._field
        image = self.axes.pcolormesh(x, t, values, shading='auto', cmap=self.colormap)
        colorbar = self.figure.colorbar(image, ax=self.axes)
        colorbar.set_label(self.colorbar_title)
