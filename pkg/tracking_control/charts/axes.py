from abc import ABC, abstractmethod
import numpy as np
from matplotlib.axes import Axes
from matplotlib.ticker import FormatStrFormatter


class Axis(ABC):

    def __init__(self, axes: Axes):
        self._axes = axes

    @property
    def axes(self) -> Axes:
        return self._axes

    @abstractmethod
    def add_title(self, title: str):
        pass

    @abstractmethod
    def scale(self, lower_limit: float, upper_limit: float, step: float | None = None):
        pass

    @abstractmethod
    def format_ticks(self, fmt: str = '%.2f'):
        pass


class XAxis(Axis):
    """Horizontal axis (time or space)."""

    def add_title(self, title: str):
        self._axes.set_xlabel(title)

    def scale(self, lower_limit: float, upper_limit: float, step: float | None = None):
        """Sets the axis limits; with `step`, also places ticks every `step`
        (upper limit included)."""
        if step is not None:
            self._axes.set_xticks(np.arange(lower_limit, upper_limit + 0.5 * step, step))
        self._axes.set_xlim(lower_limit, upper_limit)

    def format_ticks(self, fmt: str = '%.2f'):
        self._axes.xaxis.set_major_formatter(FormatStrFormatter(fmt))


class YAxis(Axis):
    """Primary vertical axis."""

    def add_title(self, title: str):
        self._axes.set_ylabel(title)

    def scale(self, lower_limit: float, upper_limit: float, step: float | None = None):
        if step is not None:
            self._axes.set_yticks(np.arange(lower_limit, upper_limit + 0.5 * step, step))
        self._axes.set_ylim(lower_limit, upper_limit)

    def format_ticks(self, fmt: str = '%.2f'):
        self._axes.yaxis.set_major_formatter(FormatStrFormatter(fmt))


class SecondaryYAxis(YAxis):
    """Vertical axis at the right of the chart sharing the horizontal axis,
    e.g. for a control signal drawn next to the tracked traces."""

    def __init__(self, axes: Axes):
        super().__init__(axes.twinx())
