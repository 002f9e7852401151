from .series import (
    SeriesTarget,
    SeriesSolution,
    SeriesControls,
    build_series,
    series_controls,
    controls_frame
)
