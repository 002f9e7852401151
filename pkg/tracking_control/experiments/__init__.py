from .config import (
    ExperimentConfig,
    GeometryConfig,
    DiscretizationConfig,
    CoefficientConfig,
    LocationConfig,
    TargetConfig,
    OptimizerConfig,
    OutputConfig,
    CONFIG_SCHEMA
)
from .builtin import EXAMPLES, REFERENCE_ERRORS, example_config
from .runner import (
    RunSummary,
    run_tracking,
    run_example,
    run_example1_sweep,
    replay_summary
)
from .obstruction import ObstructionReport, run_obstruction, obstruction_refinement
from .waveforms import WAVEFORMS, target_function, build_trajectory
