"""The four reference tracking experiments.

All of them use L = 1, N_e = 200 and Δt = 1e-3. The tracking errors
reported for them are kept in `REFERENCE_ERRORS` (one value per target).
"""
from __future__ import annotations
from .config import ExperimentConfig


EXAMPLES: dict[int, dict] = {
    # heat equation, one right control, sinusoidal target at the midpoint
    1: {
        'name': 'example1',
        'geometry': {'length': 1.0, 'horizon': 0.5},
        'discretization': {'elements': 200, 'dt': 1e-3},
        'coefficients': {'kind': 'constant', 'a': 1.0, 'b': 0.0, 'c': 0.0},
        'controls': ['right'],
        'observation': [{'kind': 'fixed', 'value': 0.5}],
        'targets': [{'kind': 'sinusoid', 'amplitude': 1.0, 'oscillations': 2}],
        'epsilon': 1e-1,
    },
    # heat equation, two controls, two ramps
    2: {
        'name': 'example2',
        'geometry': {'length': 1.0, 'horizon': 1.0},
        'discretization': {'elements': 200, 'dt': 1e-3},
        'coefficients': {'kind': 'constant', 'a': 1.0, 'b': 0.0, 'c': 0.0},
        'controls': ['left', 'right'],
        'observation': [{'kind': 'fixed', 'value': 0.25}, {'kind': 'fixed', 'value': 0.5}],
        'targets': [
            {'kind': 'ramp', 'rate': 1.0},
            {'kind': 'ramp', 'rate': 1.0, 'scale': 0.5},
        ],
        'epsilon': 1e-3,
    },
    # variable coefficients
    3: {
        'name': 'example3',
        'geometry': {'length': 1.0, 'horizon': 0.5},
        'discretization': {'elements': 200, 'dt': 1e-3},
        'coefficients': {'kind': 'example3'},
        'controls': ['right'],
        'observation': [{'kind': 'fixed', 'value': 0.75}],
        'targets': [{'kind': 'squared_sine', 'amplitude': 1.0}],
        'epsilon': 1e-3,
    },
    # moving observation point h(t) = 0.5 + 0.15 sin(πt/T)
    4: {
        'name': 'example4',
        'geometry': {'length': 1.0, 'horizon': 0.5},
        'discretization': {'elements': 200, 'dt': 1e-3},
        'coefficients': {'kind': 'constant', 'a': 1.0, 'b': 0.0, 'c': 0.0},
        'controls': ['right'],
        'observation': [{'kind': 'sine', 'center': 0.5, 'amplitude': 0.15}],
        'targets': [{'kind': 'gaussian', 'amplitude': 1.0}],
        'epsilon': 1e-3,
    },
}

EXAMPLE1_EPSILONS = (1e-1, 1e-2)

REFERENCE_ERRORS: dict[tuple[int, float], tuple[float, ...]] = {
    (1, 1e-1): (1.000108e-1,),
    (1, 1e-2): (1.000862e-2,),
    (2, 1e-3): (1.414322e-3, 3.270044e-4),
    (3, 1e-3): (9.481350e-4,),
    (4, 1e-3): (1.000641e-3,),
}


def example_config(n: int) -> ExperimentConfig:
    """Returns the configuration of reference experiment `n` (1 to 4)."""
    if n not in EXAMPLES:
        raise ValueError(f"unknown example {n}; choose from {sorted(EXAMPLES)}")
    return ExperimentConfig.from_dict(EXAMPLES[n])
