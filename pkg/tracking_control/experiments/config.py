"""Experiment configuration: a JSON document parsed into frozen dataclasses.

Every section has `from_dict` / `to_dict`; parsing rejects unknown keys and
out-of-range values with a `ConfigError` naming the dotted field path.
"""
from __future__ import annotations
import json
import math
import os
from dataclasses import dataclass, field, replace, asdict
from pathlib import Path
from typing import Any
import numpy as np
from tracking_control.errors import ConfigError
from tracking_control.discretization import (
    Mesh, TimeGrid, CoefficientSet, build_mesh, build_time_grid
)
from tracking_control.solvers import ObservationSet
from tracking_control.duality import TrackingProblem, CONTROL_SIDES
from tracking_control.optimization import OptimOptions
from .waveforms import WAVEFORMS, target_function, build_trajectory, TRAJECTORY_PARAMETERS


OUTPUT_ENV = 'TRACKING_CONTROL_OUTPUT'
DEFAULT_OUTPUT = 'results'

EXAMPLE3_COEFFICIENTS = {
    'a': '1 + 0.15*cos(pi*x)',
    'b': '0.1*sin(pi*x)',
    'c': '0.3*(1 + t)',
}


def _schema_number(description: str, **extra) -> dict:
    return {'type': 'number', 'description': description, **extra}


CONFIG_SCHEMA: dict[str, Any] = {
    '$schema': 'https://json-schema.org/draft/2020-12/schema',
    'title': 'Pointwise tracking experiment',
    'type': 'object',
    'additionalProperties': False,
    'required': ['targets'],
    'properties': {
        'name': {'type': 'string'},
        'geometry': {
            'type': 'object', 'additionalProperties': False,
            'properties': {
                'length': _schema_number('domain length L', exclusiveMinimum=0, default=1.0),
                'horizon': _schema_number('time horizon T', exclusiveMinimum=0, default=0.5),
            },
        },
        'discretization': {
            'type': 'object', 'additionalProperties': False,
            'properties': {
                'elements': {'type': 'integer', 'minimum': 2, 'default': 200},
                'steps': {'type': 'integer', 'minimum': 1},
                'dt': _schema_number('time step (ignored when steps is given)', exclusiveMinimum=0, default=1e-3),
            },
        },
        'coefficients': {
            'type': 'object', 'additionalProperties': False,
            'properties': {
                'kind': {'enum': ['constant', 'example3', 'expression'], 'default': 'constant'},
                'a': {'type': ['number', 'string'], 'default': 1.0},
                'b': {'type': ['number', 'string'], 'default': 0.0},
                'c': {'type': ['number', 'string'], 'default': 0.0},
            },
        },
        'controls': {
            'type': 'array', 'items': {'enum': list(CONTROL_SIDES)},
            'minItems': 1, 'uniqueItems': True, 'default': ['right'],
        },
        'observation': {
            'type': 'array', 'minItems': 1, 'maxItems': 2,
            'items': {
                'oneOf': [
                    {'type': 'number'},
                    {
                        'type': 'object', 'additionalProperties': False,
                        'properties': {
                            'kind': {'enum': ['fixed', 'sine', 'constant', 'expression']},
                            'value': {'type': 'number'},
                            'center': {'type': 'number'},
                            'amplitude': {'type': 'number'},
                            'expression': {'type': 'string'},
                        },
                    },
                ],
            },
        },
        'targets': {
            'type': 'array', 'minItems': 1, 'maxItems': 2,
            'items': {
                'type': 'object', 'required': ['kind'],
                'properties': {'kind': {'enum': sorted(WAVEFORMS)}},
            },
        },
        'epsilon': _schema_number('tracking tolerance', exclusiveMinimum=0, default=1e-3),
        'delta': _schema_number('smoothing of the norm term', minimum=0, default=1e-14),
        'optimizer': {
            'type': 'object', 'additionalProperties': False,
            'properties': {
                'method': {'enum': ['lbfgs', 'bfgs'], 'default': 'lbfgs'},
                'max_iterations': {'type': 'integer', 'minimum': 1, 'default': 500},
                'gradient_tolerance': _schema_number('relative gradient tolerance', exclusiveMinimum=0, default=1e-9),
                'objective_tolerance': _schema_number('relative decrease tolerance', exclusiveMinimum=0, default=1e-12),
                'memory': {'type': 'integer', 'minimum': 1, 'default': 20},
                'c1': _schema_number('sufficient decrease constant', default=1e-4),
                'c2': _schema_number('curvature constant', default=0.9),
            },
        },
        'output': {
            'type': 'object', 'additionalProperties': False,
            'properties': {
                'directory': {'type': 'string'},
                'write_fields': {'type': 'boolean', 'default': False},
                'plot': {'type': 'boolean', 'default': False},
            },
        },
    },
}


def _schema_keys(section: str) -> set[str]:
    """Keys accepted in `section`; the validators below take them from the
    schema."""
    return set(CONFIG_SCHEMA['properties'][section]['properties'])


def _schema_enum(section: str, key: str) -> list[str]:
    return list(CONFIG_SCHEMA['properties'][section]['properties'][key]['enum'])


_LOCATION_SCHEMA = CONFIG_SCHEMA['properties']['observation']['items']['oneOf'][1]


def _check_keys(data: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(path, f"unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    return data


def _number(data: dict, key: str, path: str, default=None, positive=False, nonnegative=False) -> float | None:
    value = data.get(key, default)
    where = f"{path}.{key}" if path else key
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    if positive and not value > 0:
        raise ConfigError(where, f"must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(where, f"must be nonnegative, got {value}")
    return value


def _integer(data: dict, key: str, path: str, default=None, minimum: int = 1) -> int | None:
    value = data.get(key, default)
    where = f"{path}.{key}"
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(where, f"must be at least {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class GeometryConfig:
    length: float = 1.0
    horizon: float = 0.5

    @classmethod
    def from_dict(cls, data: dict, path: str = 'geometry') -> GeometryConfig:
        _check_keys(data, _schema_keys('geometry'), path)
        return cls(
            _number(data, 'length', path, 1.0, positive=True),
            _number(data, 'horizon', path, 0.5, positive=True)
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DiscretizationConfig:
    """`steps` wins over `dt` when both are given."""
    elements: int = 200
    steps: int | None = None
    dt: float | None = 1e-3

    @classmethod
    def from_dict(cls, data: dict, path: str = 'discretization') -> DiscretizationConfig:
        _check_keys(data, _schema_keys('discretization'), path)
        config = cls(
            _integer(data, 'elements', path, 200, minimum=2),
            _integer(data, 'steps', path, None, minimum=1),
            _number(data, 'dt', path, 1e-3 if 'steps' not in data else None, positive=True)
        )
        if config.steps is None and config.dt is None:
            raise ConfigError(path, "either steps or dt must be given")
        return config

    def step_count(self, horizon: float) -> int:
        if self.steps is not None:
            return self.steps
        return max(1, int(round(horizon / self.dt)))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class CoefficientConfig:
    """kind 'constant' (numbers a, b, c), 'example3' (the variable
    coefficients of the third builtin example) or 'expression' (formulas in
    t and x)."""
    kind: str = 'constant'
    a: float | str = 1.0
    b: float | str = 0.0
    c: float | str = 0.0

    @classmethod
    def from_dict(cls, data: dict, path: str = 'coefficients') -> CoefficientConfig:
        _check_keys(data, _schema_keys('coefficients'), path)
        kind = data.get('kind', 'constant')
        if kind == 'constant':
            a = _number(data, 'a', path, 1.0, positive=True)
            return cls(kind, a, _number(data, 'b', path, 0.0), _number(data, 'c', path, 0.0))
        if kind == 'example3':
            if set(data) - {'kind'}:
                raise ConfigError(path, "the example3 coefficients take no parameters")
            return cls(kind, EXAMPLE3_COEFFICIENTS['a'], EXAMPLE3_COEFFICIENTS['b'], EXAMPLE3_COEFFICIENTS['c'])
        if kind == 'expression':
            values = {}
            for key, default in (('a', '1'), ('b', '0'), ('c', '0')):
                value = data.get(key, default)
                if not isinstance(value, (str, int, float)) or isinstance(value, bool):
                    raise ConfigError(f"{path}.{key}", f"expected a formula or a number, got {value!r}")
                values[key] = value
            return cls(kind, **values)
        raise ConfigError(f"{path}.kind", f"unknown coefficient kind {kind!r}; choose from {_schema_enum('coefficients', 'kind')}")

    def build(self, length: float, timegrid: TimeGrid, path: str = 'coefficients') -> CoefficientSet:
        try:
            return CoefficientSet.from_expressions(
                self.a, self.b, self.c, length=length, times=timegrid.times
            )
        except (ValueError, TypeError, SyntaxError) as exc:
            raise ConfigError(path, str(exc)) from None

    def to_dict(self) -> dict:
        if self.kind == 'example3':
            return {'kind': 'example3'}
        return asdict(self)


@dataclass(frozen=True)
class LocationConfig:
    """An observation location: kind 'fixed' (`value`) or a trajectory kind
    ('sine', 'constant', 'expression') with its parameters."""
    kind: str = 'fixed'
    params: dict[str, Any] = field(default_factory=dict, hash=False)

    @classmethod
    def from_dict(cls, data: Any, path: str) -> LocationConfig:
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            data = {'kind': 'fixed', 'value': data}
        data = _check_keys(data, set(_LOCATION_SCHEMA['properties']), path)
        kind = data.get('kind', 'fixed')
        params = {k: v for k, v in data.items() if k != 'kind'}
        if kind == 'fixed':
            _check_keys(params, {'value'}, path)
            if 'value' not in params:
                raise ConfigError(f"{path}.value", "a fixed location needs a value")
            _number(params, 'value', path, positive=True)
        elif kind in TRAJECTORY_PARAMETERS:
            _check_keys(params, TRAJECTORY_PARAMETERS[kind], path)
        else:
            raise ConfigError(f"{path}.kind", f"unknown location kind {kind!r}")
        return cls(kind, params)

    def build(self, horizon: float, path: str):
        if self.kind == 'fixed':
            return float(self.params['value'])
        try:
            return build_trajectory(self.kind, self.params, horizon)
        except (ValueError, TypeError) as exc:
            raise ConfigError(path, str(exc)) from None

    def to_dict(self) -> dict:
        return {'kind': self.kind, **self.params}


@dataclass(frozen=True)
class TargetConfig:
    """A named target waveform (see `waveforms.WAVEFORMS`) and its
    parameters."""
    kind: str
    params: dict[str, Any] = field(default_factory=dict, hash=False)

    @classmethod
    def from_dict(cls, data: Any, path: str) -> TargetConfig:
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        if 'kind' not in data:
            raise ConfigError(f"{path}.kind", "missing target kind")
        if data['kind'] not in WAVEFORMS:
            raise ConfigError(f"{path}.kind", f"unknown target kind {data['kind']!r}; choose from {sorted(WAVEFORMS)}")
        return cls(data['kind'], {k: v for k, v in data.items() if k != 'kind'})

    def build(self, horizon: float, path: str):
        try:
            return target_function(self.kind, self.params, horizon)
        except (ValueError, TypeError) as exc:
            raise ConfigError(path, str(exc)) from None

    def to_dict(self) -> dict:
        return {'kind': self.kind, **self.params}


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = 'lbfgs'
    max_iterations: int = 500
    gradient_tolerance: float = 1e-9
    objective_tolerance: float = 1e-12
    memory: int = 20
    c1: float = 1e-4
    c2: float = 0.9

    @classmethod
    def from_dict(cls, data: dict, path: str = 'optimizer') -> OptimizerConfig:
        defaults = cls()
        _check_keys(data, _schema_keys('optimizer'), path)
        method = data.get('method', defaults.method)
        if method not in _schema_enum('optimizer', 'method'):
            raise ConfigError(f"{path}.method", f"expected one of {_schema_enum('optimizer', 'method')}, got {method!r}")
        config = cls(
            method=method,
            max_iterations=_integer(data, 'max_iterations', path, defaults.max_iterations),
            gradient_tolerance=_number(data, 'gradient_tolerance', path, defaults.gradient_tolerance, positive=True),
            objective_tolerance=_number(data, 'objective_tolerance', path, defaults.objective_tolerance, positive=True),
            memory=_integer(data, 'memory', path, defaults.memory),
            c1=_number(data, 'c1', path, defaults.c1, positive=True),
            c2=_number(data, 'c2', path, defaults.c2, positive=True)
        )
        try:
            config.options()
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
        return config

    def options(self) -> OptimOptions:
        return OptimOptions(
            max_iterations=self.max_iterations,
            gradient_tolerance=self.gradient_tolerance,
            objective_tolerance=self.objective_tolerance,
            c1=self.c1,
            c2=self.c2,
            memory=self.memory,
            method=self.method
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OutputConfig:
    """`directory` None means: the environment variable
    TRACKING_CONTROL_OUTPUT, else './results'."""
    directory: str | None = None
    write_fields: bool = False
    plot: bool = False

    @classmethod
    def from_dict(cls, data: dict, path: str = 'output') -> OutputConfig:
        _check_keys(data, _schema_keys('output'), path)
        directory = data.get('directory')
        if directory is not None and not isinstance(directory, str):
            raise ConfigError(f"{path}.directory", "expected a path string")
        for key in ('write_fields', 'plot'):
            if not isinstance(data.get(key, False), bool):
                raise ConfigError(f"{path}.{key}", "expected true or false")
        return cls(directory, data.get('write_fields', False), data.get('plot', False))

    def root(self) -> Path:
        return Path(self.directory or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete tracking experiment."""
    name: str = 'experiment'
    geometry: GeometryConfig = GeometryConfig()
    discretization: DiscretizationConfig = DiscretizationConfig()
    coefficients: CoefficientConfig = CoefficientConfig()
    controls: tuple[str, ...] = ('right',)
    observation: tuple[LocationConfig, ...] = (LocationConfig('fixed', {'value': 0.5}),)
    targets: tuple[TargetConfig, ...] = (TargetConfig('constant', {'value': 0.0}),)
    epsilon: float = 1e-3
    delta: float = 1e-14
    optimizer: OptimizerConfig = OptimizerConfig()
    output: OutputConfig = OutputConfig()

    KEYS = set(CONFIG_SCHEMA['properties'])

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        _check_keys(data, cls.KEYS, '')
        name = data.get('name', 'experiment')
        if not isinstance(name, str) or not name:
            raise ConfigError('name', "expected a non-empty string")
        controls = data.get('controls', ['right'])
        if (
            not isinstance(controls, list) or not controls
            or any(c not in CONTROL_SIDES for c in controls) or len(set(controls)) != len(controls)
        ):
            raise ConfigError('controls', f"expected a non-empty list of distinct sides from {list(CONTROL_SIDES)}")
        observation = data.get('observation', [0.5])
        targets = data.get('targets')
        if not isinstance(observation, list) or not 1 <= len(observation) <= 2:
            raise ConfigError('observation', "expected a list of one or two locations")
        if not isinstance(targets, list):
            raise ConfigError('targets', "expected a list with one target per observation location")
        if len(targets) != len(observation):
            raise ConfigError('targets', f"{len(observation)} target(s) expected, got {len(targets)}")
        epsilon = _number(data, 'epsilon', '', 1e-3, positive=True)
        delta = _number(data, 'delta', '', 1e-14, nonnegative=True)
        return cls(
            name=name,
            geometry=GeometryConfig.from_dict(data.get('geometry', {})),
            discretization=DiscretizationConfig.from_dict(data.get('discretization', {})),
            coefficients=CoefficientConfig.from_dict(data.get('coefficients', {})),
            controls=tuple(s for s in CONTROL_SIDES if s in controls),
            observation=tuple(LocationConfig.from_dict(o, f"observation[{i}]") for i, o in enumerate(observation)),
            targets=tuple(TargetConfig.from_dict(t, f"targets[{i}]") for i, t in enumerate(targets)),
            epsilon=epsilon,
            delta=delta,
            optimizer=OptimizerConfig.from_dict(data.get('optimizer', {})),
            output=OutputConfig.from_dict(data.get('output', {}))
        )

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError('config', f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError('config', f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'geometry': self.geometry.to_dict(),
            'discretization': self.discretization.to_dict(),
            'coefficients': self.coefficients.to_dict(),
            'controls': list(self.controls),
            'observation': [o.to_dict() for o in self.observation],
            'targets': [t.to_dict() for t in self.targets],
            'epsilon': self.epsilon,
            'delta': self.delta,
            'optimizer': self.optimizer.to_dict(),
            'output': self.output.to_dict(),
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def with_overrides(
        self,
        epsilon: float | None = None,
        elements: int | None = None,
        steps: int | None = None,
        directory: str | None = None,
        plot: bool | None = None
    ) -> ExperimentConfig:
        """Returns a copy with the command-line overrides applied."""
        config = self
        if epsilon is not None:
            if not epsilon > 0:
                raise ConfigError('epsilon', f"must be positive, got {epsilon}")
            config = replace(config, epsilon=float(epsilon))
        if elements is not None:
            if elements < 2:
                raise ConfigError('discretization.elements', f"must be at least 2, got {elements}")
            config = replace(config, discretization=replace(config.discretization, elements=int(elements)))
        if steps is not None:
            if steps < 1:
                raise ConfigError('discretization.steps', f"must be at least 1, got {steps}")
            config = replace(config, discretization=replace(config.discretization, steps=int(steps)))
        if directory is not None:
            config = replace(config, output=replace(config.output, directory=directory))
        if plot is not None:
            config = replace(config, output=replace(config.output, plot=plot))
        return config

    # Building the numerical objects

    def mesh(self) -> Mesh:
        return build_mesh(self.geometry.length, self.discretization.elements)

    def timegrid(self) -> TimeGrid:
        horizon = self.geometry.horizon
        return build_time_grid(horizon, self.discretization.step_count(horizon))

    def build_problem(self) -> TrackingProblem:
        """Creates the `TrackingProblem`; inconsistent settings (points
        outside the domain, violated ellipticity, ...) raise `ConfigError`."""
        mesh = self.mesh()
        timegrid = self.timegrid()
        coeffs = self.coefficients.build(mesh.length, timegrid)
        horizon = self.geometry.horizon
        locations = tuple(o.build(horizon, f"observation[{i}]") for i, o in enumerate(self.observation))
        targets = np.stack([
            timegrid.sample(t.build(horizon, f"targets[{i}]")) for i, t in enumerate(self.targets)
        ])
        try:
            observations = ObservationSet(locations)
            observations.validate(mesh, timegrid)
        except ValueError as exc:
            raise ConfigError('observation', str(exc)) from None
        try:
            coeffs.validate(mesh, timegrid)
        except ValueError as exc:
            raise ConfigError('coefficients', str(exc)) from None
        return TrackingProblem(
            mesh, timegrid, coeffs, observations, targets,
            self.controls, self.epsilon, self.delta, validate_coefficients=False
        )
