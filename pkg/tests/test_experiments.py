import io
import json
import numpy as np
import pandas as pd
import pytest
from tracking_control.errors import ConfigError, NumericalError
from tracking_control.experiments import (
    ExperimentConfig,
    OutputConfig,
    CONFIG_SCHEMA,
    EXAMPLES,
    REFERENCE_ERRORS,
    example_config,
    run_tracking,
    run_example,
    replay_summary,
    run_obstruction,
    obstruction_refinement,
    target_function,
    build_trajectory
)
from tracking_control.experiments import cli
from tracking_control.experiments.config import (
    OUTPUT_ENV,
    GeometryConfig,
    DiscretizationConfig,
    CoefficientConfig,
    OptimizerConfig
)
from tracking_control.experiments.waveforms import WAVEFORMS, TRAJECTORY_PARAMETERS
from tracking_control.duality import CONTROL_SIDES
from tracking_control.experiments.output import read_series


SMALL = {
    'name': 'small',
    'geometry': {'length': 1.0, 'horizon': 0.5},
    'discretization': {'elements': 20, 'steps': 20},
    'coefficients': {'kind': 'constant', 'a': 1.0},
    'controls': ['right'],
    'observation': [0.5],
    'targets': [{'kind': 'sinusoid', 'amplitude': 1.0, 'oscillations': 1}],
    'epsilon': 0.1,
}


def _small(**changes):
    data = json.loads(json.dumps(SMALL))
    data.update(changes)
    return data


class TestConfig:

    @pytest.mark.parametrize('n', sorted(EXAMPLES))
    def test_round_trip(self, n):
        config = example_config(n)
        again = ExperimentConfig.from_dict(json.loads(config.to_json()))
        assert again.to_dict() == config.to_dict()

    def test_defaults(self):
        config = ExperimentConfig.from_dict(_small())
        assert config.delta == 1e-14
        assert config.optimizer.options().method == 'lbfgs'
        assert config.timegrid().step_count == 20
        assert config.observation[0].kind == 'fixed'

    def test_dt_gives_step_count(self):
        config = example_config(1)
        assert config.timegrid().step_count == 500
        assert config.mesh().element_count == 200

    @pytest.mark.parametrize('data, field', [
        (_small(geometry={'lenght': 1.0}), 'geometry'),
        (_small(discretization={'elements': 1, 'steps': 20}), 'discretization.elements'),
        (_small(epsilon=0.0), 'epsilon'),
        (_small(controls=['top']), 'controls'),
        (_small(targets=[]), 'targets'),
        (_small(targets=[{'kind': 'square'}]), 'targets[0].kind'),
        (_small(observation=[{'kind': 'orbit'}]), 'observation[0].kind'),
        (_small(coefficients={'kind': 'tabulated'}), 'coefficients.kind'),
        (_small(optimizer={'method': 'newton'}), 'optimizer.method'),
        (_small(output={'plot': 'yes'}), 'output.plot'),
        (_small(colour='red'), ''),
    ])
    def test_errors_name_the_field(self, data, field):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(data)
        assert info.value.field == field

    def test_inconsistent_settings_surface_at_build(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(_small(observation=[1.5])).build_problem()
        assert info.value.field == 'observation'
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(_small(coefficients={'kind': 'expression', 'a': '0.5 - x'})).build_problem()
        assert info.value.field == 'coefficients'

    def test_json_file(self, tmp_path):
        path = tmp_path / 'small.json'
        path.write_text(json.dumps(SMALL))
        assert ExperimentConfig.from_json(path).name == 'small'
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(tmp_path / 'missing.json')
        (tmp_path / 'broken.json').write_text('{"name": ')
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(tmp_path / 'broken.json')

    def test_overrides(self):
        config = example_config(1).with_overrides(epsilon=1e-2, elements=40, steps=50, directory='out', plot=True)
        assert config.epsilon == 1e-2
        assert config.mesh().element_count == 40
        assert config.timegrid().step_count == 50
        assert config.output.directory == 'out'
        assert config.output.plot
        with pytest.raises(ConfigError):
            config.with_overrides(elements=1)

    def test_output_root(self, monkeypatch, tmp_path):
        monkeypatch.delenv(OUTPUT_ENV, raising=False)
        assert str(OutputConfig().root()) == 'results'
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
        assert OutputConfig().root() == tmp_path
        assert str(OutputConfig(directory='elsewhere').root()) == 'elsewhere'

    def test_example3_problem(self):
        problem = example_config(3).with_overrides(elements=20, steps=10).build_problem()
        assert problem.coeffs.time_dependent
        assert problem.observations.locations == (0.75,)

    def test_example4_problem(self):
        problem = example_config(4).with_overrides(elements=20, steps=10).build_problem()
        assert problem.observations.is_moving

    def test_schema(self):
        assert set(CONFIG_SCHEMA['properties']) == ExperimentConfig.KEYS
        json.dumps(CONFIG_SCHEMA)

    @pytest.mark.parametrize('section, cls', [
        ('geometry', GeometryConfig),
        ('discretization', DiscretizationConfig),
        ('coefficients', CoefficientConfig),
        ('optimizer', OptimizerConfig),
        ('output', OutputConfig),
    ])
    def test_schema_matches_sections(self, section, cls):
        properties = CONFIG_SCHEMA['properties'][section]['properties']
        defaults = cls()
        assert set(properties) == set(defaults.__dataclass_fields__)
        for key, prop in properties.items():
            if 'default' in prop:
                assert getattr(defaults, key) == prop['default'], key
        with pytest.raises(ConfigError, match=section):
            ExperimentConfig.from_dict({**SMALL, section: {'unknown': 1}})

    def test_schema_enums(self):
        properties = CONFIG_SCHEMA['properties']
        assert properties['controls']['items']['enum'] == list(CONTROL_SIDES)
        assert set(properties['targets']['items']['properties']['kind']['enum']) == set(WAVEFORMS)
        location = properties['observation']['items']['oneOf'][1]['properties']
        assert set(location['kind']['enum']) == {'fixed'} | set(TRAJECTORY_PARAMETERS)
        assert set(location) == {'kind', 'value'}.union(*TRAJECTORY_PARAMETERS.values())
        assert properties['epsilon']['default'] == ExperimentConfig().epsilon
        assert properties['delta']['default'] == ExperimentConfig().delta
        for kind in properties['coefficients']['properties']['kind']['enum']:
            data = {'kind': kind} if kind != 'constant' else {'kind': kind, 'a': 2.0}
            assert CoefficientConfig.from_dict(data).kind == kind
        for method in properties['optimizer']['properties']['method']['enum']:
            assert OptimizerConfig.from_dict({'method': method}).method == method

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            example_config(5)


class TestWaveforms:

    def test_sinusoid(self):
        w = target_function('sinusoid', {'amplitude': 2.0, 'oscillations': 1}, 1.0)
        assert np.allclose(w(np.array([0.0, 0.25, 0.5])), [0.0, 2.0, 0.0], atol=1e-14)

    def test_ramp(self):
        w = target_function('ramp', {'rate': 1.0, 'scale': 0.5}, 1.0)
        assert w(1.0) == pytest.approx(0.5 * (1 - np.exp(-1.0)))

    def test_gaussian_peaks_at_mid_horizon(self):
        w = target_function('gaussian', {}, 0.5)
        t = np.linspace(0.0, 0.5, 101)
        assert t[np.argmax(w(t))] == pytest.approx(0.25)

    def test_constant_is_vectorized(self):
        assert target_function('constant', {'value': 3.0}, 1.0)(np.zeros(4)).shape == (4,)

    def test_expression(self):
        w = target_function('expression', {'expression': 't**2/T'}, 2.0)
        assert w(2.0) == pytest.approx(2.0)

    def test_bad_targets(self):
        with pytest.raises(ValueError):
            target_function('square', {}, 1.0)
        with pytest.raises(ValueError):
            target_function('ramp', {'slope': 1.0}, 1.0)

    def test_trajectories(self):
        h = build_trajectory('sine', {'center': 0.5, 'amplitude': 0.15}, 0.5)
        assert h.maximum == pytest.approx(0.65)
        with pytest.raises(ValueError):
            build_trajectory('sine', {'radius': 1.0}, 0.5)
        with pytest.raises(ValueError):
            build_trajectory('spiral', {}, 0.5)


class TestRun:

    def test_summary_and_files(self, tmp_path):
        config = ExperimentConfig.from_dict(_small()).with_overrides(directory=str(tmp_path))
        summary = run_tracking(config)
        assert summary.converged
        assert len(summary.errors) == 1
        assert summary.combined == pytest.approx(summary.errors[0])
        assert summary.adjoint_solves >= summary.iterations
        directory = tmp_path / 'small'
        frame = read_series(directory / 'series.csv')
        assert list(frame.columns) == ['t', 'target_1', 'trace_1', 'control_right']
        assert len(frame) == 20
        written = json.loads((directory / 'summary.json').read_text())
        assert written['reason'] == summary.reason
        assert written['errors'] == pytest.approx(summary.errors)
        assert ExperimentConfig.from_json(directory / 'config.json').to_dict() == config.to_dict()

    def test_replay_reproduces_errors(self, tmp_path):
        config = ExperimentConfig.from_dict(_small()).with_overrides(directory=str(tmp_path))
        summary = run_tracking(config)
        errors = replay_summary(config, summary.artifacts['series'])
        assert errors.combined == pytest.approx(summary.combined, abs=1e-12)

    def test_runs_are_deterministic(self, tmp_path):
        config = ExperimentConfig.from_dict(_small())
        first = run_tracking(config.with_overrides(directory=str(tmp_path / 'a')))
        second = run_tracking(config.with_overrides(directory=str(tmp_path / 'b')))
        assert (
            (tmp_path / 'a' / 'small' / 'series.csv').read_bytes()
            == (tmp_path / 'b' / 'small' / 'series.csv').read_bytes()
        )
        assert first.history == second.history

    def test_two_controls(self, tmp_path):
        data = _small(
            controls=['left', 'right'],
            observation=[0.25, 0.5],
            targets=[{'kind': 'ramp'}, {'kind': 'ramp', 'scale': 0.5}],
            output={'write_fields': True}
        )
        config = ExperimentConfig.from_dict(data).with_overrides(directory=str(tmp_path))
        summary = run_tracking(config)
        assert len(summary.errors) == 2
        assert 'state' in summary.artifacts
        frame = read_series(summary.artifacts['series'])
        assert {'control_left', 'control_right'} <= set(frame.columns)
        state = pd.read_csv(summary.artifacts['state'], index_col=0)
        assert state.shape == (21, 21)

    def test_without_writing(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        summary = run_tracking(ExperimentConfig.from_dict(_small()), write=False)
        assert summary.artifacts == {}
        assert not (tmp_path / 'results').exists()

    def test_replay_needs_control_columns(self, tmp_path):
        config = ExperimentConfig.from_dict(_small()).with_overrides(directory=str(tmp_path))
        summary = run_tracking(config)
        two_sided = ExperimentConfig.from_dict(_small(controls=['left', 'right']))
        with pytest.raises(ValueError):
            replay_summary(two_sided, summary.artifacts['series'])


class TestObstruction:

    @pytest.mark.parametrize('variant, sides', [
        ('one-control', ('right',)),
        ('two-controls', ('left', 'right')),
    ])
    def test_fluxes_vanish_under_refinement(self, variant, sides):
        frame = obstruction_refinement(variant, levels=3, elements=20, steps=100)
        assert len(frame) == 3
        for side in sides:
            reductions = frame[f'flux_{side}_reduction'].to_numpy()[1:]
            assert np.all((1.5 <= reductions) & (reductions <= 3.0))
        norms = frame['forcing_norm'].to_numpy()
        assert np.all(np.abs(norms / norms[-1] - 1.0) <= 0.1)
        assert np.all(np.diff(frame['mismatch'].to_numpy()) < 0)

    def test_points_must_be_nodes(self):
        with pytest.raises(ValueError):
            run_obstruction('one-control', elements=20, points=(0.33, 0.6))

    def test_point_count(self):
        with pytest.raises(ValueError):
            run_obstruction('two-controls', elements=20, points=(0.25, 0.5))

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            run_obstruction('three-controls')

    def test_report(self):
        report = run_obstruction('one-control', elements=20, steps=20)
        row = report.to_dict()
        assert row['h'] == pytest.approx(0.05)
        assert set(report.fluxes) == {'right'}
        assert report.forcing_norm > 0


class TestCommandLine:

    def test_schema(self, capsys):
        assert cli.main(['schema']) == 0
        assert json.loads(capsys.readouterr().out) == CONFIG_SCHEMA

    def test_track(self, tmp_path, capsys):
        path = tmp_path / 'small.json'
        path.write_text(json.dumps(SMALL))
        assert cli.main(['-q', 'track', '--config', str(path), '--out', str(tmp_path / 'out')]) == 0
        assert (tmp_path / 'out' / 'small' / 'series.csv').exists()
        assert 'E_1' in capsys.readouterr().out

    def test_invalid_config(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(_small(discretization={'elements': 0, 'steps': 20})))
        assert cli.main(['-q', 'track', '--config', str(path)]) == cli.EXIT_CONFIG
        assert cli.main(['-q', 'track', '--config', str(tmp_path / 'none.json')]) == cli.EXIT_CONFIG

    def test_numerical_failure(self, tmp_path, monkeypatch):
        path = tmp_path / 'small.json'
        path.write_text(json.dumps(SMALL))

        def failing(config):
            raise NumericalError("zero pivot")
        monkeypatch.setattr(cli, 'run_tracking', failing)
        assert cli.main(['-q', 'track', '--config', str(path)]) == cli.EXIT_NUMERICAL

    def test_replay(self, tmp_path, capsys):
        path = tmp_path / 'small.json'
        path.write_text(json.dumps(SMALL))
        assert cli.main(['-q', 'track', '--config', str(path), '--out', str(tmp_path)]) == 0
        csv = tmp_path / 'small' / 'series.csv'
        assert cli.main(['-q', 'replay', '--config', str(path), '--csv', str(csv)]) == 0
        assert 'combined' in capsys.readouterr().out

    def test_flatness_csv(self, capsys):
        assert cli.main(['-q', 'flatness', '--w1', 't**2', '--x1', '0.5', '--steps', '40']) == 0
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert list(frame.columns) == ['t', 'v0', 'vL', 'residual']
        assert len(frame) == 41
        t = frame['t'].to_numpy()
        expected = t ** 2 + t / 4 + 1 / 192
        np.testing.assert_allclose(frame['v0'], expected, rtol=0, atol=1e-12)
        np.testing.assert_allclose(frame['vL'], expected, rtol=0, atol=1e-12)
        assert frame['residual'].max() <= 1e-10

    def test_flatness_demo(self, tmp_path):
        out = tmp_path / 'series' / 'controls.csv'
        argv = ['-q', 'flatness', '--w1', 't**2', '--demo', '--ne', '20', '--out', str(out)]
        assert cli.main(argv) == 0
        frame = pd.read_csv(out)
        assert {'w1', 'trace'} <= set(frame.columns)
        np.testing.assert_allclose(frame['w1'], frame['t'] ** 2, atol=1e-12)
        assert abs(frame['trace'].iloc[-1] - 1.0) < 0.05

    def test_flatness_rejects_non_polynomial(self):
        assert cli.main(['-q', 'flatness', '--w1', 'exp(t)']) == cli.EXIT_CONFIG

    @pytest.mark.parametrize('argv, columns', [
        (['diffeo', '--traj', 'sine:0.5,0.15'], ['t', 'alpha', 'beta', 'trajectory', 'margin']),
        (['diffeo', '--traj', 'sine:0.5,0.1', '--k', '0.25'], ['t', 'alpha', 'beta', 'gamma', 'trajectory', 'margin']),
        (['diffeo', '--traj', 'constant:0.4', '--horizon', '1.0'], ['t', 'alpha', 'beta', 'trajectory', 'margin']),
    ])
    def test_diffeo_csv(self, argv, columns, capsys):
        assert cli.main(['-q'] + argv) == 0
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert list(frame.columns) == columns
        assert len(frame) == 201
        assert frame['t'].iloc[0] == 0.0
        assert (frame['margin'] > 0).all()

    def test_diffeo_csv_file(self, tmp_path):
        out = tmp_path / 'map.csv'
        assert cli.main(['-q', 'diffeo', '--traj', 'sine:0.5,0.15', '--steps', '50', '--out', str(out)]) == 0
        frame = pd.read_csv(out)
        assert len(frame) == 51
        assert frame['t'].iloc[-1] == pytest.approx(0.5)
        np.testing.assert_allclose(
            frame['trajectory'], 0.5 + 0.15 * np.sin(np.pi * frame['t'] / 0.5), atol=1e-12
        )

    @pytest.mark.parametrize('traj', ['spiral:1', 'sine:0.5', 'constant:1.5'])
    def test_diffeo_bad_trajectory(self, traj):
        assert cli.main(['-q', 'diffeo', '--traj', traj]) == cli.EXIT_CONFIG

    def test_obstruction(self, capsys):
        assert cli.main(['-q', 'obstruction', 'one-control', '--levels', '2', '--nt', '20']) == 0
        assert 'flux_right' in capsys.readouterr().out


def _assert_monotone(summary):
    assert np.all(np.diff(summary.history) <= 1e-15 * max(1.0, abs(summary.history[0])))


@pytest.mark.slow
class TestReferenceExamples:

    @pytest.mark.parametrize('epsilon', [1e-1, 1e-2])
    def test_example1(self, epsilon, tmp_path):
        summary = run_example(1, epsilon=epsilon, directory=str(tmp_path))
        (reference,) = REFERENCE_ERRORS[(1, epsilon)]
        assert 0.97 * epsilon <= summary.errors[0] <= 1.03 * epsilon
        assert summary.errors[0] == pytest.approx(reference, rel=0.03)
        _assert_monotone(summary)

    def test_example2(self, tmp_path):
        summary = run_example(2, directory=str(tmp_path))
        e1, e2 = REFERENCE_ERRORS[(2, 1e-3)]
        assert 0.7 * e1 <= summary.errors[0] <= 2.0 * e1
        assert 0.5 * e2 <= summary.errors[1] <= 2.0 * e2
        assert summary.combined <= 1.05e-3
        _assert_monotone(summary)

    def test_example3(self, tmp_path):
        summary = run_example(3, directory=str(tmp_path))
        (reference,) = REFERENCE_ERRORS[(3, 1e-3)]
        assert summary.errors[0] <= 1.1e-3
        assert 0.7 * reference <= summary.errors[0] <= 1.3 * reference
        _assert_monotone(summary)

    def test_example4(self, tmp_path):
        summary = run_example(4, directory=str(tmp_path))
        assert 0.95e-3 <= summary.errors[0] <= 1.05e-3
        _assert_monotone(summary)

    def test_example4_mesh_override(self):
        default = run_example(4, write=False)
        refined = run_example(4, elements=100, write=False)
        assert 0.5 * default.errors[0] <= refined.errors[0] <= 2.0 * default.errors[0]
        _assert_monotone(refined)
