import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, _exit_code, cli
from src.persistence import CsvFormatError
from src.run_config import DEFAULT_CRYSTAL_FILE, ConfigError
from src.trace_analysis import SampleStepError
from src.trace_io import ManifestError


@pytest.fixture
def config_path(tmp_path):
    config = {
        'crystal_file': DEFAULT_CRYSTAL_FILE,
        'f_max_THz': 6.0,
        'n_freq': 128,
        'n_kplane': 2048,
        'dt_window_ps': None,
        'sweep_distances_um': [30.0, 50.0],
        'synth': {'n_traces': 20, 'shift_after': 10, 'exclude': [9, 11], 'n_stage': 256, 'noise_rel': 0.002},
    }
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(config))
    return str(path)


def _invoke(config_path, out, *args):
    return CliRunner().invoke(cli, ['--config', config_path, '--out', str(out), '--quiet', *args])


def test_simulate_writes_outputs(tmp_path, config_path):
    result = _invoke(config_path, tmp_path / 'sim', 'simulate')
    assert result.exit_code == EXIT_OK, result.output
    for name in ('vacuum_trace.csv', 'source_trace.csv', 'vacuum_spectrum.csv', 'source_spectrum.csv',
                 'fdt_report.json', 'simulate.json', 'summary_report.md'):
        assert (tmp_path / 'sim' / name).exists()
    sidecar = json.loads((tmp_path / 'sim' / 'simulate.json').read_text())
    assert sidecar['config']['n_freq'] == 128
    assert sidecar['fdt_passed'] is True
    assert 'numpy' in sidecar['versions']
    assert "SIMULATION COMPLETED" in result.output


def test_fdt_check_flags_corrupted_source(tmp_path, config_path):
    assert _invoke(config_path, tmp_path / 'sim', 'simulate', '--kind', 'both').exit_code == EXIT_OK
    spectrum_path = tmp_path / 'sim' / 'source_spectrum.csv'
    frame = pd.read_csv(spectrum_path)
    frame.assign(im=-frame['im']).to_csv(spectrum_path, index=False)

    result = _invoke(config_path, tmp_path / 'check', 'fdt-check', '--from-dir', str(tmp_path / 'sim'))
    assert result.exit_code == EXIT_CHECK_FAILED
    report = json.loads((tmp_path / 'check' / 'fdt_report.json').read_text())
    assert report['passed'] is False
    failed = {c['check'] for c in report['checks'] if not c['passed']}
    assert 'signal_ratio' in failed


def test_sweep(tmp_path, config_path):
    result = _invoke(config_path, tmp_path / 'sweep', 'sweep', '--distances', '30,50')
    assert result.exit_code == EXIT_OK, result.output
    for name in ('sweep_30um_spectrum.csv', 'sweep_50um_spectrum.csv', 'sweep_summary.csv', 'sweep.json'):
        assert (tmp_path / 'sweep' / name).exists()
    summary = pd.read_csv(tmp_path / 'sweep' / 'sweep_summary.csv')
    assert list(summary['delta_r_um']) == [30.0, 50.0]


def test_sweep_rejects_empty_distances(tmp_path, config_path):
    result = _invoke(config_path, tmp_path / 'sweep', 'sweep', '--distances', '')
    assert result.exit_code == EXIT_USAGE


def test_synth_is_reproducible(tmp_path, config_path):
    first = _invoke(config_path, tmp_path / 'a', '--seed', '3', 'synth')
    second = _invoke(config_path, tmp_path / 'b', '--seed', '3', 'synth')
    assert first.exit_code == EXIT_OK, first.output
    assert second.exit_code == EXIT_OK, second.output
    for name in ('manifest.json', 'ground_truth.json', 'synth.json'):
        assert (tmp_path / 'a' / name).exists()
    assert (tmp_path / 'a' / 'trace_000.csv').read_bytes() == (tmp_path / 'b' / 'trace_000.csv').read_bytes()
    assert (tmp_path / 'a' / 'raw_011.csv').read_bytes() == (tmp_path / 'b' / 'raw_011.csv').read_bytes()


def test_synth_then_analyze(tmp_path, config_path):
    assert _invoke(config_path, tmp_path / 'set', 'synth').exit_code == EXIT_OK
    result = _invoke(config_path, tmp_path / 'analysis', 'analyze', '--manifest', str(tmp_path / 'set' / 'manifest.json'))
    assert result.exit_code == EXIT_OK, result.output
    for name in ('stitched.csv', 'filtered_mean.csv', 'average_spectrum.csv', 'peak_positions.csv',
                 'analysis.json', 'analyze.json', 'summary_report.md'):
        assert (tmp_path / 'analysis' / name).exists()
    sidecar = json.loads((tmp_path / 'analysis' / 'analyze.json').read_text())
    check = sidecar['ground_truth_check']
    assert abs(check['recovered_shift_fs'] - 50.2) <= check['shift_tolerance_fs']
    assert check['passed'] is True
    assert abs(check['recovered_offset_fs'] - check['offset_fs']) <= 2.0


def test_missing_inputs_are_usage_errors(tmp_path, config_path):
    result = _invoke(config_path, tmp_path / 'analysis', 'analyze', '--manifest', str(tmp_path / 'none.json'))
    assert result.exit_code == EXIT_USAGE
    result = CliRunner().invoke(cli, ['--config', str(tmp_path / 'none.json'), 'simulate'])
    assert result.exit_code == EXIT_USAGE


def test_simulate_rerun_is_byte_identical(tmp_path, config_path):
    names = ('vacuum_trace.csv', 'source_trace.csv', 'vacuum_spectrum.csv', 'source_spectrum.csv',
             'fdt_report.json', 'simulate.json')
    assert _invoke(config_path, tmp_path / 'sim', 'simulate').exit_code == EXIT_OK
    first = {name: (tmp_path / 'sim' / name).read_bytes() for name in names}
    assert _invoke(config_path, tmp_path / 'sim', 'simulate').exit_code == EXIT_OK
    for name in names:
        assert (tmp_path / 'sim' / name).read_bytes() == first[name], name


def test_exit_codes_separate_input_errors_from_failed_computations():
    assert _exit_code(ConfigError('bad key')) == EXIT_USAGE
    assert _exit_code(ManifestError('no traces')) == EXIT_USAGE
    assert _exit_code(CsvFormatError('missing column')) == EXIT_USAGE
    assert _exit_code(SampleStepError('step')) == EXIT_USAGE
    assert _exit_code(FileNotFoundError('gone')) == EXIT_USAGE
    assert _exit_code(ValueError('no grid frequencies inside band')) == EXIT_CHECK_FAILED
    assert _exit_code(RuntimeError('k-plane quadrature failed')) == EXIT_CHECK_FAILED
    assert _exit_code(None) == EXIT_CHECK_FAILED


def test_analyze_rejects_mismatched_sample_step(tmp_path, config_path):
    assert _invoke(config_path, tmp_path / 'set', 'synth').exit_code == EXIT_OK
    config = json.loads(open(config_path).read())
    config['analysis'] = {'sample_step_fs': 66.7, 'uncertainty_fs': 16.7}
    other = tmp_path / 'coarse.json'
    other.write_text(json.dumps(config))
    result = _invoke(str(other), tmp_path / 'analysis', 'analyze', '--manifest', str(tmp_path / 'set' / 'manifest.json'))
    assert result.exit_code == EXIT_USAGE
    assert 'sample step' in result.output
