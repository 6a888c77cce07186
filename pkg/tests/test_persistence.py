import json
import os

import numpy as np
import pandas as pd
import pytest

from src.persistence import build_sidecar, read_csv, write_csv, write_json, write_summary_report


def test_write_json_converts_numpy(tmp_path):
    path = write_json({'a': np.float64(1.5), 'b': np.arange(3), 'c': np.bool_(True), 'd': (1, 2)},
                      str(tmp_path / 'out' / 'data.json'))
    assert json.loads(open(path).read()) == {'a': 1.5, 'b': [0, 1, 2], 'c': True, 'd': [1, 2]}
    assert [n for n in os.listdir(tmp_path / 'out') if n.startswith('.tmp_')] == []


def test_csv_round_trip_and_errors(tmp_path):
    frame = pd.DataFrame({'f_THz': [0.5, 1.0], 're': [1.0 / 3.0, -2.0]})
    path = write_csv(frame, str(tmp_path / 'table.csv'))
    loaded = read_csv(path, ['f_THz', 're'])
    np.testing.assert_allclose(loaded['re'], frame['re'], rtol=1e-12)
    with pytest.raises(ValueError):
        read_csv(path, ['im'])
    with pytest.raises(FileNotFoundError):
        read_csv(str(tmp_path / 'absent.csv'))


def test_sidecar_and_report(tmp_path):
    sidecar = build_sidecar('simulate', {'seed': 0}, {'n_freq': 128}, {'n_kplane': 256},
                            ['b.csv', 'a.csv'], {'fdt_passed': True})
    assert sidecar['outputs'] == ['a.csv', 'b.csv']
    assert set(sidecar['versions']) == {'python', 'numpy', 'scipy', 'pandas'}
    assert sidecar['fdt_passed'] is True

    path = write_summary_report(str(tmp_path / 'summary_report.md'), 'Simulation Summary Report',
                                {'kinds': 'vacuum, source', 'geometry': {'w': 10.0}})
    text = open(path).read()
    assert text.startswith('# Simulation Summary Report')
    assert '## geometry' in text and '* w: 10.0' in text
