import numpy as np
import pytest

from src.dielectric import DielectricModel
from src.eos_signal import ExperimentGeometry
from src.oracle import OracleSettings, brute_force_oracle, oracle_discrepancy


@pytest.fixture
def small_geometry():
    return ExperimentGeometry(tau_fwhm=300.0, w=10.0, delta_r=0.0, length=20.0,
                              dielectric=DielectricModel(gamma=0.0))


def test_oracle_rejects_long_crystal():
    with pytest.raises(ValueError):
        brute_force_oracle(ExperimentGeometry(length=50.0), 'vacuum', [0.0])


def test_oracle_rejects_unknown_kind(small_geometry):
    with pytest.raises(ValueError):
        brute_force_oracle(small_geometry, 'thermal', [0.0])


def test_oracle_node_counts():
    counts = OracleSettings(n_transverse=2, n_longitudinal=3).node_counts
    assert counts['position_pairs'] == 2 ** 4 * 3 ** 2


def test_oracle_scales_with_envelope(small_geometry):
    settings = OracleSettings(n_transverse=2, n_longitudinal=4, n_time=16, n_freq=64)
    delta_t = np.array([-0.5, 0.0, 0.5])
    base = brute_force_oracle(small_geometry, 'vacuum', delta_t, settings)
    bright = ExperimentGeometry(tau_fwhm=300.0, w=10.0, delta_r=0.0, length=20.0,
                                dielectric=DielectricModel(gamma=0.0), envelope_amplitude=3.0)
    scaled = brute_force_oracle(bright, 'vacuum', delta_t, settings)
    np.testing.assert_allclose(scaled.values, 9.0 * base.values, rtol=1e-12, atol=1e-12 * np.max(np.abs(base.values)))


@pytest.mark.slow
def test_vacuum_matches_pipeline(small_geometry):
    delta_t = np.linspace(-1.5, 1.5, 31)
    rms, result, _ = oracle_discrepancy(small_geometry, 'vacuum', delta_t)
    assert rms <= 0.02
    assert result.error_estimate <= 0.02 * np.max(np.abs(result.values))


@pytest.mark.slow
def test_source_matches_pipeline(small_geometry):
    delta_t = np.linspace(-1.5, 1.5, 31)
    rms, result, _ = oracle_discrepancy(small_geometry.with_delta_r(50.0), 'source', delta_t)
    assert rms <= 0.02

    # Radiation from the source pulse reaches the sampling pulse only after it
    energy = result.values ** 2
    assert energy[result.delta_t < -0.3].sum() <= 0.01 * energy.sum()
