"""
Shared fixtures: crystal models, the reference geometry and cheap spectra.
"""

import numpy as np
import pytest

from src.dielectric import DielectricModel
from src.eos_signal import (ComplexSpectrum, ExperimentGeometry, QuadratureSettings,
                            frequency_grid, traces_both)


@pytest.fixture
def model():
    return DielectricModel()


@pytest.fixture
def lossless_model():
    return DielectricModel(gamma=0.0)


@pytest.fixture
def geometry():
    return ExperimentGeometry()


@pytest.fixture
def coarse_settings():
    return QuadratureSettings(n_kplane=1024)


@pytest.fixture(scope='session')
def reference_run():
    """Vacuum and source traces of the default geometry on an 8 THz, 512-point grid."""
    return traces_both(ExperimentGeometry(), f_max=8.0, n_samples=512,
                       settings=QuadratureSettings(n_kplane=2048), progress=False)


@pytest.fixture
def toy_spectrum():
    """Even band-limited spectrum peaking near 1.5 THz, cheap stand-in for S_vac."""
    f = frequency_grid(8.0, 512)
    values = f ** 2 * np.exp(-(f / 1.5) ** 2)
    return ComplexSpectrum(f, values, 'vacuum')
