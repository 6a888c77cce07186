"""
oracle.py

Direct quadrature of the two-pulse correlation integrals on a shrunk geometry.

The eight-dimensional integral over both pulses' positions and times is
evaluated on tensor-product nodes (Gauss-Hermite across each Gaussian, Gauss-
Legendre along the crystal), with C and R taken from the closed-form Green
tensor and transformed to the time domain by a midpoint frequency rule. No
part of the Weyl expansion or of the closed-form longitudinal factor is used,
so agreement with eos_signal checks both.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite, roots_legendre

from src.constants import C_UM_PER_PS, ENVELOPE_PEAK, HBAR
from src.correlators import correlation_C, response_R
from src.eos_signal import KINDS, evaluate_trace_at, trace

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MAX_ORACLE_LENGTH = 20.0


@dataclass(frozen=True)
class OracleSettings:
    """
    Node counts of the direct quadrature.

    Attributes:
        n_transverse (int): Gauss-Hermite nodes per transverse coordinate
        n_longitudinal (int): Gauss-Legendre nodes along z
        n_time (int): Gauss-Hermite nodes per pulse time
        n_freq (int): Midpoint nodes on (-f_max, f_max)
        f_max (float): Frequency cutoff [THz]
        chunk (int): Position pairs evaluated per batch
    """
    n_transverse: int = 6
    n_longitudinal: int = 10
    n_time: int = 32
    n_freq: int = 256
    f_max: float = 4.5
    chunk: int = 4096

    @property
    def node_counts(self):
        return {
            'position_pairs': self.n_transverse ** 4 * self.n_longitudinal ** 2,
            'time_nodes_per_pulse': self.n_time,
            'frequency_nodes': self.n_freq,
        }


@dataclass
class OracleResult:
    """Oracle trace with its estimated quadrature error."""
    delta_t: np.ndarray
    values: np.ndarray
    error_estimate: float
    kind: str


def _pulse_nodes(geom, settings, center_x):
    """Tensor nodes and weights of one pulse's cross section and crystal depth."""
    xi, w_xi = roots_hermite(settings.n_transverse)
    scale = geom.w / np.sqrt(2.0)
    x = center_x + scale * xi
    wx = scale * w_xi
    zeta, w_zeta = roots_legendre(settings.n_longitudinal)
    z = 0.5 * geom.length * (zeta + 1.0)
    wz = 0.5 * geom.length * w_zeta

    X, Y, Z = np.meshgrid(x, scale * xi, z, indexing='ij')
    WX, WY, WZ = np.meshgrid(wx, wx, wz, indexing='ij')
    points = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    return points, (WX * WY * WZ).ravel()


def _time_transform(geom, omega, settings):
    """Gauss-Hermite value of Integral ds exp(-2 s^2 / tau^2) e^{-i omega s}."""
    xi, w_xi = roots_hermite(settings.n_time)
    scale = geom.tau_sigma / np.sqrt(2.0)
    return np.sum(scale * w_xi[None, :] * np.exp(-1j * omega[:, None] * scale * xi[None, :]), axis=1)


def _pair_spectrum(geom, kind, f, settings):
    """Weighted sum over position pairs of F(r, r', Omega) e^{-i Omega n_g (z - z')/c}."""
    probe, w_probe = _pulse_nodes(geom, settings, geom.delta_r)
    source, w_source = _pulse_nodes(geom, settings, 0.0)
    model = geom.dielectric
    omega = 2.0 * np.pi * f
    n_g = model.n_g

    ip, js = np.meshgrid(np.arange(len(probe)), np.arange(len(source)), indexing='ij')
    ip, js = ip.ravel(), js.ravel()
    total = np.zeros(len(f), dtype=complex)
    f_row = f[None, :]
    for start in range(0, len(ip), settings.chunk):
        i = ip[start:start + settings.chunk]
        j = js[start:start + settings.chunk]
        r = probe[i][:, None, :]
        r_prime = source[j][:, None, :]
        if kind == 'vacuum':
            values = correlation_C(model, r, r_prime, f_row)
        else:
            if np.any(np.all(probe[i] == source[j], axis=-1)):
                raise ValueError("Source oracle hit a coincident node pair; use delta_r > 0")
            values = -0.5 * HBAR * response_R(model, r, r_prime, f_row)
        dz = (probe[i][:, 2] - source[j][:, 2])[:, None]
        phase = np.exp(-1j * omega[None, :] * n_g * dz / C_UM_PER_PS)
        weights = (w_probe[i] * w_source[j])[:, None]
        total += np.sum(weights * values * phase, axis=0)
    return total


def brute_force_oracle(geom_small, kind, delta_t, settings=None):
    """
    Direct quadrature of the correlation signal G(dt) for one kind.

    Args:
        geom_small (ExperimentGeometry): Geometry with length <= 20 um
        kind (str): 'vacuum' or 'source'
        delta_t (float or np.ndarray): Delays [ps]
        settings (OracleSettings): Node counts

    Returns:
        OracleResult: Real trace values and an error estimate from a coarser
        frequency rule
    """
    settings = settings or OracleSettings()
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind}")
    if geom_small.length > MAX_ORACLE_LENGTH:
        logger.error(f"Oracle geometry too large: length {geom_small.length} um")
        raise ValueError(f"Oracle needs length <= {MAX_ORACLE_LENGTH} um, got {geom_small.length}")

    start_time = time.time()
    delta_t = np.atleast_1d(np.asarray(delta_t, dtype=float))
    df = 2.0 * settings.f_max / settings.n_freq
    f = -settings.f_max + (np.arange(settings.n_freq) + 0.5) * df
    omega = 2.0 * np.pi * f

    envelope = (geom_small.envelope_amplitude * ENVELOPE_PEAK) ** 2
    pulses = _time_transform(geom_small, omega, settings) * _time_transform(geom_small, -omega, settings)
    m = geom_small.calibration * envelope * pulses * _pair_spectrum(geom_small, kind, f, settings)

    kernel = np.exp(-1j * omega[None, :] * delta_t[:, None])
    fine = (2.0 * np.pi * df) * (kernel @ m)
    coarse = (4.0 * np.pi * df) * (kernel[:, ::2] @ m[::2])
    error = float(np.max(np.abs(fine - coarse)))

    logger.info(f"Oracle ({kind}) with {settings.node_counts} in {time.time() - start_time:.2f} seconds, "
                f"error estimate {error:.3e}")
    return OracleResult(delta_t, fine.real, error, kind)


def oracle_discrepancy(geom_small, kind, delta_t, settings=None, quadrature=None, n_samples=256):
    """
    RMS difference between oracle and pipeline traces, relative to the pipeline peak.

    Returns:
        tuple: (relative RMS, OracleResult, pipeline values on delta_t)
    """
    settings = settings or OracleSettings()
    result = brute_force_oracle(geom_small, kind, delta_t, settings)
    _, spectrum = trace(geom_small, kind, f_max=settings.f_max, n_samples=n_samples,
                        settings=quadrature, progress=False)
    reference = evaluate_trace_at(spectrum, result.delta_t)
    rms = np.sqrt(np.mean((result.values - reference) ** 2)) / np.max(np.abs(reference))
    logger.info(f"Oracle vs pipeline ({kind}): relative RMS {rms:.3e}")
    return float(rms), result, reference
