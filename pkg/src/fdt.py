"""
fdt.py

Fluctuation-dissipation consistency checks between the vacuum and source
signals, at the level of the correlators, the spectra and measured traces.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import hilbert

from src.constants import HBAR
from src.correlators import sample_correlator

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

POINTWISE_TOLERANCE = 1e-12
SIGNAL_RATIO_TOLERANCE = 1e-3
PHASE_TOLERANCE = 0.2
BAND_FLOOR = 0.1
ODD_PART_FLOOR = 1e-9


@dataclass
class FdtReport:
    """
    Outcome of one consistency check.

    Attributes:
        check (str): Name of the check
        passed (bool): Whether the metric is within tolerance
        metric (float): Measured deviation
        tolerance (float): Acceptance threshold
        details (dict): Check-specific diagnostics
    """
    check: str
    passed: bool
    metric: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        data = asdict(self)
        data['passed'] = bool(self.passed)
        data['metric'] = float(self.metric)
        return data


def check_pointwise(model, points, f_grid, tolerance=POINTWISE_TOLERANCE):
    """
    Verify C(r, r', f) = hbar sgn(f) Im R(r, r', f) on a set of point pairs.

    Args:
        model (DielectricModel): Crystal model
        points (list): Sequence of (r, r_prime) pairs, non-coincident
        f_grid (array-like): Non-zero frequencies [THz]
        tolerance (float): Largest accepted relative residual

    Returns:
        FdtReport: Report with the worst relative residual
    """
    f = np.asarray(f_grid, dtype=float)
    f = f[f != 0]
    worst, worst_sample = 0.0, None
    for r, r_prime in points:
        c_samples = sample_correlator(model, r, r_prime, f, 'C')
        r_samples = sample_correlator(model, r, r_prime, f, 'R')
        c = np.array([s.value.real for s in c_samples])
        expected = HBAR * np.sign(f) * np.array([s.value.imag for s in r_samples])
        scale = max(np.max(np.abs(expected)), np.finfo(float).tiny)
        residual = np.abs(c - expected) / scale
        if residual.max() >= worst:
            worst, worst_sample = float(residual.max()), c_samples[int(np.argmax(residual))]
    passed = worst <= tolerance
    logger.info(f"Pointwise C vs Im R: worst relative residual {worst:.3e} ({'pass' if passed else 'fail'})")
    details = {'n_pairs': len(points), 'n_frequencies': int(len(f))}
    if worst_sample is not None:
        details['worst_at'] = {'r': worst_sample.r.tolist(), 'r_prime': worst_sample.r_prime.tolist(),
                               'f_THz': worst_sample.f}
    return FdtReport('pointwise', passed, worst, tolerance, details)


def check_signal_ratio(spectrum_vac, spectrum_src, band=(0.1, 6.0), tolerance=SIGNAL_RATIO_TOLERANCE):
    """
    Verify Im S_src(f) = -S_vac(f) / 2 over a frequency band.

    Args:
        spectrum_vac (ComplexSpectrum): Vacuum spectrum
        spectrum_src (ComplexSpectrum): Source spectrum on the same grid
        band (tuple): (f_lo, f_hi) of positive frequencies compared [THz]
        tolerance (float): Largest accepted residual relative to max |S_vac|

    Returns:
        FdtReport: Report with the normalized residual
    """
    if spectrum_vac.f.shape != spectrum_src.f.shape or not np.allclose(spectrum_vac.f, spectrum_src.f):
        logger.error("Signal-ratio check called with mismatched frequency grids")
        raise ValueError("Vacuum and source spectra must share one frequency grid")
    f = spectrum_vac.f
    mask = (f >= band[0]) & (f <= band[1])
    if not np.any(mask):
        raise ValueError(f"No grid frequencies inside band {band}")
    s_vac = spectrum_vac.values[mask].real
    s_src = spectrum_src.values[mask]
    scale = np.max(np.abs(s_vac))
    residual = float(np.max(np.abs(s_src.imag + 0.5 * s_vac)) / scale)
    passed = residual <= tolerance
    logger.info(f"Im S_src + S_vac/2: normalized residual {residual:.3e} ({'pass' if passed else 'fail'})")
    return FdtReport('signal_ratio', passed, residual, tolerance,
                     {'band_THz': list(band), 'n_frequencies': int(mask.sum())})


def _spectrum_from_trace(delta_t, values):
    """DFT with the delay origin rotated to index 0 so a real odd trace maps to i * Im."""
    delta_t = np.asarray(delta_t, dtype=float)
    values = np.asarray(values, dtype=float)
    zero = int(np.argmin(np.abs(delta_t)))
    rolled = np.roll(values, -zero)
    dt = float(delta_t[1] - delta_t[0])
    return np.fft.rfftfreq(len(values), d=dt), dt * np.fft.rfft(rolled)


def check_quadrature_phase(trace_vac, trace_src, band=None, tolerance=PHASE_TOLERANCE, floor=BAND_FLOOR):
    """
    Verify that the odd part of the source trace is the predicted quadrature partner of the vacuum trace.

    The fluctuation-dissipation relation fixes the odd part of the source
    trace to -1/2 times the Hilbert transform of the vacuum trace. With
    Y = DFT of each trace (delay zero at index 0), the measured odd part has
    spectrum i Im Y_src and the prediction i Im Y_pred. Over the bins where
    |Y_vac| exceeds floor times its peak, two numbers are compared:
    the angle between Im Y_src and Im Y_pred seen as vectors, and the
    least-squares amplitude ratio of the two. Both must be within tolerance
    (the ratio as |ratio - 1|).

    Args:
        trace_vac (TimeTrace): Vacuum trace on a delay grid containing zero
        trace_src (TimeTrace): Source trace on the same grid
        band (tuple): Optional (f_lo, f_hi) restriction [THz]
        tolerance (float): Largest accepted angle [rad] and relative amplitude error
        floor (float): Relative vacuum magnitude defining the compared band

    Returns:
        FdtReport: Report with metric max(angle, |ratio - 1|)
    """
    if len(trace_vac.delta_t) != len(trace_src.delta_t) or not np.allclose(trace_vac.delta_t, trace_src.delta_t):
        logger.error("Quadrature check called with mismatched delay grids")
        raise ValueError("Vacuum and source traces must share one delay grid")

    vac_values = np.real(trace_vac.values)
    f, y_vac = _spectrum_from_trace(trace_vac.delta_t, vac_values)
    _, y_src = _spectrum_from_trace(trace_src.delta_t, np.real(trace_src.values))
    _, y_pred = _spectrum_from_trace(trace_vac.delta_t, -0.5 * hilbert_partner(vac_values))
    measured, predicted = y_src.imag, y_pred.imag
    if np.max(np.abs(measured)) < ODD_PART_FLOOR * np.max(np.abs(y_src)):
        logger.warning("Source trace has no odd part; quadrature phase undefined")
        return FdtReport('quadrature_phase', False, float(np.pi / 2), tolerance,
                         {'reason': 'source trace has no odd part'})

    mask = np.abs(y_vac) >= floor * np.max(np.abs(y_vac))
    mask[0] = False
    if len(vac_values) % 2 == 0:
        mask[-1] = False
    if band is not None:
        mask &= (f >= band[0]) & (f <= band[1])
    if not np.any(mask) or not np.any(predicted[mask]):
        logger.warning("No common band above the magnitude floor")
        return FdtReport('quadrature_phase', False, float(np.pi / 2), tolerance,
                         {'reason': 'no common band'})

    a, b = measured[mask], predicted[mask]
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    angle = float(np.arccos(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))) if norm_a > 0 else float(np.pi / 2)
    ratio = float(np.dot(a, b) / np.dot(b, b))
    metric = max(angle, abs(ratio - 1.0))
    passed = metric <= tolerance
    logger.info(f"Quadrature phase: angle {angle:.3f} rad, amplitude ratio {ratio:.4f} over "
                f"{int(mask.sum())} bins ({'pass' if passed else 'fail'})")
    return FdtReport('quadrature_phase', passed, metric, tolerance,
                     {'band_THz': [float(f[mask].min()), float(f[mask].max())],
                      'n_bins': int(mask.sum()), 'angle_rad': angle, 'amplitude_ratio': ratio})


def hilbert_partner(values):
    """Hilbert transform of a real trace, the quadrature partner of an even pulse."""
    return np.imag(hilbert(np.asarray(values, dtype=float)))


def run_fdt_suite(model, traces, spectra, points=None, f_grid=None):
    """
    Run all three checks.

    Args:
        model (DielectricModel): Crystal model
        traces (dict): kind -> TimeTrace with 'vacuum' and 'source'
        spectra (dict): kind -> ComplexSpectrum with 'vacuum' and 'source'
        points (list): Point pairs for the pointwise check
        f_grid (array-like): Frequencies for the pointwise check [THz]

    Returns:
        list: FdtReport per check
    """
    if points is None:
        points = [((0.0, 0.0, 0.0), (50.0, 0.0, 0.0)),
                  ((0.0, 0.0, 0.0), (30.0, 20.0, 100.0)),
                  ((5.0, -5.0, 10.0), (0.0, 0.0, 400.0))]
    if f_grid is None:
        f_grid = np.linspace(-6.0, 6.0, 121)
    f_max = float(np.max(spectra['vacuum'].f))
    reports = [
        check_pointwise(model, points, f_grid),
        check_signal_ratio(spectra['vacuum'], spectra['source'], band=(0.1, min(6.0, f_max))),
        check_quadrature_phase(traces['vacuum'], traces['source']),
    ]
    failed = [r.check for r in reports if not r.passed]
    if failed:
        logger.warning(f"FDT checks failed: {', '.join(failed)}")
    else:
        logger.info("All FDT checks passed")
    return reports
