"""
trace_analysis.py

Processing pipeline for measured or synthetic correlation traces: delay
calibration, low-pass filtering, zero-delay and drift estimation, segment
stitching, phase-corrected spectral averaging and pulse-width deconvolution.

Spectra of traces follow the project convention
S(Omega) = (1/2 pi) Integral G(dt) e^{i Omega dt} ddt, so a trace delayed by
tau acquires the phase e^{i Omega tau}.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline
from scipy.signal import correlate, correlation_lags
from tqdm import tqdm

from src.constants import AC_FACTORS, C_UM_PER_PS
from src.eos_signal import ComplexSpectrum, TimeTrace, evaluate_trace_at, trace

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

WAVEPLATE_CONFIGS = ('QWP/QWP', 'HWP/QWP')
REFERENCING = ('rf-referenced', 'raw')
STEP_MATCH_TOLERANCE = 0.01


class SampleStepError(ValueError):
    """Delay step of a trace set disagrees with the configured sample step."""


@dataclass
class RawTraceSet:
    """
    Correlation traces recorded on a common stage grid.

    Attributes:
        stage_mm (np.ndarray): Stage positions [mm], shape (n_samples,)
        values (np.ndarray): Referenced traces, shape (n_traces, n_samples)
        acquisition (np.ndarray): Acquisition index per trace, strictly increasing
        raw_values (np.ndarray): Raw-channel traces on stage_mm, or None
        waveplates (str): 'QWP/QWP' or 'HWP/QWP'
        referencing (str): 'rf-referenced' or 'raw'
        segments (list): (start, stop) acquisition-index ranges kept for analysis;
            stop None means to the end
        metadata (dict): Free-form metadata, ground truth for synthetic sets
    """
    stage_mm: np.ndarray
    values: np.ndarray
    acquisition: np.ndarray = None
    raw_values: np.ndarray = None
    waveplates: str = 'QWP/QWP'
    referencing: str = 'rf-referenced'
    segments: list = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.stage_mm = np.asarray(self.stage_mm, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != len(self.stage_mm):
            raise ValueError(f"Traces have {self.values.shape[1]} samples but the stage grid has {len(self.stage_mm)}")
        if self.acquisition is None:
            self.acquisition = np.arange(len(self.values))
        self.acquisition = np.asarray(self.acquisition, dtype=int)
        if len(self.acquisition) != len(self.values):
            raise ValueError("One acquisition index per trace is required")
        if np.any(np.diff(self.acquisition) <= 0):
            raise ValueError("Acquisition indices must be unique and increasing")
        if self.raw_values is not None:
            self.raw_values = np.atleast_2d(np.asarray(self.raw_values, dtype=float))
            if self.raw_values.shape != self.values.shape:
                raise ValueError("Raw channel must match the referenced traces in shape")
        if self.waveplates not in WAVEPLATE_CONFIGS:
            raise ValueError(f"waveplates must be one of {WAVEPLATE_CONFIGS}, got {self.waveplates}")
        if self.referencing not in REFERENCING:
            raise ValueError(f"referencing must be one of {REFERENCING}, got {self.referencing}")
        if not self.segments:
            self.segments = [(int(self.acquisition[0]), None)]

    @property
    def n_traces(self):
        return len(self.values)

    def segment_mask(self, index_range):
        """Boolean mask of the traces whose acquisition index lies in [start, stop)."""
        start, stop = index_range
        mask = self.acquisition >= start
        if stop is not None:
            mask &= self.acquisition < stop
        return mask


@dataclass(frozen=True)
class AnalysisConfig:
    """
    Settings of the analysis pipeline.

    Attributes:
        lowpass_THz (float): Low-pass cutoff [THz]
        phase_band_THz (tuple): Band of the zero-delay phase fit [THz]
        sample_step_fs (float): Nominal delay step [fs]; analyze rejects a grid more than 1% off
        uncertainty_fs (float): Half-width of the delay uncertainty band [fs]
        phase_floor (float): Magnitude floor of the phase fit, relative to the in-band peak
        overlap_mm (float): Stage position taken as zero delay [mm]
        upsample (int): Cubic-spline refinement factor of the drift estimate
    """
    lowpass_THz: float = 5.0
    phase_band_THz: tuple = (1.7, 2.7)
    sample_step_fs: float = 33.3
    uncertainty_fs: float = 16.7
    phase_floor: float = 0.1
    overlap_mm: float = 10.775
    upsample: int = 16

    def __post_init__(self):
        lo, hi = self.phase_band_THz
        if not 0 < lo < hi < self.lowpass_THz:
            raise ValueError(f"Phase band {self.phase_band_THz} must lie inside (0, {self.lowpass_THz}) THz")
        # Default step and uncertainty are rounded to 0.1 fs, so compare at that resolution
        if self.uncertainty_fs > round(self.sample_step_fs / 2.0 + 0.05, 1):
            raise ValueError(f"Uncertainty {self.uncertainty_fs} fs exceeds half the sample step {self.sample_step_fs} fs")
        if not 0 < self.phase_floor < 1:
            raise ValueError(f"phase_floor must be in (0, 1), got {self.phase_floor}")
        if self.upsample < 1:
            raise ValueError(f"upsample must be at least 1, got {self.upsample}")

    def to_dict(self):
        return {
            'lowpass_THz': self.lowpass_THz,
            'phase_band_THz': list(self.phase_band_THz),
            'sample_step_fs': self.sample_step_fs,
            'uncertainty_fs': self.uncertainty_fs,
            'phase_floor': self.phase_floor,
            'overlap_mm': self.overlap_mm,
            'upsample': self.upsample,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if 'phase_band_THz' in data:
            data['phase_band_THz'] = tuple(data['phase_band_THz'])
        return cls(**data)


@dataclass
class PeakEstimate:
    """Raw-channel overlap peak of one trace."""
    position_mm: float
    on_boundary: bool
    snr: float
    low_snr: bool


@dataclass
class SpectralAverage:
    """
    Phase-corrected mean spectrum with its delay-uncertainty envelope.

    The envelope is the per-frequency range of the real and imaginary parts
    of mean * e^{i Omega s} for |s| <= uncertainty.
    """
    spectrum: ComplexSpectrum
    re_lo: np.ndarray
    re_hi: np.ndarray
    im_lo: np.ndarray
    im_hi: np.ndarray
    phase_halfwidth: np.ndarray

    def to_frame(self):
        frame = self.spectrum.to_frame()
        frame['re_lo'] = self.re_lo
        frame['re_hi'] = self.re_hi
        frame['im_lo'] = self.im_lo
        frame['im_hi'] = self.im_hi
        return frame


@dataclass
class AnalysisResult:
    """Artifacts of one run of the analysis pipeline."""
    filtered_mean: TimeTrace
    stitched: TimeTrace
    segment_shifts_fs: list
    quantized_steps: list
    residual_fs: list
    zero_delay_fs: float
    average: SpectralAverage
    peaks: pd.DataFrame = None

    def summary(self):
        data = {
            'segment_shifts_fs': [float(s) for s in self.segment_shifts_fs],
            'quantized_steps': [int(n) for n in self.quantized_steps],
            'residual_misalignment_fs': [float(r) for r in self.residual_fs],
            'zero_delay_fs': float(self.zero_delay_fs),
            'n_samples': int(len(self.stitched.delta_t)),
        }
        if self.peaks is not None:
            data['raw_peak_positions_mm'] = sorted({round(float(p), 4) for p in self.peaks['peak_mm']})
        return data


def stage_to_delay(delta_stage_mm):
    """
    Optical delay of a double-pass delay line, dt = 2 dstage / c.

    Args:
        delta_stage_mm (float or np.ndarray): Stage displacement [mm]

    Returns:
        float or np.ndarray: Delay [ps]
    """
    return 2.0 * np.asarray(delta_stage_mm, dtype=float) * 1e3 / C_UM_PER_PS


def delay_to_stage(delta_t_ps):
    """Inverse of stage_to_delay [mm]."""
    return np.asarray(delta_t_ps, dtype=float) * C_UM_PER_PS / 2e3


def trace_spectrum(time_trace):
    """
    One-sided spectrum of a real trace, referenced to dt = 0.

    S(f_j) = (dt / 2 pi) sum_m G(t_m) e^{2 pi i f_j t_m} on f_j = j / (N dt).

    Returns:
        ComplexSpectrum: Spectrum on f >= 0
    """
    dt = time_trace.dt
    values = np.real(time_trace.values)
    f = np.fft.rfftfreq(len(values), d=dt)
    s = dt / (2.0 * np.pi) * np.exp(2j * np.pi * f * time_trace.delta_t[0]) * np.conj(np.fft.rfft(values))
    return ComplexSpectrum(f, s, time_trace.kind)


def lowpass(time_trace, cutoff_THz=5.0):
    """
    Zero-phase low-pass filter by a hard spectral mask.

    Args:
        time_trace (TimeTrace): Trace on a uniform grid
        cutoff_THz (float): Highest kept frequency [THz]

    Returns:
        TimeTrace: Filtered real trace; unchanged if the cutoff is at or above Nyquist
    """
    values = np.real(time_trace.values)
    nyquist = 0.5 / time_trace.dt
    if cutoff_THz >= nyquist:
        logger.warning(f"Low-pass cutoff {cutoff_THz} THz is not below Nyquist {nyquist:.3f} THz; trace left unchanged")
        return TimeTrace(time_trace.delta_t.copy(), values.copy(), time_trace.kind)
    spectrum = np.fft.rfft(values)
    f = np.fft.rfftfreq(len(values), d=time_trace.dt)
    spectrum[f > cutoff_THz] = 0.0
    return TimeTrace(time_trace.delta_t.copy(), np.fft.irfft(spectrum, n=len(values)), time_trace.kind)


def zero_delay_phase_fit(spectrum, band=(1.7, 2.7), floor=0.1):
    """
    Delay of a nominally symmetric trace from the slope of its spectral phase.

    The phase is fitted modulo pi (on the doubled phase) so sign changes of the
    real spectrum of an even trace do not enter the slope. Samples below floor
    times the in-band peak magnitude are ignored; the fit is weighted by magnitude.

    Args:
        spectrum (ComplexSpectrum): Spectrum of the trace (see trace_spectrum)
        band (tuple): (f_lo, f_hi) [THz]
        floor (float): Relative magnitude floor

    Returns:
        float: Delay [fs], positive when the trace is delayed
    """
    f = spectrum.f
    in_band = (f >= band[0]) & (f <= band[1])
    if in_band.sum() < 3:
        logger.error(f"Phase fit band {band} holds {int(in_band.sum())} samples")
        raise ValueError(f"Fewer than 3 spectral samples in band {band}")
    values = spectrum.values[in_band]
    magnitude = np.abs(values)
    keep = magnitude >= floor * magnitude.max()
    if keep.sum() < 3:
        raise ValueError(f"Fewer than 3 samples above the magnitude floor in band {band}")

    f_fit = f[in_band][keep]
    doubled = np.unwrap(2.0 * np.angle(values[keep]))
    slope, intercept = np.polyfit(f_fit, doubled, 1, w=magnitude[keep])
    residual = doubled - (slope * f_fit + intercept)
    if np.max(np.abs(residual)) > np.pi:
        logger.error(f"Spectral phase in {band} THz could not be unwrapped consistently")
        raise RuntimeError(f"Phase unwrap failed in band {band}: residual {np.max(np.abs(residual)):.2f} rad")
    shift_fs = slope / 2.0 / (2.0 * np.pi) * 1e3
    logger.info(f"Zero-delay phase fit over {band} THz: {shift_fs:.2f} fs")
    return float(shift_fs)


def _parabola_vertex(y_minus, y_0, y_plus):
    denominator = y_minus - 2.0 * y_0 + y_plus
    if denominator == 0:
        return 0.0
    return 0.5 * (y_minus - y_plus) / denominator


def drift_crosscorr(trace_a, trace_b, upsample=16):
    """
    Delay of trace_b relative to trace_a from their cross-correlation.

    Both traces are resampled with a cubic spline on a grid upsample times
    finer, correlated, and the peak is refined with a three-point parabola.

    Args:
        trace_a (TimeTrace): Reference trace
        trace_b (TimeTrace): Trace on the same grid
        upsample (int): Grid refinement factor

    Returns:
        float: Shift [fs], positive when trace_b is delayed relative to trace_a
    """
    if len(trace_a.delta_t) != len(trace_b.delta_t) or not np.allclose(trace_a.delta_t, trace_b.delta_t):
        logger.error("Cross-correlation called with different delay grids")
        raise ValueError("Traces must share one delay grid")
    t = trace_a.delta_t
    fine = np.linspace(t[0], t[-1], (len(t) - 1) * upsample + 1)
    a = CubicSpline(t, np.real(trace_a.values))(fine)
    b = CubicSpline(t, np.real(trace_b.values))(fine)
    a = a - a.mean()
    b = b - b.mean()
    if not np.any(a) or not np.any(b):
        raise RuntimeError("Cross-correlation of a flat trace has no peak")

    xc = correlate(b, a, mode='full', method='fft')
    lags = correlation_lags(len(b), len(a), mode='full')
    peak = int(np.argmax(xc))
    if xc[peak] <= 1e-6 * np.sqrt(np.sum(a * a) * np.sum(b * b)):
        logger.error("Cross-correlation has no significant positive peak")
        raise RuntimeError("Flat cross-correlation: no significant peak")
    if peak in (0, len(xc) - 1):
        raise RuntimeError("Cross-correlation peak at the edge of the lag range")
    offset = _parabola_vertex(xc[peak - 1], xc[peak], xc[peak + 1])
    dt_fine = fine[1] - fine[0]
    shift_fs = (lags[peak] + offset) * dt_fine * 1e3
    logger.info(f"Cross-correlation shift: {shift_fs:.2f} fs")
    return float(shift_fs)


def quantize_shift(shift_fs, dt_fs):
    """Nearest whole number of samples and the remaining misalignment [fs]."""
    steps = int(np.round(shift_fs / dt_fs))
    return steps, float(shift_fs - steps * dt_fs)


def _shift_samples(values, steps):
    """Advance a delayed trace by steps samples; vacated samples become NaN."""
    out = np.full(len(values), np.nan)
    if steps > 0:
        out[:-steps] = values[steps:]
    elif steps < 0:
        out[-steps:] = values[:steps]
    else:
        out[:] = values
    return out


def stitch_segments(segments, shifts_fs):
    """
    Weighted average of segment traces after removing whole-sample delays.

    Args:
        segments (list): (TimeTrace, weight) per segment
        shifts_fs (list): Delay of each segment relative to the reference [fs]

    Returns:
        tuple: (stitched TimeTrace, list of residual misalignments [fs])
    """
    if not segments:
        raise ValueError("stitch_segments needs at least one segment")
    if len(shifts_fs) != len(segments):
        raise ValueError("One shift per segment is required")
    reference = segments[0][0]
    dt_fs = reference.dt * 1e3
    stacked, weights, residuals = [], [], []
    for (segment, weight), shift in zip(segments, shifts_fs):
        if len(segment.delta_t) != len(reference.delta_t) or not np.allclose(segment.delta_t, reference.delta_t):
            logger.error("Segments to stitch are on different grids")
            raise ValueError("Segments must share one delay grid")
        steps, residual = quantize_shift(shift, dt_fs)
        stacked.append(_shift_samples(np.real(segment.values), steps))
        weights.append(float(weight))
        residuals.append(residual)

    stacked = np.array(stacked)
    w = np.array(weights)[:, None] * np.isfinite(stacked)
    total = w.sum(axis=0)
    summed = np.nansum(stacked * np.array(weights)[:, None], axis=0)
    uncovered = total == 0
    if np.any(uncovered):
        logger.warning(f"{int(uncovered.sum())} samples not covered by any segment; set to zero")
    values = np.where(uncovered, 0.0, summed / np.where(uncovered, 1.0, total))
    return TimeTrace(reference.delta_t.copy(), values, reference.kind), residuals


def segment_average(trace_set, index_range, delta_t=None, values=None):
    """
    Mean trace of the acquisitions in [start, stop).

    values replaces the referenced traces, e.g. by their low-passed versions.

    Returns:
        tuple: (TimeTrace, number of traces)
    """
    mask = trace_set.segment_mask(index_range)
    count = int(mask.sum())
    if count == 0:
        raise ValueError(f"No traces in acquisition range {index_range}")
    if delta_t is None:
        delta_t = stage_to_delay(trace_set.stage_mm - trace_set.stage_mm[len(trace_set.stage_mm) // 2])
    values = trace_set.values if values is None else np.asarray(values)
    return TimeTrace(delta_t, values[mask].mean(axis=0), 'measured'), count


def spectral_average(traces, delays_fs, uncertainty_fs=16.7, n_band=41):
    """
    Average of per-trace spectra after removing each trace's delay.

    Each spectrum is multiplied by e^{-i Omega dt_j} before averaging. The
    uncertainty envelope spans the mean multiplied by e^{i Omega s},
    |s| <= uncertainty_fs.

    Args:
        traces (list): TimeTrace per acquisition, common grid
        delays_fs (array-like): Delay of each trace [fs]
        uncertainty_fs (float): Delay uncertainty half-width [fs]
        n_band (int): Phase samples spanning the envelope

    Returns:
        SpectralAverage: Mean spectrum and envelope
    """
    if not traces:
        raise ValueError("spectral_average needs at least one trace")
    delays_ps = np.asarray(delays_fs, dtype=float) * 1e-3
    if len(delays_ps) != len(traces):
        raise ValueError("One delay per trace is required")
    spectra = [trace_spectrum(t) for t in traces]
    f = spectra[0].f
    omega = 2.0 * np.pi * f
    corrected = [s.values * np.exp(-1j * omega * d) for s, d in zip(spectra, delays_ps)]
    mean = np.mean(corrected, axis=0)

    s = np.linspace(-1.0, 1.0, n_band) * uncertainty_fs * 1e-3
    envelope = mean[None, :] * np.exp(1j * np.outer(s, omega))
    return SpectralAverage(
        spectrum=ComplexSpectrum(f, mean, traces[0].kind),
        re_lo=envelope.real.min(axis=0),
        re_hi=envelope.real.max(axis=0),
        im_lo=envelope.imag.min(axis=0),
        im_hi=envelope.imag.max(axis=0),
        phase_halfwidth=omega * uncertainty_fs * 1e-3,
    )


def raw_overlap_peak(stage_mm, raw_values, snr_floor=5.0):
    """
    Stage position of the overlap peak in one raw-channel trace.

    Args:
        stage_mm (np.ndarray): Stage grid [mm]
        raw_values (np.ndarray): Raw-channel trace
        snr_floor (float): Peak-to-noise ratio below which the estimate is flagged

    Returns:
        PeakEstimate: Refined position, boundary flag and SNR
    """
    stage_mm = np.asarray(stage_mm, dtype=float)
    values = np.asarray(raw_values, dtype=float)
    baseline = np.median(values)
    magnitude = np.abs(values - baseline)
    peak = int(np.argmax(magnitude))
    noise = 1.4826 * np.median(np.abs(values - baseline))
    snr = float(magnitude[peak] / noise) if noise > 0 else float('inf')
    low_snr = snr < snr_floor
    if low_snr:
        logger.warning(f"Raw overlap peak SNR {snr:.1f} below floor {snr_floor}")

    if peak in (0, len(values) - 1):
        logger.warning(f"Raw overlap peak on the grid boundary at {stage_mm[peak]} mm")
        return PeakEstimate(float(stage_mm[peak]), True, snr, low_snr)
    offset = _parabola_vertex(magnitude[peak - 1], magnitude[peak], magnitude[peak + 1])
    step = stage_mm[peak + 1] - stage_mm[peak]
    return PeakEstimate(float(stage_mm[peak] + offset * step), False, snr, low_snr)


def peak_position_series(trace_set, snr_floor=5.0, threads=1):
    """
    Raw-channel overlap peak of every trace.

    Returns:
        pd.DataFrame: Columns acquisition, peak_mm, on_boundary, snr
    """
    if trace_set.raw_values is None:
        raise ValueError("Trace set has no raw channel")

    def work(raw):
        return raw_overlap_peak(trace_set.stage_mm, raw, snr_floor)

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        peaks = list(executor.map(work, trace_set.raw_values))
    return pd.DataFrame({
        'acquisition': trace_set.acquisition,
        'peak_mm': [p.position_mm for p in peaks],
        'on_boundary': [p.on_boundary for p in peaks],
        'snr': [p.snr for p in peaks],
    })


def autocorr_to_pulsewidth(ac_fwhm_fs, shape='sech2'):
    """
    Pulse intensity FWHM from an intensity-autocorrelation FWHM.

    Args:
        ac_fwhm_fs (float): Autocorrelation FWHM [fs]
        shape (str): 'sech2' (factor 1.543) or 'gauss' (factor sqrt 2)

    Returns:
        float: Pulse FWHM [fs]
    """
    if shape not in AC_FACTORS:
        raise ValueError(f"Unknown pulse shape {shape}; expected one of {sorted(AC_FACTORS)}")
    if not ac_fwhm_fs > 0:
        raise ValueError(f"Autocorrelation width must be positive, got {ac_fwhm_fs}")
    return float(ac_fwhm_fs / AC_FACTORS[shape])


@dataclass(frozen=True)
class SynthSettings:
    """
    Parameters of a synthetic acquisition run.

    Attributes:
        n_traces (int): Number of acquisitions
        noise_rel (float): White-noise standard deviation relative to the trace peak
        drift_rel (float): Slow additive drift amplitude relative to the trace peak
        shift_fs (float): Delay jump injected mid-run [fs]
        shift_after (int): First acquisition carrying the jump
        offset_fs (float): Global zero-delay offset [fs]
        exclude (tuple): (start, stop) acquisitions left out of the segments, or None
        stage_step_um (float): Stage step [um]
        n_stage (int): Samples per trace
        overlap_mm (float): Nominal overlap stage position [mm]
        raw_width_fs (float): FWHM of the raw-channel overlap peak [fs]
        raw_jitter_steps (float): Peak-to-peak jitter of the raw peak in stage steps
        seed (int): Random seed
    """
    n_traces: int = 94
    noise_rel: float = 0.005
    drift_rel: float = 0.02
    shift_fs: float = 50.2
    shift_after: int = 47
    offset_fs: float = -10.0
    exclude: tuple = (45, 50)
    stage_step_um: float = 5.0
    n_stage: int = 256
    overlap_mm: float = 10.775
    raw_width_fs: float = 168.0
    raw_jitter_steps: float = 1.0
    seed: int = 0

    def segments(self):
        if self.exclude is None:
            return [(0, None)]
        start, stop = self.exclude
        return [(0, int(start)), (int(stop), None)]

    def to_dict(self):
        data = asdict(self)
        data['exclude'] = list(self.exclude) if self.exclude is not None else None
        return data


def synthesize_traces(geom, synth=None, spectrum=None, f_max=8.0, n_samples=1024, settings=None,
                      waveplates='QWP/QWP', progress=True):
    """
    Synthetic acquisition run with known ground truth.

    The simulated vacuum trace is evaluated band-limited at every stage delay,
    shifted by the global offset and, from shift_after on, by the mid-run jump.
    White noise and a random linear drift are added; the raw channel holds a
    Gaussian overlap peak that follows the same delays.

    Args:
        geom (ExperimentGeometry): Simulated geometry
        synth (SynthSettings): Run parameters
        spectrum (ComplexSpectrum): Precomputed two-sided spectrum; simulated if None
        f_max, n_samples, settings: Simulation grid when spectrum is None
        waveplates (str): 'HWP/QWP' simulates the source signal, 'QWP/QWP' the vacuum

    Returns:
        RawTraceSet: Traces with ground truth in metadata
    """
    synth = synth or SynthSettings()
    start_time = time.time()
    kind = 'vacuum' if waveplates == 'QWP/QWP' else 'source'
    if spectrum is None:
        _, spectrum = trace(geom, kind, f_max=f_max, n_samples=n_samples, settings=settings, progress=progress)
    rng = np.random.default_rng(synth.seed)

    offsets = np.arange(synth.n_stage) - synth.n_stage // 2
    stage_mm = synth.overlap_mm + offsets * synth.stage_step_um * 1e-3
    delta_t = stage_to_delay(stage_mm - synth.overlap_mm)
    peak = np.max(np.abs(evaluate_trace_at(spectrum, delta_t)))
    acquisition = np.arange(synth.n_traces)
    delays_fs = synth.offset_fs + np.where(acquisition >= synth.shift_after, synth.shift_fs, 0.0)

    raw_sigma = synth.raw_width_fs * 1e-3 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    jitter_fs = (rng.uniform(-0.5, 0.5, synth.n_traces) * synth.raw_jitter_steps
                 * stage_to_delay(synth.stage_step_um * 1e-3) * 1e3)
    values = np.empty((synth.n_traces, synth.n_stage))
    raw = np.empty_like(values)
    span = delta_t[-1] - delta_t[0]
    for j in tqdm(acquisition, desc="Synthesizing traces", disable=not progress):
        shifted = delta_t - delays_fs[j] * 1e-3
        clean = evaluate_trace_at(spectrum, shifted)
        slope, level = rng.uniform(-1.0, 1.0, 2) * synth.drift_rel * peak
        drift = level + slope * (delta_t - delta_t[0]) / span
        values[j] = clean + drift + synth.noise_rel * peak * rng.standard_normal(synth.n_stage)
        centre = (delays_fs[j] + jitter_fs[j]) * 1e-3
        raw[j] = (np.exp(-0.5 * ((delta_t - centre) / raw_sigma) ** 2)
                  + synth.noise_rel * rng.standard_normal(synth.n_stage))

    metadata = {
        'synthetic': True,
        'kind': kind,
        'synth': synth.to_dict(),
        'geometry': geom.to_dict(),
        'ground_truth': {
            'offset_fs': synth.offset_fs,
            'shift_fs': synth.shift_fs,
            'shift_after': synth.shift_after,
            'raw_peak_mm': float(synth.overlap_mm + delay_to_stage(synth.offset_fs * 1e-3)),
            'raw_peak_mm_after_shift': float(synth.overlap_mm + delay_to_stage((synth.offset_fs + synth.shift_fs) * 1e-3)),
        },
    }
    logger.info(f"Synthesized {synth.n_traces} traces in {time.time() - start_time:.2f} seconds")
    return RawTraceSet(stage_mm, values, acquisition, raw, waveplates, 'rf-referenced',
                       synth.segments(), metadata)


def analyze(trace_set, config=None, threads=1):
    """
    Full processing of a trace set.

    Steps: stage grid to delay (checked against the nominal sample step),
    low-pass every trace, average each segment,
    estimate each segment's drift against the first by cross-correlation,
    stitch the unfiltered segment averages on whole samples, fit the zero delay
    of the first segment, average the per-trace spectra with the combined
    delays, and locate the raw-channel overlap peaks.

    Args:
        trace_set (RawTraceSet): Input traces
        config (AnalysisConfig): Pipeline settings
        threads (int): Worker threads for per-trace steps

    Returns:
        AnalysisResult: All intermediate artifacts
    """
    config = config or AnalysisConfig()
    start_time = time.time()
    delta_t = stage_to_delay(trace_set.stage_mm - config.overlap_mm)
    if not np.allclose(np.diff(delta_t), delta_t[1] - delta_t[0]):
        raise ValueError("Stage grid must be uniform")
    step_fs = (delta_t[1] - delta_t[0]) * 1e3
    if abs(step_fs - config.sample_step_fs) > STEP_MATCH_TOLERANCE * config.sample_step_fs:
        logger.error(f"Delay step {step_fs:.3f} fs does not match sample_step_fs {config.sample_step_fs} fs")
        raise SampleStepError(f"Delay step {step_fs:.3f} fs differs from the configured sample step "
                              f"{config.sample_step_fs} fs by more than {STEP_MATCH_TOLERANCE:.0%}")

    raw_traces = [TimeTrace(delta_t, v, 'measured') for v in trace_set.values]
    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        filtered = list(executor.map(lambda t: lowpass(t, config.lowpass_THz), raw_traces))
    filtered_values = np.array([t.values for t in filtered])

    masks = [trace_set.segment_mask(r) for r in trace_set.segments]
    if any(not m.any() for m in masks):
        empty = [r for r, m in zip(trace_set.segments, masks) if not m.any()]
        raise ValueError(f"Empty segments {empty}")
    counts = [int(m.sum()) for m in masks]
    unfiltered_means = [segment_average(trace_set, r, delta_t)[0] for r in trace_set.segments]
    filtered_means = [segment_average(trace_set, r, delta_t, filtered_values)[0] for r in trace_set.segments]

    shifts = [0.0] + [drift_crosscorr(filtered_means[0], seg, config.upsample) for seg in filtered_means[1:]]
    stitched, residuals = stitch_segments(list(zip(unfiltered_means, counts)), shifts)
    quantized = [quantize_shift(s, stitched.dt * 1e3)[0] for s in shifts]

    # Segment shifts are measured against the first segment
    zero_delay = zero_delay_phase_fit(trace_spectrum(filtered_means[0]),
                                      config.phase_band_THz, config.phase_floor)

    kept = np.zeros(trace_set.n_traces, dtype=bool)
    delays = np.zeros(trace_set.n_traces)
    for mask, shift in zip(masks, shifts):
        kept |= mask
        delays[mask] = zero_delay + shift
    average = spectral_average([filtered[i] for i in np.flatnonzero(kept)], delays[kept], config.uncertainty_fs)

    peaks = peak_position_series(trace_set, threads=threads) if trace_set.raw_values is not None else None
    filtered_mean = TimeTrace(delta_t, filtered_values[kept].mean(axis=0), 'measured')

    logger.info(f"Analyzed {int(kept.sum())} of {trace_set.n_traces} traces in {time.time() - start_time:.2f} seconds")
    return AnalysisResult(filtered_mean, stitched, shifts, quantized, residuals, zero_delay, average, peaks)
