"""
eos_signal.py

Vacuum-fluctuation and source-radiation correlation signals of two-beam
electro-optic sampling, computed from an analytically time-reduced,
Weyl-expanded frequency-domain kernel.

Conventions: G(dt) = Integral dOmega S(Omega) e^{-i Omega dt}. Pulse 1 is the
source pulse (half-wave plate line) at the origin; pulse 2 is the probe
(quarter-wave plate line) displaced by delta_r along x and delayed by dt.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.special import jv
from tqdm import tqdm

from src.constants import C_UM_PER_PS, ENVELOPE_PEAK, HBAR, MU0
from src.correlators import angular_bracket, thermal_factor
from src.dielectric import DielectricModel, wavenumber
from src.kplane import PANEL_ORDER, deformed_path, real_axis_path

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

KINDS = ('vacuum', 'source')

# Gaussian cross-section truncation: q w / sqrt(8) = 6
GAUSS_CUTOFF = 6.0

# Weak-absorption criterion Im k * max(delta_r, w) for the deformed contour
WEAK_ABSORPTION = 1.0

# Gauss order of the node set that integrates Kbar
ALTERNATE_PANEL_ORDER = 12

# Relative |Kbar - conj(K)| above which the k-plane grid is reported as too coarse
CONJUGATE_TOLERANCE = 1e-4


@dataclass(frozen=True)
class ExperimentGeometry:
    """
    Pulse and beam geometry inside the crystal.

    Attributes:
        tau_fwhm (float): Intensity FWHM of each pulse [fs]
        w (float): Gaussian beam waist [um]
        delta_r (float): Beam separation along x [um]
        length (float): Crystal length [um]
        dielectric (DielectricModel): THz response of the crystal
        temperature (float): Temperature [K]
        calibration (float): Overall scale applied to all signals
        envelope_amplitude (float): Multiplier of the (2/pi)^{3/2} envelope peak
    """
    tau_fwhm: float = 110.0
    w: float = 10.0
    delta_r: float = 50.0
    length: float = 1000.0
    dielectric: DielectricModel = field(default_factory=DielectricModel)
    temperature: float = 4.0
    calibration: float = 1.0
    envelope_amplitude: float = 1.0

    def __post_init__(self):
        for name in ('tau_fwhm', 'w', 'length'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.delta_r >= 0:
            raise ValueError(f"delta_r must be non-negative, got {self.delta_r}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature}")

    @property
    def tau_sigma(self):
        """Envelope width tau_sigma = tau_fwhm / sqrt(ln 2) [ps]."""
        return self.tau_fwhm * 1e-3 / np.sqrt(np.log(2.0))

    def with_delta_r(self, delta_r):
        return replace(self, delta_r=float(delta_r))

    def to_dict(self):
        data = asdict(self)
        data['dielectric'] = self.dielectric.to_dict()
        data['tau_sigma_ps'] = self.tau_sigma
        return data


@dataclass(frozen=True)
class QuadratureSettings:
    """
    Node counts of the k-plane quadrature.

    Attributes:
        n_kplane (int): Total radial nodes, split evenly between the two path legs
        thermal (bool): Multiply the vacuum signal by the thermal factor
        independent_conjugate (bool): Integrate Kbar on its own node set instead of taking conj(K)
    """
    n_kplane: int = 2048
    thermal: bool = False
    independent_conjugate: bool = True

    @property
    def panels_per_leg(self):
        return max(self.n_kplane // (2 * PANEL_ORDER), 4)


@dataclass
class TimeTrace:
    """Correlation trace on a uniform delay grid symmetric about zero."""
    delta_t: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.delta_t = np.asarray(self.delta_t, dtype=float)
        self.values = np.asarray(self.values)
        if self.delta_t.shape != self.values.shape:
            raise ValueError("delay grid and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace values must be finite")

    @property
    def dt(self):
        return float(self.delta_t[1] - self.delta_t[0])

    def to_frame(self):
        return pd.DataFrame({'delta_t_ps': self.delta_t, 'value': np.real(self.values)})


@dataclass
class ComplexSpectrum:
    """Complex spectrum on a uniform two-sided frequency grid."""
    f: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.f.shape != self.values.shape:
            raise ValueError("frequency grid and values differ in length")

    @property
    def df(self):
        return float(self.f[1] - self.f[0])

    def positive(self):
        """Return (f, values) restricted to f > 0."""
        mask = self.f > 0
        return self.f[mask], self.values[mask]

    def at(self, f):
        """Linear interpolation of the spectrum at f [THz]."""
        return (np.interp(f, self.f, self.values.real)
                + 1j * np.interp(f, self.f, self.values.imag))

    def hermitian_residual(self):
        """max |S(-f) - conj S(f)| over the grid pairs present."""
        f_pos, v_pos = self.positive()
        mirrored = self.at(-f_pos)
        return float(np.max(np.abs(mirrored - np.conj(v_pos)))) if len(f_pos) else 0.0

    def to_frame(self):
        return pd.DataFrame({'f_THz': self.f, 're': self.values.real, 'im': self.values.imag})


def pulse_envelope(geom, pulse_index, r, t, delta_t=0.0):
    """
    Gaussian pulse envelope L(r, t).

    L1(r, t) = (2/pi)^{3/2} exp(-2 (t - n_g z/c)^2 / tau_sigma^2) exp(-2 r_par^2 / w^2),
    L2(r, t) = L1(r - delta_r e_x, t - delta_t), with r_par = (x, y).

    Args:
        geom (ExperimentGeometry): Geometry
        pulse_index (int): 1 (source) or 2 (probe)
        r (array-like): Position [um], shape (..., 3)
        t (float or np.ndarray): Time [ps]
        delta_t (float): Delay of pulse 2 [ps]

    Returns:
        float or np.ndarray: Envelope value
    """
    if pulse_index not in (1, 2):
        raise ValueError(f"pulse_index must be 1 or 2, got {pulse_index}")
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    t = np.asarray(t, dtype=float)
    if pulse_index == 2:
        x = x - geom.delta_r
        t = t - delta_t
    n_g = geom.dielectric.n_g
    temporal = np.exp(-2.0 * (t - n_g * z / C_UM_PER_PS) ** 2 / geom.tau_sigma ** 2)
    transverse = np.exp(-2.0 * (x ** 2 + y ** 2) / geom.w ** 2)
    return geom.envelope_amplitude * ENVELOPE_PEAK * temporal * transverse


def time_reduce(geom, f, z=0.0):
    """
    Closed form of the time integral of one pulse against e^{i Omega t}.

    Integral dt exp(-2 (t - n_g z/c)^2 / tau_sigma^2) e^{i Omega t}
        = tau_sigma sqrt(pi/2) e^{-Omega^2 tau_sigma^2 / 8} * e^{i Omega n_g z / c}

    Returns:
        tuple: (spectral weight, longitudinal phase factor)
    """
    omega = 2.0 * np.pi * np.asarray(f, dtype=float)
    tau = geom.tau_sigma
    weight = tau * np.sqrt(np.pi / 2.0) * np.exp(-omega ** 2 * tau ** 2 / 8.0)
    phase = np.exp(1j * omega * geom.dielectric.n_g * z / C_UM_PER_PS)
    return weight, phase


def pulse_pair_weight(geom, f):
    """Product of both envelope amplitudes and time reductions, P(Omega)."""
    weight, _ = time_reduce(geom, f)
    return (geom.envelope_amplitude * ENVELOPE_PEAK) ** 2 * weight ** 2


def longitudinal_factor(b, length):
    """
    E(b) = Integral_0^L (L - u) e^{i b u} du = L^2 (e^x - 1 - x) / x^2 with x = i b L.

    A Taylor series replaces the closed form for |x| < 1.
    """
    b = np.asarray(b, dtype=complex)
    x = 1j * b * length
    small = np.abs(x) < 1.0
    out = np.empty_like(x)

    xs = x[small]
    series = np.zeros_like(xs)
    term = np.full_like(xs, 0.5)
    for n in range(20):
        series = series + term
        term = term * xs / (n + 3)
    out[small] = length ** 2 * series

    bl = b[~small]
    out[~small] = (1.0 + 1j * bl * length - np.exp(1j * bl * length)) / (bl * bl)
    return out


def _radial_nodes(geom, k, settings, alternate=False):
    """
    k-plane nodes for one frequency.

    The alternate set uses a different Gauss order and panel count on the
    same contour, so no node is shared with the primary set.
    """
    q_max = GAUSS_CUTOFF * np.sqrt(8.0) / geom.w
    u_max = np.sqrt(q_max)
    panels, order = settings.panels_per_leg, PANEL_ORDER
    if alternate:
        order = ALTERNATE_PANEL_ORDER
        panels = int(np.ceil(panels * PANEL_ORDER / ALTERNATE_PANEL_ORDER)) + 1
    if k.imag * max(geom.delta_r, geom.w) <= WEAK_ABSORPTION:
        return deformed_path(k, u_max, panels, panels, order)
    return real_axis_path(k, u_max, panels, panels, order)


def _weighted_green_sum(geom, f, k, a, nodes):
    """Integral of a Gaussian-profile weight with longitudinal phase e^{i a (z' - z)} against D_xx."""
    q, kz = nodes.q, nodes.kz
    common = nodes.measure * np.exp(-q * q * geom.w ** 2 / 4.0) * angular_bracket(q, k, geom.delta_r, 1.0, bessel=jv)
    if not np.all(np.isfinite(common)):
        bad = q[~np.isfinite(common)]
        logger.error(f"Non-finite k-plane integrand at f={f} THz near q={bad[0]}")
        raise RuntimeError(f"k-plane quadrature failed at f={f} THz, q={bad[0]}")
    lam = longitudinal_factor(kz - a, geom.length) + longitudinal_factor(kz + a, geom.length)
    prefactor = 1j / (4.0 * np.pi) * (np.pi * geom.w ** 2 / 2.0) ** 2
    return complex(prefactor * np.sum(common * lam))


def transverse_kernel_pair(geom, f, settings=None):
    """
    Weighted double-volume integrals of D_xx for one positive frequency.

    K    = Integral W D_xx
    Kbar = conj(Integral conj(W) D_xx)

    where W holds both Gaussian cross sections and e^{i Omega n_g (z' - z)/c}.
    Kbar is integrated on its own node set with the n_g phase flipped. With
    settings.independent_conjugate off it is taken as conj(K), which holds
    because the longitudinal factor is even in the phase.

    Returns:
        tuple: (K, Kbar) [um^5]
    """
    settings = settings or QuadratureSettings()
    model = geom.dielectric
    k = complex(wavenumber(model, f))
    a = 2.0 * np.pi * f * model.n_g / C_UM_PER_PS
    kernel = _weighted_green_sum(geom, f, k, a, _radial_nodes(geom, k, settings))
    if not settings.independent_conjugate:
        return kernel, complex(np.conj(kernel))

    alternate = _radial_nodes(geom, k, settings, alternate=True)
    kernel_bar = complex(np.conj(_weighted_green_sum(geom, f, k, -a, alternate)))
    mismatch = abs(kernel_bar - np.conj(kernel)) / max(abs(kernel), np.finfo(float).tiny)
    if mismatch > CONJUGATE_TOLERANCE:
        logger.warning(f"Kbar deviates from conj(K) by {mismatch:.2e} at f={f} THz; "
                       f"n_kplane={settings.n_kplane} may be too coarse")
    else:
        logger.debug(f"Kbar vs conj(K) at f={f} THz: {mismatch:.2e}")
    return kernel, kernel_bar


def signal_pair(geom, f, settings=None):
    """
    Vacuum and source spectra at one positive frequency.

    S_vac = P hbar mu0 Omega^2 / (2 pi) (K - Kbar) / (2i)
    S_src = -(hbar / 2) P mu0 Omega^2 / (2 pi) K

    Returns:
        tuple: (S_vac, S_src) as complex numbers
    """
    settings = settings or QuadratureSettings()
    if not f > 0:
        raise ValueError(f"signal_pair needs f > 0, got {f}")
    kernel, kernel_bar = transverse_kernel_pair(geom, f, settings)
    omega = 2.0 * np.pi * f
    scale = geom.calibration * pulse_pair_weight(geom, f) * MU0 * omega ** 2 / (2.0 * np.pi)
    s_vac = scale * HBAR * (kernel - kernel_bar) / 2j
    if settings.thermal and geom.temperature > 0:
        s_vac = s_vac * thermal_factor(f, geom.temperature)
    s_src = -0.5 * HBAR * scale * kernel
    return complex(s_vac), complex(s_src)


def spectral_kernel_vac(geom, f, settings=None):
    """Vacuum-fluctuation spectrum S_vac(f) for f > 0; even in f."""
    if not f > 0:
        raise ValueError(f"spectral_kernel_vac needs f > 0, got {f}")
    return signal_pair(geom, f, settings)[0]


def spectral_kernel_src(geom, f, settings=None):
    """Source-radiation spectrum S_src(f) for f != 0; Hermitian in f."""
    if f == 0:
        raise ValueError("spectral_kernel_src is evaluated at f != 0; use the quasi-static limit")
    value = signal_pair(geom, abs(f), settings)[1]
    return value if f > 0 else np.conj(value)


def spectra(geom, f, settings=None, threads=1, progress=True):
    """
    Evaluate both spectra on an array of positive frequencies.

    Frequencies are distributed over a thread pool and gathered in grid order,
    so the result does not depend on the worker count.

    Returns:
        tuple: (S_vac array, S_src array)
    """
    settings = settings or QuadratureSettings()
    f = np.asarray(f, dtype=float)
    start_time = time.time()

    def work(fi):
        return signal_pair(geom, float(fi), settings)

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        iterator = executor.map(work, f)
        results = list(tqdm(iterator, total=len(f), desc="Spectral kernel", disable=not progress))

    s_vac = np.array([r[0] for r in results], dtype=complex)
    s_src = np.array([r[1] for r in results], dtype=complex)
    logger.info(f"Evaluated {len(f)} frequencies in {time.time() - start_time:.2f} seconds")
    return s_vac, s_src


def frequency_grid(f_max, n_samples):
    """Two-sided DFT grid f_j = j df, j = -N/2 .. N/2 - 1, df = 2 f_max / N."""
    if n_samples < 8 or n_samples % 2:
        raise ValueError(f"n_samples must be an even number >= 8, got {n_samples}")
    if not f_max > 0:
        raise ValueError(f"f_max must be positive, got {f_max}")
    df = 2.0 * f_max / n_samples
    return np.fft.fftshift(np.fft.fftfreq(n_samples, d=1.0 / (n_samples * df)))


def _two_sided(geom, kind, n_samples, df, s_pos, settings):
    """Assemble a two-sided fftshifted spectrum from values at j df, j = 1 .. N/2."""
    half = n_samples // 2
    values = np.zeros(n_samples, dtype=complex)
    # fftshifted index of f = j df is half + j
    values[half + 1:] = s_pos[:half - 1]
    if kind == 'vacuum':
        values[half - np.arange(1, half + 1)] = s_pos
    else:
        values[half - np.arange(1, half + 1)] = np.conj(s_pos)
        # Quasi-static limit; Hermitian symmetry makes it real
        values[half] = signal_pair(geom, 1e-3 * df, settings)[1].real
    return values


def _check_aliasing(trace):
    values = np.abs(trace.values)
    peak = values.max()
    edge = max(len(values) // 20, 1)
    edge_level = max(values[:edge].max(), values[-edge:].max())
    if peak > 0 and edge_level > 0.01 * peak:
        logger.warning(f"Possible aliasing in {trace.kind} trace: edge level "
                       f"{edge_level / peak:.2%} of peak")
        return True
    return False


def spectrum_to_trace(spectrum):
    """
    Inverse transform of a two-sided fftshifted spectrum.

    G(dt_m) = 2 pi df sum_j S(f_j) e^{-2 pi i f_j dt_m}. The most negative
    delay is dropped so the returned grid is symmetric about zero.

    Returns:
        tuple: (TimeTrace with real values, max |Im G| before taking the real part)
    """
    n = len(spectrum.f)
    df = spectrum.df
    trace = 2.0 * np.pi * df * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(spectrum.values)))
    delta_t = np.fft.fftshift(np.fft.fftfreq(n, d=df))
    imag_residual = float(np.max(np.abs(trace.imag)))
    return TimeTrace(delta_t[1:], trace.real[1:], spectrum.kind), imag_residual


def trace(geom, kind, f_max=8.0, n_samples=1024, settings=None, threads=1, progress=True):
    """
    Correlation trace and spectrum of one kind.

    Args:
        geom (ExperimentGeometry): Geometry
        kind (str): 'vacuum' or 'source'
        f_max (float): Nyquist frequency of the grid [THz]
        n_samples (int): Even number of grid points
        settings (QuadratureSettings): k-plane resolution
        threads (int): Worker threads over frequency

    Returns:
        tuple: (TimeTrace, ComplexSpectrum)
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind}")
    traces, spectra_out = traces_both(geom, f_max, n_samples, settings, threads, progress, kinds=(kind,))
    return traces[kind], spectra_out[kind]


def traces_both(geom, f_max=8.0, n_samples=1024, settings=None, threads=1, progress=True,
                kinds=KINDS):
    """
    Compute traces and spectra for several kinds from one kernel evaluation.

    Returns:
        tuple: (dict kind -> TimeTrace, dict kind -> ComplexSpectrum)
    """
    settings = settings or QuadratureSettings()
    f = frequency_grid(f_max, n_samples)
    df = f[1] - f[0]
    f_pos = df * np.arange(1, n_samples // 2 + 1)
    s_vac, s_src = spectra(geom, f_pos, settings, threads, progress)

    traces_out, spectra_out = {}, {}
    for kind in kinds:
        s_pos = s_vac if kind == 'vacuum' else s_src
        spectrum = ComplexSpectrum(f, _two_sided(geom, kind, n_samples, df, s_pos, settings), kind)
        time_trace, imag_residual = spectrum_to_trace(spectrum)
        logger.info(f"{kind} trace: peak {np.max(np.abs(time_trace.values)):.4e}, "
                    f"imaginary residue {imag_residual:.3e}")
        _check_aliasing(time_trace)
        traces_out[kind] = time_trace
        spectra_out[kind] = spectrum
    return traces_out, spectra_out


def zero_crossings(f, values, band=None):
    """
    Sign changes of a real-valued spectrum, located by linear interpolation.

    Args:
        f (np.ndarray): Frequencies [THz]
        values (np.ndarray): Spectrum (real part is used)
        band (tuple): Optional (f_lo, f_hi) restriction

    Returns:
        np.ndarray: Crossing frequencies [THz]
    """
    f = np.asarray(f, dtype=float)
    v = np.real(np.asarray(values))
    if band is not None:
        mask = (f >= band[0]) & (f <= band[1])
        f, v = f[mask], v[mask]
    idx = np.where(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    return f[idx] - v[idx] * (f[idx + 1] - f[idx]) / (v[idx + 1] - v[idx])


def sweep_beam_distance(geom, distances, f_max=6.0, n_samples=512, settings=None, threads=1,
                        progress=True):
    """
    Vacuum spectra for several beam separations, all else fixed.

    Returns:
        list: ComplexSpectrum per distance, in input order
    """
    distances = list(distances)
    if not distances:
        logger.error("Beam-distance sweep called with no distances")
        raise ValueError("distances must be non-empty")
    settings = settings or QuadratureSettings()
    f = frequency_grid(f_max, n_samples)
    df = f[1] - f[0]
    f_pos = df * np.arange(1, n_samples // 2 + 1)

    results = []
    for distance in distances:
        geom_d = geom.with_delta_r(distance)
        s_vac, _ = spectra(geom_d, f_pos, settings, threads, progress)
        spectrum = ComplexSpectrum(f, _two_sided(geom_d, 'vacuum', n_samples, df, s_vac, settings), 'vacuum')
        results.append(spectrum)
        logger.info(f"Sweep: delta_r = {distance} um done")
    return results


def first_zero_crossing(spectrum, band=(0.5, 6.0)):
    """Lowest sign change of a vacuum spectrum within band, or NaN."""
    f_pos, v_pos = spectrum.positive()
    crossings = zero_crossings(f_pos, v_pos, band)
    return float(crossings[0]) if len(crossings) else float('nan')


def evaluate_trace_at(spectrum, delta_t):
    """
    Band-limited trace G(dt) = 2 pi df sum_j S(f_j) e^{-2 pi i f_j dt} at arbitrary delays.

    Args:
        spectrum (ComplexSpectrum): Two-sided spectrum on a uniform grid
        delta_t (np.ndarray): Delays [ps]

    Returns:
        np.ndarray: Real trace values
    """
    delta_t = np.asarray(delta_t, dtype=float)
    phase = np.exp(-2j * np.pi * np.multiply.outer(delta_t, spectrum.f))
    return (2.0 * np.pi * spectrum.df * phase @ spectrum.values).real
