"""
correlators.py

Bulk dyadic Green tensor (xx component) of the crystal and the THz field
correlation and response functions derived from it.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import hankel1e, jv

from src.constants import C_UM_PER_PS, HBAR, H_PLANCK, K_B, MU0, THZ
from src.dielectric import refractive_index, wavenumber
from src.kplane import deformed_path, hankel_path, kz_of

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Weyl contours switch when the branch-cut integral would cancel beyond e^4
HANKEL_MAX_KZ_PHASE = 4.0


@dataclass(frozen=True)
class GreenEvalRequest:
    """
    Evaluation point of the Green tensor.

    Attributes:
        separation (np.ndarray): r - r' [um], shape (..., 3)
        f (float or np.ndarray): Frequency [THz]
        model (DielectricModel): Crystal model
    """
    separation: np.ndarray
    f: object
    model: object

    @property
    def distance(self):
        return np.linalg.norm(np.asarray(self.separation, dtype=float), axis=-1)


@dataclass(frozen=True)
class CorrelatorSample:
    """Value of C or R at (r, r', f); kind is 'C' or 'R'."""
    r: np.ndarray
    r_prime: np.ndarray
    f: float
    value: complex
    kind: str


def _green_xx(k, rx, dist):
    """Closed-form D_xx for wavenumber k, x-separation rx and distance dist."""
    kr = k * dist
    kr2 = kr * kr
    cos_x2 = (rx / dist) ** 2
    bracket = (1.0 + (1j * kr - 1.0) / kr2) + ((3.0 - 3j * kr - kr2) / kr2) * cos_x2
    return np.exp(1j * kr) / (4.0 * np.pi * dist) * bracket


def green_xx_closed_form(req):
    """
    Closed-form xx component of the bulk Green tensor.

    D_xx = e^{ikR}/(4 pi R) [(1 + (ikR - 1)/(kR)^2) + ((3 - 3ikR - (kR)^2)/(kR)^2) (R_x/R)^2]

    Args:
        req (GreenEvalRequest): Separation, frequency and crystal model

    Returns:
        complex or np.ndarray: D_xx [1/um]
    """
    sep = np.asarray(req.separation, dtype=float)
    dist = np.linalg.norm(sep, axis=-1)
    if np.any(dist <= 0):
        logger.error("Closed-form Green tensor requested at coincidence")
        raise ValueError("Coincident points: use green_xx_im_coincidence")
    f = np.asarray(req.f, dtype=float)
    if np.any(f == 0):
        raise ValueError("Closed-form Green tensor is singular at f = 0")
    k = wavenumber(req.model, f)
    return _green_xx(k, sep[..., 0], dist)


def green_xx_im_coincidence(model, f):
    """
    Im D_xx(r, r, f) = Re n(f) (2 pi f / c) / (6 pi).

    Exact in a lossless medium; with damping the Re n form is kept as the
    regularized coincidence value.
    """
    f = np.asarray(f, dtype=float)
    value = np.real(refractive_index(model, f)) * 2.0 * np.pi * f / C_UM_PER_PS / (6.0 * np.pi)
    return value[()] if value.ndim == 0 else value


def green_xx_weyl(kx, ky, dz, f, model):
    """
    Plane-wave weight of the Weyl representation of D_xx.

    D_xx(R) = (i / 8 pi^2) * Integral d^2k_par (1 - kx^2/k^2) e^{i k_par.rho} e^{i kz |dz|} / kz

    Args:
        kx, ky (float or np.ndarray): Transverse wavevector [rad/um]
        dz (float): Longitudinal separation [um]
        f (float): Frequency [THz]
        model (DielectricModel): Crystal model

    Returns:
        complex or np.ndarray: Integrand weight without the e^{i k_par.rho} factor
    """
    k = wavenumber(model, f)
    kx = np.asarray(kx, dtype=complex)
    ky = np.asarray(ky, dtype=complex)
    kz = kz_of(k, np.sqrt(kx * kx + ky * ky))
    return 1j / (8.0 * np.pi ** 2) * (1.0 - kx * kx / (k * k)) * np.exp(1j * kz * abs(dz)) / kz


def angular_bracket(q, k, rho, cos2phi, bessel=jv):
    """
    Azimuthal integral of the Weyl weight divided by 2 pi.

    J0(q rho)(1 - q^2/2k^2) + (q^2/2k^2) cos(2 phi0) J2(q rho); pass the scaled
    Hankel function to obtain the Sommerfeld-contour version.
    """
    ratio = q * q / (2.0 * k * k)
    return bessel(0, q * rho) * (1.0 - ratio) + ratio * cos2phi * bessel(2, q * rho)


def _hankel_bessel(order, z):
    return hankel1e(order, z) * np.exp(1j * z)


def weyl_integrate_xx(model, separation, f, panels_per_oscillation=2):
    """
    Evaluate D_xx by numerically integrating its Weyl representation.

    The azimuth is integrated analytically. The radial integral runs on the
    Sommerfeld branch-cut contour when the transverse distance dominates and
    on the deformed real-axis path otherwise.

    Args:
        model (DielectricModel): Crystal model
        separation (array-like): r - r' [um]
        f (float): Frequency [THz], f > 0
        panels_per_oscillation (int): Resolution knob of the composite rule

    Returns:
        complex: D_xx [1/um]
    """
    sep = np.asarray(separation, dtype=float)
    rho = float(np.hypot(sep[0], sep[1]))
    dz = abs(float(sep[2]))
    if rho == 0 and dz == 0:
        raise ValueError("Weyl integral diverges at coincidence")
    if f <= 0:
        raise ValueError(f"Weyl integration needs f > 0, got {f}")
    k = complex(wavenumber(model, f))
    cos2phi = (sep[0] ** 2 - sep[1] ** 2) / rho ** 2 if rho > 0 else 0.0

    if rho > 0.25 * dz and k.real * dz <= HANKEL_MAX_KZ_PHASE:
        u_max = np.sqrt(50.0 / rho)
        n_panels = int(np.ceil(panels_per_oscillation * u_max ** 2 * dz / np.pi)) + 16
        q, w, measure = hankel_path(k, u_max, n_panels)
        integrand = q * angular_bracket(q, k, rho, cos2phi, bessel=_hankel_bessel) * np.cos(w * dz)
        return complex(np.sum(integrand * measure) / (4.0 * np.pi))

    u_max = np.sqrt(60.0 / dz)
    n_seg = int(np.ceil(panels_per_oscillation * abs(k) * (dz + rho) / np.pi)) + 8
    n_ray = int(np.ceil(panels_per_oscillation * u_max ** 2 * rho / np.pi)) + 8
    nodes = deformed_path(k, u_max, n_seg, n_ray)
    integrand = angular_bracket(nodes.q, k, rho, cos2phi) * np.exp(1j * nodes.kz * dz)
    return complex(1j / (4.0 * np.pi) * np.sum(integrand * nodes.measure))


def _omega(f):
    return 2.0 * np.pi * np.asarray(f, dtype=float)


def response_R(model, r, r_prime, f):
    """
    Frequency-domain response function R = mu0 Omega^2 D_xx / (2 pi).

    Args:
        model (DielectricModel): Crystal model
        r, r_prime (array-like): Positions [um], shape (..., 3)
        f (float or np.ndarray): Frequency [THz]

    Returns:
        complex or np.ndarray: R(r, r', f); zero at f = 0
    """
    f = np.asarray(f, dtype=float)
    sep = np.asarray(r, dtype=float) - np.asarray(r_prime, dtype=float)
    safe_f = np.where(f == 0, 1.0, f)
    d = green_xx_closed_form(GreenEvalRequest(sep, safe_f, model))
    value = np.where(f == 0, 0.0, MU0 * _omega(f) ** 2 * d / (2.0 * np.pi))
    return value[()] if np.ndim(value) == 0 else value


def _im_green_xx(model, sep, f):
    dist = np.linalg.norm(sep, axis=-1)
    coincident = dist == 0
    safe_sep = np.where(coincident[..., None], np.array([1.0, 0.0, 0.0]), sep)
    safe_f = np.where(f == 0, 1.0, f)
    k = wavenumber(model, safe_f)
    im_d = np.imag(_green_xx(k, safe_sep[..., 0], np.linalg.norm(safe_sep, axis=-1)))
    return np.where(coincident, green_xx_im_coincidence(model, safe_f), im_d)


def correlation_C(model, r, r_prime, f, temperature=0.0):
    """
    Symmetrized field correlation C = hbar mu0 sgn(f) Omega^2 Im D_xx / (2 pi).

    Coincident points use the regularized Im D_xx. A positive temperature
    multiplies the result by thermal_factor.

    Args:
        model (DielectricModel): Crystal model
        r, r_prime (array-like): Positions [um], shape (..., 3)
        f (float or np.ndarray): Frequency [THz]
        temperature (float): Field temperature [K]

    Returns:
        float or np.ndarray: C(r, r', f), real and even in f
    """
    f = np.asarray(f, dtype=float)
    sep = np.asarray(r, dtype=float) - np.asarray(r_prime, dtype=float)
    im_d = _im_green_xx(model, sep, f)
    value = HBAR * MU0 * np.sign(f) * _omega(f) ** 2 * im_d / (2.0 * np.pi)
    if temperature > 0:
        value = value * thermal_factor(np.where(f == 0, 1.0, f), temperature)
    return value[()] if np.ndim(value) == 0 else value


def thermal_factor(f, T):
    """
    Bose-Einstein enhancement coth(h|f| / 2 k_B T) of the symmetrized correlator.

    Args:
        f (float or np.ndarray): Frequency [THz]
        T (float): Temperature [K]

    Returns:
        float or np.ndarray: 1 at T = 0
    """
    if T < 0:
        raise ValueError(f"Temperature must be non-negative, got {T}")
    f = np.abs(np.asarray(f, dtype=float))
    if T == 0:
        return np.ones_like(f)[()] if f.ndim == 0 else np.ones_like(f)
    if np.any(f == 0):
        logger.error("Thermal factor requested at f = 0 with T > 0")
        raise ValueError("Thermal factor diverges at f = 0 for T > 0")
    x = H_PLANCK * f * THZ / (2.0 * K_B * T)
    value = 1.0 / np.tanh(x)
    return value[()] if value.ndim == 0 else value


def sample_correlator(model, r, r_prime, f, kind, temperature=0.0):
    """
    Evaluate C or R for one point pair, one CorrelatorSample per frequency.

    Args:
        model (DielectricModel): Crystal model
        r, r_prime (array-like): Positions [um], shape (3,)
        f (array-like): Frequencies [THz]
        kind (str): 'C' or 'R'
        temperature (float): Field temperature of C [K]

    Returns:
        list: CorrelatorSample per frequency, in input order
    """
    if kind not in ('C', 'R'):
        raise ValueError(f"kind must be 'C' or 'R', got {kind}")
    r = np.asarray(r, dtype=float)
    r_prime = np.asarray(r_prime, dtype=float)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if kind == 'C':
        values = np.atleast_1d(correlation_C(model, r, r_prime, f, temperature))
    else:
        values = np.atleast_1d(response_R(model, r, r_prime, f))
    return [CorrelatorSample(r, r_prime, float(fj), complex(v), kind) for fj, v in zip(f, values)]


def response_kernel_time(model, r, r_prime, f_max, n_freq, window_THz=None):
    """
    Time-domain response kernel R(t) = Integral dOmega R(Omega) e^{-i Omega t}.

    Sampled on a two-sided frequency grid of n_freq points up to f_max and
    transformed with the project-wide convention. An optional Gaussian spectral
    window exp(-(f/window_THz)^2) band-limits the growing Omega^2 prefactor.
    The f = 0 bin carries the quasi-static limit.

    Returns:
        tuple: (t [ps], kernel) with t centred on zero
    """
    df = 2.0 * f_max / n_freq
    f = np.fft.fftfreq(n_freq, d=1.0 / (n_freq * df))
    f[0] = 1e-3 * df
    values = response_R(model, np.asarray(r), np.asarray(r_prime), f)
    values[0] = values[0].real
    if window_THz is not None:
        values = values * np.exp(-(f / window_THz) ** 2)
    kernel = 2.0 * np.pi * df * np.fft.fft(values)
    t = np.fft.fftfreq(n_freq, d=df)
    return np.fft.fftshift(t), np.fft.fftshift(kernel)
