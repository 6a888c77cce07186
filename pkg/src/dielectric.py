"""
dielectric.py

THz permittivity and refractive index of the electro-optic crystal.
"""

import json
import logging
from dataclasses import dataclass, asdict

import numpy as np

from src.constants import C_UM_PER_PS

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Parameter-file keys and the matching DielectricModel fields
PARAM_KEYS = {
    'eps_inf': 'eps_inf',
    'f_TO_THz': 'f_TO',
    'f_LO_THz': 'f_LO',
    'gamma_THz': 'gamma',
    'n_g': 'n_g',
    'temperature_K': 'temperature',
}


@dataclass(frozen=True)
class DielectricModel:
    """
    Single Lorentz-oscillator model of the crystal in the THz band.

    Attributes:
        eps_inf (float): High-frequency permittivity
        f_TO (float): TO-phonon frequency [THz]
        f_LO (float): LO-phonon frequency [THz]
        gamma (float): Damping rate [THz]
        n_g (float): Near-infrared group index of the probe
        temperature (float): Crystal temperature [K]
    """
    eps_inf: float = 7.38
    f_TO: float = 5.31
    f_LO: float = 6.18
    gamma: float = 0.025
    n_g: float = 3.18
    temperature: float = 4.0

    def __post_init__(self):
        if not self.eps_inf > 0:
            raise ValueError(f"eps_inf must be positive, got {self.eps_inf}")
        if not self.f_LO > self.f_TO > 0:
            raise ValueError(f"Need f_LO > f_TO > 0, got f_TO={self.f_TO}, f_LO={self.f_LO}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.n_g > 1:
            raise ValueError(f"n_g must exceed 1, got {self.n_g}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature}")

    @property
    def lst_ratio(self):
        """Static-to-high-frequency permittivity ratio (f_LO/f_TO)^2."""
        return (self.f_LO / self.f_TO) ** 2

    def to_dict(self):
        """Return the model in parameter-file form."""
        fields = asdict(self)
        return {key: fields[name] for key, name in PARAM_KEYS.items()}

    @classmethod
    def from_dict(cls, params):
        """
        Build a model from a parameter-file dictionary.

        Args:
            params (dict): Mapping with the parameter-file keys; unknown keys are ignored

        Returns:
            DielectricModel: The model
        """
        kwargs = {name: float(params[key]) for key, name in PARAM_KEYS.items() if key in params}
        return cls(**kwargs)


def load_parameter_file(path):
    """
    Read a crystal parameter file.

    :param path: Path to the JSON parameter file
    :return: Dictionary with the raw file contents
    """
    with open(path, 'r') as f:
        params = json.load(f)
    logger.info(f"Loaded crystal parameters from {path}")
    return params


def load_dielectric(path):
    """Load a DielectricModel from a crystal parameter file."""
    model = DielectricModel.from_dict(load_parameter_file(path))
    logger.info(f"Static permittivity {model.eps_inf * model.lst_ratio:.3f}, "
                f"eps_inf {model.eps_inf:.3f}, gamma {model.gamma} THz")
    return model


def _as_frequency(f):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        logger.error("Non-finite frequency passed to the dielectric model")
        raise ValueError("Frequency must be finite")
    return f


def permittivity(model, f):
    """
    Complex permittivity eps(f) of the single-oscillator model.

    eps(f) = eps_inf * (1 + (f_LO^2 - f_TO^2) / (f_TO^2 - f^2 - i f gamma)),
    written in ordinary frequency so that eps(-f) = conj(eps(f)).

    Args:
        model (DielectricModel): Crystal model
        f (float or np.ndarray): Frequency [THz], may be negative

    Returns:
        complex or np.ndarray: Permittivity
    """
    f = _as_frequency(f)
    strength = model.f_LO ** 2 - model.f_TO ** 2
    denominator = model.f_TO ** 2 - f ** 2 - 1j * f * model.gamma
    eps = model.eps_inf * (1.0 + strength / denominator)
    return eps[()] if eps.ndim == 0 else eps


def refractive_index(model, f):
    """
    Complex refractive index n = sqrt(eps) on the passive branch.

    The principal root is flipped where needed so that Im n >= 0 for f > 0;
    negative frequencies follow from n(-f) = conj(n(f)).

    Args:
        model (DielectricModel): Crystal model
        f (float or np.ndarray): Frequency [THz]

    Returns:
        complex or np.ndarray: Refractive index
    """
    f = _as_frequency(f)
    n = np.sqrt(permittivity(model, np.abs(f)) + 0j)
    n = np.where(n.imag < 0, -n, n)
    n = np.where(f < 0, np.conj(n), n)
    return n[()] if n.ndim == 0 else n


def wavenumber(model, f):
    """THz wavenumber k = n(f) 2 pi f / c [rad/um]."""
    f = _as_frequency(f)
    return refractive_index(model, f) * 2.0 * np.pi * f / C_UM_PER_PS
