"""
run_config.py

Run configuration: loading, validation, JSON round trip, and construction of
the geometry and settings objects used by the commands.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields

from src.dielectric import load_parameter_file, DielectricModel
from src.eos_signal import ExperimentGeometry, QuadratureSettings
from src.persistence import read_json, write_json
from src.trace_analysis import AnalysisConfig, SynthSettings

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

PARAMS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'params')
DEFAULT_CRYSTAL_FILE = os.path.join(PARAMS_DIR, 'znte.json')
DEFAULT_RUN_FILE = os.path.join(PARAMS_DIR, 'default_run.json')


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


@dataclass
class RunConfig:
    """
    Everything a command needs to run reproducibly.

    Geometry overrides left as None take their value from the crystal file
    (length_um, temperature_K) or from ExperimentGeometry defaults.
    """
    crystal_file: str = DEFAULT_CRYSTAL_FILE
    tau_fwhm_fs: float = 110.0
    w_um: float = 10.0
    delta_r_um: float = 50.0
    length_um: float = None
    temperature_K: float = None
    f_max_THz: float = 8.0
    n_freq: int = 1024
    n_kplane: int = 2048
    dt_window_ps: float = None
    output_dir: str = 'output'
    seed: int = 0
    threads: int = 1
    calibration: float = 1.0
    thermal: bool = False
    sweep_distances_um: list = field(default_factory=lambda: [30.0, 50.0])
    synth: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    def validate(self):
        """Raise ConfigError on the first invalid entry."""
        if not os.path.exists(self.crystal_file):
            raise ConfigError(f"Crystal parameter file not found: {self.crystal_file}")
        if self.n_freq < 8 or self.n_freq % 2:
            raise ConfigError(f"n_freq must be an even number >= 8, got {self.n_freq}")
        if self.n_kplane < 64:
            raise ConfigError(f"n_kplane must be at least 64, got {self.n_kplane}")
        if not self.f_max_THz > 0:
            raise ConfigError(f"f_max_THz must be positive, got {self.f_max_THz}")
        if self.dt_window_ps is not None and not self.dt_window_ps > 0:
            raise ConfigError(f"dt_window_ps must be positive, got {self.dt_window_ps}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if any(d < 0 for d in self.sweep_distances_um):
            raise ConfigError(f"Sweep distances must be non-negative, got {self.sweep_distances_um}")
        try:
            self.geometry()
            self.synth_settings()
            self.analysis_config()
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e
        return self

    def crystal_params(self):
        return load_parameter_file(self.crystal_file)

    def geometry(self):
        """ExperimentGeometry with the crystal file and overrides applied."""
        params = self.crystal_params()
        model = DielectricModel.from_dict(params)
        length = self.length_um if self.length_um is not None else params.get('length_um', 1000.0)
        temperature = self.temperature_K if self.temperature_K is not None else model.temperature
        return ExperimentGeometry(
            tau_fwhm=float(self.tau_fwhm_fs),
            w=float(self.w_um),
            delta_r=float(self.delta_r_um),
            length=float(length),
            dielectric=model,
            temperature=float(temperature),
            calibration=float(self.calibration),
        )

    def quadrature(self):
        return QuadratureSettings(n_kplane=int(self.n_kplane), thermal=bool(self.thermal))

    def synth_settings(self):
        data = dict(self.synth)
        data.setdefault('seed', self.seed)
        if data.get('exclude') is not None:
            data['exclude'] = tuple(data['exclude'])
        return SynthSettings(**data)

    def analysis_config(self):
        return AnalysisConfig.from_dict(self.analysis)

    def grids(self):
        df = 2.0 * self.f_max_THz / self.n_freq
        return {
            'f_max_THz': self.f_max_THz,
            'n_freq': self.n_freq,
            'df_THz': df,
            'dt_ps': 1.0 / (self.n_freq * df),
            'dt_window_ps': self.dt_window_ps,
        }

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data, base_dir=None):
        """
        Build a RunConfig from a dictionary.

        Args:
            data (dict): Config entries; unknown keys are rejected
            base_dir (str): Directory against which a relative crystal_file is resolved

        Returns:
            RunConfig: The configuration (not yet validated)
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")
        data = dict(data)
        crystal = data.get('crystal_file')
        if crystal and not os.path.isabs(crystal):
            candidates = [os.path.join(base_dir, crystal)] if base_dir else []
            candidates += [os.path.abspath(crystal), os.path.join(PARAMS_DIR, os.path.basename(crystal))]
            data['crystal_file'] = next((c for c in candidates if os.path.exists(c)), candidates[0])
        return cls(**data)


def load_run_config(path=None):
    """
    Read a RunConfig JSON file; the packaged default is used when path is None.

    Returns:
        RunConfig: Validated configuration
    """
    path = path or DEFAULT_RUN_FILE
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = read_json(path)
    except ValueError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {str(e)}") from e
    config = RunConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    logger.info(f"Loaded run config from {path}")
    return config.validate()


def save_run_config(config, path):
    write_json(config.to_dict(), path)
    return path
