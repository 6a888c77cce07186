"""
__init__.py

Initialize the eos_vacuum package.
This file enables Python to recognize the directory as a package.
"""

# Import core classes to make them available at package level
from .dielectric import DielectricModel
from .eos_signal import ExperimentGeometry, QuadratureSettings, TimeTrace, ComplexSpectrum
from .oracle import OracleSettings
from .fdt import FdtReport
from .trace_analysis import RawTraceSet, AnalysisConfig, SynthSettings
from .run_config import RunConfig
from .eos_toolkit import EOSToolkit
