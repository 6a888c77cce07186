"""
persistence.py

Atomic CSV/JSON writers and the JSON sidecar that documents a run.
"""

import json
import logging
import os
import platform
import tempfile
from datetime import datetime

import numpy as np
import pandas as pd
import scipy

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12e'


class CsvFormatError(ValueError):
    """A CSV input lacks required columns."""


def _atomic_write(path, write):
    """Write through a temporary file in the target directory, then rename over path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp_', dir=directory)
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            write(f)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_json(data, path):
    """Write data as indented JSON; numpy scalars and arrays are converted."""
    _atomic_write(path, lambda f: json.dump(_to_builtin(data), f, indent=2))
    logger.info(f"Saved {path}")
    return path


def read_json(path):
    with open(path, 'r') as f:
        return json.load(f)


def write_csv(frame, path):
    """Write a DataFrame as CSV with a fixed float format."""
    _atomic_write(path, lambda f: frame.to_csv(f, index=False, float_format=FLOAT_FORMAT))
    logger.info(f"Saved {path}")
    return path


def read_csv(path, columns=None):
    """
    Read a CSV file and check its columns.

    Args:
        path (str): File path
        columns (list): Columns that must be present

    Returns:
        pd.DataFrame: The table
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"CSV file not found: {path}")
    frame = pd.read_csv(path)
    missing = [c for c in (columns or []) if c not in frame.columns]
    if missing:
        raise CsvFormatError(f"{path} lacks columns {missing}")
    return frame


def library_versions():
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
    }


def build_sidecar(command, config, grids=None, node_counts=None, outputs=None, extra=None):
    """
    Describe one run: the command, the full configuration, grids, node counts and versions.

    Args:
        command (str): CLI verb
        config (dict): Configuration echo (RunConfig.to_dict())
        grids (dict): Frequency and delay grid parameters
        node_counts (dict): Quadrature node counts
        outputs (list): Written file names
        extra (dict): Command-specific results

    Returns:
        dict: Sidecar contents
    """
    sidecar = {
        'command': command,
        'config': config,
        'grids': grids or {},
        'node_counts': node_counts or {},
        'outputs': sorted(outputs or []),
        'versions': library_versions(),
    }
    if extra:
        sidecar.update(extra)
    return sidecar


def write_summary_report(path, title, entries):
    """
    Write a short Markdown report of a run.

    Args:
        path (str): Output path
        title (str): Report title
        entries (dict): Key-value lines; nested dicts become sections
    """
    def write(f):
        f.write(f"# {title}\n\n")
        f.write(f"* Date: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
        for key, value in entries.items():
            if isinstance(value, dict):
                f.write(f"\n## {key}\n\n")
                for sub_key, sub_value in value.items():
                    f.write(f"* {sub_key}: {sub_value}\n")
            else:
                f.write(f"* {key}: {value}\n")

    _atomic_write(path, write)
    logger.info(f"Summary report saved to {path}")
    return path
