"""
trace_io.py

Manifest-driven reading and writing of trace sets.

A manifest is a JSON file next to the trace CSVs:

    {
      "waveplates": "QWP/QWP",
      "referencing": "rf-referenced",
      "columns": {"stage": "stage_mm", "value": "value"},
      "stage_scale": 1.0,
      "segments": [[0, 45], [50, null]],
      "traces": [{"file": "trace_000.csv", "acquisition": 0, "raw_file": "raw_000.csv"}, ...],
      "metadata": {...}
    }

"columns" and "stage_scale" (factor to millimetres) let the same reader
ingest files of other layouts, e.g. a published dataset, by editing the
manifest only.
"""

import logging
import os

import numpy as np
import pandas as pd

from src.persistence import read_csv, read_json, write_csv, write_json
from src.trace_analysis import RawTraceSet

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
DEFAULT_COLUMNS = {'stage': 'stage_mm', 'value': 'value'}


class ManifestError(ValueError):
    """Manifest missing, malformed, or pointing at unreadable traces."""


def _read_trace(path, columns, stage_scale):
    try:
        frame = read_csv(path, [columns['stage'], columns['value']])
    except (OSError, ValueError) as e:
        raise ManifestError(f"Cannot read trace {path}: {str(e)}") from e
    return frame[columns['stage']].to_numpy(dtype=float) * stage_scale, frame[columns['value']].to_numpy(dtype=float)


def _segments_from_manifest(manifest):
    segments = manifest.get('segments')
    if segments is None:
        return None
    parsed = []
    for entry in segments:
        if len(entry) != 2:
            raise ManifestError(f"Segment {entry} must be [start, stop]")
        start, stop = entry
        parsed.append((int(start), None if stop is None else int(stop)))
    return parsed


def load_trace_set(manifest_path):
    """
    Load a RawTraceSet from a manifest.

    Args:
        manifest_path (str): Path of the manifest JSON; trace paths are relative to it

    Returns:
        RawTraceSet: Traces sorted by acquisition index
    """
    if not os.path.exists(manifest_path):
        raise ManifestError(f"Manifest not found: {manifest_path}")
    try:
        manifest = read_json(manifest_path)
    except ValueError as e:
        raise ManifestError(f"Manifest {manifest_path} is not valid JSON: {str(e)}") from e

    entries = manifest.get('traces') or []
    if not entries:
        raise ManifestError(f"Manifest {manifest_path} lists no traces")
    base = os.path.dirname(os.path.abspath(manifest_path))
    columns = {**DEFAULT_COLUMNS, **manifest.get('columns', {})}
    stage_scale = float(manifest.get('stage_scale', 1.0))

    entries = sorted(entries, key=lambda e: int(e.get('acquisition', 0)))
    stage_mm, values, raw_values, acquisition = None, [], [], []
    for position, entry in enumerate(entries):
        if 'file' not in entry:
            raise ManifestError(f"Trace entry {position} in {manifest_path} has no 'file'")
        stage, value = _read_trace(os.path.join(base, entry['file']), columns, stage_scale)
        if stage_mm is None:
            stage_mm = stage
        elif len(stage) != len(stage_mm) or not np.allclose(stage, stage_mm):
            raise ManifestError(f"Trace {entry['file']} is on a different stage grid")
        values.append(value)
        acquisition.append(int(entry.get('acquisition', position)))
        if 'raw_file' in entry:
            raw_stage, raw = _read_trace(os.path.join(base, entry['raw_file']), columns, stage_scale)
            if len(raw_stage) != len(stage_mm) or not np.allclose(raw_stage, stage_mm):
                raise ManifestError(f"Raw trace {entry['raw_file']} is on a different stage grid")
            raw_values.append(raw)

    if raw_values and len(raw_values) != len(values):
        raise ManifestError("Raw channel must be given for every trace or for none")

    try:
        trace_set = RawTraceSet(
            stage_mm=stage_mm,
            values=np.array(values),
            acquisition=np.array(acquisition),
            raw_values=np.array(raw_values) if raw_values else None,
            waveplates=manifest.get('waveplates', 'QWP/QWP'),
            referencing=manifest.get('referencing', 'rf-referenced'),
            segments=_segments_from_manifest(manifest),
            metadata=manifest.get('metadata', {}),
        )
    except ValueError as e:
        raise ManifestError(f"Invalid trace set in {manifest_path}: {str(e)}") from e
    logger.info(f"Loaded {trace_set.n_traces} traces from {manifest_path}")
    return trace_set


def save_trace_set(trace_set, directory):
    """
    Write a RawTraceSet as CSVs (stage_mm, value) plus a manifest.

    Returns:
        str: Path of the written manifest
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    for acquisition, values in zip(trace_set.acquisition, trace_set.values):
        name = f"trace_{acquisition:03d}.csv"
        write_csv(pd.DataFrame({'stage_mm': trace_set.stage_mm, 'value': values}), os.path.join(directory, name))
        entry = {'file': name, 'acquisition': int(acquisition)}
        entries.append(entry)
    if trace_set.raw_values is not None:
        for entry, raw in zip(entries, trace_set.raw_values):
            raw_name = f"raw_{entry['acquisition']:03d}.csv"
            write_csv(pd.DataFrame({'stage_mm': trace_set.stage_mm, 'value': raw}), os.path.join(directory, raw_name))
            entry['raw_file'] = raw_name

    manifest = {
        'waveplates': trace_set.waveplates,
        'referencing': trace_set.referencing,
        'columns': dict(DEFAULT_COLUMNS),
        'stage_scale': 1.0,
        'segments': [[start, stop] for start, stop in trace_set.segments],
        'traces': entries,
        'metadata': trace_set.metadata,
    }
    path = os.path.join(directory, MANIFEST_NAME)
    write_json(manifest, path)
    return path


def save_analysis(result, directory):
    """
    Write every artifact of an analysis run.

    Returns:
        list: Names of the written files
    """
    os.makedirs(directory, exist_ok=True)
    written = []

    def csv(frame, name):
        write_csv(frame, os.path.join(directory, name))
        written.append(name)

    csv(result.filtered_mean.to_frame(), 'filtered_mean.csv')
    csv(result.stitched.to_frame(), 'stitched.csv')
    csv(result.average.to_frame(), 'average_spectrum.csv')
    if result.peaks is not None:
        csv(result.peaks, 'peak_positions.csv')
    write_json(result.summary(), os.path.join(directory, 'analysis.json'))
    written.append('analysis.json')
    return written
