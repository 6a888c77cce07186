"""
eos_toolkit.py

Main class tying simulation, consistency checks and trace analysis together.
"""

import os
import logging
import time

import numpy as np
import pandas as pd

from src.eos_signal import (KINDS, ComplexSpectrum, TimeTrace, first_zero_crossing,
                            sweep_beam_distance, traces_both)
from src.fdt import run_fdt_suite
from src.persistence import build_sidecar, read_csv, write_csv, write_json, write_summary_report
from src.trace_analysis import analyze, synthesize_traces
from src.trace_io import load_trace_set, save_analysis, save_trace_set
from src.visualization_generator import VisualizationGenerator

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Accepted error of the recovered zero-delay offset of a synthetic set [fs]
OFFSET_TOLERANCE_FS = 2.0


class EOSToolkit:
    """Main class of the electro-optic sampling toolkit."""

    def __init__(self, config, progress=True):
        """
        Initialize the toolkit.

        Args:
            config (RunConfig): Validated run configuration
            progress (bool): Show progress bars
        """
        self.config = config
        self.progress = progress
        self.geometry = None
        self.traces = {}
        self.spectra = {}
        self.fdt_reports = None
        self.sweep_spectra = None
        self.sweep_summary = None
        self.trace_set = None
        self.analysis = None
        self.last_error = None

    def _fail(self, step, e):
        self.last_error = e
        logger.error(f"Error {step}: {str(e)}")
        return False

    def load_geometry(self):
        """
        Build the experiment geometry from the configuration.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            self.geometry = self.config.geometry()
            logger.info(f"Geometry: tau_fwhm {self.geometry.tau_fwhm} fs, w {self.geometry.w} um, "
                        f"delta_r {self.geometry.delta_r} um, length {self.geometry.length} um")
            return True
        except Exception as e:
            return self._fail("loading geometry", e)

    def simulate(self, kinds=KINDS):
        """
        Compute traces and spectra of the requested kinds.

        Args:
            kinds (tuple): Subset of ('vacuum', 'source')

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            if not self.geometry and not self.load_geometry():
                return False
            start_time = time.time()
            self.traces, self.spectra = traces_both(
                self.geometry, self.config.f_max_THz, self.config.n_freq, self.config.quadrature(),
                self.config.threads, self.progress, kinds=tuple(kinds))
            logger.info(f"Simulated {', '.join(kinds)} in {time.time() - start_time:.2f} seconds")
            return True
        except Exception as e:
            return self._fail("simulating", e)

    def load_simulation(self, directory):
        """
        Read traces and spectra written by save_simulation.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            for kind in KINDS:
                trace = read_csv(os.path.join(directory, f'{kind}_trace.csv'), ['delta_t_ps', 'value'])
                spectrum = read_csv(os.path.join(directory, f'{kind}_spectrum.csv'), ['f_THz', 're', 'im'])
                self.traces[kind] = TimeTrace(trace['delta_t_ps'].to_numpy(), trace['value'].to_numpy(), kind)
                self.spectra[kind] = ComplexSpectrum(
                    spectrum['f_THz'].to_numpy(),
                    spectrum['re'].to_numpy() + 1j * spectrum['im'].to_numpy(), kind)
            if not self.geometry and not self.load_geometry():
                return False
            logger.info(f"Loaded simulation outputs from {directory}")
            return True
        except Exception as e:
            return self._fail("loading simulation outputs", e)

    def check_fdt(self):
        """
        Run the fluctuation-dissipation checks on the current traces and spectra.

        Returns:
            bool: True if the checks ran, False otherwise; see fdt_passed
        """
        try:
            missing = [k for k in KINDS if k not in self.traces]
            if missing:
                logger.error(f"No {', '.join(missing)} simulation available. Call simulate() first.")
                return False
            self.fdt_reports = run_fdt_suite(self.geometry.dielectric, self.traces, self.spectra)
            return True
        except Exception as e:
            return self._fail("checking FDT", e)

    @property
    def fdt_passed(self):
        return bool(self.fdt_reports) and all(r.passed for r in self.fdt_reports)

    def run_sweep(self, distances=None):
        """
        Compute vacuum spectra over beam distances and their first zero crossings.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            if not self.geometry and not self.load_geometry():
                return False
            distances = list(self.config.sweep_distances_um if distances is None else distances)
            self.sweep_spectra = sweep_beam_distance(
                self.geometry, distances, self.config.f_max_THz, self.config.n_freq,
                self.config.quadrature(), self.config.threads, self.progress)
            self.sweep_summary = pd.DataFrame({
                'delta_r_um': [float(d) for d in distances],
                'f_zero_THz': [first_zero_crossing(s) for s in self.sweep_spectra],
            })
            logger.info(f"Sweep zero crossings:\n{self.sweep_summary.to_string(index=False)}")
            return True
        except Exception as e:
            return self._fail("running sweep", e)

    def synthesize(self):
        """
        Generate a synthetic trace set with known ground truth.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            if not self.geometry and not self.load_geometry():
                return False
            self.trace_set = synthesize_traces(
                self.geometry, self.config.synth_settings(), f_max=self.config.f_max_THz,
                n_samples=self.config.n_freq, settings=self.config.quadrature(), progress=self.progress)
            return True
        except Exception as e:
            return self._fail("synthesizing traces", e)

    def load_traces(self, manifest_path):
        """
        Load a trace set from a manifest.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            self.trace_set = load_trace_set(manifest_path)
            return True
        except Exception as e:
            return self._fail("loading traces", e)

    def analyze_traces(self):
        """
        Run the analysis pipeline on the loaded trace set.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            if self.trace_set is None:
                logger.error("No trace set available. Call load_traces() or synthesize() first.")
                return False
            self.analysis = analyze(self.trace_set, self.config.analysis_config(), self.config.threads)
            return True
        except Exception as e:
            return self._fail("analyzing traces", e)

    def get_ground_truth_check(self):
        """
        Compare the analysis with the ground truth of a synthetic set.

        Returns:
            dict: Recovered and injected values with a pass flag, or None without ground truth
        """
        try:
            if self.analysis is None or self.trace_set is None:
                return None
            truth = self.trace_set.metadata.get('ground_truth')
            if not truth:
                return None
            tolerance = self.config.analysis_config().uncertainty_fs
            check = {'offset_tolerance_fs': OFFSET_TOLERANCE_FS, 'shift_tolerance_fs': tolerance,
                     'offset_fs': truth['offset_fs'], 'recovered_offset_fs': self.analysis.zero_delay_fs}
            passed = abs(self.analysis.zero_delay_fs - truth['offset_fs']) <= OFFSET_TOLERANCE_FS
            if len(self.analysis.segment_shifts_fs) > 1 and truth.get('shift_fs'):
                check['shift_fs'] = truth['shift_fs']
                check['recovered_shift_fs'] = self.analysis.segment_shifts_fs[-1]
                passed = passed and abs(self.analysis.segment_shifts_fs[-1] - truth['shift_fs']) <= tolerance
            check['passed'] = bool(passed)
            return check
        except Exception as e:
            logger.error(f"Error comparing with ground truth: {str(e)}")
            return None

    def _windowed(self, trace):
        window = self.config.dt_window_ps
        if not window:
            return trace
        mask = np.abs(trace.delta_t) <= window + 1e-12
        return TimeTrace(trace.delta_t[mask], trace.values[mask], trace.kind)

    def _sidecar(self, command, output_dir, outputs, extra=None):
        node_counts = {'n_kplane': self.config.n_kplane, 'n_freq': self.config.n_freq}
        sidecar = build_sidecar(command, self.config.to_dict(), self.config.grids(), node_counts, outputs, extra)
        if self.geometry is not None:
            sidecar['geometry'] = self.geometry.to_dict()
        write_json(sidecar, os.path.join(output_dir, f'{command}.json'))

    def save_simulation(self, output_dir, svg=False):
        """
        Save traces, spectra, the FDT report if present, a sidecar and optional figures.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            os.makedirs(output_dir, exist_ok=True)
            outputs = []
            for kind, trace in self.traces.items():
                write_csv(self._windowed(trace).to_frame(), os.path.join(output_dir, f'{kind}_trace.csv'))
                write_csv(self.spectra[kind].to_frame(), os.path.join(output_dir, f'{kind}_spectrum.csv'))
                outputs += [f'{kind}_trace.csv', f'{kind}_spectrum.csv']
            extra = {}
            if self.fdt_reports:
                outputs.append(self.save_fdt_report(output_dir))
                extra['fdt_passed'] = self.fdt_passed
            if svg:
                viz = VisualizationGenerator(output_dir)
                windowed = {k: self._windowed(t) for k, t in self.traces.items()}
                outputs += [os.path.basename(viz.plot_time_traces(windowed, self.config.dt_window_ps)),
                            os.path.basename(viz.plot_spectra(self.spectra, min(6.0, self.config.f_max_THz)))]
            self._sidecar('simulate', output_dir, outputs, extra)
            logger.info(f"Simulation results saved to {output_dir}")
            return True
        except Exception as e:
            return self._fail("saving simulation", e)

    def save_fdt_report(self, output_dir):
        path = os.path.join(output_dir, 'fdt_report.json')
        write_json({'passed': self.fdt_passed, 'checks': [r.to_dict() for r in self.fdt_reports]}, path)
        return os.path.basename(path)

    def save_sweep(self, output_dir, svg=False):
        """
        Save one spectrum per distance, the zero-crossing table, a sidecar and an optional figure.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            os.makedirs(output_dir, exist_ok=True)
            outputs = []
            for distance, spectrum in zip(self.sweep_summary['delta_r_um'], self.sweep_spectra):
                name = f'sweep_{distance:g}um_spectrum.csv'
                write_csv(spectrum.to_frame(), os.path.join(output_dir, name))
                outputs.append(name)
            write_csv(self.sweep_summary, os.path.join(output_dir, 'sweep_summary.csv'))
            outputs.append('sweep_summary.csv')
            if svg:
                viz = VisualizationGenerator(output_dir)
                path = viz.plot_sweep(self.sweep_summary['delta_r_um'], self.sweep_spectra,
                                      self.sweep_summary['f_zero_THz'], min(6.0, self.config.f_max_THz))
                outputs.append(os.path.basename(path))
            self._sidecar('sweep', output_dir, outputs,
                          {'zero_crossings': self.sweep_summary.to_dict(orient='records')})
            return True
        except Exception as e:
            return self._fail("saving sweep", e)

    def save_trace_set(self, output_dir):
        """
        Save the current trace set with its manifest and ground truth.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            manifest = save_trace_set(self.trace_set, output_dir)
            outputs = [os.path.basename(manifest)]
            truth = self.trace_set.metadata.get('ground_truth')
            if truth:
                write_json(truth, os.path.join(output_dir, 'ground_truth.json'))
                outputs.append('ground_truth.json')
            self._sidecar('synth', output_dir, outputs, {'n_traces': self.trace_set.n_traces})
            return True
        except Exception as e:
            return self._fail("saving trace set", e)

    def save_analysis(self, output_dir, svg=False):
        """
        Save all analysis artifacts, a sidecar and optional figures.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            outputs = save_analysis(self.analysis, output_dir)
            extra = {'analysis': self.analysis.summary()}
            check = self.get_ground_truth_check()
            if check is not None:
                extra['ground_truth_check'] = check
            if svg:
                viz = VisualizationGenerator(output_dir)
                outputs += [os.path.basename(p) for p in
                            viz.plot_analysis(self.analysis, self.config.analysis_config().lowpass_THz)]
            self._sidecar('analyze', output_dir, outputs, extra)
            return True
        except Exception as e:
            return self._fail("saving analysis", e)

    def save_summary_report(self, output_dir, command, entries):
        """
        Write summary_report.md for a command.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            write_summary_report(os.path.join(output_dir, 'summary_report.md'),
                                 f"{command.capitalize()} Summary Report", entries)
            return True
        except Exception as e:
            return self._fail("writing summary report", e)
