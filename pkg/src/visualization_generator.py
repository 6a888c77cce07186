"""
visualization_generator.py

Generates SVG figures of simulated traces, spectra, beam-distance sweeps and
trace-analysis results.
"""

import os
import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

KIND_LABELS = {
    'vacuum': 'Vacuum fluctuations',
    'source': 'Source radiation',
}


class VisualizationGenerator:
    """
    Generates the figures of the simulation and analysis commands.

    Figures are written as SVG with a fixed hash salt and no date stamp, so
    identical data gives identical files:
    - Correlation traces versus delay
    - Real and imaginary parts of the spectra
    - Vacuum spectra of a beam-distance sweep
    - Analysis diagnostics (stitched trace, averaged spectrum with uncertainty band, raw peaks)
    """

    def __init__(self, output_dir):
        """
        Initialize the visualization generator.

        :param output_dir: Directory to save the generated figures
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

        sns.set(style="whitegrid")
        plt.rcParams['figure.figsize'] = (10, 6)
        plt.rcParams['svg.hashsalt'] = 'eos-vacuum'

    def _save(self, name):
        output_path = os.path.join(self.output_dir, name)
        plt.savefig(output_path, format='svg', bbox_inches='tight', metadata={'Date': None})
        plt.close()
        logger.info(f"Generated figure: {output_path}")
        return output_path

    def plot_time_traces(self, traces, window_ps=None):
        """
        Plot correlation traces versus delay.

        :param traces: Dict kind -> TimeTrace
        :param window_ps: Optional half-width of the plotted delay range
        :return: Path to the generated figure
        """
        plt.figure()
        for kind, trace in traces.items():
            plt.plot(trace.delta_t, np.real(trace.values), label=KIND_LABELS.get(kind, kind))
        if window_ps:
            plt.xlim(-window_ps, window_ps)
        plt.axvline(0.0, color='gray', linewidth=0.8)
        plt.title('Temporal electro-optic correlation', fontsize=16)
        plt.xlabel('Delay (ps)', fontsize=14)
        plt.ylabel('G (arb. units)', fontsize=14)
        plt.legend()
        return self._save('time_traces.svg')

    def plot_spectra(self, spectra, f_max=None):
        """
        Plot S_vac and the real and imaginary parts of S_src on f > 0.

        :param spectra: Dict kind -> ComplexSpectrum
        :param f_max: Optional upper frequency limit
        :return: Path to the generated figure
        """
        plt.figure()
        for kind, spectrum in spectra.items():
            f, values = spectrum.positive()
            if kind == 'vacuum':
                plt.plot(f, values.real, label='S_vac')
            else:
                plt.plot(f, values.real, label='Re S_src')
                plt.plot(f, values.imag, label='Im S_src', linestyle='--')
        if f_max:
            plt.xlim(0.0, f_max)
        plt.axhline(0.0, color='gray', linewidth=0.8)
        plt.title('Electro-optic correlations in frequency domain', fontsize=16)
        plt.xlabel('Frequency (THz)', fontsize=14)
        plt.ylabel('S (arb. units)', fontsize=14)
        plt.legend()
        return self._save('spectra.svg')

    def plot_sweep(self, distances, spectra, crossings, f_max=None):
        """
        Plot normalized vacuum spectra for several beam distances.

        :param distances: Beam separations [um]
        :param spectra: ComplexSpectrum per distance
        :param crossings: First zero crossing per distance [THz]
        :return: Path to the generated figure
        """
        plt.figure()
        for distance, spectrum, crossing in zip(distances, spectra, crossings):
            f, values = spectrum.positive()
            scale = np.max(np.abs(values.real)) or 1.0
            line, = plt.plot(f, values.real / scale, label=f'{distance:g} um')
            if np.isfinite(crossing):
                plt.axvline(crossing, color=line.get_color(), linestyle=':', linewidth=1.0)
        if f_max:
            plt.xlim(0.0, f_max)
        plt.axhline(0.0, color='gray', linewidth=0.8)
        plt.title('Vacuum spectrum versus beam distance', fontsize=16)
        plt.xlabel('Frequency (THz)', fontsize=14)
        plt.ylabel('S_vac / max |S_vac|', fontsize=14)
        plt.legend(title='Beam distance')
        return self._save('sweep.svg')

    def plot_analysis(self, result, f_max=5.0):
        """
        Plot the stitched trace, the averaged spectrum with its band and the raw peaks.

        :param result: AnalysisResult
        :param f_max: Upper frequency limit of the spectrum panel
        :return: List of generated figure paths
        """
        generated = []

        plt.figure()
        plt.plot(result.stitched.delta_t, result.stitched.values, label='Stitched (unfiltered)')
        plt.plot(result.filtered_mean.delta_t, result.filtered_mean.values, label='Mean (low-passed)')
        plt.title('Processed correlation trace', fontsize=16)
        plt.xlabel('Delay (ps)', fontsize=14)
        plt.ylabel('G (arb. units)', fontsize=14)
        plt.legend()
        generated.append(self._save('analysis_trace.svg'))

        average = result.average
        f = average.spectrum.f
        mask = f <= f_max
        plt.figure()
        plt.plot(f[mask], average.spectrum.values.real[mask], label='Re')
        plt.fill_between(f[mask], average.re_lo[mask], average.re_hi[mask], alpha=0.3)
        plt.plot(f[mask], average.spectrum.values.imag[mask], label='Im')
        plt.fill_between(f[mask], average.im_lo[mask], average.im_hi[mask], alpha=0.3)
        plt.title('Averaged spectrum with delay uncertainty', fontsize=16)
        plt.xlabel('Frequency (THz)', fontsize=14)
        plt.ylabel('S (arb. units)', fontsize=14)
        plt.legend()
        generated.append(self._save('analysis_spectrum.svg'))

        if result.peaks is not None and not result.peaks.empty:
            plt.figure()
            sns.scatterplot(data=pd.DataFrame(result.peaks), x='acquisition', y='peak_mm', s=40)
            plt.title('Raw-channel overlap peak per trace', fontsize=16)
            plt.xlabel('Acquisition', fontsize=14)
            plt.ylabel('Stage position (mm)', fontsize=14)
            generated.append(self._save('peak_positions.svg'))

        return generated
