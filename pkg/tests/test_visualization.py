import numpy as np

from src.eos_signal import ComplexSpectrum, TimeTrace, frequency_grid
from src.visualization_generator import VisualizationGenerator


def test_figures_are_reproducible(tmp_path):
    f = frequency_grid(8.0, 128)
    s_vac = f ** 2 * np.exp(-(f / 1.5) ** 2)
    spectra = {'vacuum': ComplexSpectrum(f, s_vac, 'vacuum'),
               'source': ComplexSpectrum(f, 0.2 * s_vac - 0.5j * s_vac * np.sign(f), 'source')}
    t = np.linspace(-2.0, 2.0, 81)
    traces = {'vacuum': TimeTrace(t, np.exp(-t ** 2), 'vacuum')}

    paths = []
    for name in ('a', 'b'):
        viz = VisualizationGenerator(str(tmp_path / name))
        paths.append([viz.plot_time_traces(traces, 2.0), viz.plot_spectra(spectra, 6.0)])
    for first, second in zip(*paths):
        assert first.endswith('.svg')
        assert open(first, 'rb').read() == open(second, 'rb').read()
