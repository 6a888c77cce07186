import numpy as np
import pytest
from scipy.integrate import quad

from src.constants import C_UM_PER_PS, ENVELOPE_PEAK
from src.eos_signal import (ComplexSpectrum, ExperimentGeometry, QuadratureSettings, evaluate_trace_at,
                            first_zero_crossing, frequency_grid, longitudinal_factor, pulse_envelope,
                            signal_pair, spectra, spectral_kernel_src, spectral_kernel_vac,
                            spectrum_to_trace, sweep_beam_distance, time_reduce, trace, transverse_kernel_pair,
                            zero_crossings)


def _quad_complex(func, a, b):
    re = quad(lambda u: func(u).real, a, b, limit=400, epsabs=0, epsrel=1e-13)[0]
    im = quad(lambda u: func(u).imag, a, b, limit=400, epsabs=0, epsrel=1e-13)[0]
    return re + 1j * im


@pytest.mark.parametrize("bl", [0.0, 0.3, 0.999, 1.001, 5.0, 40.0, 2.0 + 0.5j, -3.0])
def test_longitudinal_factor(bl):
    length = 1000.0
    b = bl / length
    expected = _quad_complex(lambda u: (length - u) * np.exp(1j * b * u), 0.0, length)
    value = longitudinal_factor(np.array([b]), length)[0]
    assert abs(value - expected) <= 1e-9 * abs(expected)


def test_longitudinal_factor_at_zero():
    assert longitudinal_factor(np.array([0.0]), 20.0)[0] == pytest.approx(200.0)


def test_pulse_envelope_peaks_on_group_front(geometry):
    z = 300.0
    t = geometry.dielectric.n_g * z / C_UM_PER_PS
    assert pulse_envelope(geometry, 1, (0.0, 0.0, z), t) == pytest.approx(ENVELOPE_PEAK)
    assert pulse_envelope(geometry, 2, (geometry.delta_r, 0.0, z), t + 0.2, delta_t=0.2) == pytest.approx(ENVELOPE_PEAK)
    assert pulse_envelope(geometry, 1, (geometry.w, 0.0, z), t) == pytest.approx(ENVELOPE_PEAK * np.exp(-2.0))
    with pytest.raises(ValueError):
        pulse_envelope(geometry, 3, (0.0, 0.0, 0.0), 0.0)


def test_time_reduce_matches_quadrature(geometry):
    f, z = 2.0, 0.0
    omega = 2.0 * np.pi * f
    tau = geometry.tau_sigma
    expected = _quad_complex(lambda t: np.exp(-2.0 * t ** 2 / tau ** 2) * np.exp(1j * omega * t), -2.0, 2.0)
    weight, phase = time_reduce(geometry, f, z)
    assert weight * phase == pytest.approx(expected, rel=1e-10)


def test_geometry_defaults_and_validation(geometry):
    assert geometry.tau_sigma == pytest.approx(0.1321, abs=1e-4)
    assert geometry.with_delta_r(30.0).delta_r == 30.0
    assert geometry.to_dict()['dielectric']['eps_inf'] == 7.38
    with pytest.raises(ValueError):
        ExperimentGeometry(w=0.0)
    with pytest.raises(ValueError):
        ExperimentGeometry(delta_r=-1.0)


def test_frequency_grid():
    f = frequency_grid(8.0, 512)
    assert len(f) == 512
    assert f[256] == 0.0
    assert f[0] == pytest.approx(-8.0)
    assert np.allclose(np.diff(f), 2.0 * 8.0 / 512)
    with pytest.raises(ValueError):
        frequency_grid(8.0, 511)
    with pytest.raises(ValueError):
        frequency_grid(-1.0, 512)


def test_spectrum_to_trace_of_gaussian():
    sigma = 0.2
    f = frequency_grid(8.0, 512)
    spectrum = ComplexSpectrum(f, np.exp(-(2.0 * np.pi * f * sigma) ** 2 / 2.0), 'vacuum')
    time_trace, imag_residual = spectrum_to_trace(spectrum)
    expected = np.sqrt(2.0 * np.pi) / sigma * np.exp(-time_trace.delta_t ** 2 / (2.0 * sigma ** 2))
    np.testing.assert_allclose(time_trace.values, expected, atol=1e-10 * expected.max())
    assert imag_residual <= 1e-10 * expected.max()
    np.testing.assert_allclose(time_trace.delta_t, -time_trace.delta_t[::-1], atol=1e-12)
    np.testing.assert_allclose(evaluate_trace_at(spectrum, time_trace.delta_t), time_trace.values,
                               atol=1e-10 * expected.max())


def test_zero_crossings():
    f = np.linspace(0.0, 4.0, 401)
    values = np.cos(np.pi * f / 2.0)
    np.testing.assert_allclose(zero_crossings(f, values), [1.0, 3.0], atol=1e-3)
    np.testing.assert_allclose(zero_crossings(f, values, band=(2.0, 4.0)), [3.0], atol=1e-3)
    spectrum = ComplexSpectrum(f - 2.0, np.ones_like(f), 'vacuum')
    assert np.isnan(first_zero_crossing(spectrum))


def test_source_relates_to_vacuum(geometry, coarse_settings):
    # Kbar comes from its own node set, so the relation holds to quadrature accuracy
    for f in (0.5, 2.0, 3.5):
        s_vac, s_src = signal_pair(geometry, f, coarse_settings)
        assert abs(s_src.imag + 0.5 * s_vac.real) <= 1e-6 * abs(s_src)
        assert abs(s_vac.imag) <= 1e-6 * abs(s_src)


def test_conjugate_kernel_is_independent(geometry, coarse_settings):
    shortcut = QuadratureSettings(n_kplane=coarse_settings.n_kplane, independent_conjugate=False)
    for f in (0.5, 2.0, 3.5):
        kernel, kernel_bar = transverse_kernel_pair(geometry, f, coarse_settings)
        assert kernel_bar != np.conj(kernel)
        assert abs(kernel_bar - np.conj(kernel)) <= 1e-6 * abs(kernel)
        assert transverse_kernel_pair(geometry, f, shortcut) == (kernel, np.conj(kernel))
        s_vac, s_src = signal_pair(geometry, f, shortcut)
        assert s_src.imag == pytest.approx(-0.5 * s_vac.real, rel=1e-12)
        assert s_vac == pytest.approx(signal_pair(geometry, f, coarse_settings)[0], rel=1e-5)


def test_kernel_symmetries(geometry, coarse_settings):
    src = spectral_kernel_src(geometry, 1.5, coarse_settings)
    assert spectral_kernel_src(geometry, -1.5, coarse_settings) == pytest.approx(np.conj(src))
    with pytest.raises(ValueError):
        spectral_kernel_src(geometry, 0.0, coarse_settings)
    with pytest.raises(ValueError):
        spectral_kernel_vac(geometry, -1.0, coarse_settings)
    with pytest.raises(ValueError):
        signal_pair(geometry, 0.0, coarse_settings)


def test_signal_scaling(geometry, coarse_settings):
    base = signal_pair(geometry, 1.0, coarse_settings)
    calibrated = signal_pair(ExperimentGeometry(calibration=2.0), 1.0, coarse_settings)
    brighter = signal_pair(ExperimentGeometry(envelope_amplitude=2.0), 1.0, coarse_settings)
    assert calibrated[0] == pytest.approx(2.0 * base[0], rel=1e-12)
    assert brighter[1] == pytest.approx(4.0 * base[1], rel=1e-12)


def test_coincident_beams_positive(coarse_settings):
    geom = ExperimentGeometry(delta_r=0.0)
    f = np.array([0.3, 1.0, 2.0, 3.0, 4.0])
    s_vac, _ = spectra(geom, f, coarse_settings, progress=False)
    assert np.all(s_vac.real > 0)


def test_worker_count_does_not_change_spectra(geometry, coarse_settings):
    f = np.linspace(0.25, 4.0, 16)
    single = spectra(geometry, f, coarse_settings, threads=1, progress=False)
    pooled = spectra(geometry, f, coarse_settings, threads=4, progress=False)
    np.testing.assert_array_equal(single[0], pooled[0])
    np.testing.assert_array_equal(single[1], pooled[1])


def test_trace_rejects_unknown_kind(geometry):
    with pytest.raises(ValueError):
        trace(geometry, 'thermal')


def test_empty_sweep_rejected(geometry):
    with pytest.raises(ValueError):
        sweep_beam_distance(geometry, [])


@pytest.mark.slow
def test_vacuum_trace_is_even_with_central_maximum(reference_run):
    traces, _ = reference_run
    vac = traces['vacuum']
    peak = np.max(np.abs(vac.values))
    assert np.max(np.abs(vac.values - vac.values[::-1])) <= 1e-6 * peak
    assert vac.delta_t[np.argmax(vac.values)] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.slow
def test_source_trace_is_causal(reference_run):
    traces, _ = reference_run
    src = traces['source']
    energy = src.values ** 2
    assert energy[src.delta_t < -0.3].sum() <= 0.01 * energy.sum()


@pytest.mark.slow
def test_signal_level_fdt(reference_run):
    _, spectra_out = reference_run
    vac, src = spectra_out['vacuum'], spectra_out['source']
    band = (vac.f >= 0.5) & (vac.f <= 4.5)
    residual = np.max(np.abs(src.values[band].imag + 0.5 * vac.values[band].real))
    assert residual <= 1e-3 * np.max(np.abs(vac.values.real))
    assert src.hermitian_residual() <= 1e-12 * np.max(np.abs(src.values))


@pytest.mark.slow
def test_vacuum_spectral_shape(geometry):
    settings = QuadratureSettings(n_kplane=2048)
    rising = np.array([0.25, 0.5, 1.0, 1.5])
    fine = np.arange(2.0, 3.0 + 1e-9, 0.05)
    edge = np.arange(4.4, 4.6 + 1e-9, 0.05)
    s_rising, _ = spectra(geometry, rising, settings, progress=False)
    s_fine, _ = spectra(geometry, fine, settings, progress=False)
    s_edge, _ = spectra(geometry, edge, settings, progress=False)

    assert np.all(s_rising.real > 0)
    assert np.all(np.diff(s_rising.real) > 0)
    assert len(zero_crossings(fine, s_fine)) == 1
    # The band edge near 4.5 THz is a node of S_vac
    assert len(zero_crossings(edge, s_edge)) >= 1


@pytest.mark.slow
def test_vacuum_decorrelates_with_distance(geometry):
    settings = QuadratureSettings(n_kplane=2048)
    f = np.linspace(0.1, 6.0, 60)
    near, _ = spectra(geometry, f, settings, progress=False)
    far, _ = spectra(geometry.with_delta_r(400.0), f, settings, progress=False)
    assert np.max(np.abs(far.real)) <= 0.02 * np.max(np.abs(near.real))


@pytest.mark.slow
def test_zero_crossing_moves_down_with_distance(geometry):
    settings = QuadratureSettings(n_kplane=2048)
    near, far = sweep_beam_distance(geometry, [30.0, 50.0], f_max=6.0, n_samples=256,
                                    settings=settings, progress=False)
    assert first_zero_crossing(near) > first_zero_crossing(far)


@pytest.mark.slow
def test_grid_refinement_stability(geometry):
    f = np.linspace(0.1, 4.5, 45)
    coarse, _ = spectra(geometry, f, QuadratureSettings(n_kplane=2048), progress=False)
    fine, _ = spectra(geometry, f, QuadratureSettings(n_kplane=4096), progress=False)
    rms = np.sqrt(np.mean((fine.real - coarse.real) ** 2)) / np.sqrt(np.mean(fine.real ** 2))
    assert rms <= 5e-3
