import numpy as np
import pytest
from scipy.signal import hilbert

from src.constants import HBAR, MU0
from src.correlators import (GreenEvalRequest, angular_bracket, correlation_C, green_xx_closed_form,
                             green_xx_im_coincidence, green_xx_weyl, response_R, response_kernel_time,
                             sample_correlator, thermal_factor, weyl_integrate_xx)
from src.dielectric import wavenumber
from src.kplane import kz_of


def _random_points(n, seed=7):
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < n:
        sep = rng.uniform(-100.0, 100.0, 3)
        if np.linalg.norm(sep) >= 15.0:
            points.append((sep, rng.uniform(0.3, 4.0)))
    return points


def test_weyl_matches_closed_form(model):
    for sep, f in _random_points(20):
        closed = green_xx_closed_form(GreenEvalRequest(sep, f, model))
        weyl = weyl_integrate_xx(model, sep, f)
        assert abs(weyl - closed) <= 1e-6 * abs(closed), (sep, f)


@pytest.mark.parametrize("sep, f", [
    ((60.0, 10.0, 5.0), 1.0),     # transverse dominated
    ((10.0, 5.0, 80.0), 3.0),     # longitudinal dominated
    ((0.0, 0.0, 50.0), 2.0),      # on axis
])
def test_weyl_both_contours(model, sep, f):
    closed = green_xx_closed_form(GreenEvalRequest(np.array(sep), f, model))
    assert weyl_integrate_xx(model, sep, f) == pytest.approx(closed, rel=1e-6)


def test_weyl_rejects_coincidence(model):
    with pytest.raises(ValueError):
        weyl_integrate_xx(model, (0.0, 0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        weyl_integrate_xx(model, (10.0, 0.0, 0.0), 0.0)


def test_closed_form_rejects_coincidence(model):
    with pytest.raises(ValueError):
        green_xx_closed_form(GreenEvalRequest(np.zeros(3), 1.0, model))


def test_coincidence_limit(lossless_model):
    f = 1.0
    k = wavenumber(lossless_model, f).real
    sep = 0.01 / k * np.ones(3) / np.sqrt(3.0)
    im_d = np.imag(green_xx_closed_form(GreenEvalRequest(sep, f, lossless_model)))
    assert im_d == pytest.approx(green_xx_im_coincidence(lossless_model, f), rel=1e-3)
    assert green_xx_im_coincidence(lossless_model, f) == pytest.approx(k / (6.0 * np.pi))


def test_correlation_symmetries(model):
    r, r_prime = np.zeros(3), np.array([40.0, 10.0, 25.0])
    f = np.linspace(0.1, 6.0, 60)
    c_pos = correlation_C(model, r, r_prime, f)
    np.testing.assert_allclose(correlation_C(model, r, r_prime, -f), c_pos, rtol=1e-14)
    np.testing.assert_allclose(correlation_C(model, r_prime, r, f), c_pos, rtol=1e-14)
    np.testing.assert_allclose(response_R(model, r, r_prime, -f), np.conj(response_R(model, r, r_prime, f)),
                               rtol=1e-14)
    assert response_R(model, r, r_prime, 0.0) == 0.0


def test_correlation_at_coincidence(model):
    r = np.array([1.0, 2.0, 3.0])
    f = 1.5
    expected = HBAR * MU0 * (2.0 * np.pi * f) ** 2 * green_xx_im_coincidence(model, f) / (2.0 * np.pi)
    assert correlation_C(model, r, r, f) == pytest.approx(expected)
    assert correlation_C(model, r, r, -f) == pytest.approx(expected)


def test_thermal_factor():
    f = np.array([0.5, 1.0, 3.0])
    np.testing.assert_array_equal(thermal_factor(f, 0.0), np.ones(3))
    assert thermal_factor(1.0, 4.0) == pytest.approx(1.0, rel=1e-3)
    assert thermal_factor(1.0, 300.0) > 5.0
    with pytest.raises(ValueError):
        thermal_factor(0.0, 4.0)
    with pytest.raises(ValueError):
        thermal_factor(1.0, -1.0)


def test_thermal_correlation_scales(model):
    r, r_prime = np.zeros(3), np.array([30.0, 0.0, 0.0])
    cold = correlation_C(model, r, r_prime, 1.0)
    warm = correlation_C(model, r, r_prime, 1.0, temperature=300.0)
    assert warm == pytest.approx(cold * thermal_factor(1.0, 300.0))


def test_response_kernel_is_causal(model):
    t, kernel = response_kernel_time(model, (0.0, 0.0, 0.0), (0.0, 0.0, 100.0),
                                     f_max=20.0, n_freq=16384, window_THz=4.0)
    peak = np.max(np.abs(kernel))
    assert np.max(np.abs(kernel[t < 0])) <= 1e-4 * peak
    assert np.max(np.abs(kernel.imag)) <= 1e-6 * peak
    # Nothing arrives before the high-frequency light cone n_inf R / c
    assert t[np.argmax(np.abs(kernel))] > 0.8


def test_weyl_weight_azimuthal_average(model):
    f, q, rho, phi0, dz = 1.3, 0.07, 25.0, 0.4, 12.0
    k = wavenumber(model, f)
    phi = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
    kx, ky = q * np.cos(phi), q * np.sin(phi)
    weight = green_xx_weyl(kx, ky, dz, f, model)
    average = np.mean(weight * np.exp(1j * q * rho * np.cos(phi - phi0)))
    kz = kz_of(k, q)
    expected = (1j / (8.0 * np.pi ** 2) * np.exp(1j * kz * dz) / kz
                * angular_bracket(q, k, rho, np.cos(2.0 * phi0)))
    assert average == pytest.approx(expected, rel=1e-12)
    assert green_xx_weyl(q, 0.0, -dz, f, model) == pytest.approx(green_xx_weyl(q, 0.0, dz, f, model))


def test_samples_match_direct_evaluation(model):
    r, r_prime = np.array([0.0, 5.0, 0.0]), np.array([40.0, -10.0, 30.0])
    f = np.array([-2.0, 0.5, 3.0])
    c_samples = sample_correlator(model, r, r_prime, f, 'C')
    r_samples = sample_correlator(model, r_prime, r, f, 'R')
    assert [s.f for s in c_samples] == [-2.0, 0.5, 3.0]
    assert all(s.kind == 'C' and s.value.imag == 0.0 for s in c_samples)
    np.testing.assert_allclose([s.value for s in c_samples], correlation_C(model, r, r_prime, f), rtol=1e-15)
    # Reciprocity of the bulk Green tensor
    np.testing.assert_allclose([s.value for s in r_samples], response_R(model, r, r_prime, f), rtol=1e-12)
    with pytest.raises(ValueError):
        sample_correlator(model, r, r_prime, f, 'D')


def test_response_obeys_kramers_kronig(model):
    # Band-limited R(f) of a causal kernel: Im R is the Hilbert transform of Re R over f
    n, f_max = 16384, 20.0
    f = (np.arange(n) - n // 2) * (2.0 * f_max / n)
    values = response_R(model, (0.0, 0.0, 0.0), (0.0, 0.0, 100.0), f) * np.exp(-(f / 4.0) ** 2)
    scale = np.max(np.abs(values))
    np.testing.assert_allclose(np.imag(hilbert(values.real)), values.imag, atol=1e-4 * scale)
    np.testing.assert_allclose(-np.imag(hilbert(values.imag)), values.real, atol=1e-4 * scale)
