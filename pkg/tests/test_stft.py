import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from tfmod.corpus import gaussian, modulated_gaussian, random_bandlimited, random_localized, trig_poly
from tfmod.grid import GridFunction, lp_norm, make_grid
from tfmod.stft import (
    STFTMatrix,
    Window,
    check_gelfand_shilov,
    gaussian_window,
    inner,
    involution,
    istft,
    modulate,
    partition_window,
    periodic_coefficients,
    periodic_partition_residual,
    stft,
    stft_convolution,
    stft_spectral,
    translate,
    verify_identities,
)
from tfmod.grid import forward_transform


@pytest.fixture(scope="module")
def spec():
    return make_grid(1, 128, 4 * math.pi)


def test_translate_examples(spec):
    f = random_localized(spec, 1)
    assert np.array_equal(translate(f, 0.0).values, f.values)
    a = 5 * spec.dx
    assert np.allclose(translate(translate(f, a), -a).values, f.values)
    e = GridFunction(spec, np.exp(1j * spec.axis()))
    assert np.allclose(translate(e, a).values, np.exp(-1j * a) * e.values, atol=1e-13)
    with pytest.raises(ValueError):
        translate(f, 0.3 * spec.dx)


def test_modulate_examples(spec):
    f = random_localized(spec, 2)
    assert np.allclose(modulate(f, 0.0).values, f.values)
    xi0 = 3 * spec.dxi
    m = modulate(f, xi0)
    assert np.allclose(np.abs(m.values), np.abs(f.values), rtol=1e-14)
    lhs = forward_transform(m).coefficients
    rhs = np.roll(forward_transform(f).coefficients, 3)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10
    with pytest.raises(ValueError):
        modulate(f, 0.5 * spec.dxi)


def test_involution_examples(spec):
    f = random_localized(spec, 3)
    assert np.allclose(involution(involution(f)).values, f.values)
    g = gaussian(spec)
    assert np.allclose(involution(g).values, g.values)
    e = GridFunction(spec, np.exp(1j * spec.axis()))
    assert np.allclose(involution(e).values, e.values, atol=1e-13)
    x = spec.axis()
    assert involution(GridFunction(spec, x + 0j)).values[1] == pytest.approx(x[-1])


def _defining_integral(x, xi):
    """(2 pi)^{-1/2} int e^{-t^2/2} pi^{-1/4} e^{-(t-x)^2/2} e^{-i xi t} dt by scipy quadrature."""
    w = math.pi**-0.25

    def part(fn):
        return integrate.quad(lambda t: fn(t) * math.exp(-t * t / 2 - (t - x) ** 2 / 2) * w, -30, 30,
                              epsabs=1e-14, limit=400)[0]

    re = part(lambda t: math.cos(xi * t))
    im = part(lambda t: -math.sin(xi * t))
    return (re + 1j * im) / math.sqrt(2 * math.pi)


def test_gaussian_stft_matches_quadrature():
    spec = make_grid(1, 256, 8 * math.pi)
    f, phi = gaussian(spec), gaussian_window(spec)
    V = stft(f, phi).values
    rng = np.random.default_rng(0)
    ix = rng.integers(96, 160, 25)
    im = rng.integers(96, 160, 25)
    x, xi = spec.axis(), spec.freq_axis()
    ref = np.array([_defining_integral(x[i], xi[j]) for i, j in zip(ix, im)])
    got = V[ix, im]
    assert np.max(np.abs(got - ref)) <= 1e-6 * np.max(np.abs(V))
    # |V| is a Gaussian in (x, xi) with exponent -(x^2 + xi^2)/4
    mag = np.abs(V[ix, im])
    assert np.allclose(mag / mag.max(), np.exp(-(x[ix] ** 2 + xi[im] ** 2) / 4)
                       / np.exp(-(x[ix] ** 2 + xi[im] ** 2) / 4).max(), rtol=1e-6)


def test_zero_function(spec):
    phi = gaussian_window(spec)
    z = GridFunction(spec, np.zeros(spec.N))
    assert not np.any(stft(z, phi).values)
    assert not np.any(stft_spectral(z, phi).values)
    assert not np.any(istft(STFTMatrix(spec, np.zeros((spec.N, spec.N))), phi, phi).values)


def test_spectral_form_agrees(spec):
    phi = gaussian_window(spec)
    f = random_bandlimited(spec, 4.0, 5) * 1.0
    f = GridFunction(spec, f.values * gaussian(spec, 2.0).values)
    assert np.max(np.abs(stft(f, phi).values - stft_spectral(f, phi).values)) <= 1e-8


def test_gaussian_self_stft_symmetric():
    spec = make_grid(1, 128, 4 * math.pi)  # dx * dxi grid is square: 2L/N = pi/16 vs pi/L = 1/4
    phi = gaussian_window(spec)
    V = np.abs(stft_spectral(phi.g, phi).values)
    x, xi = spec.axis(), spec.freq_axis()
    # compare |V(x, xi)| at matched radii through the closed form
    model = np.exp(-(x[:, None] ** 2 + xi[None, :] ** 2) / 4)
    assert np.max(np.abs(V / V.max() - model)) <= 1e-8


def test_mismatched_spec_rejected(spec):
    other = make_grid(1, 64, 4 * math.pi)
    with pytest.raises(ValueError):
        stft(random_localized(spec, 0), gaussian_window(other))


def test_window_rejects_zero(spec):
    with pytest.raises(ValueError):
        Window(GridFunction(spec, np.zeros(spec.N)))


@pytest.mark.parametrize("seed", range(5))
def test_identity_suite(spec, seed):
    f = random_localized(spec, seed)
    phi = gaussian_window(spec, 1.0)
    gamma = gaussian_window(spec, 0.6 + 0.3 * seed)
    rep = verify_identities(f, phi, gamma)
    assert rep.max_deviation <= 1e-8, rep.deviations
    assert rep.domination_margin <= 1e-10
    assert set(rep.deviations) == {"inner_product", "fourier_of_product", "spectral", "convolution",
                                   "spectral_convolution"}


def test_self_inner_product_at_origin(spec):
    phi = gaussian_window(spec, 1.3)
    V = stft(phi.g, phi).values
    c = spec.N // 2
    assert V[c, c] == pytest.approx((2 * math.pi) ** -0.5 * lp_norm(phi.g, 2) ** 2, rel=1e-13)


def test_convolution_form_against_direct_sum(spec):
    f = random_localized(spec, 9)
    phi = gaussian_window(spec, 0.8)
    C = stft_convolution(f, phi)
    rng = np.random.default_rng(4)
    x, xi = spec.axis(), spec.freq_axis()
    N = spec.N
    for _ in range(10):
        i, m = rng.integers(0, N, 2)
        shifted = np.roll(phi.g.values, i - N // 2)  # phi(t - x_i), periodic
        direct = np.sum(f.values * np.conj(shifted) * np.exp(-1j * xi[m] * x)) * spec.dx / math.sqrt(2 * math.pi)
        assert abs(C[i, m] - direct) <= 1e-8


def test_near_orthogonal_windows_rejected(spec):
    phi = gaussian_window(spec)
    gamma = Window(modulate(phi.g, 40 * spec.dxi))
    assert abs(inner(gamma.g, phi.g)) < 1e-8
    with pytest.raises(ValueError):
        verify_identities(phi.g, phi, gamma)
    with pytest.raises(ValueError):
        istft(stft(phi.g, phi), gamma, phi)


def test_translation_covariance(spec):
    f = random_localized(spec, 6, spread=1.0)
    phi = gaussian_window(spec)
    j = 9
    x0 = j * spec.dx
    lhs = stft(translate(f, x0), phi).values
    rhs = np.exp(-1j * spec.freq_axis()[None, :] * x0) * np.roll(stft(f, phi).values, j, axis=0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


@given(st.integers(0, 5000), st.floats(0.5, 2.0))
def test_isometry_property(seed, width):
    spec = make_grid(1, 128, 4 * math.pi)
    f = random_localized(spec, seed)
    phi = gaussian_window(spec, width)
    assert stft(f, phi).l2_norm() == pytest.approx(lp_norm(f, 2) * lp_norm(phi.g, 2), rel=1e-6)


@pytest.mark.parametrize("w_gamma", [1.0, 0.5, 2.5])
def test_inversion(spec, w_gamma):
    f = random_localized(spec, 12)
    phi = gaussian_window(spec)
    gamma = gaussian_window(spec, w_gamma)
    rec = istft(stft(f, phi), gamma, phi)
    assert lp_norm(rec - f, 2) <= 1e-6 * lp_norm(f, 2)


def test_inversion_complex_windows(spec):
    f = random_localized(spec, 13)
    phi = Window(modulated_gaussian(spec, 1.0, 0.0, 2 * spec.dxi))
    gamma = Window(modulated_gaussian(spec, 1.4, 0.0, 1 * spec.dxi))
    rec = istft(stft(f, phi), gamma, phi)
    assert lp_norm(rec - f, 2) <= 1e-6 * lp_norm(f, 2)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 3.0])
def test_gaussian_window_decay_class(spec, s):
    C, eps = check_gelfand_shilov(gaussian_window(spec), s)
    assert C > 0 and eps > 0


def test_gaussian_decay_rate_value(spec):
    _, eps = check_gelfand_shilov(gaussian_window(spec), 0.5)
    assert eps == pytest.approx(0.5, rel=1e-5)


# ------------------------------------------------------- periodic coefficients


@pytest.fixture(scope="module")
def pspec():
    return make_grid(1, 256, 4 * math.pi)


def test_partition_window(pspec):
    assert periodic_partition_residual(partition_window(pspec)) <= 1e-12


def test_periodic_coefficients_examples(pspec):
    phi = partition_window(pspec)
    x = pspec.axis()
    c = periodic_coefficients(GridFunction(pspec, np.exp(1j * x)), phi, 3)
    assert c[(1,)] == pytest.approx(1.0, abs=1e-8)
    assert max(abs(v) for k, v in c.items() if k != (1,)) <= 1e-8
    c = periodic_coefficients(GridFunction(pspec, 2 * np.cos(x)), phi, 3)
    assert c[(1,)] == pytest.approx(1.0, abs=1e-8) and c[(-1,)] == pytest.approx(1.0, abs=1e-8)


def test_periodic_coefficients_random_trig(pspec):
    rng = np.random.default_rng(7)
    a = {(k,): complex(*rng.standard_normal(2)) for k in range(-2, 3)}
    f = trig_poly(pspec, a)
    c = periodic_coefficients(f, partition_window(pspec), 4)
    for k in range(-4, 5):
        assert abs(c[(k,)] - a.get((k,), 0)) <= 1e-8


def test_periodic_coefficients_bad_window(pspec):
    with pytest.raises(ValueError):
        periodic_coefficients(gaussian(pspec), gaussian_window(pspec), 2)
