"""Closed-form test functions and reproducible random corpora on a grid."""

from __future__ import annotations

import math

import numpy as np

from .decomposition import bump
from .grid import GridFunction, GridSpec, SpectralFunction, inverse_transform, unitary_prefactor


def gaussian(spec: GridSpec, width: float = 1.0, center=0.0, amplitude: complex = 1.0) -> GridFunction:
    c = np.broadcast_to(np.asarray(center, dtype=float), (spec.n,))
    r2 = sum((x - ci) ** 2 for x, ci in zip(spec.mesh(), c))
    return GridFunction(spec, amplitude * np.exp(-r2 / (2 * width**2)))


def modulated_gaussian(spec: GridSpec, width: float = 1.0, center=0.0, freq=0.0,
                       amplitude: complex = 1.0) -> GridFunction:
    w = np.broadcast_to(np.asarray(freq, dtype=float), (spec.n,))
    phase = sum(wi * x for wi, x in zip(w, spec.mesh()))
    return GridFunction(spec, gaussian(spec, width, center, amplitude).values * np.exp(1j * phase))


def trig_poly(spec: GridSpec, coeffs: dict) -> GridFunction:
    """``sum_alpha a_alpha e^{i alpha.x}`` for integer (or lattice) frequencies ``alpha``."""
    x = spec.mesh()
    out = np.zeros(spec.shape, dtype=complex)
    for alpha, a in coeffs.items():
        alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (spec.n,))
        out += a * np.exp(1j * sum(ai * xi for ai, xi in zip(alpha, x)))
    return GridFunction(spec, out)


def bandlimited_spectrum(spec: GridSpec, radius: float, rng: np.random.Generator,
                         real: bool = False) -> SpectralFunction:
    """Random lattice spectrum tapered by ``prod_i h(xi_i / radius)``, so supported in ``|xi|_inf < radius``."""
    taper = np.ones(())
    for _ in range(spec.n):
        taper = np.multiply.outer(taper, bump(spec.freq_axis() / radius))
    coeffs = (rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)) * taper
    if real:
        coeffs = 0.5 * (coeffs + np.conj(_reflect_spectrum(coeffs, spec.n)))
    return SpectralFunction(spec, coeffs)


def _reflect_spectrum(c: np.ndarray, n: int) -> np.ndarray:
    out = c
    for ax in range(n):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def random_bandlimited(spec: GridSpec, radius: float, seed: int, real: bool = False,
                       normalize: bool = True) -> GridFunction:
    """Random function whose spectrum lies in ``|xi|_inf < radius``; unit L^2 norm by default."""
    rng = np.random.default_rng(seed)
    f = inverse_transform(bandlimited_spectrum(spec, radius, rng, real))
    vals = f.values.real if real else f.values
    f = GridFunction(spec, vals)
    if normalize:
        nrm = math.sqrt(float(np.sum(np.abs(f.values) ** 2)) * spec.cell)
        f = f * (1.0 / nrm)
    return f


def random_localized(spec: GridSpec, seed: int, count: int = 3, max_freq: float = 3.0,
                     spread: float | None = None) -> GridFunction:
    """Sum of random modulated Gaussians times a low-degree polynomial, decaying at the box edge."""
    rng = np.random.default_rng(seed)
    spread = spec.L / 4 if spread is None else spread
    out = np.zeros(spec.shape, dtype=complex)
    for _ in range(count):
        c = rng.uniform(-spread, spread, spec.n)
        w = rng.uniform(-max_freq, max_freq, spec.n)
        width = rng.uniform(0.7, 1.5)
        amp = rng.standard_normal() + 1j * rng.standard_normal()
        poly = 1.0 + sum(rng.standard_normal() * (x - ci) for x, ci in zip(spec.mesh(), c)) / 2
        out += poly * modulated_gaussian(spec, width, c, w, amp).values
    return GridFunction(spec, out)


def evaluate_spectral(F: SpectralFunction, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant ``c dxi^n sum_m F_m e^{i xi_m.x}`` at arbitrary points.

    ``points`` has shape ``(m, n)`` (or ``(m,)`` when ``n == 1``).
    """
    spec = F.spec
    pts = np.asarray(points, dtype=float).reshape(-1, spec.n)
    xi = np.stack([c.ravel() for c in spec.freq_mesh()], axis=1)  # (M, n)
    kern = np.exp(1j * pts @ xi.T)
    return unitary_prefactor(spec.n) * spec.freq_cell * (kern @ F.coefficients.ravel())


def dilated_profile(spec: GridSpec, radius: float, seed: int, degree: int = 4,
                    normalize: bool = True) -> GridFunction:
    """Inverse transform of ``P(xi / radius)``, ``P`` a random polynomial times the bump.

    The same seed gives the same profile at every radius, so the family is a
    dilation family and scale-covariant quantities can be compared across radii.
    """
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((degree + 1,) * spec.n) + 1j * rng.standard_normal((degree + 1,) * spec.n)
    eta = [c / radius for c in spec.freq_mesh()]
    prof = np.zeros(spec.shape, dtype=complex)
    for idx in np.ndindex(coef.shape):
        term = coef[idx]
        for e, j in zip(eta, idx):
            term = term * e**j
        prof += term
    for e in eta:
        prof *= bump(e)
    f = inverse_transform(SpectralFunction(spec, prof))
    if normalize:
        nrm = math.sqrt(float(np.sum(np.abs(f.values) ** 2)) * spec.cell)
        f = f * (1.0 / nrm)
    return f
