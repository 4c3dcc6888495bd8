"""Discrete short-time Fourier transform on the periodic box.

Every representation of ``V_phi f`` is evaluated on the full phase-space
grid (spatial samples times frequency lattice) and each one is computed by a
separate code path, so agreement between them is a genuine check:

* ``stft``          -- column-wise FFT of ``f * T_x conj(phi)``
* ``stft_spectral`` -- frequency-side form ``e^{-ix.xi} V_{phi^} f^(xi, -x)``
* ``verify_identities`` adds explicit-sum and convolution forms.

Arrays of shape ``spec.shape + spec.shape`` are indexed ``[x..., xi...]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    _same_spec,
    centered_fft,
    centered_ifft,
    convolve_centered,
    forward_transform,
    lp_norm,
    unitary_prefactor,
)

DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class STFTMatrix:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(self.spec.shape * 2)
        if not np.all(np.isfinite(v)):
            raise ValueError("STFT matrix contains NaN or Inf")
        object.__setattr__(self, "values", v)

    def l2_norm(self) -> float:
        s = self.spec
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * s.cell * s.freq_cell))


@dataclass(frozen=True, eq=False)
class Window:
    g: GridFunction
    kind: str = "custom"
    width: float | None = None
    gelfand_shilov_s: float | None = None

    def __post_init__(self):
        if not np.any(self.g.values != 0):
            raise ValueError("window must be nonzero")

    @property
    def spec(self) -> GridSpec:
        return self.g.spec

    def descriptor(self) -> dict:
        return {"kind": self.kind, "width": self.width, "gelfand_shilov_s": self.gelfand_shilov_s}


def gaussian_window(spec: GridSpec, width: float = 1.0, normalize: bool = True) -> Window:
    """``exp(-|x|^2 / (2 width^2))``, unit L^2 norm by default.

    The Gaussian lies in every Gelfand-Shilov class ``S_s`` with ``s >= 1/2``.
    """
    r2 = sum(c**2 for c in spec.mesh())
    g = GridFunction(spec, np.exp(-r2 / (2 * width**2)))
    if normalize:
        g = g * (1.0 / lp_norm(g, 2))
    return Window(g, "gaussian", width, 0.5)


def check_gelfand_shilov(w: Window, s: float, floor: float = 1e-13) -> tuple[float, float]:
    """Fit ``|g|, |g^| <= C exp(-eps |.|^{1/s})`` on the grid and return ``(C, eps)``.

    ``eps`` is the largest rate the samples support: the minimum over grid
    points of ``log(C/|g|) / |x|^{1/s}``, discarding samples below ``floor``
    (relative) which only carry round-off.  A window passes when ``eps > 0``.
    """
    spec = w.spec
    C = 0.0
    eps = math.inf
    pairs = (
        (np.abs(w.g.values), np.sqrt(sum(c**2 for c in spec.mesh()))),
        (np.abs(forward_transform(w.g).coefficients), spec.freq_abs()),
    )
    for mag, radius in pairs:
        C = max(C, float(mag.max()))
    for mag, radius in pairs:
        keep = (mag > floor * C) & (radius > 0)
        if keep.any():
            rates = np.log(C / mag[keep]) / radius[keep] ** (1.0 / s)
            # points inside the unit ball constrain C, not the decay rate
            outer = radius[keep] >= 1.0
            if outer.any():
                eps = min(eps, float(rates[outer].min()))
    return C, eps


def inner(f: GridFunction, g: GridFunction) -> complex:
    """``(f, g)_{L^2} = sum f conj(g) dx^n``."""
    _same_spec(f, g)
    return complex(np.sum(f.values * np.conj(g.values)) * f.spec.cell)


def _shift_of(spec: GridSpec, x0, step: float, what: str) -> tuple[int, ...]:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != spec.n:
        raise ValueError(f"{what} must have {spec.n} components")
    r = np.rint(x0 / step)
    if np.any(np.abs(x0 / step - r) > 1e-9):
        raise ValueError(f"{what}={x0.tolist()} is not on the grid (step {step})")
    return tuple(int(v) for v in r)


def translate(f: GridFunction, x0) -> GridFunction:
    """``(T_x0 f)(x) = f(x - x0)`` with periodic wraparound; ``x0`` must be a grid point."""
    shift = _shift_of(f.spec, x0, f.spec.dx, "x0")
    return GridFunction(f.spec, np.roll(f.values, shift, axis=tuple(range(f.spec.n))))


def modulate(f: GridFunction, xi0) -> GridFunction:
    """``(M_xi0 f)(x) = e^{i xi0.x} f(x)``; ``xi0`` must be a lattice frequency."""
    m = _shift_of(f.spec, xi0, f.spec.dxi, "xi0")
    phase = sum(mi * f.spec.dxi * c for mi, c in zip(m, f.spec.mesh()))
    return GridFunction(f.spec, np.exp(1j * phase) * f.values)


def _reflect(values: np.ndarray, n: int) -> np.ndarray:
    # index i (offset i - N/2) -> offset N/2 - i, i.e. index (N - i) mod N
    out = values
    for ax in range(n):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def involution(f: GridFunction) -> GridFunction:
    """``f*(x) = conj(f(-x))``."""
    return GridFunction(f.spec, np.conj(_reflect(f.values, f.spec.n)))


def _shifted_stack(values: np.ndarray, n: int) -> np.ndarray:
    """``out[j..., i...] = values[i - j + N/2 (mod N)]``, i.e. ``T_{x_j} v`` sampled at ``x_i``."""
    N = values.shape[0]
    idx = []
    for ax in range(n):
        shape = [1] * (2 * n)
        shape[ax] = N
        j = np.arange(N).reshape(shape)
        shape = [1] * (2 * n)
        shape[n + ax] = N
        i = np.arange(N).reshape(shape)
        idx.append((i - j + N // 2) % N)
    return values[tuple(idx)]


def _check_pair(f: GridFunction, phi: Window) -> None:
    _same_spec(f, phi.g)


def stft(f: GridFunction, phi: Window) -> STFTMatrix:
    """``V_phi f(x, .) = F(f * T_x conj(phi))`` for every grid point ``x``."""
    _check_pair(f, phi)
    spec = f.spec
    windows = np.conj(_shifted_stack(phi.g.values, spec.n))
    return STFTMatrix(spec, centered_fft(f.values * windows, spec))


def stft_spectral(f: GridFunction, phi: Window) -> STFTMatrix:
    """Frequency-side STFT: ``e^{-ix.xi} F^{-1}(f^ * T_xi conj(phi^))(x)``."""
    _check_pair(f, phi)
    spec = f.spec
    fh = forward_transform(f).coefficients
    ph = forward_transform(phi.g).coefficients
    # rows indexed by xi, columns by eta
    prod = fh * np.conj(_shifted_stack(ph, spec.n))
    cols = centered_ifft(prod, spec)  # [xi..., x...]
    n = spec.n
    V = np.moveaxis(cols, tuple(range(n)), tuple(range(n, 2 * n)))  # [x..., xi...]
    return STFTMatrix(spec, V * _phase(spec, -1))


def _phase(spec: GridSpec, sign: int) -> np.ndarray:
    """``e^{sign * i x.xi}`` on the phase-space grid."""
    x = spec.axis()
    xi = spec.freq_axis()
    e1 = np.exp(sign * 1j * np.multiply.outer(x, xi))  # [x, xi]
    if spec.n == 1:
        return e1
    out = e1
    for _ in range(spec.n - 1):
        out = np.multiply.outer(out, e1)  # [x1, xi1, x2, xi2, ...]
    order = [2 * a for a in range(spec.n)] + [2 * a + 1 for a in range(spec.n)]
    return np.transpose(out, order)


def _dft_matrix(spec: GridSpec, sign: int) -> np.ndarray:
    """Explicit 1-D kernel ``e^{sign i a b}`` between spatial and frequency samples."""
    return np.exp(sign * 1j * np.multiply.outer(spec.axis(), spec.freq_axis()))


def _explicit_sum(data: np.ndarray, kernel: np.ndarray, n: int) -> np.ndarray:
    """Contract the trailing n axes of ``data`` [a..., s...] with ``kernel[s, b]`` per axis."""
    out = data
    for ax in range(n):
        out = np.tensordot(out, kernel, axes=([n], [0]))  # contracts first trailing axis, appends b
    return out


def stft_inner_product(f: GridFunction, phi: Window) -> np.ndarray:
    """``(2pi)^{-n/2} (f, M_xi T_x phi)`` by explicit summation."""
    spec = f.spec
    windows = np.conj(_shifted_stack(phi.g.values, spec.n))
    data = f.values * windows  # [x..., s...]
    K = _dft_matrix(spec, -1)
    return unitary_prefactor(spec.n) * spec.cell * _explicit_sum(data, K, spec.n)


def stft_fourier_explicit(f: GridFunction, phi: Window) -> np.ndarray:
    """``e^{-ix.xi} F(f^ * T_xi conj(phi^))(-x)`` with the outer transform summed explicitly."""
    spec = f.spec
    n = spec.n
    fh = forward_transform(f).coefficients
    ph = forward_transform(phi.g).coefficients
    data = fh * np.conj(_shifted_stack(ph, n))  # [xi..., eta...]
    # F(h)(-x) = c dxi^n sum_eta h(eta) e^{+i eta x}
    K = np.exp(1j * np.multiply.outer(spec.freq_axis(), spec.axis()))  # [eta, x]
    out = unitary_prefactor(n) * spec.freq_cell * _explicit_sum(data, K, n)  # [xi..., x...]
    out = np.moveaxis(out, tuple(range(n)), tuple(range(n, 2 * n)))
    return out * _phase(spec, -1)


def stft_convolution(f: GridFunction, phi: Window) -> np.ndarray:
    """``(2pi)^{-n/2} e^{-ix.xi} (f * M_xi phi*)(x)``."""
    spec = f.spec
    n = spec.n
    star = involution(phi.g).values
    xi = spec.freq_mesh()
    x = spec.mesh()
    out = np.empty(spec.shape * 2, dtype=complex)
    for m in np.ndindex(*spec.shape):
        w = np.exp(1j * sum(xi[a][m] * x[a] for a in range(n))) * star
        conv = convolve_centered(f.values, w, spec.cell, n)
        out[(Ellipsis,) + m] = conv
    return unitary_prefactor(n) * out * _phase(spec, -1)


def stft_spectral_convolution(f: GridFunction, phi: Window) -> np.ndarray:
    """``(2pi)^{-n/2} (f^ * M_{-x} phi^*)(xi)``, convolution on the frequency lattice."""
    spec = f.spec
    n = spec.n
    fh = forward_transform(f).coefficients
    ph_star = np.conj(_reflect(forward_transform(phi.g).coefficients, n))
    xi = spec.freq_mesh()
    x = spec.mesh()
    out = np.empty(spec.shape * 2, dtype=complex)
    for j in np.ndindex(*spec.shape):
        w = np.exp(-1j * sum(x[a][j] * xi[a] for a in range(n))) * ph_star
        out[j] = convolve_centered(fh, w, spec.freq_cell, n)
    return unitary_prefactor(n) * out


def phase_space_abs_convolution(A: np.ndarray, B: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Periodic convolution on the phase-space grid with measure ``dx^n dxi^n``."""
    return convolve_centered(A, B, spec.cell * spec.freq_cell, 2 * spec.n)


@dataclass
class IdentityReport:
    deviations: dict[str, float]
    domination_margin: float
    self_product_residual: float | None = None

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())


def verify_identities(f: GridFunction, phi: Window, gamma: Window, phi0: Window | None = None) -> IdentityReport:
    """Cross-check the equivalent STFT representations and the domination inequality.

    ``deviations`` maps each representation to its max abs deviation from the
    column FFT form.  ``domination_margin`` is the largest positive part of
    ``|V_phi0 f| - (2pi)^{-n/2} |(gamma, phi)|^{-1} (|V_phi f| * |V_phi0 gamma|)``
    (0 when the inequality holds everywhere); ``phi0`` defaults to ``phi``.
    """
    _same_spec(f, phi.g, gamma.g)
    gp = inner(gamma.g, phi.g)
    if abs(gp) < DEGENERACY_TOL:
        raise ValueError(f"windows are nearly orthogonal: |(gamma, phi)| = {abs(gp):.3e}")
    phi0 = phi0 or phi
    base = stft(f, phi).values
    forms = {
        "inner_product": stft_inner_product(f, phi),
        "fourier_of_product": stft_fourier_explicit(f, phi),
        "spectral": stft_spectral(f, phi).values,
        "convolution": stft_convolution(f, phi),
        "spectral_convolution": stft_spectral_convolution(f, phi),
    }
    deviations = {k: float(np.max(np.abs(v - base))) for k, v in forms.items()}

    spec = f.spec
    lhs = np.abs(stft(f, phi0).values)
    rhs = unitary_prefactor(spec.n) / abs(gp) * phase_space_abs_convolution(
        np.abs(base), np.abs(stft(gamma.g, phi0).values), spec).real
    margin = float(max(0.0, np.max(lhs - rhs)))
    return IdentityReport(deviations, margin)


def istft(V: STFTMatrix, gamma: Window, phi: Window) -> GridFunction:
    """Invert ``V = stft(f, phi)`` using the synthesis window ``gamma``.

    ``f = (2pi)^{-n/2} / (gamma, phi) * sum_{x, xi} V(x, xi) M_xi T_x gamma dx^n dxi^n``.
    """
    spec = V.spec
    _same_spec(gamma.g, phi.g)
    if gamma.spec != spec:
        raise ValueError("window grid does not match STFT grid")
    gp = inner(gamma.g, phi.g)
    if abs(gp) < DEGENERACY_TOL:
        raise ValueError(f"windows are nearly orthogonal: |(gamma, phi)| = {abs(gp):.3e}")
    n = spec.n
    # sum over xi of V(x, xi) e^{i xi s} is an inverse transform along the xi axes
    cols = centered_ifft(V.values, spec)  # [x..., s...], includes c * dxi^n
    shifted = _shifted_stack(gamma.g.values, n)  # [x..., s...] = gamma(s - x)
    out = np.sum(cols * shifted, axis=tuple(range(n))) * spec.cell
    return GridFunction(spec, out / gp)


def partition_window(spec: GridSpec) -> Window:
    """Window ``phi`` with ``sum_alpha phi(x - 2 pi alpha) = 1``, built from the smooth bump partition."""
    from .decomposition import sigma_profile_1d

    out = np.ones(())
    for _ in range(spec.n):
        out = np.multiply.outer(out, sigma_profile_1d(spec.axis() / (2 * math.pi)))
    return Window(GridFunction(spec, out), "partition")


def periodic_partition_residual(phi: Window) -> float:
    spec = phi.spec
    steps = 2 * math.pi / spec.dx
    per = round(steps)
    if abs(steps - per) > 1e-9:
        raise ValueError("2*pi is not a multiple of the grid spacing")
    count = round(2 * spec.L / (2 * math.pi))
    if abs(2 * spec.L / (2 * math.pi) - count) > 1e-9:
        raise ValueError("box length is not a multiple of 2*pi")
    total = np.zeros(spec.shape)
    for alpha in np.ndindex(*(count,) * spec.n):
        total = total + np.roll(phi.g.values, tuple(a * per for a in alpha), axis=tuple(range(spec.n))).real
    return float(np.max(np.abs(total - 1.0)))


def periodic_coefficients(f: GridFunction, phi: Window, alpha_max: int, partition_tol: float = 1e-6) -> dict:
    """Fourier coefficients ``c_alpha`` of a 2pi-periodic ``f`` using a partition window.

    ``c_alpha = (2pi)^{-n} integral f(x) phi(x) e^{-i alpha.x} dx`` over the box,
    for every ``|alpha|_inf <= alpha_max``.  Returns ``{alpha_tuple: c_alpha}``.
    """
    _same_spec(f, phi.g)
    res = periodic_partition_residual(phi)
    if res > partition_tol:
        raise ValueError(f"window periodization deviates from 1 by {res:.3e}")
    spec = f.spec
    x = spec.mesh()
    prod = f.values * phi.g.values
    out = {}
    for alpha in np.ndindex(*(2 * alpha_max + 1,) * spec.n):
        a = tuple(v - alpha_max for v in alpha)
        phase = np.exp(-1j * sum(ai * xa for ai, xa in zip(a, x)))
        out[a] = complex(np.sum(prod * phase) * spec.cell / (2 * math.pi) ** spec.n)
    return out
