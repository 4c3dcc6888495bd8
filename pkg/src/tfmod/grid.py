"""Periodic sampled functions on the box [-L, L)^n and their unitary transforms.

Spatial samples sit at ``x_j = -L + j*dx`` and frequencies at
``xi_m = m*pi/L`` for ``m = -N/2, ..., N/2-1``.  Both are stored in
"centered" order: array index ``i`` along an axis corresponds to the
integer offset ``i - N/2``, so ``x = (i - N/2)*dx`` and ``xi = (i - N/2)*dxi``.

The transform pair carries the ``(2*pi)^(-n/2)`` prefactor and the lattice
measures ``dx^n`` / ``dxi^n`` so that discrete Parseval, convolution and
inversion identities hold with the same constants as on R^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAX_DIM = 3
BOUNDARY_DECAY_TOL = 1e-12


def unitary_prefactor(n: int) -> float:
    """The normalization constant ``(2*pi)^(-n/2)`` shared by every transform."""
    return (2.0 * math.pi) ** (-n / 2.0)


@dataclass(frozen=True)
class GridSpec:
    n: int
    N: int
    L: float

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell(self) -> float:
        """Spatial measure ``dx^n``."""
        return self.dx**self.n

    @property
    def freq_cell(self) -> float:
        """Frequency measure ``dxi^n``."""
        return self.dxi**self.n

    def offsets(self) -> np.ndarray:
        return np.arange(self.N) - self.N // 2

    def axis(self) -> np.ndarray:
        """1-D spatial sample positions."""
        return self.offsets() * self.dx

    def freq_axis(self) -> np.ndarray:
        """1-D frequency lattice."""
        return self.offsets() * self.dxi

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis()] * self.n), indexing="ij"))

    def freq_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.freq_axis()] * self.n), indexing="ij"))

    def freq_abs(self) -> np.ndarray:
        """Euclidean length ``|xi_m|`` on the lattice."""
        return np.sqrt(sum(c**2 for c in self.freq_mesh()))

    def freq_supnorm(self) -> np.ndarray:
        return np.max(np.abs(np.stack(self.freq_mesh())), axis=0)

    @property
    def lattice_ratio(self) -> float:
        """``L/pi``; integer when Z^n sits inside the frequency lattice."""
        return self.L / math.pi

    def integer_step(self) -> int:
        """Number of lattice steps per unit frequency; requires ``L`` a multiple of pi."""
        M = round(self.lattice_ratio)
        if M < 1 or abs(self.lattice_ratio - M) > 1e-9:
            raise ValueError(f"L/pi = {self.lattice_ratio} is not a positive integer; "
                             "integer frequencies are not on the lattice")
        return M

    def covers_integers(self, K: int) -> bool:
        """True if every integer vector with ``|k|_inf <= K`` is a lattice frequency."""
        try:
            self.integer_step()
        except ValueError:
            return False
        return self.N / 2 * self.dxi > K


def make_grid(n: int, N: int, L: float) -> GridSpec:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"dimension n must be a positive integer, got {n!r}")
    if n > MAX_DIM:
        raise ValueError(f"dimension n={n} exceeds the supported maximum {MAX_DIM}")
    if not isinstance(N, (int, np.integer)) or N < 8 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 8 for the FFT, got {N!r}")
    if not L > 0 or not math.isfinite(L):
        raise ValueError(f"half-width L must be positive and finite, got {L!r}")
    return GridSpec(int(n), int(N), float(L))


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.spec.N**self.spec.n:
            raise ValueError(f"expected {self.spec.N ** self.spec.n} samples, got {v.size}")
        v = v.reshape(self.spec.shape)
        _check_finite(v, "grid function")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: GridFunction) -> GridFunction:
        _same_spec(self, other)
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        _same_spec(self, other)
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, scalar) -> GridFunction:
        return GridFunction(self.spec, self.values * scalar)

    __rmul__ = __mul__

    def boundary_decay(self) -> float:
        """Largest ``|f|`` on the outermost layer of the box, relative to ``max |f|``."""
        a = np.abs(self.values)
        peak = a.max()
        if peak == 0:
            return 0.0
        edge = 0.0
        for ax in range(self.spec.n):
            sl = np.take(a, [0, -1], axis=ax)
            edge = max(edge, sl.max())
        return edge / peak

    def check_boundary_decay(self, tol: float = BOUNDARY_DECAY_TOL) -> None:
        d = self.boundary_decay()
        if d > tol:
            raise ValueError(f"function does not decay at the box boundary ({d:.3e} > {tol:.1e})")


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    spec: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).reshape(self.spec.shape)
        _check_finite(c, "spectrum")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2) * self.spec.freq_cell))


def _same_spec(*fs) -> None:
    s0 = fs[0].spec
    for f in fs[1:]:
        if f.spec != s0:
            raise ValueError(f"grid mismatch: {s0} vs {f.spec}")


def _sign_pattern(spec: GridSpec) -> np.ndarray:
    # e^{+-i L xi_m} = (-1)^m on the centered lattice
    s1 = np.where(spec.offsets() % 2 == 0, 1.0, -1.0)
    out = s1
    for _ in range(spec.n - 1):
        out = np.multiply.outer(out, s1)
    return out


def centered_fft(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Forward transform of centered samples, returned on the centered lattice."""
    axes = tuple(range(-spec.n, 0))
    raw = np.fft.fftn(values, axes=axes)
    return np.fft.fftshift(raw, axes=axes) * _sign_pattern(spec) * (unitary_prefactor(spec.n) * spec.cell)


def centered_ifft(coeffs: np.ndarray, spec: GridSpec) -> np.ndarray:
    axes = tuple(range(-spec.n, 0))
    raw = np.fft.ifftn(np.fft.ifftshift(coeffs * _sign_pattern(spec), axes=axes), axes=axes)
    return raw * (unitary_prefactor(spec.n) * spec.freq_cell * spec.N**spec.n)


def forward_transform(f: GridFunction) -> SpectralFunction:
    return SpectralFunction(f.spec, centered_fft(f.values, f.spec))


def inverse_transform(F: SpectralFunction) -> GridFunction:
    return GridFunction(F.spec, centered_ifft(F.coefficients, F.spec))


def lp_norm_values(values: np.ndarray, p: float, cell: float) -> float:
    if p < 1:
        raise ValueError(f"L^p exponent must be >= 1, got {p}")
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**p) * cell) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float) -> float:
    """Riemann-sum ``||f||_{L^p}`` on the box; ``p = inf`` gives the grid maximum."""
    return lp_norm_values(f.values, p, f.spec.cell)


def spectral_tail(F: SpectralFunction, radius: float) -> float:
    """Relative l2 mass of the spectrum outside the cube ``|xi|_inf <= radius``."""
    c = np.abs(F.coefficients) ** 2
    total = c.sum()
    if total == 0:
        return 0.0
    outside = c[F.spec.freq_supnorm() > radius + 1e-12].sum()
    return float(np.sqrt(outside / total))


def convolve_centered(a: np.ndarray, b: np.ndarray, measure: float, n: int) -> np.ndarray:
    """Periodic convolution ``(a*b)(z) = sum_y a(y) b(z-y) * measure`` on centered arrays."""
    axes = tuple(range(-n, 0))
    out = np.fft.ifftn(np.fft.fftn(a, axes=axes) * np.fft.fftn(np.fft.ifftshift(b, axes=axes), axes=axes),
                       axes=axes)
    return out * measure


# ---------------------------------------------------------------------------
# quadrature


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""


def _simpson(fa, fm, fb, h):
    return (fa + 4.0 * fm + fb) * (h / 6.0)


def _err(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    if x.ndim > 1:
        return x.reshape(x.shape[0], -1).max(axis=1)
    return x


def _truncate_infinite(g, a: float, b: float, tol: float) -> tuple[float, float]:
    """Replace infinite endpoints by points beyond which ``|g| < tol/(width)``."""

    def small_beyond(edge: float, direction: float, width: float) -> bool:
        probe = edge + direction * np.linspace(0.0, max(1.0, abs(edge)), 17)
        vals = _err(np.asarray(g(probe)))
        return bool(np.all(vals * width <= tol))

    lo, hi = a, b
    if math.isinf(lo) and math.isinf(hi):
        lo, hi = -1.0, 1.0
    elif math.isinf(lo):
        lo = hi - 1.0
    elif math.isinf(hi):
        hi = lo + 1.0
    for _ in range(200):
        done = True
        width = 2 * (hi - lo)
        if math.isinf(b) and not small_beyond(hi, 1.0, width):
            hi = hi + (hi - lo)
            done = False
        if math.isinf(a) and not small_beyond(lo, -1.0, width):
            lo = lo - (hi - lo)
            done = False
        if done:
            return lo, hi
    raise QuadratureError("integrand does not decay: cannot truncate infinite interval")


def quadrature_1d(g: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-10,
                  max_intervals: int = 200_000):
    """Adaptive Simpson integral of ``g`` over ``[a, b]`` to absolute tolerance ``tol``.

    ``g`` is called with a 1-D array of abscissae and may return an array of
    shape ``(m,)`` or ``(m, ...)``; vector-valued integrands are integrated
    componentwise and refined until every component meets ``tol``.  Infinite
    endpoints are truncated where the integrand bound falls below
    ``tol/(b - a)``.  Refinement proceeds level by level, so the result is
    deterministic for fixed inputs.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    if math.isinf(a) or math.isinf(b):
        a, b = _truncate_infinite(g, a, b, tol / 2)
        tol = tol / 2
    total_width = b - a

    # seed with a uniform partition so narrow features are not skipped
    edges = np.linspace(a, b, 17)
    lo, hi = edges[:-1], edges[1:]
    flo, fhi = np.asarray(g(lo)), np.asarray(g(hi))
    mid = 0.5 * (lo + hi)
    fmid = np.asarray(g(mid))
    whole = _simpson(flo, fmid, fhi, _bcast(hi - lo, flo))

    result = 0.0
    n_intervals = len(lo)
    while len(lo):
        q1, q3 = 0.5 * (lo + mid), 0.5 * (mid + hi)
        f1, f3 = np.asarray(g(q1)), np.asarray(g(q3))
        h = _bcast(hi - lo, flo)
        left = _simpson(flo, f1, fmid, h / 2)
        right = _simpson(fmid, f3, fhi, h / 2)
        refined = left + right
        diff = refined - whole
        local_tol = tol * (hi - lo) / total_width
        ok = (_err(diff) <= 15.0 * local_tol) | ((hi - lo) < 1e-14 * max(1.0, abs(a), abs(b)))
        accepted = refined[ok] + diff[ok] / 15.0
        result = result + accepted.sum(axis=0)
        bad = ~ok
        if not bad.any():
            break
        n_intervals += int(bad.sum())
        if n_intervals > max_intervals:
            raise QuadratureError(f"adaptive quadrature did not converge within {max_intervals} intervals")
        lo_b, mid_b, hi_b = lo[bad], mid[bad], hi[bad]
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
        mid = np.concatenate([q1[bad], q3[bad]])
        flo = np.concatenate([flo[bad], fmid[bad]])
        fhi = np.concatenate([fmid[bad], fhi[bad]])
        fmid = np.concatenate([f1[bad], f3[bad]])
        whole = np.concatenate([left[bad], right[bad]])
    return sign * result


def _bcast(h: np.ndarray, like: np.ndarray) -> np.ndarray:
    return h.reshape(h.shape + (1,) * (like.ndim - 1))
