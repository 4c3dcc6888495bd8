"""Frequency-uniform decomposition: a smooth partition of unity of unit bandwidth.

``h`` is the C-infinity glue that equals 1 on ``[-1/2, 1/2]`` and vanishes
outside ``(-1, 1)``; ``rho(xi) = prod_i h(xi_i)`` and
``sigma_k = rho(. - k) / sum_l rho(. - l)``.  The normalizing sum factors over
axes, so each ``sigma_k`` is a tensor product of 1-D profiles and only those
1-D factors are stored.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    centered_ifft,
    forward_transform,
    inverse_transform,
    lp_norm,
    lp_norm_values,
)


def _psi(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump(t) -> np.ndarray:
    """The 1-D profile ``h``: 1 for ``|t| <= 1/2``, 0 for ``|t| >= 1``, smooth and monotone between."""
    a = np.abs(np.asarray(t, dtype=float))
    u = 2.0 * (1.0 - a)
    num = _psi(u)
    return num / (num + _psi(1.0 - u))


@dataclass(frozen=True)
class BumpProfile:
    """Callable wrapper around ``bump`` carrying its support data."""
    flat_radius: float = 0.5
    support_radius: float = 1.0

    def __call__(self, t) -> np.ndarray:
        return bump(t)


def build_bump() -> BumpProfile:
    return BumpProfile()


def sigma_profile_1d(t) -> np.ndarray:
    """Continuous 1-D ``sigma_0(t) = h(t) / sum_l h(t - l)``."""
    t = np.asarray(t, dtype=float)
    r = np.floor(t)
    denom = sum(bump(t - (r + d)) for d in range(-2, 3))
    return bump(t) / denom


@dataclass(frozen=True, eq=False)
class DecompositionFamily:
    spec: GridSpec
    K: int
    factors: np.ndarray = field(repr=False)  # (2K+1, N): factors[k + K] = 1-D sigma_k on the lattice

    def indices(self) -> list[tuple[int, ...]]:
        """All ``|k|_inf <= K`` in the fixed summation order: increasing ``|k|``, then lexicographic."""
        rng = range(-self.K, self.K + 1)
        ks = list(itertools.product(rng, repeat=self.spec.n))
        return sorted(ks, key=lambda k: (sum(v * v for v in k), k))

    def sigma(self, k) -> np.ndarray:
        k = tuple(k)
        if len(k) != self.spec.n or max(abs(v) for v in k) > self.K:
            raise ValueError(f"k={k} is outside the truncation |k|_inf <= {self.K}")
        out = self.factors[k[0] + self.K]
        for v in k[1:]:
            out = np.multiply.outer(out, self.factors[v + self.K])
        return out

    def support_window(self, k) -> tuple[slice, ...]:
        """Index slices (per axis) outside which ``sigma_k`` vanishes."""
        out = []
        for v in tuple(k):
            nz = np.flatnonzero(self.factors[v + self.K])
            out.append(slice(int(nz[0]), int(nz[-1]) + 1) if nz.size else slice(0, 0))
        return tuple(out)

    def sigma_window(self, k) -> tuple[tuple[slice, ...], np.ndarray]:
        """``sigma_k`` restricted to its support window, with the window slices."""
        sl = self.support_window(k)
        out = self.factors[k[0] + self.K][sl[0]]
        for v, s in zip(k[1:], sl[1:]):
            out = np.multiply.outer(out, self.factors[v + self.K][s])
        return sl, out

    def partition_sum(self) -> np.ndarray:
        s1 = self.factors.sum(axis=0)
        out = s1
        for _ in range(self.spec.n - 1):
            out = np.multiply.outer(out, s1)
        return out

    def covered_mask(self) -> np.ndarray:
        """Lattice points with ``|xi|_inf <= K - 1`` where the truncated sum is exactly 1."""
        return self.spec.freq_supnorm() <= self.K - 1 + 1e-12


def build_sigma(spec: GridSpec, K: int) -> DecompositionFamily:
    if K < 1:
        raise ValueError("truncation radius K must be >= 1")
    try:
        M = spec.integer_step()
    except ValueError as exc:
        raise ValueError(f"insufficient lattice coverage: {exc}") from None
    if not spec.N / 2 * spec.dxi > K + 1:
        raise ValueError(f"insufficient lattice coverage: need N/2 * pi/L > K + 1 = {K + 1}, "
                         f"have {spec.N / 2 * spec.dxi}")
    m = spec.offsets()
    # denominator depends only on m mod M; computing it from the residue keeps the
    # shift structure sigma_k(m) = sigma_0(m - kM) exact
    r = np.mod(m, M)
    denom = sum(bump((r - d * M) / M) for d in range(-2, 3))
    factors = np.empty((2 * K + 1, spec.N))
    for k in range(-K, K + 1):
        factors[k + K] = bump((m - k * M) / M) / denom
    factors.setflags(write=False)
    return DecompositionFamily(spec, K, factors)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TFMOD_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map, threaded when ``TFMOD_THREADS`` > 1."""
    items = list(items)
    nt = _threads()
    if nt == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=nt) as ex:
        return list(ex.map(fn, items))


def box_apply(f: GridFunction, k, D: DecompositionFamily) -> GridFunction:
    """``box_k f = F^{-1}(sigma_k F f)``."""
    if f.spec != D.spec:
        raise ValueError("grid mismatch between function and decomposition family")
    return inverse_transform(SpectralFunction(f.spec, D.sigma(k) * forward_transform(f).coefficients))


def box_pieces(F: SpectralFunction, D: DecompositionFamily, ks=None):
    """Yield ``(k, samples of box_k f)`` for a precomputed spectrum."""
    ks = D.indices() if ks is None else ks
    for k in ks:
        yield k, centered_ifft(D.sigma(k) * F.coefficients, F.spec)


def box_lp_norms(f: GridFunction, D: DecompositionFamily, p: float) -> dict[tuple[int, ...], float]:
    """``{k: ||box_k f||_{L^p}}`` over the truncated lattice, in summation order."""
    if f.spec != D.spec:
        raise ValueError("grid mismatch between function and decomposition family")
    F = forward_transform(f)
    ks = D.indices()
    cell = f.spec.cell

    coeffs = F.coefficients
    fcell = f.spec.freq_cell

    def one(k):
        sl, sig = D.sigma_window(k)
        local = sig * coeffs[sl]
        if not np.any(local):
            return 0.0
        if p == 2:
            # the discrete transform is unitary, so the L^2 norm is read off the spectrum
            return float(np.sqrt(np.sum(np.abs(local) ** 2) * fcell))
        piece = np.zeros_like(coeffs)
        piece[sl] = local
        return lp_norm_values(centered_ifft(piece, f.spec), p, cell)

    return dict(zip(ks, parallel_map(one, ks)))


def sobolev_norm_of_multiplier(mult: SpectralFunction, s: float) -> float:
    """``H^s`` norm of a multiplier sampled on the frequency lattice.

    The multiplier is treated as a function of ``xi``; its transform lives on
    the spatial grid and is weighted by ``<x>^{2s}``.
    """
    spec = mult.spec
    dual = inverse_transform(mult).values
    r2 = sum(c**2 for c in spec.mesh())
    return float(np.sqrt(np.sum((1 + r2) ** s * np.abs(dual) ** 2) * spec.cell))


def bernstein_margin(mult: SpectralFunction, f: GridFunction, s: float, rs=(1, 2, math.inf)) -> dict:
    """Evaluate both sides of ``||F^{-1}(phi F f)||_r <= C ||phi||_{H^s} ||f||_r``.

    Returns ``{r: {"lhs", "rhs", "ratio"}}`` where ``rhs`` is the product
    ``||phi||_{H^s} ||f||_r`` (without the constant).
    """
    n = f.spec.n
    if not s > n / 2:
        raise ValueError(f"Sobolev index s={s} must exceed n/2 = {n / 2}")
    if mult.spec != f.spec:
        raise ValueError("grid mismatch")
    hs = sobolev_norm_of_multiplier(mult, s)
    out_f = inverse_transform(SpectralFunction(f.spec, mult.coefficients * forward_transform(f).coefficients))
    report = {}
    for r in rs:
        lhs = lp_norm(out_f, r)
        rhs = hs * lp_norm(f, r)
        report[r] = {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else math.nan}
    return report
