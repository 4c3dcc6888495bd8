"""Weighted and Gevrey modulation norms, accumulated in the log domain.

Gevrey weights ``exp(|k|^{1/s})`` overflow double precision long before the
sums that use them become meaningless, so every norm here is returned as a
natural log.  Zero norms are ``-inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .decomposition import DecompositionFamily, box_lp_norms
from .grid import GridFunction, forward_transform, spectral_tail
from .stft import STFTMatrix, Window, stft

TAIL_TOL = 1e-10


class TailError(ValueError):
    """Spectral mass outside the region covered by the decomposition."""


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "none"  # "none" | "polynomial" | "gevrey"
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "polynomial", "gevrey"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "gevrey" and not self.s > 1:
            raise ValueError(f"Gevrey weight needs s > 1, got s={self.s}")

    @classmethod
    def parse(cls, text: str) -> WeightSpec:
        """Parse ``none``, ``poly:s`` or ``gevrey:s``."""
        if text in ("none", "unweighted"):
            return cls()
        kind, _, val = text.partition(":")
        kinds = {"poly": "polynomial", "polynomial": "polynomial", "gevrey": "gevrey"}
        if kind not in kinds or not val:
            raise ValueError(f"weight must be none, poly:<s> or gevrey:<s>, got {text!r}")
        return cls(kinds[kind], float(val))

    def label(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}:{self.s:g}"

    def log_of_abs(self, r2: np.ndarray) -> np.ndarray:
        """Log weight as a function of squared length ``|k|^2``."""
        r2 = np.asarray(r2, dtype=float)
        if self.kind == "polynomial":
            return 0.5 * self.s * np.log1p(r2)
        if self.kind == "gevrey":
            return r2 ** (0.5 / self.s)
        return np.zeros_like(r2)


def weight_log(w: WeightSpec, k) -> float:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return float(w.log_of_abs(np.sum(k * k)))


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormParams:
    p: float = 2.0
    q: float = 2.0
    weight: WeightSpec = field(default_factory=WeightSpec)

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must be >= 1 (or inf), got {v}")

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)

    @property
    def q_conj(self) -> float:
        return conjugate(self.q)

    def with_p(self, p: float) -> NormParams:
        return NormParams(p, self.q, self.weight)

    def as_dict(self) -> dict:
        return {"p": _num(self.p), "q": _num(self.q), "weight": self.weight.label()}


def _num(v: float):
    return "inf" if math.isinf(v) else v


@dataclass(frozen=True)
class LogMagnitude:
    log_value: float
    tail_mass: float = 0.0

    @property
    def value(self) -> float:
        """``exp(log_value)``; ``inf`` on overflow."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_value))

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    def record(self, params: NormParams | None = None) -> dict:
        v = self.value
        return {
            "params": params.as_dict() if params else None,
            "log_value": None if self.is_zero else self.log_value,
            "value_or_inf": "inf" if math.isinf(v) else v,
            "tail_mass": self.tail_mass,
        }


def _log(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(a)


def lq_weighted(terms, q: float, log_measure: float = 0.0) -> LogMagnitude:
    """``log (sum_k (w_k a_k)^q * measure)^{1/q}`` from pairs ``(log w_k, log a_k)``.

    Uses max-shifted exponential sums, so log terms of several hundred in
    magnitude are handled without overflow.  ``q = inf`` returns the max.
    """
    terms = np.asarray(list(terms), dtype=float).reshape(-1, 2)
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    z = terms[:, 0] + terms[:, 1]
    if z.size == 0 or np.all(z == -math.inf):
        return LogMagnitude(-math.inf)
    if math.isinf(q):
        return LogMagnitude(float(np.max(z)))
    return LogMagnitude(float((logsumexp(q * z) + log_measure) / q))


def _tail_check(f: GridFunction, D: DecompositionFamily, tol: float) -> float:
    tail = spectral_tail(forward_transform(f), D.K - 1)
    if tail > tol:
        raise TailError(f"spectral mass {tail:.3e} outside |xi|_inf <= K-1 = {D.K - 1} "
                        f"exceeds {tol:.1e}; increase K")
    return tail


def modulation_norm_decomp(f: GridFunction, params: NormParams, D: DecompositionFamily,
                           tail_tol: float = TAIL_TOL) -> LogMagnitude:
    """``log (sum_k w(k)^q ||box_k f||_{L^p}^q)^{1/q}`` over ``|k|_inf <= K``."""
    tail = _tail_check(f, D, tail_tol)
    norms = box_lp_norms(f, D, params.p)
    terms = [(params.weight.log_of_abs(sum(v * v for v in k)), math.log(a) if a > 0 else -math.inf)
             for k, a in norms.items()]
    out = lq_weighted(terms, params.q)
    return LogMagnitude(out.log_value, tail)


def mixed_lpq_norm(V: STFTMatrix, p: float, q: float, weight: WeightSpec | None = None,
                   order: str = "xi_outer") -> LogMagnitude:
    """Weighted mixed norm of a phase-space array, inner L^p in ``x`` and outer L^q in ``xi``.

    ``order="x_outer"`` swaps the roles (inner L^q in ``xi``, outer L^p in
    ``x``), which coincides with the default when ``p == q``.
    """
    weight = weight or WeightSpec()
    spec = V.spec
    n = spec.n
    lw = weight.log_of_abs(spec.freq_abs() ** 2)  # on xi
    logabs = _log(np.abs(V.values)) + lw  # broadcasts over trailing xi axes
    lcx, lcxi = n * math.log(spec.dx), n * math.log(spec.dxi)
    if order == "xi_outer":
        inner = _log_lp_from_log(logabs, p, lcx, n)
        outer = _log_lp_from_log(inner, q, lcxi, n)
    elif order == "x_outer":
        moved = np.moveaxis(logabs, tuple(range(n, 2 * n)), tuple(range(n)))
        inner = _log_lp_from_log(moved, q, lcxi, n)
        outer = _log_lp_from_log(inner, p, lcx, n)
    else:
        raise ValueError(f"unknown order {order!r}")
    return LogMagnitude(float(outer))


def _log_lp_from_log(logabs: np.ndarray, p: float, log_cell: float, n: int) -> np.ndarray:
    """Log L^p norm over the leading ``n`` axes of an array given in the log domain."""
    la = logabs.reshape((-1,) + logabs.shape[n:])
    if math.isinf(p):
        return la.max(axis=0)
    if np.all(la == -math.inf):
        return np.full(la.shape[1:], -math.inf) if la.ndim > 1 else -math.inf
    with np.errstate(invalid="ignore"):
        out = (logsumexp(p * la, axis=0) + log_cell) / p
    return out


def modulation_norm_stft(f: GridFunction, phi: Window, params: NormParams) -> LogMagnitude:
    """Log of the mixed ``L^{p,q}`` norm of ``V_phi f`` weighted in ``xi``."""
    return mixed_lpq_norm(stft(f, phi), params.p, params.q, params.weight)


def equivalence_ratio(f: GridFunction, params: NormParams, phi: Window, D: DecompositionFamily) -> float:
    """``||f||_decomp / ||f||_stft``."""
    a = modulation_norm_decomp(f, params, D)
    b = modulation_norm_stft(f, phi, params)
    if a.is_zero or b.is_zero or not (math.isfinite(a.log_value) and math.isfinite(b.log_value)):
        raise ValueError("equivalence ratio needs finite, nonzero norms")
    return math.exp(a.log_value - b.log_value)
