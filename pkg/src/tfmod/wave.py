"""Spectral solution of the homogeneous wave equation ``u_tt = Delta u``.

Each lattice mode evolves independently, so the propagator is exact on the
grid for any ``t`` (no time stepping, no CFL restriction).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .decomposition import DecompositionFamily
from .grid import GridFunction, SpectralFunction, forward_transform, inverse_transform
from .norms import NormParams, WeightSpec, modulation_norm_decomp


def wave_multipliers(xi_abs, t: float):
    """``(cos(|xi| t), sin(|xi| t) / |xi|)``, the second taken as ``t`` at ``xi = 0``."""
    r = np.asarray(xi_abs, dtype=float)
    c = np.cos(r * t)
    s = t * np.sinc(r * t / math.pi)
    if np.ndim(r) == 0:
        return float(c), float(s)
    return c, s


@dataclass(frozen=True, eq=False)
class WaveState:
    u: GridFunction
    ut: GridFunction
    t: float

    def __post_init__(self):
        if self.u.spec != self.ut.spec:
            raise ValueError("u and u_t must share a grid")


def propagate(f: GridFunction, g: GridFunction, t: float) -> WaveState:
    """State at time ``t`` from ``u(0) = f``, ``u_t(0) = g``."""
    if f.spec != g.spec:
        raise ValueError("grid mismatch between f and g")
    spec = f.spec
    F, G = forward_transform(f).coefficients, forward_transform(g).coefficients
    r = spec.freq_abs()
    c, s = wave_multipliers(r, t)
    u_hat = c * F + s * G
    ut_hat = c * G - r * np.sin(r * t) * F
    u = inverse_transform(SpectralFunction(spec, u_hat))
    ut = inverse_transform(SpectralFunction(spec, ut_hat))
    if not (np.any(f.values.imag) or np.any(g.values.imag)):
        u, ut = GridFunction(spec, u.values.real), GridFunction(spec, ut.values.real)
    return WaveState(u, ut, float(t))


def energy(w: WaveState) -> float:
    """``||u_t||_2^2 + ||grad u||_2^2`` with the gradient taken in frequency (Parseval)."""
    spec = w.u.spec
    U = forward_transform(w.u).coefficients
    Ut = forward_transform(w.ut).coefficients
    r2 = spec.freq_abs() ** 2
    return float(np.sum(np.abs(Ut) ** 2 + r2 * np.abs(U) ** 2) * spec.freq_cell)


def _shift_weight(w: WeightSpec, by: float) -> WeightSpec | None:
    if w.kind != "polynomial":
        return None
    return WeightSpec("polynomial", w.s + by)


def apriori_report(f: GridFunction, g: GridFunction, params: NormParams, D: DecompositionFamily,
                   tgrid) -> dict:
    """Empirical a priori constants over ``tgrid``.

    ``params.weight`` is the solution weight.  ``c_of_t`` divides by
    ``||g|| + ||f||`` with both data at that weight; ``c_of_t_g_lower`` uses
    the weaker norm of ``g`` one polynomial order down (``None`` for Gevrey
    weights, where a unit shift has no meaning).
    """
    if params.q != 1:
        warnings.warn(f"a priori estimate is stated for q = 1; running with q = {params.q}", stacklevel=2)
    lf = modulation_norm_decomp(f, params, D).log_value
    lg = modulation_norm_decomp(g, params, D).log_value
    low = _shift_weight(params.weight, -1.0)
    lg_low = modulation_norm_decomp(g, NormParams(params.p, params.q, low), D).log_value if low else None
    for v in (lf, lg, lg_low):
        if v is not None and not v < math.inf:
            raise ValueError("data norms must be finite")
    if lf == -math.inf and lg == -math.inf:
        raise ValueError("both data norms vanish")
    data = float(np.logaddexp(lf, lg))
    data_low = float(np.logaddexp(lf, lg_low)) if lg_low is not None else None
    rows = []
    for t in tgrid:
        w = propagate(f, g, t)
        lu = modulation_norm_decomp(w.u, params, D).log_value
        if not lu < math.inf:
            raise ValueError(f"solution norm not finite at t={t}")
        rows.append({
            "t": float(t),
            "solution_log_norm": lu,
            "c_of_t": math.exp(lu - data),
            "c_of_t_g_lower": math.exp(lu - data_low) if data_low is not None else None,
            "energy": energy(w),
        })
    return {
        "params": params.as_dict(),
        "x_weight_index": 0,
        "f_log_norm": lf,
        "g_log_norm": lg,
        "g_log_norm_lower": lg_low,
        "rows": rows,
        "c_max": max(r["c_of_t"] for r in rows) if rows else None,
    }
