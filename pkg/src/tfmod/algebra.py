"""Products, the subalgebra constant, lattice weight inequalities and superposition.

All norm quantities are log-domain ``LogMagnitude`` values; ratios are formed
by subtracting logs.  The superposition operator

    T_f u(x) = (2 pi)^{-1/2} int (e^{i xi u(x)} - 1) g(xi) dxi

is evaluated pointwise on the grid with the vectorized adaptive quadrature
from :mod:`tfmod.grid`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .decomposition import DecompositionFamily
from .grid import (
    GridFunction,
    QuadratureError,
    forward_transform,
    lp_norm,
    quadrature_1d,
    spectral_tail,
)
from .norms import TAIL_TOL, LogMagnitude, NormParams, TailError, conjugate, modulation_norm_decomp

SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}
REAL_TOL = 1e-12


# ---------------------------------------------------------------- products

def _spectral_radius(f: GridFunction, rel: float = 1e-13) -> float:
    """Smallest ``|xi|_inf`` enclosing all coefficients above ``rel * max``."""
    c = np.abs(forward_transform(f).coefficients)
    top = c.max()
    if top == 0:
        return 0.0
    return float(f.spec.freq_supnorm()[c > rel * top].max())


def pointwise_product(f: GridFunction, g: GridFunction, D: DecompositionFamily | None = None,
                      tail_tol: float = TAIL_TOL) -> GridFunction:
    """Entrywise product with an aliasing guard.

    The supports of ``f^`` and ``g^`` add under multiplication; if their sum
    reaches the Nyquist edge the discrete product wraps around and no longer
    samples ``f g``.  With ``D`` given, the product must also pass the
    decomposition tail check.
    """
    if f.spec != g.spec:
        raise ValueError("grid mismatch")
    spec = f.spec
    nyq = spec.N / 2 * spec.dxi
    reach = _spectral_radius(f) + _spectral_radius(g)
    if reach >= nyq:
        raise TailError(f"product support radius {reach:g} reaches the lattice edge {nyq:g} (aliasing)")
    out = GridFunction(spec, f.values * g.values)
    if D is not None:
        tail = spectral_tail(forward_transform(out), D.K - 1)
        if tail > tail_tol:
            raise TailError(f"product spectral tail {tail:.3e} outside |xi|_inf <= {D.K - 1}")
    return out


@dataclass(frozen=True)
class AlgebraRatios:
    general: float  # ||fg||_{p,q} / (||f||_{2p,q} ||g||_{2p,q})
    same_exponent: float  # ||fg||_{p,q} / (||f||_{p,q} ||g||_{p,q})
    log_product_norm: float


def _finite(m: LogMagnitude, what: str) -> float:
    if m.is_zero:
        raise ValueError(f"{what} has zero norm")
    if not math.isfinite(m.log_value):
        raise ValueError(f"{what} has infinite norm")
    return m.log_value


def algebra_ratio(f: GridFunction, g: GridFunction, params: NormParams, D: DecompositionFamily) -> AlgebraRatios:
    fg = pointwise_product(f, g, D)
    lfg = _finite(modulation_norm_decomp(fg, params, D), "f*g")
    lf = _finite(modulation_norm_decomp(f, params, D), "f")
    lg = _finite(modulation_norm_decomp(g, params, D), "g")
    p2 = params.with_p(2 * params.p)
    lf2 = _finite(modulation_norm_decomp(f, p2, D), "f")
    lg2 = _finite(modulation_norm_decomp(g, p2, D), "g")
    return AlgebraRatios(math.exp(lfg - lf2 - lg2), math.exp(lfg - lf - lg), lfg)


# ---------------------------------------------------- subalgebra constant

def _check_ranges(s: float, q: float, n: int, delta: float, C0: float) -> None:
    if not s > 1:
        raise ValueError(f"s must be > 1, got {s}")
    if not q >= 1:
        raise ValueError(f"q must be in [1, inf], got {q}")
    if n not in SPHERE_AREA:
        raise ValueError(f"dimension n must be 1, 2 or 3, got {n}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not C0 > 0:
        raise ValueError(f"C0 must be positive, got {C0}")


def log_upper_gamma(a: float, t: float, tol: float = 1e-13) -> float:
    """``log int_t^inf y^{a-1} e^{-y} dy`` for ``a >= 1``, ``t >= 0``, by quadrature.

    Written as ``-t + log int_0^inf (t+z)^{a-1} e^{-z} dz`` so large ``t``
    never underflows; for ``t >= 1`` the factor ``t^{a-1}`` is pulled out too.
    """
    if not a >= 1:
        raise ValueError(f"need a >= 1, got {a}")
    if t < 0:
        raise ValueError(f"need t >= 0, got {t}")
    if t >= 1:
        def g(z):
            return np.exp((a - 1) * np.log1p(z / t) - z)
        # J >= 1 but can be large for big a; a coarse pass makes the tolerance relative
        est = quadrature_1d(g, 0.0, math.inf, tol=1e-6).real
        J = quadrature_1d(g, 0.0, math.inf, tol=tol * max(1.0, est)).real
        return -t + (a - 1) * math.log(t) + math.log(J)

    def g(z):
        with np.errstate(divide="ignore"):
            return np.exp((a - 1) * np.log(t + z) - z) if a > 1 else np.exp(-z)
    # (t+z)^{a-1} >= z^{a-1}, so the integral is at least Gamma(a); scale tol to it
    scale = math.exp(gammaln(a)) if a > 1 else 1.0
    J = quadrature_1d(g, 0.0, math.inf, tol=tol * scale).real
    return -t + math.log(J)


def log_subalgebra_constant(R: float, s: float, q: float, n: int, delta: float = 0.5, C0: float = 1.0) -> float:
    """Natural log of ``D(R)``.

    ``D = C0 (s w_n (delta q')^{-sn} Gamma(sn, delta q' R^{1/s}))^{1/q'}``
    with ``w_n`` the surface area of the unit sphere.  For ``q = 1``
    (``q' = inf``) the bracket raised to ``1/q'`` tends to
    ``e^{-delta R^{1/s}}``, which is used directly.
    """
    _check_ranges(s, q, n, delta, C0)
    if not R >= 0:
        raise ValueError(f"R must be >= 0, got {R}")
    qc = conjugate(q)
    if math.isinf(qc):
        return math.log(C0) - delta * R ** (1.0 / s)
    a = s * n
    t = delta * qc * R ** (1.0 / s)
    inner = math.log(s * SPHERE_AREA[n]) - a * math.log(delta * qc) + log_upper_gamma(a, t)
    return math.log(C0) + inner / qc


def subalgebra_constant(R: float, s: float, q: float, n: int, delta: float = 0.5, C0: float = 1.0) -> float:
    return math.exp(log_subalgebra_constant(R, s, q, n, delta, C0))


def choose_R(target: float, s: float, q: float, n: int, delta: float = 0.5, C0: float = 1.0,
             rtol: float = 1e-11) -> float:
    """Invert the decreasing map ``R -> D(R)`` by bisection in ``t = R^{1/s}``."""
    _check_ranges(s, q, n, delta, C0)
    if not target > 0:
        raise ValueError(f"target must be positive, got {target}")
    lt = math.log(target)
    l0 = log_subalgebra_constant(0.0, s, q, n, delta, C0)
    if lt > l0 + 1e-12:
        raise ValueError(f"target {target:g} exceeds D(0) = {math.exp(l0):g}")
    if lt >= l0 - rtol:
        return 0.0

    def F(t):
        return log_subalgebra_constant(t**s, s, q, n, delta, C0) - lt

    lo, hi = 0.0, 1.0
    while F(hi) > 0:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        if abs(fm) <= rtol:
            lo = hi = mid
            break
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return (0.5 * (lo + hi)) ** s


def upper_gamma_inverse(u: float, a: float) -> float:
    """The ``t`` with ``Gamma(a, t) = u`` for ``u`` in ``(0, Gamma(a)]``."""
    if not u > 0:
        raise ValueError("u must be positive")
    lu = math.log(u)
    if lu > gammaln(a) + 1e-12:
        raise ValueError(f"u exceeds Gamma({a}) and has no preimage")
    lo, hi = 0.0, 1.0
    while log_upper_gamma(a, hi) > lu:
        lo, hi = hi, 2 * hi
    while hi - lo > 1e-14 * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if log_upper_gamma(a, mid) > lu:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------- lattice inequality

@dataclass(frozen=True)
class WeightMargin:
    margin: float
    k: tuple[int, ...]
    l: tuple[int, ...]


def _lattice(Kmax: int, n: int) -> np.ndarray:
    r = np.arange(-Kmax, Kmax + 1)
    return np.array(list(itertools.product(r, repeat=n)), dtype=float)


def weight_inequality_margin(s: float, delta: float, Kmax: int, n: int = 1) -> WeightMargin:
    """Worst case over ``|k|_inf, |l|_inf <= Kmax`` of

        |l|^{1/s} + |l - k|^{1/s} - delta min(|l - k|, |l|)^{1/s} - |k|^{1/s}.

    The inequality is claimed for every ``delta`` in ``(0, 1)``, but at
    ``k = 2l`` the margin is ``|l|^{1/s} (2 - delta - 2^{1/s})``, so it can
    only hold when ``delta <= max_weight_delta(s)``.
    """
    if not s > 1 or not 0 < delta < 1:
        raise ValueError("need s > 1 and 0 < delta < 1")
    pts = _lattice(Kmax, n)
    e = 1.0 / s
    norm_l = np.sqrt((pts**2).sum(axis=1))
    best = (math.inf, None, None)
    for i, k in enumerate(pts):
        lk = np.sqrt(((pts - k) ** 2).sum(axis=1))
        m = norm_l**e + lk**e - delta * np.minimum(lk, norm_l) ** e - norm_l[i] ** e
        j = int(np.argmin(m))
        if m[j] < best[0]:
            best = (float(m[j]), i, j)
    return WeightMargin(best[0], tuple(int(v) for v in pts[best[1]]), tuple(int(v) for v in pts[best[2]]))


def max_weight_delta(s: float) -> float:
    """Largest ``delta`` for which the lattice weight inequality holds: ``2 - 2^{1/s}``."""
    return 2.0 - 2.0 ** (1.0 / s)


# ---------------------------------------------------- L^p estimates

def nikolskij_margin(f: GridFunction, r: float, p: float, q: float, support_tol: float = 1e-12) -> float:
    """``||f||_q / (r^{n(1/p - 1/q)} ||f||_p)`` for ``f`` band-limited to ``|xi| <= r``."""
    if p > q:
        raise ValueError(f"need p <= q, got p={p}, q={q}")
    F = forward_transform(f)
    c = np.abs(F.coefficients) ** 2
    outside = math.sqrt(c[f.spec.freq_abs() > r * (1 + 1e-12)].sum() / c.sum()) if c.sum() > 0 else 0.0
    if outside > support_tol:
        raise ValueError(f"spectrum not band-limited to radius {r}: relative mass {outside:.2e} outside")
    inv = (lambda v: 0.0 if math.isinf(v) else 1.0 / v)
    scale = r ** (f.spec.n * (inv(p) - inv(q)))
    return lp_norm(f, q) / (scale * lp_norm(f, p))


def _require_real(u: GridFunction) -> np.ndarray:
    v = u.values
    top = float(np.abs(v).max()) if v.size else 0.0
    if np.abs(v.imag).max() > REAL_TOL * max(top, 1.0):
        raise ValueError("u must be real-valued")
    return v.real


def expm1_i(u: GridFunction) -> GridFunction:
    """``e^{iu} - 1`` computed without cancellation for small ``u``."""
    v = _require_real(u)
    return GridFunction(u.spec, 2j * np.sin(v / 2) * np.exp(1j * v / 2))


def exp_lp_margin(u: GridFunction, p: float) -> float:
    """``||u||_p - ||e^{iu} - 1||_p``; nonnegative since ``|e^{it} - 1| <= |t|``."""
    return lp_norm(u, p) - lp_norm(expm1_i(u), p)


def gevrey_exp_norm(u: GridFunction, params: NormParams, D: DecompositionFamily,
                    tail_tol: float = TAIL_TOL) -> LogMagnitude:
    """Log Gevrey-modulation norm of ``e^{iu} - 1``."""
    if params.weight.kind != "gevrey":
        raise ValueError("gevrey_exp_norm needs a Gevrey weight")
    w = expm1_i(u)
    if not np.any(w.values):
        return LogMagnitude(-math.inf)
    return modulation_norm_decomp(w, params, D, tail_tol)


def subset_expansion(a) -> complex:
    """``sum`` over nonempty index subsets ``J`` of ``prod_{j in J} (a_j - 1)``.

    Equals ``prod a_j - 1``; enumerated explicitly so the identity can be checked.
    """
    a = list(a)
    total = 0j
    for size in range(1, len(a) + 1):
        for J in itertools.combinations(range(len(a)), size):
            term = 1 + 0j
            for j in J:
                term *= a[j] - 1
            total += term
    return total


# ---------------------------------------------------- densities

def _xi_gauss(xi, a: float = 1.0):
    return xi * np.exp(-a * xi * xi)


def _gauss(xi, a: float = 1.0):
    return np.exp(-a * xi * xi)


def _zero(xi):
    return np.zeros_like(xi)


def _xi_gauss_f(t, a: float = 1.0):
    # (2 pi)^{-1/2} int e^{i xi t} xi e^{-a xi^2} dxi
    return 1j * t / (2 * a) * np.sqrt(math.pi / a) * np.exp(-t * t / (4 * a)) / math.sqrt(2 * math.pi)


def _gauss_f(t, a: float = 1.0):
    return np.sqrt(math.pi / a) * np.exp(-t * t / (4 * a)) / math.sqrt(2 * math.pi)


# name -> (density, inverse transform of the density, default support bound)
CLOSED_FORMS: dict[str, tuple[Callable, Callable | None, float]] = {
    "xi_gauss": (_xi_gauss, _xi_gauss_f, 12.0),
    "gauss": (_gauss, _gauss_f, 12.0),
    "zero": (_zero, lambda t: np.zeros_like(t, dtype=complex), 1.0),
}


@dataclass(frozen=True, eq=False)
class Density:
    """A bounded density ``g`` with ``|g| <= tail_tol`` outside ``[-B, B]``."""
    g: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    B: float
    tail_tol: float = 1e-14
    name: str = "custom"
    params: dict = field(default_factory=dict)
    f: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, xi):
        return np.asarray(self.g(np.asarray(xi, dtype=float)), dtype=complex)

    def __add__(self, other: Density) -> Density:
        f = None
        if self.f is not None and other.f is not None:
            f = (lambda t, a=self.f, b=other.f: a(t) + b(t))
        return Density(lambda xi, a=self, b=other: a(xi) + b(xi), max(self.B, other.B),
                       max(self.tail_tol, other.tail_tol), f"{self.name}+{other.name}", {}, f)

    def descriptor(self) -> dict:
        return {"kind": "closed_form", "name": self.name, "params": self.params, "B": self.B}


def closed_form_density(name: str, B: float | None = None, tail_tol: float = 1e-14, **params) -> Density:
    if name not in CLOSED_FORMS:
        raise ValueError(f"unknown density {name!r}; known: {sorted(CLOSED_FORMS)}")
    g, f, B0 = CLOSED_FORMS[name]
    a = params.get("a", 1.0)
    if B is None:
        B = B0 / math.sqrt(a) if name != "zero" else B0
    return Density(lambda xi: g(xi, **params), B, tail_tol, name, dict(params),
                   (lambda t: f(t, **params)) if f is not None else None)


def table_density(xi, re, im, B: float | None = None, tail_tol: float = 1e-14) -> Density:
    """Linear interpolation of tabulated samples, zero outside the table."""
    xi = np.asarray(xi, dtype=float)
    re = np.asarray(re, dtype=float)
    im = np.zeros_like(re) if im is None else np.asarray(im, dtype=float)
    if xi.ndim != 1 or xi.shape != re.shape or re.shape != im.shape or xi.size < 2:
        raise ValueError("table density needs equal-length 1-D xi, re, im arrays")
    if np.any(np.diff(xi) <= 0):
        raise ValueError("table xi must be strictly increasing")

    def g(t):
        return np.interp(t, xi, re, 0.0, 0.0) + 1j * np.interp(t, xi, im, 0.0, 0.0)

    B = float(max(abs(xi[0]), abs(xi[-1]))) if B is None else B
    return Density(g, B, tail_tol, "table", {})


def load_density(desc: dict | str) -> Density:
    """Build a density from a JSON object (or a path to one)."""
    if isinstance(desc, str):
        with open(desc) as fh:
            desc = json.load(fh)
    kind = desc.get("kind")
    if kind == "closed_form":
        return closed_form_density(desc["name"], desc.get("B"), desc.get("tail_tol", 1e-14),
                                   **desc.get("params", {}))
    if kind == "table":
        return table_density(desc["xi"], desc["re"], desc.get("im"), desc.get("B"), desc.get("tail_tol", 1e-14))
    raise ValueError(f"density kind must be 'closed_form' or 'table', got {kind!r}")


@dataclass(frozen=True)
class AdmissibilityReport:
    lambda_values: list[float]
    L1_estimates: list[float]
    tail_bounds: list[float]
    zero_integral_residual: float
    admissible: bool
    degenerate: bool
    reason: str = ""

    def as_dict(self) -> dict:
        return {
            "lambda_values": list(self.lambda_values),
            "L1_estimates": list(self.L1_estimates),
            "tail_bounds": list(self.tail_bounds),
            "zero_integral_residual": self.zero_integral_residual,
            "admissible": self.admissible,
            "degenerate": self.degenerate,
            "reason": self.reason,
        }


def moment_weight(xi: np.ndarray, s: float) -> np.ndarray:
    """``|xi|^{1/s} log|xi|``, continuous with value 0 at ``xi = 0``."""
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] ** (1.0 / s) * np.log(a[pos])
    return out


def check_admissible(g: Density, s: float, lambdas, tol: float = 1e-12,
                     zero_tol: float = 1e-10) -> AdmissibilityReport:
    """Moment integrals ``L_1(lambda)`` on ``[-B, B]``, a tail bound, and ``|int g|``."""
    lambdas = [float(v) for v in lambdas]
    if any(not v > 0 for v in lambdas):
        raise ValueError("lambda values must be positive")
    if not s > 1:
        raise ValueError(f"s must be > 1, got {s}")
    B = g.B
    probe = np.linspace(-2 * B, 2 * B, 4001)
    degenerate = not np.any(np.abs(g(probe)) > 0)
    outer = np.concatenate([np.linspace(-2 * B, -B, 1001), np.linspace(B, 2 * B, 1001)])
    L1, tails = [], []
    reason = ""
    for lam in lambdas:
        def integrand(xi, lam=lam):
            return np.exp(lam * moment_weight(xi, s)) * np.abs(g(xi))
        try:
            val = quadrature_1d(integrand, -B, B, tol=tol).real
        except QuadratureError as exc:
            L1.append(math.inf)
            reason = reason or f"L1({lam:g}) quadrature did not converge: {exc}"
            tails.append(math.inf)
            continue
        L1.append(float(val))
        tails.append(float(integrand(outer).max() * B))
    try:
        resid = abs(quadrature_1d(g, -B, B, tol=tol * 1e-2))
    except QuadratureError as exc:
        resid = math.inf
        reason = reason or f"zero-integral quadrature did not converge: {exc}"
    finite = all(math.isfinite(v) for v in L1)
    bound = max(g.tail_tol, 1e-300)
    tails_ok = all(t <= max(1e-8, bound * B) for t in tails)
    if not reason:
        if resid > zero_tol:
            reason = f"zero-integral violation: |int g| = {resid:.10g} > {zero_tol:g}"
        elif not finite:
            reason = "L1 moment estimate is not finite"
        elif not tails_ok:
            reason = "weighted density not negligible outside [-B, B]; increase B"
    adm = not reason
    return AdmissibilityReport(lambdas, L1, tails, float(resid), adm, degenerate, reason)


def superpose(u: GridFunction, g: Density, tol: float = 1e-10, s: float = 2.0,
              lambdas=(1.0, 2.0, 4.0)) -> GridFunction:
    """Pointwise ``(2 pi)^{-1/2} int_{-B}^{B} (e^{i xi u(x)} - 1) g(xi) dxi``."""
    v = _require_real(u).ravel()
    rep = check_admissible(g, s, lambdas)
    if not rep.admissible:
        raise ValueError(f"inadmissible density: {rep.reason}")
    if not np.any(v):
        return GridFunction(u.spec, np.zeros(u.spec.shape, dtype=complex))
    row = v[None, :]

    def integrand(xi):
        xi = np.asarray(xi, dtype=float)
        ph = xi[:, None] * row  # (abscissae, grid points)
        return (2j * np.sin(ph / 2) * np.exp(0.5j * ph)) * g(xi)[:, None]

    vals = quadrature_1d(integrand, -g.B, g.B, tol=tol)
    return GridFunction(u.spec, (vals / math.sqrt(2 * math.pi)).reshape(u.spec.shape))
