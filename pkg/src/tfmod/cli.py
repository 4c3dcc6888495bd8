"""Command line front end.

Every subcommand writes JSON (scalar reports) or CSV (series) to ``--out``
or stdout.  Exit codes: 0 success, 1 a numerical check failed, 2 the
configuration is invalid.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import formats
from .algebra import (
    algebra_ratio,
    check_admissible,
    choose_R,
    closed_form_density,
    exp_lp_margin,
    load_density,
    log_subalgebra_constant,
    subset_expansion,
    superpose,
    weight_inequality_margin,
)
from .corpus import random_bandlimited, random_localized
from .decomposition import build_sigma
from .grid import GridFunction, forward_transform, inverse_transform, lp_norm, make_grid
from .norms import NormParams, WeightSpec, equivalence_ratio, mixed_lpq_norm, modulation_norm_decomp, modulation_norm_stft
from .stft import Window, check_gelfand_shilov, gaussian_window, istft, stft, verify_identities
from .wave import apriori_report, energy, propagate

COMMANDS = ("verify", "norm", "stft", "decompose", "algebra", "superpose", "wave")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config error: field '{field_name}': {message}")
        self.field = field_name


class CheckFailure(RuntimeError):
    """A numerical check did not meet its tolerance."""


@dataclass
class RunConfig:
    command: str
    grid_n: int = 1
    grid_N: int = 256
    L_over_pi: float = 8.0
    window: dict | None = None
    window_width: float = 1.0
    weight: str = "gevrey:2"
    p: float = 2.0
    q: float = 2.0
    K: int = 12
    delta: float = 0.5
    form: str = "decomp"
    out: str | None = None
    report: str | None = None
    seed: int = 0
    tol: float = 1e-10
    input: str | None = None
    input2: str | None = None
    density: str = "xi_gauss"
    preset: str = "eigenmode"
    t_grid: list = field(default_factory=lambda: [round(0.25 * i, 2) for i in range(13)])
    base_dir: str = "."

    def public(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d.pop("out")
        d.pop("report")
        return d


COMMAND_DEFAULTS = {
    "wave": {"q": 1.0, "weight": "poly:2"},
}


def _exponent(v, name: str) -> float:
    if isinstance(v, str):
        try:
            v = float(v)
        except ValueError:
            raise ConfigError(name, f"not a number: {v!r}") from None
    v = float(v)
    if math.isnan(v) or not v >= 1:
        raise ConfigError(name, f"must be >= 1 (or inf), got {v}")
    return v


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with the same keys as the flags (dash -> underscore)")
    common.add_argument("--grid-n", dest="grid_n", type=int, help="dimension n (1..3)")
    common.add_argument("--grid-N", dest="grid_N", type=int, help="points per axis (power of two >= 8)")
    common.add_argument("--L-over-pi", dest="L_over_pi", type=float, help="half-width L in units of pi")
    common.add_argument("--window-width", dest="window_width", type=float, help="Gaussian window width")
    common.add_argument("--weight", help="none, poly:<s> or gevrey:<s>")
    common.add_argument("--p", help="inner exponent (number or inf)")
    common.add_argument("--q", help="outer exponent (number or inf)")
    common.add_argument("--K", type=int, help="decomposition truncation radius")
    common.add_argument("--delta", type=float, help="delta in (0, 1)")
    common.add_argument("--form", choices=("decomp", "stft", "both"), help="norm form")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--report", help="path for the JSON report of commands that also write data")
    common.add_argument("--seed", type=int, help="seed for random corpora")
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--input", help="JSON function descriptor")
    common.add_argument("--input2", help="second JSON function descriptor")
    common.add_argument("--density", help="density preset name or JSON descriptor path")
    common.add_argument("--preset", choices=("eigenmode", "random"), help="wave initial data preset")
    common.add_argument("--t-grid", dest="t_grid", help="comma separated times")
    parser = argparse.ArgumentParser(prog="tfmod", description="Time-frequency numerics on periodic grids.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "run the verification suites",
        "norm": "modulation norm of a function",
        "stft": "STFT of a function as CSV",
        "decompose": "per-band L^p norms as CSV",
        "algebra": "product norm ratios and subalgebra constants",
        "superpose": "apply a superposition operator",
        "wave": "wave propagation and a priori constants as CSV",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], argument_default=argparse.SUPPRESS)
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    given = vars(ns).copy()
    command = given.pop("command")
    merged: dict = dict(COMMAND_DEFAULTS.get(command, {}))
    base_dir = "."
    cfg_path = given.pop("config", None)
    if cfg_path:
        if not os.path.isfile(cfg_path):
            raise ConfigError("config", f"file {cfg_path!r} does not exist")
        try:
            with open(cfg_path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        grid = data.pop("grid", None)
        if isinstance(grid, dict):
            for k_src, k_dst in (("n", "grid_n"), ("N", "grid_N"), ("L_over_pi", "L_over_pi")):
                if k_src in grid:
                    data.setdefault(k_dst, grid[k_src])
        known = set(RunConfig.__dataclass_fields__) - {"command", "base_dir"}
        for k in data:
            if k.replace("-", "_") not in known:
                raise ConfigError(k, "unknown configuration key")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
        base_dir = os.path.dirname(os.path.abspath(cfg_path))
    merged.update(given)
    try:
        cfg = RunConfig(command=command, base_dir=base_dir, **merged)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    cfg.p = _exponent(cfg.p, "p")
    cfg.q = _exponent(cfg.q, "q")
    for name in ("grid_n", "grid_N", "K", "seed"):
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) and not (isinstance(v, float) and v.is_integer()):
            raise ConfigError(name, f"must be an integer, got {v!r}")
        setattr(cfg, name, int(v))
    if not 1 <= cfg.grid_n <= 3:
        raise ConfigError("grid_n", f"dimension must be 1, 2 or 3, got {cfg.grid_n}")
    N = cfg.grid_N
    if N < 8 or N & (N - 1):
        raise ConfigError("grid_N", f"must be a power of two >= 8, got {N}")
    if not float(cfg.L_over_pi) > 0:
        raise ConfigError("L_over_pi", f"must be positive, got {cfg.L_over_pi}")
    try:
        cfg.weight = WeightSpec.parse(str(cfg.weight)).label() if cfg.weight else "none"
    except ValueError as exc:
        raise ConfigError("weight", str(exc)) from None
    if not 0 < float(cfg.delta) < 1:
        raise ConfigError("delta", f"must lie in (0, 1), got {cfg.delta}")
    if not float(cfg.tol) > 0:
        raise ConfigError("tol", f"must be positive, got {cfg.tol}")
    if not float(cfg.window_width) > 0:
        raise ConfigError("window_width", f"must be positive, got {cfg.window_width}")
    if cfg.form not in ("decomp", "stft", "both"):
        raise ConfigError("form", f"must be decomp, stft or both, got {cfg.form!r}")
    if isinstance(cfg.t_grid, str):
        try:
            cfg.t_grid = [float(v) for v in cfg.t_grid.split(",") if v.strip()]
        except ValueError:
            raise ConfigError("t_grid", "must be comma separated numbers") from None
    cfg.t_grid = [float(v) for v in cfg.t_grid]
    if not cfg.t_grid:
        raise ConfigError("t_grid", "needs at least one time")
    if cfg.K < 1:
        raise ConfigError("K", f"must be >= 1, got {cfg.K}")
    L = cfg.L_over_pi * math.pi
    if N / 2 * math.pi / L <= cfg.K + 1:
        raise ConfigError("K", f"lattice edge N/2 * pi/L = {N / 2 / cfg.L_over_pi:g} must exceed K + 1 = {cfg.K + 1}")
    return cfg


# ---------------------------------------------------------------- builders


class Context:
    """Grid, window, decomposition and norm parameters derived from a config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spec = make_grid(cfg.grid_n, cfg.grid_N, cfg.L_over_pi * math.pi)
        self.weight = WeightSpec.parse(cfg.weight)
        self.params = NormParams(cfg.p, cfg.q, self.weight)
        self.window = self._window()
        self._D = None

    @property
    def D(self):
        if self._D is None:
            try:
                self._D = build_sigma(self.spec, self.cfg.K)
            except ValueError as exc:
                raise ConfigError("K", str(exc)) from None
        return self._D

    def _window(self) -> Window:
        desc = self.cfg.window
        if desc is None:
            return gaussian_window(self.spec, self.cfg.window_width)
        try:
            g = formats.build_function(self.spec, desc, self.cfg.base_dir)
            w = Window(g, desc.get("kind", "custom"))
        except (ValueError, FileNotFoundError) as exc:
            raise ConfigError("window", str(exc)) from None
        if not np.any(w.g.values):
            raise ConfigError("window", "window must be nonzero")
        return w

    def function(self, field_name: str, default: dict | None = None) -> GridFunction:
        path = getattr(self.cfg, field_name)
        if path is None:
            if default is None:
                raise ConfigError(field_name, "a function descriptor is required")
            desc, base = default, self.cfg.base_dir
        else:
            full = path if os.path.isabs(path) else os.path.join(os.getcwd(), path)
            if not os.path.isfile(full):
                raise ConfigError(field_name, f"input file {path!r} does not exist")
            try:
                with open(full) as fh:
                    desc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(field_name, f"invalid JSON: {exc}") from None
            base = os.path.dirname(full)
        try:
            return formats.build_function(self.spec, desc, base)
        except (ValueError, FileNotFoundError) as exc:
            raise ConfigError(field_name, str(exc)) from None

    def gevrey_s(self) -> float:
        return self.weight.s if self.weight.kind == "gevrey" else 2.0


# ---------------------------------------------------------------- commands


def _suite(name: str, observed: float, tolerance: float, passed: bool, **extra) -> dict:
    out = {"name": name, "observed": observed, "tolerance": tolerance, "passed": bool(passed)}
    out.update(extra)
    return out


def cmd_verify(ctx: Context) -> tuple[dict, bool]:
    cfg, spec = ctx.cfg, ctx.spec
    phi = ctx.window
    suites = []

    corpus = [random_localized(spec, cfg.seed + i) for i in range(5)]
    rt = max(lp_norm(inverse_transform(forward_transform(f)) - f, 2) / lp_norm(f, 2) for f in corpus)
    suites.append(_suite("transform_round_trip", rt, 1e-12, rt <= 1e-12))

    iso = 0.0
    unit = gaussian_window(spec, cfg.window_width)
    for f in corpus:
        val = math.exp(mixed_lpq_norm(stft(f, unit), 2, 2).log_value)
        iso = max(iso, abs(val - lp_norm(f, 2)) / lp_norm(f, 2))
    suites.append(_suite("stft_isometry", iso, 1e-6, iso <= 1e-6))

    gamma = gaussian_window(spec, 1.7 * cfg.window_width)
    dev, dom = 0.0, 0.0
    for f in corpus[:3]:
        rep = verify_identities(f, phi, gamma)
        dev = max(dev, rep.max_deviation)
        dom = max(dom, rep.domination_margin)
    suites.append(_suite("stft_identities", dev, 1e-8, dev <= 1e-8))
    suites.append(_suite("convolution_domination", dom, 1e-10, dom <= 1e-10))

    inv = 0.0
    for f in corpus[:3]:
        V = stft(f, phi)
        for g in (phi, gamma):
            inv = max(inv, lp_norm(istft(V, g, phi) - f, 2) / lp_norm(f, 2))
    suites.append(_suite("inversion", inv, 1e-6, inv <= 1e-6))

    D = ctx.D
    pu = float(np.max(np.abs(D.partition_sum()[D.covered_mask()] - 1.0)))
    suites.append(_suite("partition_of_unity", pu, 1e-12, pu <= 1e-12))

    s = ctx.gevrey_s()
    _, eps = check_gelfand_shilov(phi, s)
    suites.append(_suite("window_decay_rate", eps, 0.0, eps > 0, s=s))

    kmax = 20 if spec.n < 3 else 6
    wm = weight_inequality_margin(s, cfg.delta, kmax, spec.n)
    suites.append(_suite("weight_inequality", wm.margin, -1e-12, wm.margin >= -1e-12, s=s, delta=cfg.delta,
                         Kmax=kmax, worst_k=list(wm.k), worst_l=list(wm.l)))

    em = math.inf
    for i in range(5):
        u = random_bandlimited(spec, 3.0, cfg.seed + 100 + i, real=True) * (3.0 * (i + 1))
        for p in (1.0, 2.0, math.inf):
            em = min(em, exp_lp_margin(u, p))
    suites.append(_suite("exp_lp_margin", em, -1e-12, em >= -1e-12))

    rng = np.random.default_rng(cfg.seed)
    tele = 0.0
    for m in range(1, 6):
        a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        tele = max(tele, abs(subset_expansion(a) - (np.prod(a) - 1)))
    suites.append(_suite("product_expansion", tele, 1e-12, tele <= 1e-12))

    d4 = math.exp(log_subalgebra_constant(4.0, 2.0, 2.0, 1, 0.5, 1.0))
    err = abs(d4 - math.sqrt(12 * math.exp(-2)))
    suites.append(_suite("subalgebra_constant", err, 1e-6, err <= 1e-6, value=d4))

    ratios = [equivalence_ratio(random_bandlimited(spec, max(1.0, cfg.K - 4), cfg.seed + 200 + i),
                                ctx.params, unit, D) for i in range(5)]
    spread = max(ratios) / min(ratios)
    suites.append(_suite("norm_equivalence_spread", spread, 10.0, spread <= 10.0))

    f0 = random_bandlimited(spec, 4.0, cfg.seed + 300, real=True)
    g0 = random_bandlimited(spec, 4.0, cfg.seed + 301, real=True)
    e0 = energy(propagate(f0, g0, 0.0))
    drift = max(abs(energy(propagate(f0, g0, t)) - e0) / e0 for t in (0.5, 1.0, 2.0, 3.0))
    suites.append(_suite("wave_energy_drift", drift, 1e-8, drift <= 1e-8))

    ok = all(x["passed"] for x in suites)
    return {"command": "verify", "config": cfg.public(), "suites": suites, "passed": ok}, ok


def _norm_record(m, params) -> dict:
    r = m.record(params)
    r["value"] = r.pop("value_or_inf")
    if params is None:
        r.pop("params")
    return r


def cmd_norm(ctx: Context) -> dict:
    f = ctx.function("input")
    out = {"command": "norm", "form": ctx.cfg.form, "params": ctx.params.as_dict()}
    recs = {}
    if ctx.cfg.form in ("decomp", "both"):
        recs["decomp"] = modulation_norm_decomp(f, ctx.params, ctx.D)
    if ctx.cfg.form in ("stft", "both"):
        recs["stft"] = modulation_norm_stft(f, ctx.window, ctx.params)
    if ctx.cfg.form == "both":
        out["decomp"] = _norm_record(recs["decomp"], None)
        out["stft"] = _norm_record(recs["stft"], None)
        a, b = recs["decomp"].log_value, recs["stft"].log_value
        out["ratio"] = math.exp(a - b) if math.isfinite(a) and math.isfinite(b) else None
    else:
        out.update(_norm_record(recs[ctx.cfg.form], None))
    return out


def cmd_stft(ctx: Context) -> str:
    f = ctx.function("input")
    V = stft(f, ctx.window)
    header = {"command": "stft", "grid": {"n": ctx.spec.n, "N": ctx.spec.N, "L": ctx.spec.L},
              "window": ctx.window.descriptor(), "layout": "x..., xi..., re, im"}
    return formats.stft_csv(V, header)


def cmd_decompose(ctx: Context) -> str:
    from .decomposition import box_lp_norms

    f = ctx.function("input")
    D = ctx.D
    norms = box_lp_norms(f, D, ctx.cfg.p)
    rows = []
    for k, v in norms.items():
        row = {f"k{i + 1}": k[i] for i in range(ctx.spec.n)}
        row["lp_norm"] = float(v)
        row["log_weight"] = float(ctx.weight.log_of_abs(sum(c * c for c in k)))
        rows.append(row)
    pu = float(np.max(np.abs(D.partition_sum()[D.covered_mask()] - 1.0)))
    header = {"command": "decompose", "K": D.K, "p": ctx.params.as_dict()["p"], "weight": ctx.weight.label(),
              "partition_residual": pu}
    return formats.family_csv(rows, header)


def cmd_algebra(ctx: Context) -> dict:
    cfg = ctx.cfg
    f = ctx.function("input", {"kind": "random_bandlimited", "seed": cfg.seed, "K": 4})
    g = ctx.function("input2", {"kind": "random_bandlimited", "seed": cfg.seed + 1, "K": 4})
    try:
        r = algebra_ratio(f, g, ctx.params, ctx.D)
    except ValueError as exc:
        raise CheckFailure(str(exc)) from None
    s = ctx.gevrey_s()
    table = []
    for R in (0.0, 1.0, 4.0, 16.0, 64.0):
        table.append({"R": R, "log_D": log_subalgebra_constant(R, s, cfg.q, ctx.spec.n, cfg.delta)})
    target = math.exp(table[2]["log_D"])
    R_back = choose_R(target, s, cfg.q, ctx.spec.n, cfg.delta)
    return {"command": "algebra", "params": ctx.params.as_dict(),
            "ratio_general": r.general, "ratio_same_exponent": r.same_exponent,
            "product_log_norm": r.log_product_norm,
            "subalgebra": {"s": s, "q": cfg.q, "n": ctx.spec.n, "delta": cfg.delta, "C0": 1.0,
                           "table": table, "choose_R_of_D4": R_back}}


def _density(ctx: Context):
    name = ctx.cfg.density
    try:
        if name.endswith(".json") or os.path.sep in name:
            if not os.path.isfile(name):
                raise ConfigError("density", f"file {name!r} does not exist")
            return load_density(name)
        return closed_form_density(name)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("density", str(exc)) from None


def cmd_superpose(ctx: Context) -> tuple[dict, str | None, bool]:
    g = _density(ctx)
    u = ctx.function("input", {"kind": "gaussian", "width": 1.0, "amplitude": 1.0})
    s = ctx.gevrey_s()
    rep = check_admissible(g, s, [1.0, 2.0, 4.0])
    report = {"command": "superpose", "density": g.descriptor(), "s": s, "admissibility": rep.as_dict()}
    if not rep.admissible:
        report["passed"] = False
        report["error"] = rep.reason
        return report, None, False
    if not np.allclose(u.values.imag, 0, atol=1e-12):
        raise ConfigError("input", "u must be real-valued")
    T = superpose(u, g, ctx.cfg.tol, s)
    ok = True
    if g.f is not None:
        err = float(np.max(np.abs(T.values - g.f(u.values.real)))) if u.values.size else 0.0
        report["closed_form_max_error"] = err
        report["closed_form_tolerance"] = 1e-6
        ok = err <= 1e-6
    report["output_l2_norm"] = lp_norm(T, 2)
    report["passed"] = ok
    return report, formats.grid_csv(T), ok


def cmd_wave(ctx: Context) -> str:
    spec = ctx.spec
    cfg = ctx.cfg
    if cfg.input is not None:
        f = ctx.function("input")
        g = ctx.function("input2", {"kind": "zero"})
    elif cfg.preset == "eigenmode":
        f = formats.build_function(spec, {"kind": "cos"})
        g = formats.build_function(spec, {"kind": "zero"})
    else:
        f = random_bandlimited(spec, max(1.0, cfg.K - 4), cfg.seed, real=True)
        g = random_bandlimited(spec, max(1.0, cfg.K - 4), cfg.seed + 1, real=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = apriori_report(f, g, ctx.params, ctx.D, cfg.t_grid)
    return formats.wave_csv(rep["rows"])


# ---------------------------------------------------------------- entry


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve_config(ns)
        if cfg.command == "wave" and cfg.q != 1:
            stderr.write(f"warning: a priori report is meant for q = 1; running with q = {cfg.q:g}\n")
        ctx = Context(cfg)
        if cfg.command == "verify":
            report, ok = cmd_verify(ctx)
            formats.emit(formats.dumps(report), cfg.out, stdout)
            if not ok:
                failed = [s["name"] for s in report["suites"] if not s["passed"]]
                stderr.write(f"verification failed: {', '.join(failed)}\n")
            return 0 if ok else 1
        if cfg.command == "norm":
            formats.emit(formats.dumps(cmd_norm(ctx)), cfg.out, stdout)
        elif cfg.command == "stft":
            formats.emit(cmd_stft(ctx), cfg.out, stdout)
        elif cfg.command == "decompose":
            formats.emit(cmd_decompose(ctx), cfg.out, stdout)
        elif cfg.command == "algebra":
            formats.emit(formats.dumps(cmd_algebra(ctx)), cfg.out, stdout)
        elif cfg.command == "superpose":
            report, data, ok = cmd_superpose(ctx)
            if data is not None and cfg.out:
                formats.emit(data, cfg.out, stdout)
            formats.emit(formats.dumps(report), cfg.report, stdout)
            if not ok:
                stderr.write(f"superposition check failed: {report.get('error', 'closed-form mismatch')}\n")
            return 0 if ok else 1
        elif cfg.command == "wave":
            formats.emit(cmd_wave(ctx), cfg.out, stdout)
        return 0
    except ConfigError as exc:
        stderr.write(f"{exc}\n")
        return 2
    except CheckFailure as exc:
        stderr.write(f"check failed: {exc}\n")
        return 1
    except ValueError as exc:
        # remaining precondition violations from the numerical modules
        stderr.write(f"check failed: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
