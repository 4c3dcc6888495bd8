"""Function descriptors and the CSV / JSON formats used by the command line."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from typing import IO

import numpy as np

from .corpus import gaussian, modulated_gaussian, random_bandlimited, trig_poly
from .grid import GridFunction, GridSpec

FUNCTION_KINDS = ("gaussian", "modulated_gaussian", "trig_poly", "cos", "random_bandlimited", "zero", "samples")


class DescriptorError(ValueError):
    """A function descriptor that cannot be realized on the grid."""


def _vec(v, n: int, what: str):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, n)
    if arr.shape != (n,):
        raise DescriptorError(f"{what} must have {n} components, got {arr.tolist()}")
    return arr


def _complex(d: dict, key: str = "amplitude", default: complex = 1.0) -> complex:
    v = d.get(key, default)
    if isinstance(v, dict):
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def build_function(spec: GridSpec, desc: dict, base_dir: str = ".") -> GridFunction:
    """Realize a JSON function descriptor on ``spec``.

    Kinds: ``gaussian {width, center, amplitude}``, ``modulated_gaussian``
    (adds ``freq``), ``trig_poly {terms: [{freq, re, im}]}``, ``cos {freq}``,
    ``random_bandlimited {seed, K, real}`` with spectrum in ``|xi|_inf < K``,
    ``zero`` and ``samples {re, im}`` or ``samples {path}`` (CSV of re,im).
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise DescriptorError("function descriptor must be an object with a 'kind' field")
    kind = desc["kind"]
    n = spec.n
    if kind == "gaussian":
        return gaussian(spec, float(desc.get("width", 1.0)), _vec(desc.get("center", 0.0), n, "center"),
                        _complex(desc))
    if kind == "modulated_gaussian":
        return modulated_gaussian(spec, float(desc.get("width", 1.0)), _vec(desc.get("center", 0.0), n, "center"),
                                  _vec(desc.get("freq", 0.0), n, "freq"), _complex(desc))
    if kind == "trig_poly":
        coeffs = {}
        for term in desc.get("terms", []):
            key = tuple(_vec(term.get("freq", 0.0), n, "freq"))
            coeffs[key] = coeffs.get(key, 0) + complex(term.get("re", 0.0), term.get("im", 0.0))
        return trig_poly(spec, coeffs)
    if kind == "cos":
        w = _vec(desc.get("freq", [1.0] + [0.0] * (n - 1)), n, "freq")
        amp = float(desc.get("amplitude", 1.0))
        return GridFunction(spec, amp * np.cos(sum(wi * x for wi, x in zip(w, spec.mesh()))))
    if kind == "random_bandlimited":
        if "seed" not in desc:
            raise DescriptorError("random_bandlimited needs an integer 'seed'")
        return random_bandlimited(spec, float(desc.get("K", 4.0)), int(desc["seed"]), bool(desc.get("real", False)))
    if kind == "zero":
        return GridFunction(spec, np.zeros(spec.shape))
    if kind == "samples":
        if "path" in desc:
            path = os.path.join(base_dir, desc["path"])
            re, im = read_samples_csv(path)
        else:
            re = np.asarray(desc.get("re", []), dtype=float)
            im = np.asarray(desc.get("im", np.zeros_like(re)), dtype=float)
        if re.size != spec.N**n or im.size != re.size:
            raise DescriptorError(f"samples must have N^n = {spec.N ** n} entries, got {re.size}")
        return GridFunction(spec, (re + 1j * im).reshape(spec.shape))
    raise DescriptorError(f"unknown function kind {kind!r}; known: {', '.join(FUNCTION_KINDS)}")


def load_descriptor(path: str) -> dict:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"input file {path!r} does not exist")
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- output


def clean(obj):
    """Make a report JSON-safe: infinities and NaN become strings, arrays lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"


def _fmt(v: float) -> str:
    return repr(float(v))


def grid_csv(f: GridFunction) -> str:
    """Rows ``x_1..x_n, re, im`` in row-major grid order."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = f.spec.n
    w.writerow([f"x{i + 1}" for i in range(n)] + ["re", "im"])
    coords = [c.ravel() for c in f.spec.mesh()]
    vals = np.asarray(f.values, dtype=complex).ravel()
    for j in range(vals.size):
        w.writerow([_fmt(c[j]) for c in coords] + [_fmt(vals[j].real), _fmt(vals[j].imag)])
    return buf.getvalue()


def read_samples_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read the ``re, im`` columns of a file written by :func:`grid_csv`."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"samples file {path!r} does not exist")
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    if "re" not in header:
        raise DescriptorError(f"{path}: samples CSV needs a 're' column")
    ir = header.index("re")
    ii = header.index("im") if "im" in header else None
    re = np.array([float(r[ir]) for r in body])
    im = np.array([float(r[ii]) for r in body]) if ii is not None else np.zeros_like(re)
    return re, im


def stft_csv(V, header: dict) -> str:
    """``# {json header}`` then rows ``x..., xi..., re, im`` over phase space."""
    spec = V.spec
    n = spec.n
    buf = _io.StringIO()
    buf.write("# " + json.dumps(clean(header), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)] + ["re", "im"])
    x, xi = spec.axis(), spec.freq_axis()
    for idx in np.ndindex(V.values.shape):
        v = V.values[idx]
        w.writerow([_fmt(x[i]) for i in idx[:n]] + [_fmt(xi[i]) for i in idx[n:]] + [_fmt(v.real), _fmt(v.imag)])
    return buf.getvalue()


def family_csv(rows: list[dict], header: dict) -> str:
    buf = _io.StringIO()
    buf.write("# " + json.dumps(clean(header), sort_keys=True) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def wave_csv(rows: list[dict]) -> str:
    cols = ["t", "solution_log_norm", "c_of_t", "c_of_t_g_lower", "energy"]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[c] is None else _fmt(r[c]) for c in cols])
    return buf.getvalue()


def emit(text: str, out: str | None, stream: IO[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
