"""JSON system files, selection files and reports.

Every exact value is written as a string (``"-29/2"``, ``"1/2-3/4*i"``, or a
polynomial such as ``"2*lambda*mu^2 - mu^3"``) so that reports re-parse to the
identical exact objects.  Floats appear only for margins and approximate
eigenvalues.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

from .errors import FbrectError, InputError
from .exact import format_scalar, parse_ratfunc, parse_scalar
from .kernels import LinearPair
from .matfield import ExactMatrix, format_entry


# ---------------------------------------------------------------------------
# reading


def _scalar(value, path):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InputError(f"expected a rational string or integer, got {value!r}", path)
    try:
        return parse_scalar(str(value))
    except FbrectError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _matrix(value, rows, cols, path):
    if not isinstance(value, list) or len(value) != rows:
        raise InputError(f"expected {rows} rows", path)
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise InputError(f"expected {cols} entries", f"{path}[{i}]")
        out.append([_scalar(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return ExactMatrix.from_rows(out, cols)


def parse_system(doc: dict):
    """``(pair1, pair2, name)`` from a decoded system document."""
    if not isinstance(doc, dict):
        raise InputError("system file must hold a JSON object")
    for key in ("n", "p", "modes"):
        if key not in doc:
            raise InputError("missing field", key)
    n, p = doc["n"], doc["p"]
    if not isinstance(n, int) or n < 1:
        raise InputError("must be a positive integer", "n")
    if not isinstance(p, int) or p < 1:
        raise InputError("must be a positive integer", "p")
    modes = doc["modes"]
    if not isinstance(modes, list):
        raise InputError("must be a list", "modes")
    if len(modes) != 2:
        raise InputError(
            f"exactly 2 modes are supported, got {len(modes)}; with three or more modes "
            "the number of parameter combinations grows too quickly for this method", "modes")
    pairs = []
    for q, mode in enumerate(modes):
        if not isinstance(mode, dict) or "A" not in mode or "B" not in mode:
            raise InputError("each mode needs A and B", f"modes[{q}]")
        A = _matrix(mode["A"], n, n, f"modes[{q}].A")
        B = _matrix(mode["B"], n, p, f"modes[{q}].B")
        pairs.append(LinearPair(A, B, q + 1))
    return pairs[0], pairs[1], doc.get("name", "")


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", str(path)) from None


def load_system(path):
    return parse_system(load_json(path))


def builtin_system(name: str):
    """One of the bundled systems (``fourth_order``, ``colinear_2d``, ``defective_curve``, ``uncontrollable_3d``)."""
    text = resources.files("fbrect.systems").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return parse_system(json.loads(text))


def builtin_names():
    return sorted(p.name[:-5] for p in resources.files("fbrect.systems").iterdir() if p.name.endswith(".json"))


def parse_selection(doc):
    """``(pairs, coefficients, options)`` from a selection document.

    Accepts either a bare list of pairs or an object with ``pairs`` and
    optional ``coefficients``, ``scale`` and ``basis``.
    """
    if isinstance(doc, list):
        doc = {"pairs": doc}
    if not isinstance(doc, dict) or "pairs" not in doc:
        raise InputError("selection needs a 'pairs' list")
    pairs = []
    for i, pr in enumerate(doc["pairs"]):
        if not isinstance(pr, list) or len(pr) != 2:
            raise InputError("each pair must be [lambda, mu]", f"pairs[{i}]")
        pairs.append((_scalar(pr[0], f"pairs[{i}][0]"), _scalar(pr[1], f"pairs[{i}][1]")))
    coeffs = None
    if doc.get("coefficients") is not None:
        raw = doc["coefficients"]
        if not isinstance(raw, list) or len(raw) != len(pairs):
            raise InputError("need one coefficient vector per pair", "coefficients")
        coeffs = []
        for i, c in enumerate(raw):
            if c is None:
                coeffs.append(None)
                continue
            if not isinstance(c, list):
                raise InputError("must be a list", f"coefficients[{i}]")
            coeffs.append([_scalar(x, f"coefficients[{i}][{j}]") for j, x in enumerate(c)])
    options = {k: doc[k] for k in ("scale", "basis") if k in doc}
    return pairs, coeffs, options


def parse_coefficient_flag(text: str, count: int):
    """``"1,1,1;1,0,0"`` -> list of vectors; a single vector is repeated ``count`` times."""
    vecs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vecs.append([_scalar(x.strip(), "--c") for x in chunk.split(",")])
    if len(vecs) == 1:
        return vecs * count
    if len(vecs) != count:
        raise InputError(f"expected 1 or {count} coefficient vectors", "--c")
    return vecs


def parse_feedback(doc: dict, n: int, p: int):
    """``(F1, F2, V, pairs)`` from a synthesis report or a bare feedback file.

    ``V`` and ``pairs`` are ``None`` when absent.
    """
    block = doc.get("synthesis", doc) if isinstance(doc, dict) else None
    if not isinstance(block, dict) or "F1" not in block or "F2" not in block:
        raise InputError("feedback file needs F1 and F2 (top level or under 'synthesis')")
    F1 = _matrix(block["F1"], p, n, "F1")
    F2 = _matrix(block["F2"], p, n, "F2")
    V = pairs = None
    if block.get("V") is not None:
        V = _matrix(block["V"], n, n, "V")
    if block.get("pairs") is not None:
        pairs, _, _ = parse_selection({"pairs": block["pairs"]})
        if len(pairs) != n:
            raise InputError(f"expected {n} pairs", "pairs")
    return F1, F2, V, pairs


def parse_vector(text: str, n: int, path="--x0"):
    parts = [x.strip() for x in text.split(",") if x.strip()]
    if len(parts) != n:
        raise InputError(f"expected {n} entries", path)
    return [_scalar(x, path) for x in parts]


# ---------------------------------------------------------------------------
# writing


def mat_strings(M: ExactMatrix):
    return M.to_strings()


def vec_strings(v):
    return [format_entry(x) if not isinstance(x, (int, Fraction)) else format_scalar(x) for x in v]


def eig_entry(x):
    """Exact eigenvalues as strings, approximate ones as ``{"re", "im", "exact": false}``."""
    if isinstance(x, complex) or type(x).__module__ == "numpy":
        z = complex(x)
        return {"re": z.real, "im": z.imag, "exact": False}
    return format_scalar(x)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_json(doc, path=None, stream=None):
    text = dumps(doc)
    if path is None:
        stream.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def reparse_matrix(rows):
    """Inverse of :func:`mat_strings` (used for round-trip checks)."""
    return ExactMatrix.from_rows([[parse_ratfunc(x) for x in row] for row in rows])
