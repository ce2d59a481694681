"""JSON model files: parsing with line-anchored errors, and canonical emission.

Finite model::

    {"states": ["x1", "x2", "x3"],
     "nu": ["1/5", "3/10", "1/2"],
     "theta": "2",
     "kernel": {"type": "partition", "blocks": [["x1"], ["x2", "x3"]]},
     "coefficients": {"type": "mvps"}}

``kernel.type`` is one of ``partition``, ``identity``, ``iid`` or
``explicit`` (with ``rows``).  ``coefficients`` is optional; ``{"type":
"list", "values": [...]}`` gives a general mixing rule with a finite horizon.

General (real line) model::

    {"type": "general", "theta": "1", "bins": [[0, 1], [1, 2]],
     "bin_probs": ["1/2", "1/2"],
     "cdfs": [{"knots": [0, 1], "cdf": [0, 1]}, ...]}     # optional

Numbers written as ``"p/q"`` strings or integers are exact.  Any decimal
switches the whole model to float mode, with a warning.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .general_space import GeneralMixtureModel, PiecewiseLinearCDF
from .measure import DEFAULT_TOL, Kernel, Measure, StateSpace, scalar_eq
from .partitions import Partition, conditional_kernel
from .process import Mvps, MvpsSpec, PredictiveFamily, Sufficientness

log = logging.getLogger(__name__)

FLOAT_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Invalid model file; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: Optional[int] = None, source: str = "<model>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class FiniteModel:
    space: StateSpace
    nu: Measure
    theta: object
    kernel_type: str
    partition: Optional[Partition] = None
    rows: Optional[Kernel] = None
    coefficients: Optional[tuple] = None

    @property
    def R(self) -> Kernel:
        if self.kernel_type == "explicit":
            return self.rows
        return conditional_kernel(self.nu, self.partition)

    def family(self) -> PredictiveFamily:
        if self.coefficients is None:
            return Mvps(MvpsSpec(self.theta, self.nu, self.R))
        return Sufficientness(self.nu, self.R, self.coefficients)


class _Reader:
    """Tracks exactness while converting JSON values to scalars."""

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.inexact = False

    def line_of(self, key: str) -> Optional[int]:
        needle = f'"{key}"'
        for i, line in enumerate(self.text.splitlines(), 1):
            if needle in line:
                return i
        return None

    def fail(self, key: str, message: str):
        raise ModelError(message, self.line_of(key), self.source)

    def number(self, value, key: str):
        if isinstance(value, bool):
            self.fail(key, f"{key}: expected a number, got {value!r}")
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            self.inexact = True
            return Fraction(value)
        if isinstance(value, str):
            s = value.strip()
            try:
                q = Fraction(s)
            except (ValueError, ZeroDivisionError):
                self.fail(key, f"{key}: cannot parse {value!r} as a rational")
            if "/" not in s and not _is_int_literal(s):
                self.inexact = True
            return q
        self.fail(key, f"{key}: expected a number, got {value!r}")

    def finish(self, x):
        return float(x) if self.inexact else x


def _is_int_literal(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


def loads(text: str, source: str = "<model>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"invalid JSON: {e.msg}", e.lineno, source) from None
    if not isinstance(doc, dict):
        raise ModelError("top level must be a JSON object", 1, source)
    r = _Reader(text, source)
    if doc.get("type") == "general" or "bins" in doc:
        model = _general(doc, r)
    else:
        model = _finite(doc, r)
    if r.inexact:
        log.warning("%s: decimal values present; model evaluated in float mode", source)
    return model


def load(path) -> object:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ModelError(e.strerror or str(e), None, str(path)) from None
    return loads(text, str(path))


def _require(doc, key, r):
    if key not in doc:
        raise ModelError(f"missing field {key!r}", None, r.source)
    return doc[key]


def _finite(doc, r: _Reader) -> FiniteModel:
    states = _require(doc, "states", r)
    if not isinstance(states, list) or not states:
        r.fail("states", "states must be a nonempty list of labels")
    try:
        space = StateSpace(tuple(states))
    except ValueError as e:
        r.fail("states", str(e))
    k = space.k

    raw_nu = _require(doc, "nu", r)
    if not isinstance(raw_nu, list) or len(raw_nu) != k:
        r.fail("nu", f"nu must list {k} probabilities")
    nu_q = [r.number(x, "nu") for x in raw_nu]
    theta_q = r.number(doc.get("theta", 1), "theta")

    kern = _require(doc, "kernel", r)
    if not isinstance(kern, dict) or "type" not in kern:
        r.fail("kernel", "kernel must be an object with a 'type'")
    ktype = kern["type"]
    partition = rows_q = None
    if ktype == "partition":
        blocks = kern.get("blocks")
        if not isinstance(blocks, list):
            r.fail("blocks", "partition kernel needs 'blocks'")
        try:
            partition = Partition.from_blocks([[space.index(s) for s in b] for b in blocks], k)
        except (KeyError, ValueError) as e:
            r.fail("blocks", f"bad blocks: {e}")
    elif ktype == "identity":
        partition = Partition.discrete(k)
    elif ktype == "iid":
        partition = Partition.trivial(k)
    elif ktype == "explicit":
        raw = kern.get("rows")
        if not isinstance(raw, list) or len(raw) != k or any(not isinstance(x, list) or len(x) != k for x in raw):
            r.fail("rows", f"explicit kernel needs {k} rows of {k} entries")
        rows_q = [[r.number(x, "rows") for x in row] for row in raw]
    else:
        r.fail("kernel", f"unknown kernel type {ktype!r}")

    coeff_q = None
    coeffs = doc.get("coefficients")
    if coeffs is not None:
        ctype = coeffs.get("type") if isinstance(coeffs, dict) else None
        if ctype == "list":
            vals = coeffs.get("values")
            if not isinstance(vals, list) or not vals:
                r.fail("values", "coefficient list needs nonempty 'values'")
            coeff_q = [r.number(x, "values") for x in vals]
        elif ctype != "mvps":
            r.fail("coefficients", f"unknown coefficients type {ctype!r}")

    fin = r.finish
    nu_vals = [fin(x) for x in nu_q]
    if any(x <= 0 for x in nu_vals):
        r.fail("nu", "nu must be strictly positive on every state")
    total = sum(nu_q)
    if (r.inexact and abs(total - 1) > FLOAT_SUM_TOL) or (not r.inexact and total != 1):
        r.fail("nu", f"nu sums to {float(total):g}, not 1")
    theta = fin(theta_q)
    if not theta > 0:
        r.fail("theta", "theta must be positive")
    nu = Measure(space, tuple(nu_vals))
    rows = None
    if rows_q is not None:
        try:
            rows = Kernel(space, tuple(tuple(fin(x) for x in row) for row in rows_q))
        except ValueError as e:
            r.fail("rows", str(e))
        if any(m <= 0 for m in rows.row_masses):
            r.fail("rows", "every kernel row needs positive mass")
    coefficients = None
    if coeff_q is not None:
        coefficients = tuple(fin(x) for x in coeff_q)
        if any(not 0 < a < 1 for a in coefficients):
            r.fail("values", "coefficients must lie strictly inside (0, 1)")
        R = rows if rows is not None else conditional_kernel(nu, partition)
        if not R.is_probability(FLOAT_SUM_TOL if r.inexact else DEFAULT_TOL):
            r.fail("kernel", "a coefficient list needs a kernel with rows of mass one")
    return FiniteModel(space, nu, theta, ktype, partition, rows, coefficients)


def _general(doc, r: _Reader) -> GeneralMixtureModel:
    theta_q = r.number(_require(doc, "theta", r), "theta")
    bins = _require(doc, "bins", r)
    if not isinstance(bins, list) or not bins or any(not isinstance(b, list) or len(b) != 2 for b in bins):
        r.fail("bins", "bins must be a list of [lo, hi] pairs")
    probs = _require(doc, "bin_probs", r)
    if not isinstance(probs, list) or len(probs) != len(bins):
        r.fail("bin_probs", "need one probability per bin")
    probs_q = [r.number(p, "bin_probs") for p in probs]
    samplers = ()
    if "cdfs" in doc:
        cdfs = doc["cdfs"]
        if not isinstance(cdfs, list) or len(cdfs) != len(bins):
            r.fail("cdfs", "need one CDF per bin")
        try:
            samplers = tuple(PiecewiseLinearCDF(tuple(c["knots"]), tuple(c["cdf"])) for c in cdfs)
        except (KeyError, TypeError, ValueError) as e:
            r.fail("cdfs", f"bad cdf: {e}")
    total = sum(probs_q)
    if (r.inexact and abs(total - 1) > FLOAT_SUM_TOL) or (not r.inexact and total != 1):
        r.fail("bin_probs", f"bin_probs sum to {float(total):g}, not 1")
    try:
        return GeneralMixtureModel(
            r.finish(theta_q),
            tuple((float(lo), float(hi)) for lo, hi in bins),
            tuple(r.finish(p) for p in probs_q),
            samplers,
        )
    except (TypeError, ValueError) as e:
        r.fail("bins", str(e))


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    return x


def to_dict(model) -> dict:
    """Canonical JSON-ready form; ``loads(dumps(m)) == m`` for exact models."""
    if isinstance(model, GeneralMixtureModel):
        return {
            "type": "general",
            "theta": _num(model.theta),
            "bins": [list(b) for b in model.bins],
            "bin_probs": [_num(p) for p in model.bin_probs],
            "cdfs": [{"knots": list(s.knots), "cdf": list(s.cdf)} for s in model.samplers],
        }
    labels = model.space.labels
    out = {"states": list(labels), "nu": [_num(x) for x in model.nu.weights], "theta": _num(model.theta)}
    if model.kernel_type == "explicit":
        out["kernel"] = {"type": "explicit", "rows": [[_num(x) for x in row.weights] for row in model.rows.rows]}
    elif model.kernel_type == "partition":
        out["kernel"] = {"type": "partition", "blocks": [[labels[j] for j in b] for b in model.partition.blocks]}
    else:
        out["kernel"] = {"type": model.kernel_type}
    if model.coefficients is None:
        out["coefficients"] = {"type": "mvps"}
    else:
        out["coefficients"] = {"type": "list", "values": [_num(a) for a in model.coefficients]}
    return out


def dumps(model) -> str:
    return json.dumps(to_dict(model), indent=2)
