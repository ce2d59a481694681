"""Maximum-likelihood recovery of (theta, partition) from a finite-state trajectory."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EdgeMaximum, Flat, OutOfRange
from .measure import Measure, StateSpace
from .partitions import Partition, iter_partitions

FIT_MAX_K = 8
DEFAULT_BRACKET = (1e-3, 1e3)
GRID_POINTS = 64
GOLDEN_REL_WIDTH = 1e-6
FLAT_TOL = 1e-9

INTERIOR = "interior"
EDGE_LOW = "edge_low"
EDGE_HIGH = "edge_high"
FLAT = "flat"

_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class _Counts:
    """Sufficient statistics of a trajectory for one partition."""

    state: tuple
    block: tuple
    n: int


def _counts(P: Partition, t: Sequence[int]) -> _Counts:
    state = [0] * P.k
    for x in t:
        state[x] += 1
    block = [0] * P.m
    for j, c in enumerate(state):
        block[P.block_of[j]] += c
    return _Counts(tuple(state), tuple(block), len(t))


def _within_block_term(P: Partition, nu: Sequence[float], c: _Counts) -> float:
    block_mass = [0.0] * P.m
    for j, w in enumerate(nu):
        block_mass[P.block_of[j]] += w
    return sum(cj * math.log(nu[j] / block_mass[P.block_of[j]]) for j, cj in enumerate(c.state) if cj)


def _block_term(theta: float, block_weights: Sequence[float], c: _Counts) -> float:
    # log of the classical Polya urn probability of the block sequence
    out = math.lgamma(theta) - math.lgamma(theta + c.n)
    for w, nl in zip(block_weights, c.block):
        if nl:
            out += math.lgamma(theta * w + nl) - math.lgamma(theta * w)
    return out


def _block_weights(P: Partition, nu: Sequence[float]) -> list:
    out = [0.0] * P.m
    for j, w in enumerate(nu):
        out[P.block_of[j]] += w
    return out


def _nu_floats(nu) -> list:
    w = [float(x) for x in (nu.weights if isinstance(nu, Measure) else nu)]
    if any(x <= 0 for x in w):
        raise ValueError("nu must be strictly positive")
    return w


def _values(t) -> list:
    return [int(x) for x in (t.values if hasattr(t, "values") else t)]


def log_likelihood(theta, P: Partition, nu, t) -> float:
    """Log probability of ``t`` under the urn with conditional kernel of ``P``.

    Splits into the Polya term for the block sequence and a theta-free term
    for which state was drawn inside each block.
    """
    theta = float(theta)
    if not theta > 0:
        raise ValueError("theta must be positive")
    nu = _nu_floats(nu)
    t = _values(t)
    if len(nu) != P.k:
        raise ValueError("nu and partition disagree on the number of states")
    c = _counts(P, t)
    return _block_term(theta, _block_weights(P, nu), c) + _within_block_term(P, nu, c)


@dataclass
class ThetaFit:
    theta: float
    log_likelihood: float
    status: str


def _golden_max(f, lo: float, hi: float, rel_width: float):
    """Golden-section search for a maximum of ``f`` on ``[lo, hi]`` (log-theta coordinates)."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_width:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def scan_theta(P: Partition, nu, t, bracket=DEFAULT_BRACKET) -> ThetaFit:
    """Grid scan over log theta, then golden-section refinement; never raises on edges."""
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError("bracket must be positive and increasing")
    t = _values(t)
    if not t:
        raise OutOfRange("cannot fit theta to an empty trajectory")
    nu = _nu_floats(nu)
    c = _counts(P, t)
    bw = _block_weights(P, nu)
    within = _within_block_term(P, nu, c)

    def f(logtheta):
        return _block_term(math.exp(logtheta), bw, c) + within

    grid = np.linspace(math.log(lo), math.log(hi), GRID_POINTS)
    vals = [f(g) for g in grid]
    best = int(np.argmax(vals))
    if max(vals) - min(vals) <= FLAT_TOL:
        return ThetaFit(math.sqrt(lo * hi), vals[best], FLAT)
    if best == 0:
        return ThetaFit(lo, vals[0], EDGE_LOW)
    if best == GRID_POINTS - 1:
        return ThetaFit(hi, vals[-1], EDGE_HIGH)
    # a relative width of 1e-6 in theta is an absolute width of ~1e-6 in log theta
    x, fx = _golden_max(f, grid[best - 1], grid[best + 1], GOLDEN_REL_WIDTH)
    return ThetaFit(math.exp(x), fx, INTERIOR)


def fit_theta(P: Partition, nu, t, bracket=DEFAULT_BRACKET) -> float:
    """Maximum-likelihood theta for a fixed partition.

    Raises :class:`Flat` when the likelihood does not depend on theta (the
    one-block partition) and :class:`EdgeMaximum` when the best grid point is
    a bracket end; both carry the offending ``theta`` and log-likelihood.
    """
    fit = scan_theta(P, nu, t, bracket)
    if fit.status == FLAT:
        raise Flat("likelihood is constant in theta", fit.theta, fit.log_likelihood)
    if fit.status in (EDGE_LOW, EDGE_HIGH):
        side = "lower" if fit.status == EDGE_LOW else "upper"
        raise EdgeMaximum(f"maximum at the {side} bracket end", fit.theta, fit.log_likelihood)
    return fit.theta


def estimate_nu(t, k: int) -> list:
    """Add-one smoothed empirical state frequencies (approximate; strictly positive)."""
    counts = [1] * k
    for x in _values(t):
        counts[x] += 1
    total = sum(counts)
    return [c / total for c in counts]


@dataclass
class PartitionFit:
    partition: Partition
    theta: float
    log_likelihood: float
    status: str


@dataclass
class FitResult:
    partition: Partition
    theta_hat: float
    theta_status: str
    log_likelihood: float
    nu: list
    nu_estimated: bool
    per_partition_table: list = field(default_factory=list)


def _sort_fits(rows: list) -> list:
    rows = sorted(rows, key=lambda r: (-r.log_likelihood, r.partition.m, r.partition.block_of))
    # merge near-ties so the coarser partition comes first
    out = []
    i = 0
    while i < len(rows):
        j = i
        top = rows[i].log_likelihood
        while j < len(rows) and top - rows[j].log_likelihood <= FLAT_TOL * max(1.0, abs(top)):
            j += 1
        out.extend(sorted(rows[i:j], key=lambda r: (r.partition.m, r.partition.block_of)))
        i = j
    return out


def fit_model(t, nu=None, k: Optional[int] = None, bracket=DEFAULT_BRACKET) -> FitResult:
    """Fit theta for every partition of the state space and keep the best.

    ``nu`` is the known base measure; when omitted it is estimated with
    :func:`estimate_nu`, which needs ``k``.
    """
    t = _values(t)
    if not t:
        raise OutOfRange("cannot fit an empty trajectory")
    if nu is None:
        if k is None:
            k = max(t) + 1
        nu_f = estimate_nu(t, k)
        estimated = True
    else:
        nu_f = _nu_floats(nu)
        estimated = False
        if k is not None and k != len(nu_f):
            raise ValueError("k disagrees with the length of nu")
        k = len(nu_f)
    if not 1 <= k <= FIT_MAX_K:
        raise OutOfRange(f"k={k} outside [1, {FIT_MAX_K}]")
    if max(t) >= k or min(t) < 0:
        raise ValueError("trajectory contains states outside 0..k-1")
    rows = []
    for P in iter_partitions(k):
        fit = scan_theta(P, nu_f, t, bracket)
        rows.append(PartitionFit(P, fit.theta, fit.log_likelihood, fit.status))
    rows = _sort_fits(rows)
    best = rows[0]
    return FitResult(best.partition, best.theta, best.status, best.log_likelihood, nu_f, estimated, rows)
