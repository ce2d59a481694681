"""Real-valued mixture urn: urn sampler, hierarchical Dirichlet sampler, exact block law.

The state space is a union of disjoint half-open intervals ``[lo, hi)``.
Observing a value in bin ``l`` reinforces the urn with the base measure
restricted to that bin, so the sequence of bin indices is a classical Polya
urn with weights ``theta * bin_probs``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import OutOfRange
from .measure import as_scalar, scalar_eq
from .process import inverse_cdf

COMPARE_MAX_CELLS = 10**4
COMPARE_MAX_PREFIX = 4


@dataclass(frozen=True)
class PiecewiseLinearCDF:
    """Continuous CDF through the points ``(knots[i], cdf[i])``; sampled by inversion."""

    knots: tuple
    cdf: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.knots)
        F = tuple(float(v) for v in self.cdf)
        if len(x) < 2 or len(x) != len(F):
            raise ValueError("need at least two knots with one CDF value each")
        if any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError("knots must be strictly increasing")
        if any(b <= a for a, b in zip(F, F[1:])):
            raise ValueError("CDF values must be strictly increasing")
        if F[0] != 0.0 or F[-1] != 1.0:
            raise ValueError("CDF must run from 0 to 1")
        object.__setattr__(self, "knots", x)
        object.__setattr__(self, "cdf", F)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "PiecewiseLinearCDF":
        return cls((lo, hi), (0.0, 1.0))

    def inverse(self, u: float) -> float:
        return float(np.interp(u, self.cdf, self.knots))


@dataclass(frozen=True)
class GeneralMixtureModel:
    theta: object
    bins: tuple
    bin_probs: tuple
    samplers: tuple = ()
    tail_mass: object = Fraction(0)

    def __post_init__(self):
        theta = as_scalar(self.theta)
        if not theta > 0:
            raise ValueError("theta must be positive")
        bins = tuple((float(lo), float(hi)) for lo, hi in self.bins)
        probs = tuple(as_scalar(p) for p in self.bin_probs)
        if not bins or len(bins) != len(probs):
            raise ValueError("need one probability per bin")
        for lo, hi in bins:
            if not lo < hi:
                raise ValueError(f"empty bin [{lo}, {hi})")
        ordered = sorted(bins)
        for (_, h1), (l2, _) in zip(ordered, ordered[1:]):
            if l2 < h1:
                raise ValueError("bins overlap")
        if any(p <= 0 for p in probs):
            raise ValueError("every bin needs positive base probability")
        if not scalar_eq(sum(probs, Fraction(0)), Fraction(1), 1e-9):
            raise ValueError(f"bin probabilities sum to {sum(probs)}, not 1")
        samplers = tuple(self.samplers) or tuple(PiecewiseLinearCDF.uniform(lo, hi) for lo, hi in bins)
        if len(samplers) != len(bins):
            raise ValueError("need one sampler per bin")
        for s, (lo, hi) in zip(samplers, bins):
            if s.knots[0] < lo or s.knots[-1] > hi:
                raise ValueError(f"sampler support {s.knots[0]}..{s.knots[-1]} leaves bin [{lo}, {hi})")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "bin_probs", probs)
        object.__setattr__(self, "samplers", samplers)

    @property
    def m(self) -> int:
        return len(self.bins)

    def bin_of(self, x: float) -> int:
        for l, (lo, hi) in enumerate(self.bins):
            if lo <= x < hi:
                return l
        raise ValueError(f"{x} lies in no bin")

    def draw_in_bin(self, l: int, rng: np.random.Generator) -> float:
        x = self.samplers[l].inverse(rng.random())
        lo, hi = self.bins[l]
        if not lo <= x < hi:
            raise RuntimeError(f"sampler {l} produced {x} outside [{lo}, {hi})")
        return x


def truncate(theta, bins, bin_probs, m: int, samplers: Sequence = ()) -> GeneralMixtureModel:
    """Keep the ``m`` heaviest bins of a countable partition and renormalize.

    The dropped probability is kept on the model as ``tail_mass``.
    """
    probs = [as_scalar(p) for p in bin_probs]
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))[:m]
    order.sort()
    kept = sum((probs[i] for i in order), Fraction(0))
    total = sum(probs, Fraction(0))
    return GeneralMixtureModel(
        theta,
        tuple(bins[i] for i in order),
        tuple(probs[i] / kept for i in order),
        tuple(samplers[i] for i in order) if samplers else (),
        tail_mass=total - kept,
    )


@dataclass(frozen=True)
class RealTrajectory:
    values: tuple
    blocks: tuple

    def __len__(self):
        return len(self.values)


def _bin_cdf(model) -> list:
    return list(itertools.accumulate(float(p) for p in model.bin_probs))


def sample_urn(model: GeneralMixtureModel, n: int, seed: int) -> RealTrajectory:
    """Sequential urn draws: fresh from the base measure w.p. ``theta/(theta+i)``, else from a past draw's bin."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    theta = float(model.theta)
    cdf = _bin_cdf(model)
    values, blocks = [], []
    for i in range(n):
        if rng.random() < theta / (theta + i):
            l = inverse_cdf(cdf, rng.random())
        else:
            l = blocks[min(int(rng.random() * i), i - 1)]
        values.append(model.draw_in_bin(l, rng))
        blocks.append(l)
    return RealTrajectory(tuple(values), tuple(blocks))


def draw_block_weights(model: GeneralMixtureModel, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet(theta * bin_probs) by normalized gamma draws.

    Small shapes use ``G(a) = G(a + 1) * U^(1/a)`` in log space so that the
    weights never all underflow to zero.
    """
    alpha = np.array([float(model.theta) * float(p) for p in model.bin_probs])
    if len(alpha) == 1:
        return np.ones(1)
    logg = np.empty(len(alpha))
    for l, a in enumerate(alpha):
        if a >= 1:
            logg[l] = math.log(rng.gamma(a))
        else:
            logg[l] = math.log(rng.gamma(a + 1)) + math.log(rng.random()) / a
    logg -= logg.max()
    w = np.exp(logg)
    return w / w.sum()


def sample_hierarchical(model: GeneralMixtureModel, n: int, seed: int) -> RealTrajectory:
    """Draw the block weights of the random measure once, then ``n`` i.i.d. values from the mixture."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    if n == 0:
        return RealTrajectory((), ())
    cdf = list(itertools.accumulate(draw_block_weights(model, rng)))
    values, blocks = [], []
    for _ in range(n):
        l = inverse_cdf(cdf, rng.random())
        values.append(model.draw_in_bin(l, rng))
        blocks.append(l)
    return RealTrajectory(tuple(values), tuple(blocks))


def exact_block_law(model: GeneralMixtureModel, t: Sequence[int]):
    """Probability of the bin sequence ``t`` (0-based bin indices) under the urn."""
    theta = model.theta
    counts = [0] * model.m
    p = Fraction(1)
    for i, l in enumerate(t):
        if not 0 <= l < model.m:
            raise ValueError(f"bin {l} outside 0..{model.m - 1}")
        p *= (theta * model.bin_probs[l] + counts[l]) / (theta + i)
        counts[l] += 1
    return p


@dataclass
class LawComparison:
    sequences: list
    exact: list
    urn: list
    hierarchical: list
    tv_urn: float
    tv_hierarchical: float
    mc_bound: float


def compare_laws(model: GeneralMixtureModel, n_prefix: int, reps: int, seed: int) -> LawComparison:
    """Empirical prefix laws of both samplers against the exact block law.

    Replicate ``r`` of each sampler uses seed ``seed + r``.  ``mc_bound`` is
    ``sqrt(m^n_prefix / reps)``.
    """
    if not 1 <= n_prefix <= COMPARE_MAX_PREFIX:
        raise OutOfRange(f"prefix length {n_prefix} outside [1, {COMPARE_MAX_PREFIX}]")
    cells = model.m**n_prefix
    if cells > COMPARE_MAX_CELLS:
        raise OutOfRange(f"{cells} block sequences exceed {COMPARE_MAX_CELLS}")
    if reps < 1:
        raise OutOfRange("reps must be positive")
    seqs = list(itertools.product(range(model.m), repeat=n_prefix))
    index = {s: i for i, s in enumerate(seqs)}
    urn = np.zeros(cells, dtype=np.int64)
    hier = np.zeros(cells, dtype=np.int64)
    for r in range(reps):
        urn[index[sample_urn(model, n_prefix, seed + r).blocks]] += 1
        hier[index[sample_hierarchical(model, n_prefix, seed + r).blocks]] += 1
    exact = [exact_block_law(model, s) for s in seqs]
    ex = np.array([float(p) for p in exact])
    fu = urn / reps
    fh = hier / reps
    return LawComparison(
        sequences=seqs,
        exact=exact,
        urn=fu.tolist(),
        hierarchical=fh.tolist(),
        tv_urn=float(0.5 * np.abs(fu - ex).sum()),
        tv_hierarchical=float(0.5 * np.abs(fh - ex).sum()),
        mc_bound=math.sqrt(cells / reps),
    )
