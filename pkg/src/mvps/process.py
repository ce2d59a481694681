"""Predictive rules, chain-rule joint laws and seeded sampling on a finite space.

Three families share one small protocol used by the exhaustive checkers in
:mod:`mvps.verify`: ``start()`` returns the empty-history state, ``push(state,
x)`` folds one observation in, and ``predict(state, n)`` returns the
predictive distribution after ``n`` observations.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import HorizonExceeded, NotConstantMass
from .measure import DEFAULT_TOL, Kernel, Measure, StateSpace, as_scalar, scalar_eq


@dataclass(frozen=True)
class Trajectory:
    space: StateSpace
    values: tuple = ()

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        for v in vals:
            if not 0 <= v < self.space.k:
                raise ValueError(f"state index {v} outside 0..{self.space.k - 1}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_labels(cls, space: StateSpace, labels: Sequence[str]) -> "Trajectory":
        return cls(space, tuple(space.index(s) for s in labels))

    @property
    def labels(self) -> tuple:
        return tuple(self.space.labels[v] for v in self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class MvpsSpec:
    theta: object
    nu: Measure
    R: Kernel

    def __post_init__(self):
        theta = as_scalar(self.theta)
        if not theta > 0:
            raise ValueError(f"theta must be positive, got {theta}")
        object.__setattr__(self, "theta", theta)
        if self.R.space != self.nu.space:
            raise ValueError("nu and R live on different spaces")
        if not self.nu.is_probability():
            raise ValueError(f"nu must be a probability measure (mass {self.nu.mass})")
        if not self.nu.is_strictly_positive():
            raise ValueError("nu must put positive mass on every state")
        if any(m <= 0 for m in self.R.row_masses):
            raise ValueError("reinforcement rows must have positive mass")

    @property
    def balanced(self) -> bool:
        return all(scalar_eq(m, Fraction(1)) for m in self.R.row_masses)

    @property
    def space(self) -> StateSpace:
        return self.nu.space


class PredictiveFamily:
    nu: Measure

    @property
    def space(self) -> StateSpace:
        return self.nu.space

    def start(self):
        raise NotImplementedError

    def push(self, state, x: int):
        raise NotImplementedError

    def predict(self, state, n: int) -> Measure:
        raise NotImplementedError

    def check_horizon(self, n: int) -> None:
        """Raise if a history of length ``n`` cannot be conditioned on."""


@dataclass(frozen=True)
class Mvps(PredictiveFamily):
    spec: MvpsSpec

    @property
    def nu(self):
        return self.spec.nu

    def start(self):
        theta = self.spec.theta
        return tuple(theta * w for w in self.spec.nu.weights), theta

    def push(self, state, x):
        comp, total = state
        row = self.spec.R.rows[x]
        return tuple(c + r for c, r in zip(comp, row.weights)), total + row.mass

    def predict(self, state, n):
        comp, total = state
        return Measure(self.space, tuple(c / total for c in comp))


@dataclass(frozen=True)
class Sufficientness(PredictiveFamily):
    """``(1 - a_n) nu + (a_n / n) sum_i R_{x_i}`` for arbitrary coefficients ``a_n``.

    ``coefficients`` is either a callable ``n -> a_n`` or a finite sequence
    ``(a_1, ..., a_H)``; in the latter case histories longer than ``H`` raise
    :class:`HorizonExceeded`.
    """

    nu: Measure
    R: Kernel
    coefficients: Union[Callable[[int], object], Sequence] = field(repr=False)

    def __post_init__(self):
        if self.R.space != self.nu.space:
            raise ValueError("nu and R live on different spaces")
        if not self.nu.is_probability():
            raise ValueError("nu must be a probability measure")
        if not self.R.is_probability():
            raise ValueError("the reinforcement kernel must have rows of mass one")
        if not callable(self.coefficients):
            values = tuple(as_scalar(a) for a in self.coefficients)
            for n, a in enumerate(values, 1):
                _check_coefficient(n, a)
            object.__setattr__(self, "coefficients", values)

    @property
    def horizon(self) -> Optional[int]:
        return None if callable(self.coefficients) else len(self.coefficients)

    def a(self, n: int):
        if n < 1:
            raise ValueError("coefficients are indexed from n = 1")
        if callable(self.coefficients):
            a = as_scalar(self.coefficients(n))
            _check_coefficient(n, a)
            return a
        if n > len(self.coefficients):
            raise HorizonExceeded(f"coefficient a_{n} requested, horizon is {len(self.coefficients)}")
        return self.coefficients[n - 1]

    def check_horizon(self, n):
        if self.horizon is not None and n > self.horizon:
            raise HorizonExceeded(f"history of length {n} exceeds coefficient horizon {self.horizon}")

    def start(self):
        return (Fraction(0),) * self.space.k

    def push(self, state, x):
        return tuple(s + r for s, r in zip(state, self.R.rows[x].weights))

    def predict(self, state, n):
        if n == 0:
            return self.nu
        a = self.a(n)
        return Measure(self.space, tuple((1 - a) * v + a * s / n for v, s in zip(self.nu.weights, state)))


@dataclass(frozen=True)
class Iid(PredictiveFamily):
    nu: Measure

    def start(self):
        return None

    def push(self, state, x):
        return None

    def predict(self, state, n):
        return self.nu


def _check_coefficient(n, a):
    if not 0 < a < 1:
        raise ValueError(f"a_{n} = {a} must lie strictly inside (0, 1)")


def _values(h) -> tuple:
    return tuple(h.values) if isinstance(h, Trajectory) else tuple(int(x) for x in h)


def predictive(f: PredictiveFamily, h=()) -> Measure:
    """Distribution of the next observation given the history ``h``."""
    h = _values(h)
    f.check_horizon(len(h))
    state = f.start()
    for x in h:
        state = f.push(state, x)
    return f.predict(state, len(h))


def joint_probability(f: PredictiveFamily, t=()):
    """Chain-rule probability of observing the whole trajectory ``t``."""
    t = _values(t)
    if t:
        f.check_horizon(len(t) - 1)
    p = Fraction(1)
    state = f.start()
    for n, x in enumerate(t):
        p *= f.predict(state, n).weights[x]
        state = f.push(state, x)
    return p


def sample(f: PredictiveFamily, n: int, seed: int) -> Trajectory:
    """Draw ``n`` observations sequentially with one PCG64 uniform per step."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n:
        f.check_horizon(n - 1)
    rng = np.random.default_rng(seed)
    state = f.start()
    out = []
    for i in range(n):
        cdf = list(accumulate(float(w) for w in f.predict(state, i).weights))
        x = inverse_cdf(cdf, rng.random())
        out.append(x)
        state = f.push(state, x)
    return Trajectory(f.space, tuple(out))


def inverse_cdf(cdf: Sequence[float], u: float) -> int:
    """Smallest index ``j`` with ``u < cdf[j]``, clipped to the last index."""
    return min(bisect.bisect_right(cdf, u), len(cdf) - 1)


def mvps_coefficients(theta, n: int):
    """Forced mixing coefficient ``n / (n + theta)`` of an exchangeable urn."""
    theta = as_scalar(theta)
    if not theta > 0:
        raise ValueError("theta must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    return n / (n + theta)


def rebalance(s: MvpsSpec, tol: float = DEFAULT_TOL) -> MvpsSpec:
    """Rescale an urn whose reinforcement rows all carry the same mass ``c``."""
    masses = s.R.row_masses
    c = masses[0]
    if not all(scalar_eq(m, c, tol) for m in masses):
        raise NotConstantMass(f"row masses differ: {masses}")
    if scalar_eq(c, Fraction(1), tol):
        return s
    return MvpsSpec(s.theta / c, s.nu, s.R.scaled(1 / c))
