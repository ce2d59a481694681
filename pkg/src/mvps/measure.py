"""Finite measures and kernels on a labeled finite state space.

Weights are either exact rationals (:class:`fractions.Fraction`) or Python
floats.  Integers are promoted to ``Fraction`` so that exact mode is the
default; a single float anywhere in a computation silently moves the result
to float mode, which is how Python's numeric tower already behaves.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

from .errors import ZeroMass, ZeroMassBlock

Scalar = Union[Fraction, float]

DEFAULT_TOL = 1e-12


def as_scalar(x) -> Scalar:
    """Coerce ``x`` to a Scalar: ints, Fractions and ``"p/q"`` strings are exact."""
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a scalar")


def is_exact(x) -> bool:
    return isinstance(x, Fraction)


def scalar_eq(a, b, tol: float = DEFAULT_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= tol


@dataclass(frozen=True)
class StateSpace:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if not labels:
            raise ValueError("a state space needs at least one state")
        if len(set(labels)) != len(labels):
            raise ValueError(f"state labels must be distinct: {labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, k: int) -> "StateSpace":
        return cls(tuple(f"x{j + 1}" for j in range(k)))

    @property
    def k(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown state {label!r}") from None

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class Measure:
    space: StateSpace
    weights: tuple

    def __post_init__(self):
        w = tuple(as_scalar(x) for x in self.weights)
        if len(w) != self.space.k:
            raise ValueError(f"expected {self.space.k} weights, got {len(w)}")
        for x in w:
            if x < 0:
                raise ValueError(f"negative weight {x}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def of(cls, weights: Sequence, space: StateSpace | None = None) -> "Measure":
        weights = tuple(weights)
        return cls(space or StateSpace.of_size(len(weights)), weights)

    @classmethod
    def point(cls, space: StateSpace, j: int) -> "Measure":
        return cls(space, tuple(Fraction(int(i == j)) for i in range(space.k)))

    @property
    def mass(self) -> Scalar:
        return sum(self.weights, Fraction(0))

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for x in self.weights)

    def is_probability(self, tol: float = DEFAULT_TOL) -> bool:
        return scalar_eq(self.mass, Fraction(1), tol)

    def is_strictly_positive(self) -> bool:
        return all(x > 0 for x in self.weights)

    def of_set(self, states: Iterable[int]) -> Scalar:
        return sum((self.weights[j] for j in states), Fraction(0))

    def scaled(self, c) -> "Measure":
        return Measure(self.space, tuple(c * x for x in self.weights))

    def __add__(self, other: "Measure") -> "Measure":
        _same_space(self, other)
        return Measure(self.space, tuple(a + b for a, b in zip(self.weights, other.weights)))

    def __getitem__(self, j: int) -> Scalar:
        return self.weights[j]

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def close_to(self, other: "Measure", tol: float = DEFAULT_TOL) -> bool:
        _same_space(self, other)
        return all(scalar_eq(a, b, tol) for a, b in zip(self.weights, other.weights))


@dataclass(frozen=True)
class Kernel:
    """One measure per state; row ``j`` is the reinforcement added after observing state ``j``."""

    space: StateSpace
    rows: tuple

    def __post_init__(self):
        rows = tuple(r if isinstance(r, Measure) else Measure(self.space, tuple(r)) for r in self.rows)
        if len(rows) != self.space.k:
            raise ValueError(f"expected {self.space.k} rows, got {len(rows)}")
        for r in rows:
            if r.space != self.space:
                raise ValueError("kernel rows must live on the kernel's state space")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def of(cls, rows: Sequence[Sequence], space: StateSpace | None = None) -> "Kernel":
        rows = [tuple(r) for r in rows]
        return cls(space or StateSpace.of_size(len(rows)), tuple(rows))

    @classmethod
    def identity(cls, space: StateSpace) -> "Kernel":
        return cls(space, tuple(Measure.point(space, j) for j in range(space.k)))

    @classmethod
    def constant(cls, mu: Measure) -> "Kernel":
        return cls(mu.space, (mu,) * mu.space.k)

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def row_masses(self) -> tuple:
        return tuple(r.mass for r in self.rows)

    @property
    def exact(self) -> bool:
        return all(r.exact for r in self.rows)

    def is_probability(self, tol: float = DEFAULT_TOL) -> bool:
        return all(r.is_probability(tol) for r in self.rows)

    def scaled(self, c) -> "Kernel":
        return Kernel(self.space, tuple(r.scaled(c) for r in self.rows))

    def compose(self, other: "Kernel") -> "Kernel":
        """Two-step kernel ``(self then other)``: row x is sum_y self[x](y) * other[y]."""
        return Kernel(self.space, tuple(kernel_apply(other, r) for r in self.rows))

    def __getitem__(self, j: int) -> Measure:
        return self.rows[j]

    def close_to(self, other: "Kernel", tol: float = DEFAULT_TOL) -> bool:
        return all(a.close_to(b, tol) for a, b in zip(self.rows, other.rows))


def _same_space(p, q):
    if p.space != q.space:
        raise ValueError("measures live on different state spaces")


def normalize(m: Measure) -> Measure:
    mass = m.mass
    if mass == 0:
        raise ZeroMass("cannot normalize a measure of zero mass")
    return Measure(m.space, tuple(x / mass for x in m.weights))


def condition(nu: Measure, states: Iterable[int]) -> Measure:
    """``nu(. | D)`` for a set of state indices ``D``."""
    block = set(states)
    if not block <= set(range(nu.space.k)):
        raise ValueError(f"states {sorted(block)} are not all in the space")
    z = nu.of_set(block)
    if z == 0:
        raise ZeroMassBlock(f"conditioning set {sorted(block)} has zero mass")
    return Measure(nu.space, tuple(w / z if j in block else Fraction(0) for j, w in enumerate(nu.weights)))


def mix(a, p: Measure, q: Measure) -> Measure:
    """``(1 - a) p + a q``."""
    _same_space(p, q)
    a = as_scalar(a)
    if not 0 <= a <= 1:
        raise ValueError(f"mixing weight {a} outside [0, 1]")
    return Measure(p.space, tuple((1 - a) * x + a * y for x, y in zip(p.weights, q.weights)))


def kernel_apply(R: Kernel, mu: Measure) -> Measure:
    """Left action ``(mu R)(z) = sum_y mu(y) R_y(z)``."""
    _same_space(R, mu)
    k = mu.space.k
    out = [Fraction(0)] * k
    for y, m in enumerate(mu.weights):
        if m == 0:
            continue
        row = R.rows[y].weights
        for z in range(k):
            out[z] += m * row[z]
    return Measure(mu.space, tuple(out))


def total_variation(p: Measure, q: Measure) -> Scalar:
    _same_space(p, q)
    return sum((abs(x - y) for x, y in zip(p.weights, q.weights)), Fraction(0)) / 2
