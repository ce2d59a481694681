"""Set partitions of a finite state space and the conditional kernels they induce."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial
from typing import Iterator, Optional, Sequence

from .errors import OutOfRange, ZeroMassBlock
from .measure import DEFAULT_TOL, Kernel, Measure, condition

BELL_MAX_K = 20
ENUMERATE_MAX_K = 12


@dataclass(frozen=True)
class Partition:
    """A partition of ``{0, ..., k-1}`` stored as its restricted growth string.

    ``block_of[j]`` is the block holding state ``j``; blocks are numbered by
    first appearance so two equal partitions always compare equal.
    """

    block_of: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.block_of)
        if not b:
            raise ValueError("empty partition")
        if _canonical(b) != b:
            raise ValueError(f"{b} is not in canonical (first-appearance) form")
        object.__setattr__(self, "block_of", b)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        """Canonicalize an arbitrary block labelling, e.g. ``[5, 5, 2]`` -> ``(0, 0, 1)``."""
        return cls(_canonical(tuple(labels)))

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], k: int) -> "Partition":
        labels = [None] * k
        for l, block in enumerate(blocks):
            if not block:
                raise ValueError("blocks must be nonempty")
            for j in block:
                if not 0 <= j < k:
                    raise ValueError(f"state {j} outside 0..{k - 1}")
                if labels[j] is not None:
                    raise ValueError(f"state {j} appears in two blocks")
                labels[j] = l
        missing = [j for j, l in enumerate(labels) if l is None]
        if missing:
            raise ValueError(f"states {missing} are not covered by any block")
        return cls.from_labels(labels)

    @classmethod
    def trivial(cls, k: int) -> "Partition":
        return cls((0,) * k)

    @classmethod
    def discrete(cls, k: int) -> "Partition":
        return cls(tuple(range(k)))

    @property
    def k(self) -> int:
        return len(self.block_of)

    @property
    def m(self) -> int:
        return max(self.block_of) + 1

    @property
    def blocks(self) -> tuple:
        out = [[] for _ in range(self.m)]
        for j, l in enumerate(self.block_of):
            out[l].append(j)
        return tuple(tuple(b) for b in out)

    def __str__(self):
        return "|".join(",".join(str(j) for j in b) for b in self.blocks)


def _canonical(labels: tuple) -> tuple:
    seen = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def bell_number(k: int) -> int:
    """Number of set partitions of ``k`` elements.

    Computed as ``sum_j (1/j!) sum_i (-1)^(j-i) C(j, i) i^k``; the inner sum
    is ``j!`` times a Stirling number of the second kind, so the division is
    exact in integers.
    """
    if not 1 <= k <= BELL_MAX_K:
        raise OutOfRange(f"k={k} outside [1, {BELL_MAX_K}]")
    total = 0
    for j in range(k + 1):
        inner = sum((-1) ** (j - i) * comb(j, i) * i**k for i in range(j + 1))
        q, r = divmod(inner, factorial(j))
        assert r == 0
        total += q
    return total


def iter_partitions(k: int) -> Iterator[Partition]:
    """Yield all partitions of ``k`` states in lexicographic order of ``block_of``."""
    if not 1 <= k <= ENUMERATE_MAX_K:
        raise OutOfRange(f"k={k} outside [1, {ENUMERATE_MAX_K}]")
    a = [0] * k
    # running maxima: mx[i] = max(a[0..i])
    mx = [0] * k
    while True:
        yield Partition(tuple(a))
        i = k - 1
        while i > 0 and a[i] > mx[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        mx[i] = max(mx[i - 1], a[i])
        for t in range(i + 1, k):
            a[t] = 0
            mx[t] = mx[i]


def enumerate_partitions(k: int) -> list:
    return list(iter_partitions(k))


def conditional_kernel(nu: Measure, P: Partition) -> Kernel:
    """Kernel whose row at ``x`` is ``nu`` conditioned on the block containing ``x``."""
    if P.k != nu.space.k:
        raise ValueError(f"partition of {P.k} states used with a {nu.space.k}-state measure")
    per_block = []
    for l, block in enumerate(P.blocks):
        try:
            per_block.append(condition(nu, block))
        except ZeroMassBlock:
            raise ZeroMassBlock(f"block {l} = {list(block)} has zero base mass") from None
    return Kernel(nu.space, tuple(per_block[l] for l in P.block_of))


def recover_partition(nu: Measure, R: Kernel, tol: float = DEFAULT_TOL) -> Optional[Partition]:
    """Inverse of :func:`conditional_kernel`.

    Blocks are the classes of equal rows; the candidate is accepted only if it
    reproduces ``R`` exactly (or within ``tol`` when floats are involved).
    Returns ``None`` when ``R`` is not a conditional kernel of ``nu``.
    """
    if not nu.is_strictly_positive():
        raise ValueError("recover_partition needs a strictly positive base measure")
    reps = []
    labels = []
    for row in R.rows:
        for l, rep in enumerate(reps):
            if row.close_to(rep, tol):
                labels.append(l)
                break
        else:
            labels.append(len(reps))
            reps.append(row)
    P = Partition(tuple(labels))
    if conditional_kernel(nu, P).close_to(R, tol):
        return P
    return None
