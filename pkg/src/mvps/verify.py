"""Exact oracles for exchangeability and the sufficientness characterizations.

Every exhaustive check walks the tree of histories depth-first so that each
prefix's predictive distribution is computed once.  Counterexamples are the
first failure in lexicographic trajectory order, and all probabilities they
carry are exact when the inputs are.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .errors import Degenerate, HorizonExceeded, NotConstantMass, NotSufficient, OutOfRange
from .measure import DEFAULT_TOL, Kernel, Measure, as_scalar, is_exact, scalar_eq
from .partitions import Partition
from .process import Mvps, PredictiveFamily, Sufficientness, mvps_coefficients, rebalance

ENUMERATION_LIMIT = 10**7


# -- history enumeration -----------------------------------------------------

def _guard(k: int, L: int) -> None:
    if L < 0:
        raise OutOfRange("length must be nonnegative")
    if k**L > ENUMERATION_LIMIT:
        raise OutOfRange(f"{k}^{L} histories exceed the enumeration limit {ENUMERATION_LIMIT}")


def walk(f: PredictiveFamily, L: int, predict_last: bool = False) -> Iterator[tuple]:
    """Yield ``(history, joint probability, predictive after history)`` for all histories of length <= L.

    Order is depth-first, hence lexicographic within each length.  The
    predictive at depth ``L`` is only computed when ``predict_last`` is set
    and is ``None`` otherwise.
    """
    k = f.space.k
    _guard(k, L)
    if predict_last:
        f.check_horizon(L)
    elif L >= 1:
        f.check_horizon(L - 1)

    def rec(h, p, state):
        n = len(h)
        pred = f.predict(state, n) if n < L or predict_last else None
        yield h, p, pred
        if n == L:
            return
        for x in range(k):
            yield from rec(h + (x,), p * pred.weights[x], f.push(state, x))

    yield from rec((), Fraction(1), f.start())


def joint_table(f: PredictiveFamily, L: int) -> dict:
    return {h: p for h, p, _ in walk(f, L)}


# -- exchangeability ---------------------------------------------------------

@dataclass
class Counterexample:
    trajectory: tuple
    position: int
    probabilities: tuple

    @property
    def swapped(self) -> tuple:
        t, i = list(self.trajectory), self.position
        t[i], t[i + 1] = t[i + 1], t[i]
        return tuple(t)


@dataclass
class ExchangeabilityReport:
    exchangeable: bool
    max_length_checked: int
    counterexample: Optional[Counterexample] = None


def check_exchangeable(f: PredictiveFamily, L: int, tol: float = DEFAULT_TOL) -> ExchangeabilityReport:
    """Exhaustive test of invariance under adjacent transpositions up to length ``L``.

    Adjacent transpositions generate the symmetric group, so passing this at
    every length ``n <= L`` is the same as full permutation invariance of each
    n-dimensional law.
    """
    table = joint_table(f, L)
    for t in sorted(table, key=lambda h: (len(h), h)):
        for i in range(len(t) - 1):
            if t[i] == t[i + 1]:
                continue
            s = t[:i] + (t[i + 1], t[i]) + t[i + 2:]
            p, q = table[t], table[s]
            if not scalar_eq(p, q, tol):
                return ExchangeabilityReport(False, L, Counterexample(t, i, (p, q)))
    return ExchangeabilityReport(True, L)


def check_iid_degenerate(f: PredictiveFamily, L: int, tol: float = DEFAULT_TOL) -> bool:
    nu = f.nu.weights
    for h, p, _ in walk(f, L):
        q = Fraction(1)
        for x in h:
            q *= nu[x]
        if not scalar_eq(p, q, tol):
            return False
    return True


# -- identities from the two- and three-step marginals -----------------------

def check_detailed_balance(nu: Measure, R: Kernel):
    """``max |nu(x) R_x(y) - nu(y) R_y(x)|`` over all pairs."""
    k = nu.space.k
    worst = Fraction(0)
    for x in range(k):
        for y in range(x + 1, k):
            d = abs(nu[x] * R[x][y] - nu[y] * R[y][x])
            worst = max(worst, d)
    return worst


def cstar(a1, a2):
    """``(a_2 - 2 a_1 + a_1 a_2) / (a_1 a_2)``; zero exactly for ``a_n = n / (n + theta)``."""
    a1, a2 = as_scalar(a1), as_scalar(a2)
    return (a2 - 2 * a1 + a1 * a2) / (a1 * a2)


def check_kernel_identity(nu: Measure, R: Kernel, c):
    """Largest entrywise gap between ``R o R`` and ``(1 - c) R + c nu`` on the support of ``nu``."""
    c = as_scalar(c)
    RR = R.compose(R)
    worst = Fraction(0)
    for x in range(nu.space.k):
        if nu[x] == 0:
            continue
        for z in range(nu.space.k):
            d = abs(RR[x][z] - ((1 - c) * R[x][z] + c * nu[z]))
            worst = max(worst, d)
    return worst


def coefficient_solution(a1, c, n: int):
    """Solution ``a_n = n / ((n - 1)(1 - c) + 1/a_1)`` of the coefficient recursion."""
    a1, c = as_scalar(a1), as_scalar(c)
    if not 0 < a1 < 1:
        raise ValueError("a_1 must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be at least 1")
    if c == 1:
        raise Degenerate("c* = 1 gives a_n = n a_1, which leaves (0, 1) for large n")
    denom = (n - 1) * (1 - c) + 1 / a1
    if not denom > 0:
        raise Degenerate(f"nonpositive denominator {denom} at n={n}")
    return n / denom


# -- characterization --------------------------------------------------------

MVPS = "MVPS"
NON_EXCHANGEABLE = "NonExchangeable"
NOT_SUFFICIENTNESS_FORM = "NotSufficientnessForm"


@dataclass
class CharacterizationResult:
    verdict: str
    theta_hat: object = None
    coefficient_trace: list = field(default_factory=list)
    counterexample: Optional[Counterexample] = None
    degenerate_iid: bool = False


def _as_sufficientness(f: PredictiveFamily):
    """Return ``(nu, R, a)`` with ``a(n)`` the observed coefficient, or None."""
    if isinstance(f, Sufficientness):
        return f.nu, f.R, f.a
    if isinstance(f, Mvps):
        try:
            spec = rebalance(f.spec)
        except NotConstantMass:
            return None
        return spec.nu, spec.R, lambda n: mvps_coefficients(spec.theta, n)
    raise TypeError("characterize needs a Sufficientness or Mvps family")


def characterize(f: PredictiveFamily, L: int, tol: float = DEFAULT_TOL) -> CharacterizationResult:
    """Decide whether ``f`` is an exchangeable urn, by exhaustion up to length ``L``.

    Exchangeable inputs must have ``a_n = n / (1/a_1 - 1 + n)``; the returned
    trace lists observed and forced values for ``n = 1 .. L-1``.
    """
    form = _as_sufficientness(f)
    if form is None:
        return CharacterizationResult(NOT_SUFFICIENTNESS_FORM)
    nu, R, a = form
    report = check_exchangeable(f, L, tol)
    if not report.exchangeable:
        return CharacterizationResult(NON_EXCHANGEABLE, counterexample=report.counterexample)

    a1 = a(1)
    theta_hat = 1 / a1 - 1
    trace = []
    for n in range(1, max(L, 2)):
        try:
            observed = a(n)
        except HorizonExceeded:
            break
        trace.append((n, observed, n / (theta_hat + n)))

    if all(row.close_to(nu, tol) for row in R.rows):
        # every row equals nu: the law is i.i.d.(nu) whatever the coefficients are
        return CharacterizationResult(MVPS, theta_hat, trace, degenerate_iid=True)
    if all(scalar_eq(obs, forced, tol) for _, obs, forced in trace):
        return CharacterizationResult(MVPS, theta_hat, trace)
    # exchangeable yet unforced coefficients: should be impossible, so fail loudly
    bad = [t for t in trace if not scalar_eq(t[1], t[2], tol)]
    raise AssertionError(f"exchangeable up to length {L} but coefficients not forced: {bad}")


# -- sufficientness detectors ------------------------------------------------

@dataclass
class SufficientnessReport:
    holds: bool
    counterexample: Optional[tuple] = None
    table: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def _block_counts(h: tuple, P: Partition) -> list:
    counts = [0] * P.m
    for x in h:
        counts[P.block_of[x]] += 1
    return counts


def _by_length(f, N):
    # one walk per depth keeps counterexamples shortest-first
    for n in range(N + 1):
        for h, _, pred in walk(f, n, predict_last=True):
            if len(h) == n:
                yield h, pred


def _group_check(f, P, N, key_fn, tol):
    if P.k != f.space.k:
        raise ValueError("partition and family have different numbers of states")
    table = {}
    witness = {}
    for h, pred in _by_length(f, N):
        counts = _block_counts(h, P)
        for j in range(f.space.k):
            key = key_fn(j, len(h), counts[P.block_of[j]])
            mass = pred.weights[j]
            if key not in table:
                table[key] = mass
                witness[key] = h
            elif not scalar_eq(table[key], mass, tol):
                cx = (key, (witness[key], table[key]), (h, mass))
                return SufficientnessReport(False, cx, table)
    return SufficientnessReport(True, None, table)


def check_johnson_sufficientness(f: PredictiveFamily, P: Partition, N: int, tol: float = DEFAULT_TOL) -> SufficientnessReport:
    """Is the mass at each ``x_j`` a function of ``(n, count of the block of x_j)`` for all ``n <= N``?

    The table maps ``(n, j, block count)`` to that common mass.  A
    counterexample is ``(key, (history1, mass1), (history2, mass2))``.
    """
    _guard(f.space.k, N)
    return _group_check(f, P, N, lambda j, n, c: (n, j, c), tol)


def _ratio_key(w, P, j, n, c):
    wbar = sum(w, Fraction(0))
    wl = sum((w[i] for i in P.blocks[P.block_of[j]]), Fraction(0))
    return (wl + c) / (wbar + n)


def check_hill_sufficientness(f: PredictiveFamily, w, P: Partition, N: int, tol: float = DEFAULT_TOL) -> SufficientnessReport:
    """Is the mass at ``x_j`` a function of ``(wbar_l + N_l) / (wbar + n)`` alone, across all ``n <= N``?

    Histories are grouped by exact ratio value; with float weights the ratio
    is bucketed to a grid of width ``tol``, which is weaker.  Table keys are
    ``(j, ratio)``.
    """
    _guard(f.space.k, N)
    w = tuple(as_scalar(x) for x in w)
    if len(w) != f.space.k or any(x <= 0 for x in w):
        raise ValueError("w needs one positive weight per state")
    exact = all(is_exact(x) for x in w)

    def key(j, n, c):
        r = _ratio_key(w, P, j, n, c)
        return (j, r if exact else round(float(r) / tol))

    return _group_check(f, P, N, key, 0 if exact else tol)


def hill_block_function(report: SufficientnessReport, P: Partition) -> dict:
    """Sum a Hill-detector table over each block: ``(l, ratio) -> block mass``."""
    out = {}
    for (j, r), mass in report.table.items():
        key = (P.block_of[j], r)
        out[key] = out.get(key, Fraction(0)) + mass
    return out


def extract_g(f: PredictiveFamily, P: Partition, n: int, l: int, n_l: int, tol: float = DEFAULT_TOL):
    """Common predictive mass of block ``l`` over histories of length ``n`` with ``n_l`` visits to it.

    ``l`` is a 0-based block index.  Raises :class:`NotSufficient` when the
    mass is not common to all such histories.
    """
    if not 0 <= l < P.m:
        raise ValueError(f"block {l} outside 0..{P.m - 1}")
    if not 0 <= n_l <= n:
        raise ValueError("need 0 <= n_l <= n")
    block = P.blocks[l]
    value = None
    first = None
    for h, _, pred in walk(f, n, predict_last=True):
        if len(h) != n or _block_counts(h, P)[l] != n_l:
            continue
        mass = pred.of_set(block)
        if value is None:
            value, first = mass, h
        elif not scalar_eq(value, mass, tol):
            raise NotSufficient(f"block {l} mass {value} after {first} but {mass} after {h}")
    if value is None:
        raise ValueError(f"no history of length {n} has {n_l} observations in block {l}")
    return value

