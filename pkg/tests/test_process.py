import itertools
import math
from collections import Counter
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvps import (
    HorizonExceeded,
    Iid,
    Kernel,
    Measure,
    Mvps,
    MvpsSpec,
    NotConstantMass,
    Partition,
    Sufficientness,
    Trajectory,
    conditional_kernel,
    joint_probability,
    mix,
    mvps_coefficients,
    predictive,
    rebalance,
    sample,
)
from mvps.verify import joint_table

half = Measure.of([F(1, 2), F(1, 2)])


def dp(theta, nu):
    return Mvps(MvpsSpec(theta, nu, Kernel.identity(nu.space)))


def dp_oracle(theta, nu, h):
    # Blackwell-MacQueen rule written out directly
    n = len(h)
    return tuple((theta * w + sum(1 for x in h if x == j)) / (theta + n) for j, w in enumerate(nu.weights))


def test_predictive_after_one_observation(urn3):
    assert predictive(urn3, [1]).weights == (F(2, 15), F(13, 40), F(13, 24))


def test_empty_history_gives_nu(urn3, nu3):
    assert predictive(urn3, []) == nu3


def test_joint_of_two_orders_agree(urn3):
    assert joint_probability(urn3, [1, 2]) == joint_probability(urn3, [2, 1]) == F(13, 80)


@pytest.mark.parametrize("k,L", [(2, 5), (3, 4), (4, 3)])
def test_joint_law_normalized(k, L):
    nu = Measure.of([F(j + 1, k * (k + 1) // 2) for j in range(k)])
    P = Partition.from_labels([j % 2 for j in range(k)])
    f = Mvps(MvpsSpec(F(3, 2), nu, conditional_kernel(nu, P)))
    table = joint_table(f, L)
    for n in range(L + 1):
        assert sum(p for h, p in table.items() if len(h) == n) == 1


@pytest.mark.parametrize("theta", [F(1, 2), 1, 2, 5])
def test_identity_kernel_is_dp_rule(theta):
    nu = Measure.of([F(1, 6), F(1, 3), F(1, 2)])
    f = dp(theta, nu)
    for L in range(4):
        for h in itertools.product(range(3), repeat=L):
            assert predictive(f, h).weights == dp_oracle(F(theta), nu, h)


def test_dp_worked_value():
    assert predictive(dp(1, half), [0]).weights == (F(3, 4), F(1, 4))


def test_balanced_predictive_is_mixture(urn3, nu3):
    R = urn3.spec.R
    for h in [(0,), (1, 2), (2, 2, 0, 1)]:
        n = len(h)
        avg = Measure(nu3.space, tuple(sum(R[x][j] for x in h) / n for j in range(3)))
        expected = mix(mvps_coefficients(2, n), nu3, avg)
        assert predictive(urn3, h) == expected


def test_mvps_coefficients_values():
    assert mvps_coefficients(3, 1) == F(1, 4)
    assert mvps_coefficients(3, 5) == F(5, 8)
    with pytest.raises(ValueError):
        mvps_coefficients(0, 1)


def test_rebalance_scales_theta_and_rows(nu3, split3):
    R = conditional_kernel(nu3, split3).scaled(2)
    s = MvpsSpec(4, nu3, R)
    r = rebalance(s)
    assert r.theta == 2 and r.balanced
    assert r.R == conditional_kernel(nu3, split3)
    a, b = Mvps(s), Mvps(r)
    for h in itertools.product(range(3), repeat=3):
        assert joint_probability(a, h) == joint_probability(b, h)


def test_rebalance_identity_on_balanced(urn3):
    assert rebalance(urn3.spec) is urn3.spec


def test_rebalance_rejects_mixed_masses(nu3):
    R = Kernel.of([[1, 0, 0], [0, 2, 0], [0, 0, 1]])
    with pytest.raises(NotConstantMass):
        rebalance(MvpsSpec(1, nu3, R))


def test_iid_matches_constant_kernel(nu3):
    const = Mvps(MvpsSpec(F(7, 3), nu3, Kernel.constant(nu3)))
    for h in itertools.product(range(3), repeat=3):
        assert joint_probability(const, h) == joint_probability(Iid(nu3), h)


def test_spec_validation(nu3):
    with pytest.raises(ValueError):
        MvpsSpec(0, nu3, Kernel.identity(nu3.space))
    with pytest.raises(ValueError):
        MvpsSpec(1, Measure.of([F(1, 2), F(1, 2), 0]), Kernel.identity(nu3.space))
    with pytest.raises(ValueError):
        MvpsSpec(1, Measure.of([F(1, 2), F(1, 4), F(1, 5)]), Kernel.identity(nu3.space))


def test_sufficientness_rejects_boundary_coefficients(nu3):
    R = Kernel.identity(nu3.space)
    for bad in (0, 1, F(3, 2)):
        with pytest.raises(ValueError):
            Sufficientness(nu3, R, (F(1, 2), bad))
    f = Sufficientness(nu3, R, lambda n: 1)
    with pytest.raises(ValueError):
        predictive(f, [0])


def test_horizon(nu3):
    f = Sufficientness(nu3, Kernel.identity(nu3.space), (F(1, 3), F(1, 2)))
    predictive(f, [0, 1])
    with pytest.raises(HorizonExceeded):
        predictive(f, [0, 1, 2])
    with pytest.raises(HorizonExceeded):
        sample(f, 4, 0)


def test_sufficientness_with_forced_coefficients_is_the_urn(urn3, nu3):
    f = Sufficientness(nu3, urn3.spec.R, lambda n: mvps_coefficients(2, n))
    for h in itertools.product(range(3), repeat=3):
        assert predictive(f, h) == predictive(urn3, h)


def test_trajectory_labels(nu3):
    t = Trajectory.from_labels(nu3.space, ["x3", "x1"])
    assert t.values == (2, 0) and t.labels == ("x3", "x1")
    with pytest.raises(ValueError):
        Trajectory(nu3.space, (3,))


class TestSampling:
    def test_deterministic(self, urn3):
        assert sample(urn3, 200, 7) == sample(urn3, 200, 7)
        assert sample(urn3, 200, 7) != sample(urn3, 200, 8)

    def test_empty(self, urn3):
        assert len(sample(urn3, 0, 1)) == 0
        with pytest.raises(ValueError):
            sample(urn3, -1, 0)

    def test_first_draw_follows_nu(self, nu3, urn3):
        S = 20000
        c = Counter(sample(urn3, 1, s).values[0] for s in range(S))
        for j, w in enumerate(nu3.weights):
            assert abs(c[j] / S - float(w)) < 4 * math.sqrt(float(w) * (1 - float(w)) / S)

    def test_short_sequences_follow_exact_law(self):
        # chi-square against the exact law of all 32 length-5 sequences
        f = dp(1, half)
        L, S = 5, 20000
        table = {h: p for h, p in joint_table(f, L).items() if len(h) == L}
        c = Counter(tuple(sample(f, L, s).values) for s in range(S))
        chi2 = sum((c[h] - S * float(p)) ** 2 / (S * float(p)) for h, p in table.items())
        # 99.9% point of chi-square with 31 degrees of freedom is about 61.1
        assert chi2 < 61.1

    def test_long_dp_run(self):
        t = sample(dp(1, half), 10**4, 2024)
        assert t.values.count(0) == 8108

    def test_float_and_exact_models_agree(self, urn3, nu3):
        fl = Measure.of([float(w) for w in nu3.weights])
        f = Mvps(MvpsSpec(2.0, fl, conditional_kernel(fl, Partition.from_blocks([[0], [1, 2]], 3))))
        assert sample(f, 300, 3) == sample(urn3, 300, 3)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 2), min_size=0, max_size=6),
    st.fractions(min_value=F(1, 10), max_value=10, max_denominator=12),
)
def test_predictive_is_probability(h, theta):
    nu = Measure.of([F(1, 5), F(3, 10), F(1, 2)])
    f = Mvps(MvpsSpec(theta, nu, conditional_kernel(nu, Partition.from_blocks([[0, 2], [1]], 3))))
    p = predictive(f, h)
    assert p.mass == 1 and p.is_strictly_positive()
