import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphalign.core import GuardError, ParameterError, edge_index, n_edges
from graphalign.lowdegree import (
    EdgeBijection,
    LowDegreeParams,
    MultiGraphPair,
    alpha_classes,
    bijections,
    bound_sweep,
    canonical_multigraph,
    closed_form_excess,
    cumulant_bound,
    cumulant_partition,
    cumulant_recursive,
    indicator_cumulant,
    indicator_cumulant_bound,
    indicator_moment,
    joint_cumulant,
    kappa_exact,
    kappa_fraction,
    kappa_monte_carlo,
    mmse_lower_bound,
    moment_bound,
    multigraph_classes,
    multisets,
    perfect_matchings,
    reduction_err_bound,
    set_partitions,
    sub_multisets,
    trivial_mmse,
    wick_moment,
    wick_monte_carlo,
    wick_pairing_sum,
    ws_count,
    ws_truncated_sum,
    zeta,
)


def counts(edges):
    out = {}
    for e in edges:
        out[e] = out.get(e, 0) + 1
    return out


# ------------------------------------------------------------- cumulants

def test_partition_counts_are_bell_numbers():
    assert [len(set_partitions(k)) for k in range(1, 9)] == [1, 2, 5, 15, 52, 203, 877, 4140]
    assert [len(perfect_matchings(k)) for k in (2, 4, 6, 8)] == [1, 3, 15, 105]


def test_joint_cumulant_basic():
    # one variable: mean
    assert joint_cumulant([(0,), (3,)], [Fraction(1, 3), Fraction(2, 3)]) == 2
    # independent pair: zero
    atoms = [(a, b) for a in (0, 1) for b in (0, 2)]
    probs = [Fraction(1, 4)] * 4
    assert joint_cumulant(atoms, probs) == 0
    # Y, Y with Y ~ Bernoulli(1/n): variance
    for n in (2, 5, 9):
        d = [(0, 0), (1, 1)]
        p = [Fraction(n - 1, n), Fraction(1, n)]
        assert joint_cumulant(d, p) == Fraction(1, n) * (1 - Fraction(1, n))
        assert joint_cumulant(d, p, method="recursion") == Fraction(1, n) * (1 - Fraction(1, n))


def test_joint_cumulant_order_guard():
    with pytest.raises(ParameterError):
        joint_cumulant([tuple(range(9))], [1])


def test_third_cumulant_of_bernoulli():
    # kappa_3 of Bernoulli(q) = q(1-q)(1-2q)
    q = Fraction(1, 3)
    val = joint_cumulant([(0, 0, 0), (1, 1, 1)], [1 - q, q])
    assert val == q * (1 - q) * (1 - 2 * q)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_partition_and_recursion_agree(k, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    atoms = [tuple(int(v) for v in rng.integers(-2, 3, size=k)) for _ in range(m)]
    w = rng.integers(1, 5, size=m)
    probs = [Fraction(int(x), int(w.sum())) for x in w]
    assert joint_cumulant(atoms, probs) == joint_cumulant(atoms, probs, method="recursion")
    fprobs = [float(p) for p in probs]
    a = joint_cumulant(atoms, fprobs)
    b = joint_cumulant(atoms, fprobs, method="recursion")
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_gaussian_cumulants_vanish_above_two():
    # Y1 = Y2 = Y3 = Y4 = Z: the fourth cumulant of a standard normal is 0
    mom = lambda mask: wick_moment(["z"] * bin(mask).count("1"))  # noqa: E731
    assert cumulant_partition(4, mom) == 0
    assert cumulant_recursive(4, mom) == 0
    assert cumulant_partition(2, mom) == 1


# ------------------------------------------------------------------ Wick

def test_wick_forms_agree():
    for labels in [(), ("a",), ("a", "a"), ("a", "b"), ("a", "a", "a", "a"), ("a", "a", "b", "b"),
                   ("a", "b", "a", "b"), ("a", "a", "a", "b"), tuple("aaaaaa"), tuple("aabbcc"), tuple("aaaabb")]:
        assert wick_moment(labels) == wick_pairing_sum(labels)
    assert wick_moment("aaaa") == 3 and wick_moment("aaaaaa") == 15 and wick_moment("aaaabb") == 3


@pytest.mark.parametrize("labels", [("a",), ("a", "a"), ("a", "b"), ("a", "a", "b"), ("a", "a", "a", "a"),
                                    ("a", "a", "b", "b"), ("a", "b", "c", "c")])
def test_wick_against_monte_carlo(labels):
    mean, se = wick_monte_carlo(labels, 400_000, seed=3)
    assert abs(mean - wick_moment(labels)) <= 4 * se + 1e-12


# -------------------------------------------------------------- indicators

def test_indicator_moment_examples():
    e = edge_index(0, 1, 4)
    psi = EdgeBijection([(e, e)])
    assert indicator_moment([e], psi, 4) == Fraction(1, 12)
    assert indicator_moment([], psi, 4) == Fraction(1, 4)
    n = 6
    e, f = edge_index(1, 2, n), edge_index(3, 4, n)
    # x and sigma maps {3,4} onto {1,2}: 2 orderings of the pair, the other 3 nodes free
    assert indicator_moment([e], [(e, f)], n) == Fraction(2 * math.factorial(3), math.factorial(6))
    assert indicator_moment([e], [(e, f)], n) <= moment_bound([e], n)


def test_indicator_cumulant_examples():
    n = 5
    assert indicator_cumulant([], [], n) == Fraction(1, 5)
    e, f = edge_index(0, 2, n), edge_index(1, 3, n)
    psi = [(e, f)]
    direct = indicator_moment([e], psi, n) - indicator_moment([], psi, n) * indicator_moment([e], psi, n, with_x=False)
    assert indicator_cumulant([e], psi, n) == direct
    assert indicator_cumulant([e], psi, n, method="recursion") == direct


def test_beta_must_fit_psi():
    with pytest.raises(ParameterError):
        indicator_moment([0, 0], [(0, 1)], 5)


def test_indicator_guard():
    with pytest.raises(GuardError):
        indicator_moment([], [], 9)


# ---------------------------------------------------------------- kappa

def test_kappa_trivial_and_hand_value():
    for n in (3, 5, 7):
        assert kappa_fraction(MultiGraphPair({}, {}, n)) == Fraction(1, n)
    n = 5
    e = edge_index(0, 1, n)
    assert kappa_fraction(MultiGraphPair({e: 1}, {e: 1}, n)) == Fraction(n - 2, n * n * (n - 1))


def test_kappa_zero_for_unequal_sides_n5():
    n = 5
    checked = 0
    for a in range(4):
        for b in range(4 - a):
            if a == b:
                continue
            for m1 in multisets(n, a):
                for m2 in multisets(n, b):
                    k = kappa_exact(MultiGraphPair(counts(m1), counts(m2), n))
                    assert abs(k) <= 1e-10
                    checked += 1
    assert checked == ws_count(n, 3) - 1 - n_edges(n) ** 2


def test_kappa_against_monte_carlo():
    n = 5
    for (u, v), (s, t) in [((0, 1), (0, 1)), ((1, 2), (3, 4)), ((0, 3), (2, 4))]:
        alpha = MultiGraphPair({edge_index(u, v, n): 1}, {edge_index(s, t, n): 1}, n)
        mean, se = kappa_monte_carlo(alpha, 1_000_000, seed=17)
        assert abs(mean - kappa_exact(alpha)) <= 4 * se


def test_kappa_guard():
    with pytest.raises(GuardError):
        kappa_fraction(MultiGraphPair({}, {}, 8))
    with pytest.raises(GuardError):
        kappa_fraction(MultiGraphPair({0: 3}, {0: 2}, 5))


def test_orbit_reduction_matches_full_enumeration():
    n = 5
    rng = np.random.default_rng(0)
    reps = {}
    for a in range(3):
        for m in multisets(n, a):
            reps.setdefault(canonical_multigraph(m, n), []).append(m)
    for a in range(3):
        assert set(multigraph_classes(n, a)) == {k for k in reps if len(k) == a}
    for a, b in [(1, 1), (2, 2), (1, 0), (2, 1)]:
        for m1 in multisets(n, a):
            for m2 in multisets(n, b):
                if rng.random() > 0.2:   # a fifth of all pairs keeps the test quick
                    continue
                full = kappa_fraction(MultiGraphPair(counts(m1), counts(m2), n))
                rep = kappa_fraction(MultiGraphPair(counts(canonical_multigraph(m1, n)),
                                                    counts(canonical_multigraph(m2, n)), n))
                assert full == rep


def test_canonical_form_is_invariant():
    n = 7
    rng = np.random.default_rng(5)
    for _ in range(50):
        edges = [int(e) for e in rng.integers(0, n_edges(n), size=3)]
        phi = np.concatenate([[0], 1 + rng.permutation(n - 1)])
        from graphalign.core import edge_of_index
        moved = [edge_index(phi[u], phi[v], n) for u, v in map(lambda e: edge_of_index(e, n), edges)]
        assert canonical_multigraph(edges, n) == canonical_multigraph(moved, n)


# ---------------------------------------------------------------- bounds

def test_cumulant_bound_examples():
    assert cumulant_bound(MultiGraphPair({0: 1}, {}, 6)) == 0
    for n in (4, 6, 9):
        b = cumulant_bound(MultiGraphPair({}, {}, n))
        assert b == pytest.approx(2 / (n - 1))
        assert 1 / n <= b
    with pytest.raises(ParameterError):
        cumulant_bound(MultiGraphPair({0: 2}, {0: 2}, 5))


@pytest.mark.parametrize("n", [6, 7])
def test_bound_sweep(n):
    rep = bound_sweep(n, 4)
    assert rep.ok, rep
    assert rep.classes > 300
    assert rep.indicator_checks > 0


@pytest.mark.parametrize("n", [6, 7])
def test_indicator_bounds_up_to_three(n):
    vacuous = checked = 0
    for m1 in multigraph_classes(n, 3):
        for m2 in multigraph_classes(n, 3)[::4]:
            alpha = MultiGraphPair(counts(m1), counts(m2), n)
            for psi in bijections(alpha)[:2]:
                for beta in sub_multisets(alpha.elements(1)):
                    checked += 1
                    assert indicator_moment(beta, psi, n) <= moment_bound(beta, n)
                    ib = indicator_cumulant_bound(beta, n)
                    vacuous += math.isinf(ib)
                    assert abs(indicator_cumulant(beta, psi, n)) <= ib
    assert checked > 0 and vacuous > 0   # |beta| = 3 has a nonpositive base at n <= 7


def test_bijections_of_multisets():
    alpha = MultiGraphPair({0: 2}, {1: 1, 2: 1}, 5)
    assert len(bijections(alpha)) == 1
    alpha = MultiGraphPair({0: 1, 3: 1}, {1: 1, 2: 1}, 5)
    assert len(bijections(alpha)) == 2
    assert bijections(MultiGraphPair({0: 1}, {}, 5)) == []
    with pytest.raises(ParameterError):
        EdgeBijection([(0, 1)]).check(MultiGraphPair({0: 1, 3: 1}, {1: 2}, 5))


def test_multigraph_pair_helpers():
    a = MultiGraphPair.from_edge_lists([[0, 1, 2], [1, 2]], [[2, 3]], 5)
    assert a.size1 == 3 and a.size2 == 1 and a.size == 4
    assert a.factorial == 2
    assert a.support(1) == {0, 1, 2}
    with pytest.raises(ParameterError):
        MultiGraphPair({99: 1}, {}, 4)


# ---------------------------------------------------------- MMSE bounds

def test_zeta_values():
    assert zeta(LowDegreeParams(1, 0.0, 100)) == 0
    assert zeta(LowDegreeParams(1, 0.0, 100, "appendix-p2")) == 0
    z = zeta(LowDegreeParams(1, 0.01, 100))
    assert z == pytest.approx((0.1 / 0.9) * math.sqrt(1.5) * 2 / 0.98 ** 2, rel=1e-12)
    assert z == pytest.approx(0.2834, abs=1e-4)
    p2 = zeta(LowDegreeParams(2, 0.01, 100, "appendix-p2"))
    assert p2 == pytest.approx(8 * 0.01 / 0.99 * 2 * 2 / (1 - 3 / 100) ** 2, rel=1e-12)
    with pytest.raises(ParameterError):
        zeta(LowDegreeParams(1, 1.0, 10))
    with pytest.raises(ParameterError):
        zeta(LowDegreeParams(9, 0.1, 10))


def test_zeta_variants_agree_only_at_zero_degree():
    # at D = 0 both vanish; for D >= 1 the sqrt(1+D/2) and (1+D/2) factors differ
    for n in (10, 50):
        assert zeta(LowDegreeParams(0, 0.3, n)) == zeta(LowDegreeParams(0, 0.3, n, "appendix-p2")) == 0
        for D in (1, 2, 3):
            assert zeta(LowDegreeParams(D, 0.3, n)) != zeta(LowDegreeParams(D, 0.3, n, "appendix-p2"))


def test_mmse_bound():
    assert mmse_lower_bound(LowDegreeParams(3, 0.0, 20)) == trivial_mmse(20)
    v = mmse_lower_bound(LowDegreeParams(1, 0.01, 100))
    assert v == pytest.approx(9.79e-3, abs=5e-6)
    for rho in (1e-8, 1e-7, 1e-6):
        for D in (1, 2, 3):
            assert mmse_lower_bound(LowDegreeParams(D, rho, 50)) <= trivial_mmse(50)
    with pytest.raises(ParameterError):
        mmse_lower_bound(LowDegreeParams(3, 0.5, 20))


def test_trivial_mmse():
    assert trivial_mmse(10) == pytest.approx(0.09)
    assert trivial_mmse(2) == 0.25
    q = 1 / 7
    assert trivial_mmse(7) == pytest.approx(q * (1 - q))


def test_reduction_bound():
    assert reduction_err_bound(0) == 0
    assert reduction_err_bound(1) == 1
    assert reduction_err_bound(0.25) == 0.5
    with pytest.raises(ParameterError):
        reduction_err_bound(1.5)


def test_ws_sum_zero_degree_exact():
    for n in (3, 4, 6):
        w = ws_truncated_sum(n, 0.3, 0)
        assert w.total == Fraction(1, n * n)
        assert w.bound == Fraction(1, n) - Fraction(1, n * n)
        assert float(w.bound) == trivial_mmse(n)


def test_ws_sum_monotone_and_count():
    for n in (4, 5):
        vals = [ws_truncated_sum(n, 0.2, D) for D in range(3)]
        assert all(a.total <= b.total for a, b in zip(vals, vals[1:]))
        assert [v.count for v in vals] == [ws_count(n, D) for D in range(3)]


@pytest.mark.parametrize("rho", [1e-4, 1e-3])
@pytest.mark.parametrize("D", [1, 2])
def test_ws_sum_below_closed_form(rho, D):
    w = ws_truncated_sum(6, rho, D)
    assert float(w.excess) <= closed_form_excess(LowDegreeParams(D, rho, 6, "appendix-p2"))


def test_ws_guards():
    with pytest.raises(GuardError):
        ws_truncated_sum(7, 0.1, 1)
    with pytest.raises(GuardError):
        ws_truncated_sum(5, 0.1, 3)
