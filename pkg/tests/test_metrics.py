import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_tuples
from graphalign.alignment import misalignment
from graphalign.core import GuardError, ParameterError, PermutationTuple, cycle, transposition
from graphalign.metrics import (
    count_matrix,
    err,
    err_bruteforce,
    err_pair,
    err_pair_bruteforce,
    hamming,
    is_exact,
    max_assignment,
    mean_pairwise_err,
)


def test_err_hand_examples():
    star3 = PermutationTuple.identity(3, 2)
    assert err(PermutationTuple([cycle(3, 3), np.arange(3)]), star3).err == 0.5
    swap = PermutationTuple([transposition(4, 0, 1), np.arange(4)])
    res = err(swap, PermutationTuple.identity(4, 2))
    assert res.err == 0.25 and res.matched == 6
    assert res.err_exact == Fraction(1, 4)


def test_err_zero_at_truth_with_identity_psi():
    for _, star in random_tuples(20, seed=1):
        res = err(star, star)
        assert res.err == 0 and np.array_equal(res.psi, np.arange(star.n))


def test_err_matches_bruteforce_including_psi():
    for pi, star in random_tuples(200, seed=2):
        a, b = err(pi, star), err_bruteforce(pi, star)
        assert a.matched == b.matched
        assert np.array_equal(a.psi, b.psi)   # both lexicographically smallest


def test_single_mismatch():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, p = 6, 3
        star = PermutationTuple.random(n, p, rng)
        rows = star.perms.copy()
        j = rng.integers(p)
        a, b = rng.choice(n, 2, replace=False)
        # move exactly one node of coordinate j: rows[j] maps a and b swapped
        rows[j][[a, b]] = rows[j][[b, a]]
        # a swap disturbs two (j,u) pairs
        assert err(PermutationTuple(rows), star).err == pytest.approx(2 / (n * p))
    star = PermutationTuple.identity(5, 2)
    assert err(star, star).err == 0


def test_err_bruteforce_guard():
    big = PermutationTuple.identity(8, 2)
    with pytest.raises(GuardError):
        err_bruteforce(big, big)


def test_dimension_mismatch():
    with pytest.raises(ParameterError):
        err(PermutationTuple.identity(4, 2), PermutationTuple.identity(4, 3))


def test_hamming():
    ident = np.arange(6)
    assert hamming(ident, ident) == 0
    assert hamming(ident, transposition(6, 1, 4)) == pytest.approx(2 / 6)
    for k in range(2, 7):
        assert hamming(ident, cycle(6, k)) == pytest.approx(k / 6)


def test_err_pair_examples_and_oracle():
    swap = PermutationTuple([transposition(4, 0, 1), np.arange(4)])
    star = PermutationTuple.identity(4, 2)
    assert err_pair(swap, star, 0, 1) == 0.25
    assert err_pair(star, star, 0, 1) == 0
    with pytest.raises(ParameterError):
        err_pair(star, star, 1, 1)
    for pi, st_ in random_tuples(50, seed=4):
        for j, jj in itertools.permutations(range(pi.p), 2):
            assert err_pair(pi, st_, j, jj) == pytest.approx(err_pair_bruteforce(pi, st_, j, jj))


def test_mean_pairwise_err_below_err():
    # averaging the pair errors over ordered pairs never exceeds the joint error
    for pi, star in random_tuples(200, seed=5):
        assert mean_pairwise_err(pi, star) <= err(pi, star).err + 1e-12


@given(st.integers(3, 7), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_err_properties(n, p, seed):
    rng = np.random.default_rng(seed)
    pi, star = PermutationTuple.random(n, p, rng), PermutationTuple.random(n, p, rng)
    res = err(pi, star)
    assert 0 <= res.err <= 1
    assert sorted(res.psi.tolist()) == list(range(n))
    # the returned psi attains the reported count
    assert int((res.psi[pi.perms] == star.perms).sum()) == res.matched
    phi = rng.permutation(n)
    assert err(pi.relabel(phi), star).matched == res.matched
    assert err(pi, star.relabel(phi)).matched == res.matched
    # err = 0 iff a single relabeling reproduces every coordinate
    exact = res.matched == n * p
    assert exact == is_exact(pi, star)
    if exact:
        assert np.array_equal(res.psi[pi.perms], star.perms)
    assert err(star.relabel(phi), star).err == 0


def test_error_chain_inequalities():
    for pi, star in random_tuples(500, seed=6):
        rep = misalignment(pi, star)
        n, p = pi.n, pi.p
        e = err(pi, star).err
        assert e <= 2 / (n * p) * rep.delta_A + 1e-12
        assert e <= 8 / (n * p * (n - 2)) * rep.delta_B + 1e-12


def test_max_assignment_lexicographic_tie_break():
    C = np.ones((3, 3), dtype=np.int64)
    psi, val = max_assignment(C)
    assert val == 3 and psi.tolist() == [0, 1, 2]
    C = np.array([[0, 1], [1, 0]])
    assert max_assignment(C)[0].tolist() == [1, 0]


def test_count_matrix_total():
    pi, star = random_tuples(1, seed=7)[0]
    assert count_matrix(pi, star).sum() == pi.n * pi.p


def test_random_tuple_baseline_mc():
    # Monte-Carlo baseline from the brute-force oracle; the assignment route must agree
    rng = np.random.default_rng(8)
    a, b = [], []
    for _ in range(1000):
        pi, star = PermutationTuple.random(6, 2, rng), PermutationTuple.random(6, 2, rng)
        a.append(err(pi, star).err)
        b.append(err_bruteforce(pi, star).err)
    assert a == b
    # psi can always fix one of the two coordinates, so err <= 1/2
    assert 0.3 < np.mean(a) <= 0.5
