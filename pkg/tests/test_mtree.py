import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from maryspace.errors import DomainError, DuplicateKey, TooLarge
from maryspace.mtree import (
    SearchTree,
    build_tree,
    exact_distribution,
    pmf_mean,
    sample_X,
    sample_X_many,
    space_of_sequence,
    space_requirement,
)
from maryspace.recurrence import exact_mean_X

FIGURE_SEQ = (10, 7, 12, 4, 1, 8, 5, 6, 9, 14, 11, 2, 15, 13, 3)


def test_figure_sequence_gives_13_only_for_m4():
    spaces = {m: space_of_sequence(m, FIGURE_SEQ) for m in range(3, 9)}
    assert spaces[4] == 13
    assert [m for m, x in spaces.items() if x == 13] == [4]


def test_figure_tree_structure():
    t = build_tree(4, FIGURE_SEQ)
    t.check()
    assert t.root.keys == [7, 10, 12]
    assert t.in_order() == list(range(1, 16))
    assert t.full_nodes == 3
    assert space_requirement(t) == 13


@pytest.mark.parametrize("m, seq, expected", [(3, (1, 2), 4), (5, (2, 9, 4), 1), (4, (), 1)])
def test_small_trees(m, seq, expected):
    assert space_of_sequence(m, seq) == expected


def test_duplicate_key():
    t = build_tree(3, [5, 2])
    with pytest.raises(DuplicateKey):
        t.insert(5)
    with pytest.raises(DuplicateKey):
        build_tree(4, [1, 2, 2])


def test_bad_branching_factor():
    with pytest.raises(DomainError):
        SearchTree(1)


def test_dump_marks_empty_nodes():
    text = build_tree(3, [1, 2]).dump()
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("[1, 2]") or "1" in lines[0]
    assert sum("o" == line.strip().split()[0] for line in lines) == 3


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.permutations(list(range(1, 25))).flatmap(lambda p: st.integers(0, 24).map(lambda k: p[:k])))
def test_tree_invariants(m, seq):
    t = build_tree(m, seq)
    t.check()
    assert t.in_order() == sorted(seq)
    # every nonempty node has between 1 and m-1 keys; full nodes have m children
    for node, _ in t.nodes():
        if node is not None:
            assert 1 <= len(node.keys) <= m - 1
            assert node.keys == sorted(node.keys)
            assert (node.children is None) == (len(node.keys) < m - 1)
    assert t.node_count_total == 1 + m * t.full_nodes


@pytest.mark.parametrize("m", range(3, 31))
def test_boundary_law(m, gen):
    for n in range(m - 1):
        assert sample_X(m, n, seed=n) == 1
    xs = sample_X_many(m, m - 1, 50, seed=m)
    assert np.all(xs == m + 1)
    perm = gen.permutation(m - 1) + 1
    assert space_of_sequence(m, perm.tolist()) == m + 1


def test_spec_examples_sample_X():
    for m in (2, 3, 9):
        assert sample_X(m, 0, seed=1) == 1
    assert sample_X(3, 3, seed=4) == 4
    assert sample_X(3, 2, seed=5) == 4


def test_exact_distribution_examples():
    assert exact_distribution(3, 3) == {4: Fraction(1)}
    assert exact_distribution(4, 2) == {1: Fraction(1)}
    pmf = exact_distribution(3, 4)
    assert sum(pmf.values()) == 1
    assert float(pmf_mean(pmf)) == pytest.approx(exact_mean_X(3, 4).mean_X[4], abs=1e-12)
    with pytest.raises(TooLarge):
        exact_distribution(3, 11)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_enumeration_mean_matches_recurrence(m):
    table = exact_mean_X(m, 8)
    for n in range(9):
        assert float(pmf_mean(exact_distribution(m, n))) == pytest.approx(table.mean_X[n], abs=1e-9)


def _subtree_sizes(m, perm):
    """Sizes of the m subtrees of the root for one key sequence."""
    root = sorted(perm[: m - 1])
    bounds = [0] + root + [len(perm) + 1]
    return tuple(bounds[k + 1] - bounds[k] - 1 for k in range(m))


@pytest.mark.parametrize("m, n", [(3, 5), (3, 6), (4, 6), (4, 7)])
def test_subtree_sizes_form_uniform_composition(m, n):
    # the sizes (J_1..J_m) under the permutation model are uniform over compositions of n-(m-1)
    counts = {}
    for p in itertools.permutations(range(1, n + 1)):
        key = _subtree_sizes(m, p)
        counts[key] = counts.get(key, 0) + 1
    n_prime = n - (m - 1)
    assert len(counts) == math.comb(n_prime + m - 1, m - 1)
    assert len(set(counts.values())) == 1


@pytest.mark.parametrize("m, n", [(3, 5), (4, 7)])
def test_conditional_independence_of_subtrees(m, n):
    # given the sizes, the spaces of the subtrees are independent with laws X_{J_k}:
    # the law of X_n equals 1 + sum_k X_{J_k} mixed over uniform compositions
    laws = {j: exact_distribution(m, j) for j in range(n)}
    n_prime = n - (m - 1)
    comps = [c for c in itertools.product(range(n_prime + 1), repeat=m) if sum(c) == n_prime]
    mix = {}
    w = Fraction(1, len(comps))
    for c in comps:
        conv = {1: Fraction(1)}
        for j in c:
            new = {}
            for a, pa in conv.items():
                for b, pb in laws[j].items():
                    new[a + b] = new.get(a + b, 0) + pa * pb
            conv = new
        for x, p in conv.items():
            mix[x] = mix.get(x, 0) + w * p
    assert mix == exact_distribution(m, n)


def test_space_not_determined_by_n():
    # two sequences of the same length with different space requirements
    seqs = list(itertools.permutations(range(1, 7)))
    spaces = {space_of_sequence(4, s) for s in seqs}
    assert len(spaces) > 1


@pytest.mark.parametrize("m, n", [(3, 8), (4, 8), (5, 8)])
def test_split_sampler_chi_square(m, n):
    pmf = exact_distribution(m, n)
    xs = sample_X_many(m, n, 100_000, seed=2024 + m)
    support = sorted(pmf)
    assert set(np.unique(xs)) <= set(support)
    obs = np.array([np.sum(xs == x) for x in support])
    exp = np.array([float(pmf[x]) * len(xs) for x in support])
    if len(support) == 1:
        assert obs[0] == len(xs)
        return
    p = stats.chisquare(obs, exp).pvalue
    assert p > 0.01


def test_tree_and_split_methods_agree():
    a = sample_X_many(4, 60, 4000, seed=3, method="tree")
    b = sample_X_many(4, 60, 4000, seed=3, method="split")
    assert stats.ks_2samp(a, b).pvalue > 0.001
    exact = exact_mean_X(4, 60).mean_X[60]
    for xs in (a, b):
        se = xs.std(ddof=1) / math.sqrt(len(xs))
        assert abs(xs.mean() - exact) < 5 * se


def test_sampler_deterministic_and_thread_independent():
    a = sample_X_many(27, 3000, 5000, seed=11, threads=1)
    b = sample_X_many(27, 3000, 5000, seed=11, threads=3)
    assert np.array_equal(a, b)
    c = sample_X_many(27, 3000, 5000, seed=12)
    assert not np.array_equal(a, c)


def test_sample_mean_large_n():
    n = 1000
    xs = sample_X_many(27, n, 10_000, seed=99)
    exact = exact_mean_X(27, n).mean_X[n]
    se = xs.std(ddof=1) / math.sqrt(len(xs))
    assert abs(xs.mean() - exact) < 4 * se
    # X_n - 1 is a multiple of m
    assert np.all((xs - 1) % 27 == 0)


def test_bad_method():
    with pytest.raises(DomainError):
        sample_X_many(3, 5, 2, seed=0, method="nope")
    with pytest.raises(DomainError):
        sample_X(3, -1)
