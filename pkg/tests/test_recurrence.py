import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maryspace.charpoly import find_roots
from maryspace.errors import DomainError, IllConditioned, OutOfRange
from maryspace.mtree import exact_distribution, pmf_mean
from maryspace.recurrence import (
    MomentTable,
    estimate_mu,
    exact_mean_X,
    exact_second_moment_X,
    harmonic,
    marginal_J1,
    transfer_solve,
)


def naive_transfer(m, b, init, N):
    """Direct O(N^2) evaluation of the recurrence in exact rationals."""
    a = [Fraction(x) for x in init]
    for n in range(m - 1, N + 1):
        s = sum(math.comb(n - 1 - j, m - 2) * a[j] for j in range(n - m + 2))
        a.append(Fraction(b(n)) + Fraction(m * s, math.comb(n, m - 1)))
    return a


def test_hand_example():
    a = transfer_solve(3, 1.0, [1, 1], 3)
    assert a[3] == pytest.approx(4, abs=1e-14)


def test_zero_solution():
    for m in (2, 3, 7):
        assert np.all(transfer_solve(m, 0.0, np.zeros(m - 1), 50) == 0)


@pytest.mark.parametrize("m", [2, 3, 4, 6, 11])
def test_matches_exact_rational_recurrence(m):
    b = lambda n: n % 5 + 1
    init = [j + 1 for j in range(m - 1)]
    N = 60
    ref = naive_transfer(m, b, init, N)
    got = transfer_solve(m, b, init, N)
    assert np.allclose(got, [float(x) for x in ref], rtol=1e-12)
    got_seq = transfer_solve(m, [b(n) for n in range(N + 1)], init, N)
    assert np.allclose(got_seq, got, rtol=1e-14)


def test_superlinear_growth_for_linear_toll():
    # b_n = n: the toll dominates the homogeneous part, so a_n ~ K n log n for m = 3
    a = transfer_solve(3, lambda n: float(n), [0, 0], 100_000)
    n = np.array([1e3, 1e4, 1e5]).astype(int)
    ratio = a[n] / n
    assert np.all(np.diff(ratio) > 0)
    slope = np.diff(ratio) / np.diff(np.log(n))
    assert slope[1] == pytest.approx(slope[0], rel=0.05)
    # and the slope is the transfer constant 1/(H_3 - 1)
    assert slope[1] == pytest.approx(1 / (harmonic(3) - 1), rel=0.02)


def test_transfer_solve_errors():
    with pytest.raises(DomainError):
        transfer_solve(1, 1.0, [], 5)
    with pytest.raises(DomainError):
        transfer_solve(4, 1.0, [1, 1], 5)
    with pytest.raises(DomainError):
        transfer_solve(4, [1.0, 2.0], [1, 1, 1], 5)


def test_exact_mean_examples():
    assert exact_mean_X(3, 3).mean_X[3] == pytest.approx(4)
    assert exact_mean_X(4, 3).mean_X[3] == pytest.approx(5)
    t = exact_mean_X(5, 20)
    assert np.all(t.mean_X[:4] == 1)
    assert np.allclose(t.mean_V, t.mean_X - (t.n + 1) / (harmonic(5) - 1))
    e8 = float(pmf_mean(exact_distribution(3, 8)))
    assert exact_mean_X(3, 8).mean_X[8] == pytest.approx(e8, abs=1e-9)
    with pytest.raises(DomainError):
        exact_mean_X(3, 10**6 + 1)


def test_mean_leading_term():
    # E[X_n] / n -> 1/(H_m - 1) when sigma < 1
    for m in (3, 10, 26):
        t = exact_mean_X(m, 200_000)
        assert t.mean_X[-1] / t.N == pytest.approx(1 / (harmonic(m) - 1), rel=2e-2)


@pytest.mark.parametrize("m, n, j, p", [(3, 3, 0, 2 / 3), (3, 3, 1, 1 / 3), (7, 6, 0, 1.0)])
def test_marginal_J1_examples(m, n, j, p):
    assert marginal_J1(m, n, j) == pytest.approx(p, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 40))
def test_marginal_J1_sums_to_one(m, extra):
    n = m - 1 + extra
    total = sum(marginal_J1(m, n, j) for j in range(extra + 1))
    assert total == pytest.approx(1, abs=1e-12)


def test_marginal_J1_range():
    with pytest.raises(OutOfRange):
        marginal_J1(3, 3, 2)
    with pytest.raises(OutOfRange):
        marginal_J1(3, 1, 0)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_second_moment_matches_enumeration(m):
    s2 = exact_second_moment_X(m, 8)
    for n in range(9):
        pmf = exact_distribution(m, n)
        ref = float(sum(x * x * p for x, p in pmf.items()))
        assert s2[n] == pytest.approx(ref, rel=1e-12)


def test_homogeneous_shift_identity():
    # V' = X + 1/(m-1) solves the recurrence with zero toll
    m = 27
    c = 1 / (m - 1)
    t = exact_mean_X(m, 5000)
    h = transfer_solve(m, 0.0, np.full(m - 1, 1 + c), 5000)
    assert np.allclose(h, t.mean_X + c, rtol=1e-12)


def test_mean_V_normalized_bounded(table27):
    y = table27.mean_V_over_n_sigma()[1000:]
    assert np.max(np.abs(y)) < 2.5
    # oscillates: changes sign on [1e3, 1e5]
    assert y.min() < 0 < y.max()


def synthetic_table(m, c, N, noise=None):
    lam = find_roots(m).lambda2
    n = np.arange(N + 1, dtype=float)
    v = 2 * (c * n.astype(complex) ** lam).real
    if noise is not None:
        v = v + noise(n)
    H = harmonic(m)
    return MomentTable(m, H, v + (n + 1) / (H - 1), v, sigma=lam.real), lam


def test_fit_recovers_synthetic_mu():
    c = 0.3 - 0.7j
    table, lam = synthetic_table(27, c, 30_000)
    fit = estimate_mu(table, lam)
    assert abs(fit.mu_hat - c) < 1e-8
    assert fit.max_rel_residual < 1e-8


def test_fit_with_noise():
    c = -0.2 - 0.9j
    sigma = find_roots(27).sigma
    table, lam = synthetic_table(27, c, 100_000, noise=lambda n: n ** (sigma - 0.3))
    err_lo = abs(estimate_mu(table, lam, (1_000, 3_000)).mu_hat - c)
    err_hi = abs(estimate_mu(table, lam, (10_000, 30_000)).mu_hat - c)
    assert err_hi < 3 * 10_000**-0.3
    assert err_hi < err_lo


def test_fit_ill_conditioned():
    # with a tiny imaginary part the cos/sin columns are nearly collinear
    lam = complex(find_roots(27).lambda2.real, 1e-12)
    table, _ = synthetic_table(27, 1.0, 30_000)
    with pytest.raises(IllConditioned):
        estimate_mu(table, lam, (10_000, 30_000))


def test_fit_range_checks(table27, roots27):
    with pytest.raises(OutOfRange):
        estimate_mu(table27, roots27.lambda2, (500, 3000))
    with pytest.raises(OutOfRange):
        estimate_mu(table27, roots27.lambda2, (10_000, 200_000))


def test_fit_stable_across_ranges(table27, roots27, fit27):
    other = estimate_mu(table27, roots27.lambda2, (30_000, 100_000))
    assert abs(other.mu_hat - fit27.mu_hat) < 1e-2
    assert fit27.condition_number < 10
    assert fit27.max_rel_residual < 1e-3


def test_residuals_decay(table27, roots27, fit27):
    # the remaining error relative to the amplitude shrinks as n grows
    lam = roots27.lambda2
    y = table27.mean_V_over_n_sigma()

    def worst(k):
        n = np.arange(k, 2 * k)
        model = 2 * (fit27.mu_hat * n.astype(complex) ** lam).real / n**lam.real
        return np.max(np.abs(y[n] - model))

    w = [worst(k) for k in (1_000, 5_000, 40_000)]
    assert w[0] > w[1] > w[2]
