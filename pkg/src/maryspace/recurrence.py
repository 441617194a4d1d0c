"""Exact moments of the space requirement through the subtree-size recurrence.

The workhorse is :func:`transfer_solve`, which runs

    a_n = b_n + m / C(n, m-1) * sum_{j=0}^{n-m+1} C(n-1-j, m-2) a_j,   n >= m-1,

in O(m) work per n.  Instead of the partial sums
``A_t(n) = sum_j C(n-1-j, t) a_j`` (which grow like n**(t+1) and overflow
for large m) it carries their normalised versions ``B_t(n) = A_t(n) / C(n, t+1)``.
Pascal's rule turns into a convex combination,

    B_t(n+1) = ((n - t) B_t(n) + (t + 1) B_{t-1}(n)) / (n + 1),  B_{-1}(n) = a_n,

so the state stays on the scale of the a_j and no long sums are formed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numba import njit

from maryspace.errors import DomainError, IllConditioned, OutOfRange

N_MAX = 10**6
COND_MAX = 1e8
SECOND_MOMENT_MAX_N = 512


def harmonic(m: int) -> float:
    return math.fsum(1.0 / k for k in range(1, m + 1))


def mean_linear_coefficient(m: int) -> float:
    """1 / (H_m - 1), the slope of the linear part of E[X_n] in (n + 1)."""
    return 1.0 / (harmonic(m) - 1.0)


@njit(cache=True)
def _transfer_kernel(m, b, init, N):
    a = np.zeros(N + 1)
    B = np.zeros(m - 1)
    for n in range(N + 1):
        if n <= m - 2:
            a[n] = init[n]
        else:
            a[n] = b[n] + m * B[m - 2]
        for t in range(m - 2, -1, -1):
            prev = B[t - 1] if t > 0 else a[n]
            B[t] = ((n - t) * B[t] + (t + 1) * prev) / (n + 1)
    return a


def transfer_solve(
    m: int,
    b: Union[float, Sequence[float], np.ndarray, Callable[[int], float]],
    init: Sequence[float],
    N: int,
) -> np.ndarray:
    """Solve the transfer recurrence for a_0..a_N.

    ``b`` may be a constant, a callable of n, or a sequence indexed by n
    (entries below m-1 are ignored).  ``init`` supplies a_0..a_{m-2}.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    if N < m - 1:
        raise DomainError(f"N = {N} must be at least m-1 = {m - 1}")
    init_arr = np.asarray(init, dtype=float)
    if init_arr.shape != (m - 1,):
        raise DomainError(f"need exactly m-1 = {m - 1} initial values, got {init_arr.shape}")
    if callable(b):
        b_arr = np.array([b(n) if n >= m - 1 else 0.0 for n in range(N + 1)], dtype=float)
    elif np.ndim(b) == 0:
        b_arr = np.full(N + 1, float(b))
    else:
        b_arr = np.asarray(b, dtype=float)
        if b_arr.shape[0] < N + 1:
            raise DomainError(f"b has {b_arr.shape[0]} entries, need N+1 = {N + 1}")
    return _transfer_kernel(m, b_arr, init_arr, N)


@dataclass
class MomentTable:
    """Exact E[X_n] and E[V_n] for n = 0..N, where V_n = X_n - (n+1)/(H_m - 1)."""

    m: int
    H_m: float
    mean_X: np.ndarray
    mean_V: np.ndarray
    sigma: float = math.nan
    mu_hat: Optional[complex] = None
    fit_range: Optional[tuple[int, int]] = None

    @property
    def N(self) -> int:
        return len(self.mean_X) - 1

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.N + 1)

    @property
    def mean_linear_coefficient(self) -> float:
        return 1.0 / (self.H_m - 1.0)

    def mean_V_over_n_sigma(self) -> np.ndarray:
        n = self.n.astype(float)
        with np.errstate(divide="ignore"):
            scale = np.where(n > 0, n**self.sigma, 1.0)
        return self.mean_V / scale

    def with_fit(self, fit: "MuFit") -> "MomentTable":
        return dataclasses.replace(self, mu_hat=fit.mu_hat, fit_range=fit.fit_range)


def exact_mean_X(m: int, N: int, sigma: Optional[float] = None) -> MomentTable:
    """E[X_n] for n <= N from X_n = 1 + sum_k X_{J_k}, plus the centred E[V_n].

    ``sigma`` only feeds the normalised column of the table; by default it
    is Re(lambda_2) when m >= 3.
    """
    if N > N_MAX:
        raise DomainError(f"N = {N} exceeds {N_MAX}")
    if N < m - 1:
        raise DomainError(f"N = {N} must be at least m-1 = {m - 1}")
    H = harmonic(m)
    mean_X = transfer_solve(m, 1.0, np.ones(m - 1), N)
    mean_V = mean_X - (np.arange(N + 1) + 1.0) / (H - 1.0)
    if sigma is None:
        if m >= 3:
            from maryspace.charpoly import find_roots

            sigma = find_roots(m).sigma
        else:
            sigma = math.nan
    return MomentTable(m=m, H_m=H, mean_X=mean_X, mean_V=mean_V, sigma=sigma)


def marginal_J1(m: int, n: int, j: int) -> float:
    """P[J_1 = j] when (J_1..J_m) is a uniform composition of n' = n-(m-1)."""
    n_prime = n - (m - 1)
    if n_prime < 0 or not 0 <= j <= n_prime:
        raise OutOfRange(f"need 0 <= j <= n' = {n_prime}, got j = {j}")
    return float(Fraction(math.comb(n - 1 - j, m - 2), math.comb(n, m - 1)))


def exact_second_moment_X(m: int, N: int) -> np.ndarray:
    """E[X_n^2] for n <= N via the pairwise composition marginals.  O(N^3); tests only."""
    if N > SECOND_MOMENT_MAX_N:
        raise DomainError(f"N = {N} exceeds {SECOND_MOMENT_MAX_N}")
    if m < 3:
        raise DomainError("pairwise marginals need m >= 3")
    e = transfer_solve(m, 1.0, np.ones(m - 1), max(N, m - 1))
    s2 = np.ones(N + 1)
    for n in range(m - 1, N + 1):
        n_prime = n - (m - 1)
        total = math.comb(n, m - 1)
        j = np.arange(n_prime + 1)
        p1 = np.array([math.comb(n - 1 - i, m - 2) for i in j], dtype=float) / total
        # P[J_1 = i, J_2 = k] = C(n'-i-k+m-3, m-3) / C(n'+m-1, m-1)
        cross = 0.0
        for i in j:
            k = np.arange(n_prime - i + 1)
            p2 = np.array([math.comb(n_prime - i - kk + m - 3, m - 3) for kk in k], dtype=float) / total
            cross += e[i] * float(np.dot(p2, e[k]))
        ee = float(np.dot(p1, e[: n_prime + 1]))
        es2 = float(np.dot(p1, s2[: n_prime + 1]))
        s2[n] = 1.0 + 2.0 * m * ee + m * es2 + m * (m - 1) * cross
    return s2


@dataclass(frozen=True)
class MuFit:
    mu_hat: complex
    fit_range: tuple[int, int]
    max_rel_residual: float
    condition_number: float
    stderr: float


def estimate_mu(
    table: MomentTable, lambda2: complex, fit_range: tuple[int, int] = (10_000, 30_000)
) -> MuFit:
    """Least-squares fit of E[V_n] ~ 2 Re(mu n**lambda2) over ``fit_range``.

    The fit works on E[V_n] / n**sigma so every n carries equal weight.
    Residuals are reported relative to the fitted amplitude 2|mu|.
    """
    lo, hi = fit_range
    if lo < 1000:
        raise OutOfRange(f"fit range must start at n >= 1000, got {lo}")
    if hi > table.N or hi <= lo:
        raise OutOfRange(f"fit range {fit_range} not inside table of size {table.N}")
    lam = complex(lambda2)
    n = np.arange(lo, hi + 1, dtype=float)
    phase = lam.imag * np.log(n)
    A = np.column_stack([2 * np.cos(phase), -2 * np.sin(phase)])
    y = table.mean_V[lo : hi + 1] / n**lam.real
    cond = float(np.linalg.cond(A))
    if cond > COND_MAX:
        raise IllConditioned(f"regressor condition number {cond:.3g} exceeds {COND_MAX:g}")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    mu = complex(coef[0], coef[1])
    resid = y - A @ coef
    dof = max(len(n) - 2, 1)
    cov = np.linalg.inv(A.T @ A) * (resid @ resid) / dof
    amp = 2 * abs(mu)
    return MuFit(
        mu_hat=mu,
        fit_range=(lo, hi),
        max_rel_residual=float(np.max(np.abs(resid)) / amp) if amp > 0 else math.inf,
        condition_number=cond,
        stderr=float(math.sqrt(max(cov[0, 0] + cov[1, 1], 0.0))),
    )
