"""The fixed point Y of the map W -> sum_k S_k**lambda2 * W_k.

Here S is the uniform spacings vector of length m and W_1..W_m are
independent copies of W, independent of S.  Because lambda2 is a root of
phi_m we have ``m * E[S_1**lambda2] = 1``, so the map preserves means, and
when sigma = Re(lambda2) > 1/2 it is a d2-contraction with factor rho < 1.

Samples of L(Y) are produced by population dynamics: a pool of N complex
values is pushed through the map, each new value built from fresh spacings
and m members of the old pool picked uniformly with replacement.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from maryspace import rng as _rng
from maryspace.charpoly import find_roots, root_identity_residual
from maryspace.errors import DomainError, NotContractive
from maryspace.special import loggamma
from maryspace.spacings import complex_power_array, sample_spacings_batch

ROOT_TOL = 1e-10
MIN_POOL = 1000


@dataclass(frozen=True)
class FixedPointSpec:
    m: int
    lambda2: complex
    mu: complex
    rho: float

    def __post_init__(self) -> None:
        res = root_identity_residual(self.m, self.lambda2)
        if res > ROOT_TOL:
            raise DomainError(f"lambda2 = {self.lambda2} is not a root of phi_{self.m} (residual {res:.2e})")

    @classmethod
    def for_m(cls, m: int, mu: complex) -> "FixedPointSpec":
        roots = find_roots(m)
        return cls(m=m, lambda2=roots.lambda2, mu=complex(mu), rho=roots.rho)

    @property
    def contractive(self) -> bool:
        return self.rho < 1


@dataclass
class SamplePool:
    spec: FixedPointSpec
    samples: np.ndarray
    generation: int = 0
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.samples)

    def mean(self) -> complex:
        return complex(self.samples.mean())

    def mean_stderr(self) -> float:
        """Naive standard error of the pool mean, sqrt(E|y - ybar|^2 / N)."""
        d = self.samples - self.samples.mean()
        return math.sqrt(float(np.mean(np.abs(d) ** 2)) / len(self.samples))

    def second_moment(self) -> tuple[float, float]:
        """Pool estimate of E|Y|^2 and its naive standard error."""
        a2 = np.abs(self.samples) ** 2
        return float(a2.mean()), float(a2.std(ddof=1) / math.sqrt(len(a2)))


@njit(nogil=True, cache=True)
def _t_kernel(gen, pools, lam_re, lam_im, m, size):
    K, N = pools.shape
    out = np.zeros((K, size), dtype=np.complex128)
    u = np.empty(m - 1)
    for i in range(size):
        for k in range(m - 1):
            u[k] = gen.random()
        u.sort()
        prev = 0.0
        for k in range(m):
            nxt = u[k] if k < m - 1 else 1.0
            s = nxt - prev
            prev = nxt
            idx = gen.integers(0, N)
            if s > 0.0:
                ls = math.log(s)
                mod = math.exp(lam_re * ls)
                w = complex(mod * math.cos(lam_im * ls), mod * math.sin(lam_im * ls))
            else:
                w = 0j
            for p in range(K):
                out[p, i] += w * pools[p, idx]
    return out


def _apply_T(spec: FixedPointSpec, pools: np.ndarray, size: int, seed, threads: int) -> np.ndarray:
    lam = complex(spec.lambda2)
    pools = np.ascontiguousarray(pools, dtype=np.complex128)

    def work(gen, lo, hi):
        return _t_kernel(gen, pools, lam.real, lam.imag, spec.m, hi - lo)

    return np.concatenate(_rng.run_blocks(work, size, seed, threads=threads), axis=1)


def apply_T_population(
    spec: FixedPointSpec,
    pool: SamplePool,
    seed: _rng.SeedLike = None,
    recenter: bool = False,
    threads: int = 1,
) -> SamplePool:
    """One population-dynamics step.  The output pool has the same size.

    With ``recenter`` the new pool is shifted so its mean is exactly
    ``spec.mu``.  The map preserves the mean only in expectation; without
    the shift the pool mean is a martingale whose spread grows like
    sqrt(generations).
    """
    if len(pool) == 0:
        raise DomainError("pool is empty")
    new = _apply_T(spec, pool.samples[None, :], len(pool), seed, threads)[0]
    if recenter:
        new += spec.mu - new.mean()
    return SamplePool(spec, new, pool.generation + 1, pool.seed)


def sample_Y(
    spec: FixedPointSpec,
    N: int,
    generations: int,
    seed: Optional[int] = None,
    recenter: bool = True,
    threads: int = 1,
) -> SamplePool:
    """Approximate N draws from L(Y), starting from the point mass at mu."""
    if not spec.contractive:
        raise NotContractive(f"rho = {spec.rho:.6f} >= 1 for m = {spec.m}")
    if spec.mu == 0:
        warnings.warn("mu = 0: the fixed point is the point mass at 0", stacklevel=2)
    pool = SamplePool(spec, np.full(N, spec.mu, dtype=np.complex128), 0, seed)
    for g in range(generations):
        pool = apply_T_population(spec, pool, _rng.child(seed, g), recenter=recenter, threads=threads)
    return pool


def contraction_trace(
    spec: FixedPointSpec,
    N: int,
    generations: int,
    seed: Optional[int] = None,
    spread: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """L2 distance between two synchronously coupled pools, per generation.

    Pool A starts at the point mass mu, pool B at mu plus centred complex
    Gaussian noise of scale ``spread * |mu|``; both have mean mu exactly.
    Both pools see the same spacings and the same resampling indices, so
    the paired L2 distance bounds their d2 distance from above at every
    generation.  Entry g of the result is that distance after g steps.
    """
    gen = _rng.stream(seed, 1 << 20)
    noise = gen.standard_normal(N) + 1j * gen.standard_normal(N)
    noise -= noise.mean()
    scale = spread * (abs(spec.mu) if spec.mu != 0 else 1.0)
    pools = np.vstack([np.full(N, spec.mu), spec.mu + scale * noise / math.sqrt(2)])
    dist = [float(np.sqrt(np.mean(np.abs(pools[0] - pools[1]) ** 2)))]
    for g in range(generations):
        pools = _apply_T(spec, pools, N, _rng.child(seed, g), threads)
        pools += spec.mu - pools.mean(axis=1, keepdims=True)
        dist.append(float(np.sqrt(np.mean(np.abs(pools[0] - pools[1]) ** 2))))
    return np.array(dist)


def sample_Y_recursive(spec: FixedPointSpec, depth: int, size: int, seed=None) -> np.ndarray:
    """Exact draws of T^depth(point mass at mu) by full expansion (m**depth leaves each)."""
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    gen = _rng.generator(seed)

    def rec(d: int, count: int) -> np.ndarray:
        if d == 0:
            return np.full(count, spec.mu, dtype=np.complex128)
        s = sample_spacings_batch(spec.m, count, gen)
        sub = rec(d - 1, count * spec.m).reshape(count, spec.m)
        return (complex_power_array(s, spec.lambda2) * sub).sum(axis=1)

    return rec(depth, size)


def dirichlet_joint_moment(m: int, exponents: Sequence[complex], method: str = "auto") -> complex:
    """E[S_1**a_1 * ... * S_k**a_k] for uniform spacings S of length m (k <= m).

    Equals Gamma(m) prod Gamma(1 + a_i) / Gamma(m + sum a_i).  With a single
    nonzero exponent this collapses to (m-1)! / prod_{j<m} (a + j), which
    ``method="product"`` evaluates directly; ``method="lgamma"`` always uses
    log-Gamma.
    """
    a = [complex(x) for x in exponents]
    if len(a) > m:
        raise DomainError(f"{len(a)} exponents for only {m} spacings")
    if any(x.real <= -1 for x in a):
        raise DomainError("every exponent needs Re > -1")
    nonzero = [x for x in a if x != 0]
    if method == "auto":
        method = "product" if len(nonzero) <= 1 else "lgamma"
    if method == "product":
        if len(nonzero) > 1:
            raise DomainError("product form needs a single nonzero exponent")
        x = nonzero[0] if nonzero else 0j
        out = 1 + 0j
        for j in range(1, m):
            out *= j / (x + j)
        return out
    if method != "lgamma":
        raise DomainError(f"unknown method {method!r}")
    total = sum(nonzero, 0j)
    lg = loggamma(m) + sum((loggamma(1 + x) for x in nonzero), 0j) - loggamma(m + total)
    return cmath.exp(lg)


def fixed_point_second_moments(spec: FixedPointSpec) -> tuple[float, complex]:
    """E|Y|^2 and E[Y^2] of the fixed point with mean mu.

    Taking E|.|^2 and E(.)^2 of Y = sum_k S_k**lam Y_k with the Y_k
    independent of each other and of S:

        E|Y|^2 = m E[S_1**(2 sigma)] E|Y|^2 + m(m-1) E[S_1**lam S_2**conj(lam)] |mu|^2
        E[Y^2] = m E[S_1**(2 lam)] E[Y^2] + m(m-1) E[S_1**lam S_2**lam] mu^2

    and m E[S_1**(2 sigma)] = rho^2.
    """
    if not spec.contractive:
        raise NotContractive(f"rho = {spec.rho:.6f} >= 1 for m = {spec.m}")
    m, lam, mu = spec.m, complex(spec.lambda2), complex(spec.mu)
    rho2 = m * dirichlet_joint_moment(m, [2 * lam.real]).real
    cross_abs = dirichlet_joint_moment(m, [lam, lam.conjugate()]).real
    abs2 = m * (m - 1) * cross_abs * abs(mu) ** 2 / (1 - rho2)
    k2 = m * dirichlet_joint_moment(m, [2 * lam])
    cross_sq = dirichlet_joint_moment(m, [lam, lam])
    sq = m * (m - 1) * cross_sq * mu**2 / (1 - k2)
    return float(abs2), complex(sq)


def second_moment_after(spec: FixedPointSpec, generations: int) -> float:
    """E|W_g|^2 where W_0 = mu and W_{g+1} = T(W_g), exactly."""
    m, lam = spec.m, complex(spec.lambda2)
    rho2 = m * dirichlet_joint_moment(m, [2 * lam.real]).real
    c = m * (m - 1) * dirichlet_joint_moment(m, [lam, lam.conjugate()]).real * abs(spec.mu) ** 2
    v = abs(spec.mu) ** 2
    for _ in range(generations):
        v = rho2 * v + c
    return v


def rho_from_moment(m: int, sigma: float) -> float:
    """rho recomputed as sqrt(m E[S_1**(2 sigma)]) via log-Gamma."""
    return math.sqrt(m * dirichlet_joint_moment(m, [2 * sigma], method="lgamma").real)


def default_spec(m: int, mu: Optional[complex] = None, fit_n_max: int = 30_000) -> FixedPointSpec:
    """Spec with mu fitted from the exact mean table unless given."""
    if mu is None:
        from maryspace.recurrence import estimate_mu, exact_mean_X

        roots = find_roots(m)
        table = exact_mean_X(m, fit_n_max, sigma=roots.sigma)
        mu = estimate_mu(table, roots.lambda2, (10_000, fit_n_max)).mu_hat
    return FixedPointSpec.for_m(m, mu)


def replicate_pools(
    spec: FixedPointSpec,
    N: int,
    generations: int,
    seed: Optional[int] = None,
    replicates: int = 10,
    recenter: bool = True,
    threads: int = 1,
) -> list[SamplePool]:
    """``replicates`` independent pools of N // replicates samples each.

    Population dynamics correlates the members of one pool across
    generations, so the naive standard error understates the spread of a
    pool statistic.  The spread between independent pools does not.
    """
    size = N // replicates
    return [
        sample_Y(spec, size, generations, _rng.child(seed, 1 << 24, r), recenter=recenter, threads=threads)
        for r in range(replicates)
    ]


def replicate_estimate(values: Sequence[float]) -> tuple[float, float]:
    """Mean of per-replicate estimates and its between-replicate standard error."""
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))
