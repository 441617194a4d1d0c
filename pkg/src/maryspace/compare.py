"""Empirical d2 between V_n and its oscillatory surrogate, and the mean oscillation.

V_n = X_n - (n+1)/(H_m - 1) is the centred space requirement and
V^_n = 2 Re(n**lambda2 * Y) with Y drawn from the fixed-point pool.  Both are
real, so the optimal d2 coupling of two empirical laws of equal size is
the sorted (quantile) pairing.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from maryspace import rng as _rng
from maryspace.charpoly import find_roots
from maryspace.errors import NotContractive, OutOfRange, SizeMismatch
from maryspace.fixpoint import FixedPointSpec, SamplePool, default_spec, sample_Y
from maryspace.mtree import sample_X_many
from maryspace.recurrence import MomentTable, harmonic

DEFAULT_GRID = (1_000, 3_000, 10_000, 30_000, 100_000)
DEFAULT_GENERATIONS = 200


def empirical_w2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """d2 between the empirical laws of two equal-size real samples."""
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    if x.shape != y.shape:
        raise SizeMismatch(f"sample sizes differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise SizeMismatch("need at least 2 samples")
    return float(np.sqrt(np.mean((x - y) ** 2)))


def sample_Vhat(n: int, pool: SamplePool) -> np.ndarray:
    """2 Re(n**lambda2 * y) for every y in the pool."""
    lam = complex(pool.spec.lambda2)
    if n == 1:
        return 2 * pool.samples.real.copy()
    ln = math.log(n)
    amp = 2 * math.exp(lam.real * ln)
    ph = lam.imag * ln
    return amp * (math.cos(ph) * pool.samples.real - math.sin(ph) * pool.samples.imag)


def sample_V(m: int, n: int, N: int, seed: _rng.SeedLike = None, threads: int = 1) -> np.ndarray:
    """N independent draws of X_n - (n+1)/(H_m - 1)."""
    x = sample_X_many(m, n, N, seed, threads=threads)
    return x - (n + 1) / (harmonic(m) - 1)


@dataclass
class ComparisonRow:
    n: int
    d2_hat: float
    d2_over_n_sigma: float
    N: int
    seed: Optional[int]
    null_d2: float
    null_over_n_sigma: float


@dataclass
class ComparisonReport:
    m: int
    sigma: float
    tau: float
    mu: complex
    generations: int
    rows: list[ComparisonRow] = field(default_factory=list)

    def normalized(self) -> np.ndarray:
        return np.array([r.d2_over_n_sigma for r in self.rows])

    def null_normalized(self) -> np.ndarray:
        return np.array([r.null_over_n_sigma for r in self.rows])

    def nonincreasing(self, slack: float = 0.10) -> bool:
        """Each normalized distance is at most (1 + slack) times its predecessor."""
        v = self.normalized()
        return bool(np.all(v[1:] <= (1 + slack) * v[:-1]))

    def null_exceeds(self) -> bool:
        return bool(np.all(self.null_normalized() > self.normalized()))

    def as_records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


def convergence_report(
    m: int,
    n_grid: Sequence[int] = DEFAULT_GRID,
    N: int = 10_000,
    seed: Optional[int] = None,
    generations: int = DEFAULT_GENERATIONS,
    pool: Optional[SamplePool] = None,
    spec: Optional[FixedPointSpec] = None,
    threads: int = 1,
) -> ComparisonReport:
    """d2(V_n, V^_n) and d2(V_n, V^_n)/n**sigma over ``n_grid``.

    The null control replaces V^_n by an independent sample of V_{n//2},
    a law of the wrong scale and phase.
    """
    if pool is None:
        if spec is None:
            spec = default_spec(m)
        if not spec.contractive:
            raise NotContractive(f"rho = {spec.rho:.6f} >= 1 for m = {m}")
        pool = sample_Y(spec, N, generations, _rng.child(seed, 0), threads=threads)
    spec = pool.spec
    if len(pool) != N:
        raise SizeMismatch(f"pool has {len(pool)} samples, need N = {N}")
    lam = complex(spec.lambda2)
    report = ComparisonReport(m, lam.real, lam.imag, spec.mu, pool.generation)
    for i, n in enumerate(sorted(n_grid)):
        v = sample_V(m, n, N, _rng.child(seed, 1, i), threads=threads)
        d2 = empirical_w2(v, sample_Vhat(n, pool))
        null = empirical_w2(v, sample_V(m, n // 2, N, _rng.child(seed, 2, i), threads=threads))
        scale = n**lam.real
        report.rows.append(ComparisonRow(n, d2, d2 / scale, N, seed, null, null / scale))
    return report


def bootstrap_w2_se(xs: np.ndarray, ys: np.ndarray, reps: int = 200, seed=None) -> float:
    """Bootstrap standard error of :func:`empirical_w2`."""
    gen = _rng.generator(seed)
    n = len(xs)
    vals = [empirical_w2(xs[gen.integers(0, n, n)], ys[gen.integers(0, n, n)]) for _ in range(reps)]
    return float(np.std(vals, ddof=1))


@dataclass
class OscillationRow:
    n: int
    exact: float
    model: float
    rel_err: float
    amp_err: float


def oscillation_model(n: np.ndarray, mu_hat: complex, tau: float) -> np.ndarray:
    """2|mu| cos(tau ln n + arg mu): the predicted E[V_n] / n**sigma."""
    return 2 * abs(mu_hat) * np.cos(tau * np.log(n) + np.angle(mu_hat))


def oscillation_report(
    table: MomentTable, mu_hat: complex, lambda2: complex, n_grid: Sequence[int]
) -> list[OscillationRow]:
    """Exact E[V_n]/n**sigma against the fitted oscillation on ``n_grid``.

    ``rel_err`` is relative to the model value, ``amp_err`` relative to the
    amplitude 2|mu_hat|.
    """
    lam = complex(lambda2)
    n = np.asarray(sorted(n_grid), dtype=np.int64)
    if table.fit_range is not None:
        lo, hi = table.fit_range
        if np.any((n >= lo) & (n <= hi)):
            raise OutOfRange("evaluation grid overlaps the fit range")
    if n.max() > table.N or n.min() < 1:
        raise OutOfRange(f"grid outside table of size {table.N}")
    exact = table.mean_V[n] / n.astype(float) ** lam.real
    model = oscillation_model(n.astype(float), mu_hat, lam.imag)
    amp = 2 * abs(mu_hat)
    rows = []
    for k, e, mdl in zip(n, exact, model):
        rel = abs(e - mdl) / abs(mdl) if mdl != 0 else math.inf
        rows.append(OscillationRow(int(k), float(e), float(mdl), float(rel), float(abs(e - mdl) / amp)))
    return rows


def peak_log_positions(table: MomentTable, n_min: int = 100, points: int = 20_000) -> np.ndarray:
    """ln n at the local maxima of E[V_n]/n**sigma, refined by parabolic interpolation.

    The table is resampled on a uniform grid in ln n (integer n, so values
    are exact table entries).
    """
    ln = np.linspace(math.log(n_min), math.log(table.N), points)
    n = np.unique(np.round(np.exp(ln)).astype(np.int64))
    ln = np.log(n.astype(float))
    y = table.mean_V[n] / n.astype(float) ** table.sigma
    peaks = []
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            # quadratic through three neighbours, in ln n
            x0, x1, x2 = ln[i - 1 : i + 2]
            y0, y1, y2 = y[i - 1 : i + 2]
            den = (x0 - x1) * (x0 - x2) * (x1 - x2)
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
            b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / den
            peaks.append(-b / (2 * a) if a < 0 else x1)
    return np.array(peaks)


def peak_spacing(table: MomentTable, n_min: int = 100) -> tuple[np.ndarray, float]:
    """Detected peak spacings in ln n, and the predicted period 2*pi/tau."""
    tau = find_roots(table.m).tau
    return np.diff(peak_log_positions(table, n_min)), 2 * math.pi / tau
