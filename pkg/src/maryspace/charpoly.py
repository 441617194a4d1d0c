"""Characteristic polynomial phi_m(z) = (z+1)(z+2)...(z+m-1) - m! and its roots.

Everything here works on the product form.  Expanded coefficients grow
like (m-1)! and lose all precision long before the largest m we support,
whereas ``prod(z + j)`` and its logarithmic derivative stay well conditioned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from maryspace.errors import ConvergenceFailure, DomainError, NoSuchRoot, PoleError

M_MAX = 256
RESIDUAL_TOL = 1e-10
# Newton polishing switches to extended precision above this branching factor.
EXTENDED_POLISH_M = 40

_MAX_ITER = 500


def eval_phi(m: int, z: complex) -> complex:
    """Evaluate phi_m at ``z`` in product form."""
    _check_m(m)
    p = 1
    for j in range(1, m):
        p *= z + j
    return complex(p - math.factorial(m))


def root_identity_residual(m: int, lam: complex) -> float:
    """``|m! / prod_{j<m} (lam + j) - 1|``; zero exactly at roots of phi_m.

    The quantity ``m!/prod(lam + j)`` is ``m * E[S_1**lam]`` for a uniform
    spacing S_1, i.e. the factor by which the contraction map rescales means.
    """
    _check_m(m)
    ratio = 1 + 0j
    for j in range(1, m):
        d = lam + j
        if d == 0:
            raise PoleError(f"lam = {lam} is a pole (lam = -{j})")
        ratio *= (j + 1) / d
    return abs(ratio - 1)


def contraction_factor(m: int, sigma: float) -> float:
    """Lipschitz constant of the contraction map in the d2 metric.

    ``sqrt(m! / prod_{j=1}^{m-1} (2*sigma + j))``, evaluated as a product of
    ratios ``(j+1)/(2*sigma+j)`` so that sigma = 1/2 gives exactly 1.
    """
    _check_m(m)
    prod = 1.0
    for j in range(1, m):
        d = 2.0 * sigma + j
        if d <= 0:
            raise DomainError(f"2*sigma + {j} = {d} is not positive")
        prod *= (j + 1) / d
    return math.sqrt(prod)


@dataclass(frozen=True)
class RootSet:
    """The m-1 roots of phi_m, ordered by nonincreasing real part.

    Within a conjugate pair the root with positive imaginary part comes
    first.  ``roots[0]`` is exactly 1.
    """

    m: int
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.roots)

    @property
    def lambda2(self) -> complex:
        if self.m < 3:
            raise NoSuchRoot("phi_2 has the single root 1")
        return self.roots[1]

    @property
    def lambda3(self) -> complex:
        if self.m < 4:
            raise NoSuchRoot(f"phi_{self.m} has fewer than 3 roots")
        return self.roots[2]

    @property
    def lambda4(self) -> complex:
        if self.m < 5:
            raise NoSuchRoot(f"phi_{self.m} has fewer than 4 roots")
        return self.roots[3]

    @property
    def sigma(self) -> float:
        return self.lambda2.real

    @property
    def tau(self) -> float:
        return self.lambda2.imag

    @property
    def rho(self) -> float:
        return contraction_factor(self.m, self.sigma)

    @property
    def max_relative_residual(self) -> float:
        return max(self.residuals)


def find_roots(m: int) -> RootSet:
    """All roots of phi_m, polished and ordered.  Deterministic in ``m``."""
    _check_m(m)
    if m > M_MAX:
        raise DomainError(f"m = {m} exceeds the supported maximum {M_MAX}")
    return _find_roots(m)


def lambda2(m: int) -> complex:
    """Root of phi_m with second-largest real part (and Im >= 0)."""
    if m == 2:
        raise NoSuchRoot("phi_2 has the single root 1")
    return find_roots(m).lambda2


@lru_cache(maxsize=None)
def _find_roots(m: int) -> RootSet:
    if m == 2:
        return RootSet(2, (1 + 0j,), (0.0,))
    z = _aberth(m)
    if m > EXTENDED_POLISH_M:
        z = np.array([_polish_mp(m, zi) for zi in z])
    else:
        for _ in range(2):
            z = z - _newton_step(m, z)
    z = _pair_conjugates(m, z)
    roots = [1 + 0j] + sorted((complex(r) for r in z), key=lambda r: (-r.real, -r.imag))
    residuals = [relative_residual(m, r) for r in roots]
    worst = max(residuals)
    if not worst <= RESIDUAL_TOL:
        raise ConvergenceFailure(f"phi_{m}: relative residual {worst:.3e} exceeds {RESIDUAL_TOL:g}")
    return RootSet(m, tuple(roots), tuple(residuals))


def relative_residual(m: int, z: complex) -> float:
    """``|phi_m(z)| / m!`` computed as ``|exp(log prod(z+j) - log m!) - 1|``."""
    d = complex(sum(cmath.log(z + j) for j in range(1, m))) - math.lgamma(m + 1)
    a = d.real
    b = math.remainder(d.imag, 2 * math.pi)
    # exp(a + ib) - 1 without cancellation near the roots
    re = math.expm1(a) * math.cos(b) - 2.0 * math.sin(b / 2) ** 2
    im = math.exp(a) * math.sin(b)
    return math.hypot(re, im)


def _check_m(m: int) -> None:
    if int(m) != m or m < 2:
        raise DomainError(f"branching factor must be an integer >= 2, got {m!r}")


def _newton_step(m: int, z: np.ndarray) -> np.ndarray:
    """phi/phi' for each entry of ``z``, from log P and the log-derivative of P."""
    zj = z[:, None] + np.arange(1, m)[None, :]
    logp = np.log(zj).sum(axis=1)
    w = (1.0 / zj).sum(axis=1)
    expo = math.lgamma(m + 1) - logp
    expo = np.minimum(expo.real, 700.0) + 1j * expo.imag
    q = np.exp(expo)  # m!/P(z)
    return (1.0 - q) / w


def _aberth(m: int) -> np.ndarray:
    k = m - 2
    ang = 2 * np.pi * (np.arange(k) + 0.25) / k + 0.4
    z = -m / 2 + m * np.exp(1j * ang)
    z = np.where(np.isin(np.round(z.real, 12) + 1j * np.round(z.imag, 12), -np.arange(1, m)), z + 0.1j, z)
    for _ in range(_MAX_ITER):
        newton = _newton_step(m, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        rep = (1.0 / diff).sum(axis=1) + 1.0 / (z - 1.0)
        delta = newton / (1.0 - newton * rep)
        z = z - delta
        if np.all(np.abs(delta) <= 4e-16 * np.maximum(1.0, np.abs(z))):
            break
    if not np.all(np.isfinite(z)):
        raise ConvergenceFailure(f"phi_{m}: simultaneous iteration diverged")
    return z


def _polish_mp(m: int, z: complex) -> complex:
    fact = mpmath.mpf(math.factorial(m))
    with mpmath.workdps(40):
        x = mpmath.mpc(z)
        for _ in range(3):
            p = mpmath.mpf(1)
            w = mpmath.mpf(0)
            for j in range(1, m):
                p *= x + j
                w += 1 / (x + j)
            x -= (p - fact) / (p * w)
        return complex(x)


def _pair_conjugates(m: int, z: np.ndarray) -> list[complex]:
    """Snap near-real roots onto the axis and make pairs exact conjugates."""
    scale = np.maximum(1.0, np.abs(z))
    real_mask = np.abs(z.imag) <= 1e-9 * scale
    out = [complex(r.real, 0.0) for r in z[real_mask]]
    upper = sorted(z[~real_mask & (z.imag > 0)], key=lambda r: (r.real, r.imag))
    lower = list(z[~real_mask & (z.imag < 0)])
    if len(upper) != len(lower):
        raise ConvergenceFailure(f"phi_{m}: non-real roots do not pair into conjugates")
    for u in upper:
        i = int(np.argmin([abs(u - np.conj(v)) for v in lower]))
        v = lower.pop(i)
        if abs(u - np.conj(v)) > 1e-8 * max(1.0, abs(u)):
            raise ConvergenceFailure(f"phi_{m}: root {u} has no conjugate partner")
        c = (u + np.conj(v)) / 2
        out.extend([complex(c), complex(c).conjugate()])
    return out
