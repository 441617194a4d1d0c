"""Randomness of the subtree split: uniform spacings, uniform compositions,
the multinomial coupling between them, and complex powers of spacings."""

from __future__ import annotations

import math

import numpy as np

from maryspace import rng as _rng
from maryspace.errors import DomainError, NegativeBase


def sample_spacings(m: int, seed=None) -> np.ndarray:
    """Gaps between the order statistics of m-1 independent uniforms on (0, 1).

    Returns an array of length m, nonnegative and summing to one.
    """
    return sample_spacings_batch(m, 1, seed)[0]


def sample_spacings_batch(m: int, size: int, seed=None) -> np.ndarray:
    """``size`` independent spacings vectors as a ``(size, m)`` array."""
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    gen = _rng.generator(seed)
    u = np.sort(gen.random((size, m - 1)), axis=1)
    edges = np.concatenate([np.zeros((size, 1)), u, np.ones((size, 1))], axis=1)
    return np.diff(edges, axis=1)


def sample_composition(m: int, n_prime: int, seed=None) -> np.ndarray:
    """Uniform draw from the C(n'+m-1, m-1) compositions of n' into m parts.

    Stars and bars: a uniform (m-1)-subset of the n'+m-1 positions marks
    the bars, and the part sizes are the runs of stars between them.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    if n_prime < 0:
        raise DomainError(f"n' must be nonnegative, got {n_prime}")
    gen = _rng.generator(seed)
    total = n_prime + m - 1
    bars = np.sort(gen.choice(total, size=m - 1, replace=False))
    edges = np.concatenate([[-1], bars, [total]])
    return (np.diff(edges) - 1).astype(np.int64)


def sample_multinomial_given_spacings(n_prime: int, s: np.ndarray, seed=None) -> np.ndarray:
    """Multinomial(n', s) draw: subtree sizes given the spacings."""
    if n_prime < 0:
        raise DomainError(f"n' must be nonnegative, got {n_prime}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-9:
        raise DomainError("s must be a probability vector")
    gen = _rng.generator(seed)
    return gen.multinomial(n_prime, s / s.sum()).astype(np.int64)


def complex_power(s: float, lam: complex) -> complex:
    """``s ** lam`` for a real base s >= 0, with 0 ** lam = 0 when Re lam > 0."""
    if s < 0:
        raise NegativeBase(f"base {s} is negative")
    if s == 0:
        if complex(lam).real > 0:
            return 0j
        raise DomainError(f"0 ** {lam} is undefined for Re(lam) <= 0")
    lam = complex(lam)
    ls = math.log(s)
    mod = math.exp(lam.real * ls)
    return complex(mod * math.cos(lam.imag * ls), mod * math.sin(lam.imag * ls))


def complex_power_array(s: np.ndarray, lam: complex) -> np.ndarray:
    """Elementwise :func:`complex_power` over an array of bases."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise NegativeBase("negative base in array")
    lam = complex(lam)
    zero = s == 0
    if np.any(zero) and lam.real <= 0:
        raise DomainError(f"0 ** {lam} is undefined for Re(lam) <= 0")
    with np.errstate(divide="ignore"):
        ls = np.log(np.where(zero, 1.0, s))
    out = np.exp(lam.real * ls) * np.exp(1j * lam.imag * ls)
    out[zero] = 0
    return out
