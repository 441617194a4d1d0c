"""Complex log-Gamma by a Lanczos approximation (g = 607/128, 15 terms)."""

from __future__ import annotations

import cmath
import math

_G = 607 / 128
_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def loggamma(z: complex) -> complex:
    """log Gamma(z) for complex z off the poles.

    The imaginary part is continuous in z for Re z >= 1/2; to the left of
    that the reflection formula is used and only exp(loggamma(z)) is
    meaningful.  Relative accuracy is about 1e-15 on Gamma itself.
    """
    z = complex(z)
    if z.real < 0.5:
        if z.imag == 0 and z.real == math.floor(z.real):
            raise ValueError(f"Gamma has a pole at {z.real:g}")
        return complex(math.log(math.pi)) - cmath.log(cmath.sin(math.pi * z)) - loggamma(1 - z)
    z -= 1
    x = _COEF[0]
    for i in range(1, len(_COEF)):
        x += _COEF[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)
