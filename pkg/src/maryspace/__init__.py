"""Space requirement of random m-ary search trees.

Simulation of the space requirement, the spectral constants of the
characteristic polynomial, sampling of the complex fixed point of the
associated contraction map, and the empirical comparison between them.
"""

__version__ = "0.1.0"

from maryspace.charpoly import RootSet, contraction_factor, eval_phi, find_roots, lambda2
from maryspace.errors import MarySpaceError

__all__ = [
    "MarySpaceError",
    "RootSet",
    "__version__",
    "contraction_factor",
    "eval_phi",
    "find_roots",
    "lambda2",
]
