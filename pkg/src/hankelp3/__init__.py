"""High-precision Hankel determinants, orthogonal-polynomial recurrence
data, and the associated Painleve III transcendent for the singularly
perturbed Laguerre weight x^alpha exp(-x - t/x) on (0, oo).
"""

__version__ = "0.1.0"

from .numkernel import PrecisionCtx
from .weightmoments import WeightParams

__all__ = ["PrecisionCtx", "WeightParams", "__version__"]
