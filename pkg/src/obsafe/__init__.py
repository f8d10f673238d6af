"""Observer-aware safety filters for control-affine systems.

Robust CBF quadratic programs driven by state estimates with certified
error bounds, plus the observers, bound propagation, and closed-loop
simulator needed to exercise them end to end.
"""
from ._jit import NUMBA_ENABLED

__all__ = ["NUMBA_ENABLED"]
__version__ = "0.1.0"
