"""Variational time stepping for adiabatic polyconvex thermoelasticity.

The compiled extension exposes the periodic-grid calculus, the
null-Lagrangian algebra, energy models, the variational step, the
time-marching driver, and the diagnostic certificates.
"""

from ._core import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
