"""Spectral toolkit for twisted Dirichlet waveguides.

Fiber band structure, effective mass, the twist functional of the
cross-sectional ground state, the effective 1D counting model and a direct
3D check on truncated tubes.
"""

__version__ = "0.1.0"
