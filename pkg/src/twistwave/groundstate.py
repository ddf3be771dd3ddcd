"""Cross-sectional ground state at zero momentum and the twist functional.

The twist functional is ``||d_phi psi_1(.;0)||^2``. It vanishes exactly for
disks centered at the origin and is positive for every other admissible
cross-section, which is what :func:`disk_criterion` tests numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import DEFAULT_TOL
from .errors import NonPositiveGroundState, NotConverged
from .fiber import Grid2D, build_grid, fiber_eigenpairs
from .geometry import CrossSection

# ghost-point nodes within ~1e-2 h of the boundary can dip slightly below zero
SIGN_TOL = 5e-3


@dataclass
class GroundStateData:
    E1_at_zero: float
    psi1: np.ndarray  # nodal values, h^2 * sum(psi1^2) == 1
    twist_norm_sq: float  # cut-cell quadrature of |D psi1|^2
    twist_form: float  # h^2 * |D psi1|^2, the value the discrete operator sees
    beta: float
    h: float
    grid: Grid2D

    def record(self, domain: dict | None = None) -> dict:
        return {
            "domain": domain,
            "beta": self.beta,
            "h": self.h,
            "E1_0": self.E1_at_zero,
            "twist_norm_sq": self.twist_norm_sq,
            "twist_form": self.twist_form,
        }


def groundstate_from_grid(grid: Grid2D, beta: float, tol: float = DEFAULT_TOL,
                          rng=0) -> GroundStateData:
    pairs = fiber_eigenpairs(grid, beta, 0.0, k=1, tol=tol, rng=rng)
    h = grid.h
    psi = np.real(pairs.vectors[:, 0]) / h
    if psi.sum() < 0:
        psi = -psi
    if psi.min() < -SIGN_TOL * psi.max():
        raise NonPositiveGroundState(f"ground state changes sign (min {psi.min():.3e})")
    psi /= np.sqrt(h * h * np.sum(psi * psi))
    dpsi = grid.angular() @ psi
    return GroundStateData(
        E1_at_zero=float(pairs.values[0]),
        psi1=psi,
        twist_norm_sq=grid.integrate(dpsi * dpsi),
        twist_form=float(h * h * np.sum(dpsi * dpsi)),
        beta=beta,
        h=h,
        grid=grid,
    )


def compute_groundstate(cs: CrossSection, beta: float, h: float, tol: float = DEFAULT_TOL,
                        boundary: str = "ghost", rng=0) -> GroundStateData:
    return groundstate_from_grid(build_grid(cs, h, boundary=boundary), beta, tol=tol, rng=rng)


@dataclass
class DiskVerdict:
    is_disk: bool
    margin: float
    twist_norm_sq: float
    tol: float
    change: float | None  # |difference| to the coarser resolution, if supplied

    def record(self) -> dict:
        return {"is_disk": self.is_disk, "margin": self.margin, "twist_norm_sq": self.twist_norm_sq,
                "tol": self.tol, "refinement_change": self.change}


def disk_criterion(gs: GroundStateData, tol: float = 1e-4, coarse: GroundStateData | None = None,
                   margin_fraction: float = 0.5) -> DiskVerdict:
    """Decide whether the cross-section behaves as a centered disk.

    ``coarse`` is the same problem at a coarser spacing. The refinement
    change must stay below ``tol / 10``, or below ``margin_fraction`` of the
    distance to the threshold (so it cannot flip the decision); otherwise
    :class:`NotConverged` is raised.
    """
    value = gs.twist_norm_sq
    change = None
    if coarse is not None:
        change = abs(value - coarse.twist_norm_sq)
        allowed = max(tol / 10, margin_fraction * abs(value - tol))
        if change > allowed:
            raise NotConverged(
                f"twist functional moved by {change:.3e} under refinement (allowed {allowed:.3e})")
    return DiskVerdict(value < tol, value - tol, value, tol, change)


def refined_groundstates(cs: CrossSection, beta: float, h: float, levels: int = 2,
                         tol: float = DEFAULT_TOL, boundary: str = "ghost") -> list[GroundStateData]:
    """Ground states at spacings h, h/2, ..., coarsest first."""
    return [compute_groundstate(cs, beta, h / 2**k, tol=tol, boundary=boundary) for k in range(levels)]
