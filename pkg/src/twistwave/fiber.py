"""Finite-difference fiber operator on a cross-section grid.

The grid is anchored at the origin (nodes at integer multiples of ``h``);
nodes strictly inside the cross-section are unknowns. Links that leave the
domain use a ghost value extrapolated linearly through the zero boundary
value at the true crossing point, which keeps the 5-point Laplacian
symmetric and second-order on curved boundaries. When the boundary passes
through lattice nodes (aligned rectangles) the ghost value is zero and the
stencils reduce to plain Dirichlet masking.

With ``L`` the Laplacian and ``D`` the centered angular derivative,

    A(beta, p) = L + (beta D + i p)^H (beta D + i p)
               = L + beta^2 D^T D - i beta p (D - D^T) + p^2 I,

Hermitian by construction and real for ``p = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .eigen import DEFAULT_TOL, EigenPairs, lowest_eigenpairs
from .errors import GridTooCoarse
from .geometry import CrossSection

MIN_ACTIVE = 25


# directions in (di, dj) lattice offsets: +x1, -x1, +x2, -x2
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))
THETA_MIN = 1e-2


@dataclass
class Grid2D:
    """Origin-anchored lattice restricted to the interior of a cross-section.

    ``ghost[d]`` holds, per active node, the factor ``g`` such that the value
    at the (inactive) neighbor in direction ``d`` is taken as ``g * u_node``.
    In ``"ghost"`` mode this is the linear extrapolation through the zero
    boundary value, ``g = (theta - 1) / theta`` with ``theta * h`` the
    distance to the boundary along the link; in ``"mask"`` mode ``g = 0``.
    ``weights`` are cut-cell quadrature weights (units of ``h^2``).
    """

    h: float
    index: np.ndarray  # (ni, nj) int array over the lattice window, -1 on inactive nodes
    coords: np.ndarray  # (n, 2)
    ghost: np.ndarray  # (4, n)
    weights: np.ndarray  # (n,)
    boundary: str = "ghost"
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def x1(self):
        return self.coords[:, 0]

    @property
    def x2(self):
        return self.coords[:, 1]

    def neighbors(self, di, dj):
        """Per active node, index of the neighbor at offset (di, dj) or -1."""
        ni, nj = self.index.shape
        pad = np.full((ni + 2, nj + 2), -1, dtype=self.index.dtype)
        pad[1:-1, 1:-1] = self.index
        nb = pad[1 + di : 1 + di + ni, 1 + dj : 1 + dj + nj]
        return nb[self.index >= 0]

    def _pairs(self, di, dj):
        nb = self.neighbors(di, dj)
        ok = nb >= 0
        return np.arange(self.n)[ok], nb[ok]

    def laplacian(self) -> sp.csr_matrix:
        """5-point Dirichlet Laplacian (positive), ghost-corrected diagonal."""
        if "lap" not in self._ops:
            h2 = self.h * self.h
            diag = (4.0 - self.ghost.sum(axis=0)) / h2
            rows, cols, vals = [np.arange(self.n)], [np.arange(self.n)], [diag]
            for di, dj in DIRECTIONS:
                r, c = self._pairs(di, dj)
                rows.append(r)
                cols.append(c)
                vals.append(np.full(len(r), -1.0 / h2))
            L = sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.n, self.n),
            )
            self._ops["lap"] = L.tocsr()
        return self._ops["lap"]

    def centered(self, axis: int) -> sp.csr_matrix:
        """Centered first difference along x1 (axis 0) or x2 (axis 1)."""
        key = f"d{axis}"
        if key not in self._ops:
            half = 0.5 / self.h
            fwd, bwd = 2 * axis, 2 * axis + 1
            r1, c1 = self._pairs(*DIRECTIONS[fwd])
            r2, c2 = self._pairs(*DIRECTIONS[bwd])
            diag = half * (self.ghost[fwd] - self.ghost[bwd])
            D = sp.coo_matrix(
                (np.concatenate([np.full(len(r1), half), np.full(len(r2), -half), diag]),
                 (np.concatenate([r1, r2, np.arange(self.n)]),
                  np.concatenate([c1, c2, np.arange(self.n)]))),
                shape=(self.n, self.n),
            )
            self._ops[key] = D.tocsr()
        return self._ops[key]

    def angular(self) -> sp.csr_matrix:
        """Discrete x1 d/dx2 - x2 d/dx1.

        Off the diagonal it is exactly skew (x1 is constant along x2-lines);
        ghost corrections put a diagonal on boundary-adjacent rows.
        """
        if "dphi" not in self._ops:
            D = sp.diags(self.x1) @ self.centered(1) - sp.diags(self.x2) @ self.centered(0)
            self._ops["dphi"] = sp.csr_matrix(D)
        return self._ops["dphi"]

    def integrate(self, values) -> float:
        """Cut-cell quadrature of nodal values over the cross-section."""
        return float(self.h * self.h * np.sum(self.weights * values))

    def gradient_one_sided(self):
        """Gradient matrices: centered where both neighbors are active, one-sided otherwise.

        Meant for functions that do not vanish on the boundary (e.g. ratios
        of eigenfunctions), where ghost values make no sense.
        """
        if "grad1s" in self._ops:
            return self._ops["grad1s"]
        mats = []
        idx = np.arange(self.n)
        inv_h = 1.0 / self.h
        for axis in (0, 1):
            f_of = self.neighbors(*DIRECTIONS[2 * axis])
            b_of = self.neighbors(*DIRECTIONS[2 * axis + 1])
            both = (f_of >= 0) & (b_of >= 0)
            only_f = (f_of >= 0) & (b_of < 0)
            only_b = (b_of >= 0) & (f_of < 0)
            rows = np.concatenate([idx[both], idx[both], idx[only_f], idx[only_f], idx[only_b], idx[only_b]])
            cols = np.concatenate([f_of[both], b_of[both], f_of[only_f], idx[only_f], idx[only_b], b_of[only_b]])
            vals = np.concatenate([
                np.full(both.sum(), 0.5 * inv_h), np.full(both.sum(), -0.5 * inv_h),
                np.full(only_f.sum(), inv_h), np.full(only_f.sum(), -inv_h),
                np.full(only_b.sum(), inv_h), np.full(only_b.sum(), -inv_h),
            ])
            mats.append(sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr())
        self._ops["grad1s"] = tuple(mats)
        return self._ops["grad1s"]

    def to_image(self, values, fill=np.nan):
        """Scatter nodal values back onto the rectangular lattice window."""
        img = np.full(self.index.shape, fill, dtype=np.result_type(values, float))
        mask = self.index >= 0
        img[mask] = np.asarray(values)[self.index[mask]]
        return img


def _boundary_fraction(cs: CrossSection, start, step, iterations=60):
    """Fraction t in (0, 1] of ``step`` at which the segment leaves the domain."""
    lo = np.zeros(len(start))
    hi = np.ones(len(start))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        pts = start + step * mid[:, None]
        inside = cs.contains(pts[:, 0], pts[:, 1])
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return hi


def _lattice(cs: CrossSection, h: float):
    xmin, xmax, ymin, ymax = cs.bounding_box()
    I, J = np.meshgrid(np.arange(math.ceil(xmin / h), math.floor(xmax / h) + 1),
                       np.arange(math.ceil(ymin / h), math.floor(ymax / h) + 1), indexing="ij")
    X1, X2 = I * h, J * h
    return X1, X2, cs.contains(X1, X2)


def build_grid(cs: CrossSection, h: float, boundary: str = "ghost",
               min_active: int = MIN_ACTIVE) -> Grid2D:
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    if boundary not in ("ghost", "mask"):
        raise ValueError(f"unknown boundary treatment {boundary!r}")
    X1, X2, active = _lattice(cs, h)
    n = int(active.sum())
    if n < max(min_active, 1):
        raise GridTooCoarse(f"only {n} active nodes at h={h} (need {min_active})")
    index = np.full(active.shape, -1, dtype=np.int64)
    index[active] = np.arange(n)  # row-major: x1 outer, x2 inner
    coords = np.column_stack([X1[active], X2[active]])
    ghost = np.zeros((4, n))
    weights = np.ones(n)
    grid = Grid2D(h, index, coords, ghost, weights, boundary)
    if boundary == "ghost":
        for d, (di, dj) in enumerate(DIRECTIONS):
            cut = grid.neighbors(di, dj) < 0
            step = h * np.array([di, dj], dtype=float)
            theta = _boundary_fraction(cs, coords[cut], step)
            theta = np.where(theta > 1.0 - 1e-8, 1.0, np.maximum(theta, THETA_MIN))
            ghost[d, cut] = (theta - 1.0) / theta
            weights[cut] += theta - 0.5
    return grid


def count_active(cs: CrossSection, h: float) -> int:
    """Number of interior nodes without enforcing the minimum."""
    return int(_lattice(cs, h)[2].sum())


@dataclass
class FiberMatrix:
    entries: sp.csr_matrix
    beta: float
    p: float
    grid: Grid2D

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def assemble_fiber(grid: Grid2D, beta: float, p: float) -> FiberMatrix:
    """Matrix of the form ``|grad u|^2 + |(beta D + i p) u|^2`` on the grid."""
    L = grid.laplacian()
    D = grid.angular()
    A = L.astype(np.float64)
    if beta != 0.0:
        A = A + (beta * beta) * (D.T @ D)
    if p != 0.0:
        A = A + (p * p) * sp.identity(grid.n, format="csr")
        if beta != 0.0:
            # cross term of (beta D + i p)^H (beta D + i p); Hermitian by construction
            A = A + (-1j * beta * p) * (D - D.T)
    A = sp.csr_matrix(A)
    A = 0.5 * (A + A.conj().T)  # exact Hermitian symmetry against summation-order noise
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    return FiberMatrix(A, beta, p, grid)


def fiber_eigenpairs(grid: Grid2D, beta: float, p: float, k: int = 1, tol: float = DEFAULT_TOL,
                     method: str = "auto", rng=0) -> EigenPairs:
    """Lowest ``k`` eigenpairs of the fiber matrix; the operator is positive so sigma = 0."""
    fm = assemble_fiber(grid, beta, p)
    return lowest_eigenpairs(fm.entries, k, tol=tol, method=method, sigma=0.0, rng=rng)
