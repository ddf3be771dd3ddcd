"""Full twisted-tube operator on a truncated tube and direct bound-state counting.

Unknowns live on (x3 layer) x (active cross-section node), layer-major.
The quadratic form is

    |grad_t u|^2 + |(theta' D_phi + d_3) u|^2,    theta' = beta - eps(x3),

with the pure d_3^2 part replaced by the compact 3-point second difference
(which dominates the square of the centered difference), so that

    A = I (x) L_t + K_3 (x) I + Theta^2 (x) D^T D + [Theta D_3 (x) D^T + D_3^T Theta (x) D].

For eps = 0 each x3-Fourier fiber equals the 2D fiber matrix at the
discrete momentum plus a non-negative correction, so nothing lies below the
2D band bottom on the same cross-section grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .band import effective_mass, scan_bands
from .eigen import DEFAULT_TOL, lowest_eigenpairs
from .errors import DimensionCap, FactorizationFailure
from .fiber import Grid2D, build_grid
from .geometry import CrossSection
from .groundstate import groundstate_from_grid
from .onedim import TwistProfile, count_below, effective_potential

DIMENSION_CAP = 300_000


@dataclass
class TubeOperator:
    entries: sp.csr_matrix
    grid: Grid2D
    x3: np.ndarray  # interior x3 nodes
    h3: float
    X: float
    beta: float
    profile: TwistProfile | None
    theta_dot: np.ndarray

    @property
    def layers(self) -> int:
        return len(self.x3)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def params(self) -> dict:
        return {"beta": self.beta, "X": self.X, "h_t": self.grid.h, "h_3": self.h3,
                "layers": self.layers, "nodes_2d": self.grid.n, "dimension": self.dimension,
                "profile": self.profile.describe() if self.profile is not None else None}


def _layer_operators(m: int, h3: float):
    K3 = sp.diags([np.full(m - 1, -1.0), np.full(m, 2.0), np.full(m - 1, -1.0)], [-1, 0, 1]) / (h3 * h3)
    D3 = sp.diags([np.full(m - 1, -0.5), np.full(m - 1, 0.5)], [-1, 1]) / h3
    return sp.csr_matrix(K3), sp.csr_matrix(D3)


def assemble_tube(cs: CrossSection, beta: float, profile: TwistProfile | None, X: float,
                  h_t: float, h_3: float, cap: int = DIMENSION_CAP,
                  grid: Grid2D | None = None) -> TubeOperator:
    grid = grid if grid is not None else build_grid(cs, h_t)
    m = int(round(2.0 * X / h_3)) - 1
    if m < 3:
        raise ValueError("x3 grid needs at least three interior nodes")
    h3 = 2.0 * X / (m + 1)
    dim = m * grid.n
    if dim > cap:
        raise DimensionCap(f"tube dimension {dim} exceeds the cap {cap}")
    x3 = -X + h3 * np.arange(1, m + 1)
    eps = profile(x3) if profile is not None else np.zeros(m)
    theta_dot = beta - eps

    Lt = grid.laplacian()
    D = grid.angular()
    DtD = sp.csr_matrix(D.T @ D)
    K3, D3 = _layer_operators(m, h3)
    Th = sp.diags(theta_dot)
    It = sp.identity(grid.n, format="csr")
    I3 = sp.identity(m, format="csr")
    A = sp.kron(I3, Lt) + sp.kron(K3, It)
    if np.any(theta_dot != 0):
        A = A + sp.kron(sp.diags(theta_dot**2), DtD)
        A = A + sp.kron(Th @ D3, D.T) + sp.kron(D3.T @ Th, D)
    A = sp.csr_matrix(A)
    A = sp.csr_matrix(0.5 * (A + A.T))
    A.sum_duplicates()
    A.eliminate_zeros()
    return TubeOperator(A, grid, x3, h3, X, beta, profile, theta_dot)


def lowest_tube_eigenvalues(tube: TubeOperator, k: int = 1, tol: float = DEFAULT_TOL, rng=0):
    """Lowest k eigenvalues; the transverse Laplacian bottom is a valid shift from below."""
    floor = lowest_eigenpairs(tube.grid.laplacian(), 1, tol=tol, method="auto", sigma=0.0).values[0]
    sigma = floor - 1e-6 * max(1.0, abs(floor))
    return lowest_eigenpairs(tube.entries, k, tol=tol, sigma=sigma, rng=rng).values


def _blocks(A: sp.csr_matrix, n: int, m: int):
    A = sp.csr_matrix(A)
    for k in range(m):
        rows = A[k * n:(k + 1) * n]
        diag = rows[:, k * n:(k + 1) * n].toarray()
        upper = rows[:, (k + 1) * n:(k + 2) * n].toarray() if k + 1 < m else None
        yield diag, upper


def block_inertia(A, n: int, m: int, shift: float, rel_pivot: float = 1e-12) -> int:
    """Number of eigenvalues of the block-tridiagonal A strictly below ``shift``.

    Block LDL^T: inertia(A - shift) is the sum of the inertias of the Schur
    complements S_k. Each S_k is Cholesky-factored when positive definite,
    otherwise diagonalized.
    """
    count = 0
    carry = None  # B_{k-1}^T S_{k-1}^{-1} B_{k-1}
    scale = None
    for diag, upper in _blocks(A, n, m):
        S = diag - shift * np.eye(n)
        if carry is not None:
            S -= carry
        S = 0.5 * (S + S.T)
        if scale is None:
            scale = max(np.abs(S).sum(axis=1).max(), 1.0)
        try:
            cf = sla.cho_factor(S, lower=True, check_finite=False)
            solve = lambda B, cf=cf: sla.cho_solve(cf, B, check_finite=False)
        except np.linalg.LinAlgError:
            w, Q = np.linalg.eigh(S)
            if np.min(np.abs(w)) < rel_pivot * scale:
                raise FactorizationFailure(
                    f"near-singular Schur block (|pivot| {np.min(np.abs(w)):.3e}); shift the threshold")
            count += int(np.sum(w < 0))
            solve = lambda B, w=w, Q=Q: Q @ ((Q.T @ B) / w[:, None])
        if upper is not None:
            carry = upper.T @ solve(upper)
    return count


def count_discrete(tube: TubeOperator, E_script: float, lambdas) -> np.ndarray:
    """N(A; E_script - lam) for each lam, by block inertia."""
    return np.array([block_inertia(tube.entries, tube.grid.n, tube.layers, E_script - lam)
                     for lam in lambdas], dtype=np.int64)


@dataclass
class TubeComparison:
    lambdas: np.ndarray
    counts_3d: np.ndarray
    counts_1d: np.ndarray
    E_script: float
    mu: float
    twist: float
    params: dict = field(default_factory=dict)

    def agreement(self, within: int = 1) -> np.ndarray:
        return np.abs(self.counts_3d - self.counts_1d) <= within

    def write_csv(self, path, fmt=".17g"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "N_3d", "N_1d_effective"])
            for lam, a, b in zip(self.lambdas, self.counts_3d, self.counts_1d):
                w.writerow([format(float(lam), fmt), int(a), int(b)])


def effective_counts(tube: TubeOperator, mu: float, twist: float, lambdas) -> np.ndarray:
    """1D effective-model counts on the tube's own x3 grid (same X and spacing)."""
    if tube.profile is None or twist == 0.0:
        return np.zeros(len(lambdas), dtype=np.int64)
    V = effective_potential(twist, tube.beta, tube.profile)
    hbar = float(np.sqrt(mu))
    return np.array([count_below(hbar, V, lam, tube.X, tube.layers) for lam in lambdas], dtype=np.int64)


def validate_tube(cs: CrossSection, beta: float, profile: TwistProfile | None, X: float,
                  h_t: float, h_3: float, lambdas, cap: int = DIMENSION_CAP,
                  p_max: float = 1.0, n_p: int = 11) -> TubeComparison:
    """3D counts below the band bottom next to the matched 1D effective model.

    Band bottom, effective mass and twist functional are all computed on the
    tube's cross-section grid, the twist in its operator-consistent form.
    """
    grid = build_grid(cs, h_t)
    scan = scan_bands(cs, beta, h_t, p_max, n_p, grid=grid)
    gs = groundstate_from_grid(grid, beta)
    mass = effective_mass(cs, beta, h_t, grid=grid)
    tube = assemble_tube(cs, beta, profile, X, h_t, h_3, cap=cap, grid=grid)
    lambdas = np.asarray(lambdas, dtype=float)
    n3 = count_discrete(tube, scan.E_script, lambdas)
    n1 = effective_counts(tube, mass.mu, gs.twist_form, lambdas)
    params = tube.params()
    params.update(argmin_p=scan.argmin_p, twist_norm_sq=gs.twist_norm_sq)
    return TubeComparison(lambdas, n3, n1, scan.E_script, mass.mu, gs.twist_form, params)
