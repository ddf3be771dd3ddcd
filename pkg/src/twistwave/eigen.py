"""Lowest eigenpairs of sparse Hermitian matrices.

Two routes:

* dense: LAPACK Hermitian diagonalization, used when ``n <= DENSE_MAX``;
* lanczos: Lanczos with full reorthogonalization on ``(A - sigma)^-1``,
  followed by Rayleigh-Ritz with ``A`` on the Krylov basis. Converged pairs
  are locked and the iteration restarts in their orthogonal complement,
  which is what lets it pick up degenerate eigenvalues.

Convergence is measured by the true residual ``||A v - lam v||_2`` against
``tol * ||A||_inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence

DENSE_MAX = 2000
DEFAULT_TOL = 1e-10


@dataclass
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray  # columns, orthonormal in the Euclidean inner product
    residuals: np.ndarray
    method: str = "dense"

    def __len__(self):
        return len(self.values)


def _fix_phase(vectors):
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phase = pivots / np.abs(pivots)
    out = vectors / phase
    if np.isrealobj(vectors):
        return out.real
    return out


def _inf_norm(A):
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max())
    return float(np.abs(A).sum(axis=1).max())


def _residuals(A, values, vectors):
    R = A @ vectors - vectors * values
    return np.linalg.norm(R, axis=0)


def gershgorin_lower(A) -> float:
    """Lower bound on the spectrum of a Hermitian matrix."""
    A = sp.csr_matrix(A)
    diag = A.diagonal().real
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off))


def dense_eigenpairs(A, k: int) -> EigenPairs:
    M = A.toarray() if sp.issparse(A) else np.asarray(A)
    vals, vecs = sla.eigh(M, subset_by_index=[0, k - 1])
    vecs = _fix_phase(vecs)
    return EigenPairs(vals, vecs, _residuals(M, vals, vecs), "dense")


def _orthogonalize(w, bases):
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        for B in bases:
            if B.shape[1]:
                w = w - B @ (B.conj().T @ w)
    return w


def lanczos_eigenpairs(A, k: int, tol: float = DEFAULT_TOL, sigma: float | None = None,
                       max_restarts: int | None = None, krylov_dim: int | None = None,
                       rng=None) -> EigenPairs:
    """k smallest eigenpairs via shift-invert Lanczos with locking.

    ``sigma`` must lie below the spectrum; by default the Gershgorin lower
    bound is used (safe but possibly slow).
    """
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    if sigma is None:
        sigma = gershgorin_lower(A) - 1e-3 * max(1.0, abs(gershgorin_lower(A)))
    if max_restarts is None:
        max_restarts = 50 * k
    rng = np.random.default_rng(rng)
    dtype = np.complex128 if np.iscomplexobj(A.data) else np.float64
    shifted = (A - sigma * sp.identity(n, dtype=dtype, format="csc")).tocsc()
    lu = spla.splu(shifted)
    anorm = _inf_norm(A)
    threshold = tol * max(anorm, 1.0)
    m_base = krylov_dim or max(2 * k + 20, 40)

    locked_vals: list[float] = []
    locked_vecs = np.zeros((n, 0), dtype=dtype)
    start = None
    restarts = 0
    while True:
        m = min(m_base, n - locked_vecs.shape[1])
        Q = np.zeros((n, m), dtype=dtype)
        q = start if start is not None else rng.standard_normal(n).astype(dtype)
        if dtype == np.complex128 and start is None:
            q = q + 1j * rng.standard_normal(n)
        q = _orthogonalize(q, [locked_vecs])
        Q[:, 0] = q / np.linalg.norm(q)
        used = m
        for j in range(m - 1):
            w = lu.solve(Q[:, j])
            scale = np.linalg.norm(w)
            w = _orthogonalize(w, [locked_vecs, Q[:, : j + 1]])
            nrm = np.linalg.norm(w)
            if nrm <= 1e-12 * scale:
                used = j + 1  # invariant subspace reached
                break
            Q[:, j + 1] = w / nrm
        Q = Q[:, :used]

        # Rayleigh-Ritz with A itself on the Krylov basis
        AQ = A @ Q
        H = Q.conj().T @ AQ
        H = 0.5 * (H + H.conj().T)
        theta, S = sla.eigh(H)
        Y = Q @ S
        res = np.linalg.norm(AQ @ S - Y * theta, axis=0)

        kth = sorted(locked_vals)[k - 1] if len(locked_vals) >= k else np.inf
        newly = 0
        for i in range(len(theta)):
            if res[i] > threshold or theta[i] >= kth + threshold:
                break
            locked_vals.append(float(theta[i]))
            locked_vecs = np.column_stack([locked_vecs, Y[:, i]])
            newly += 1
        # done once the lowest pair of the complement is converged and lies
        # above the k-th locked value (otherwise it would have been locked)
        if len(locked_vals) >= k and newly == 0 and res[0] <= threshold:
            break
        if locked_vecs.shape[1] >= n - 1:
            break
        if newly == 0:
            restarts += 1
            if restarts > max_restarts:
                raise NoConvergence(restarts)
            start = Y[:, 0].copy()
        else:
            start = None

    order = np.argsort(locked_vals, kind="stable")[:k]
    vals = np.asarray(locked_vals)[order]
    vecs = locked_vecs[:, order]
    # final Rayleigh-Ritz on the locked block tidies up near-degenerate pairs
    Hs = vecs.conj().T @ (A @ vecs)
    Hs = 0.5 * (Hs + Hs.conj().T)
    vals, S = sla.eigh(Hs)
    vecs = _fix_phase(vecs @ S)
    return EigenPairs(vals, vecs, _residuals(A, vals, vecs), "lanczos")


def lowest_eigenpairs(A, k: int, tol: float = DEFAULT_TOL, method: str = "auto",
                      sigma: float | None = None, rng=None) -> EigenPairs:
    n = A.shape[0]
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "lanczos"
    if method == "dense":
        pairs = dense_eigenpairs(A, k)
    elif method == "lanczos":
        pairs = lanczos_eigenpairs(A, k, tol=tol, sigma=sigma, rng=rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    limit = tol * max(_inf_norm(A), 1.0)
    if np.any(pairs.residuals > limit):
        raise NoConvergence(0, f"{method} residuals {pairs.residuals.max():.3e} exceed {limit:.3e}")
    return pairs
