"""Band functions E_j(p) of the fiber operator and the effective mass at p = 0."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .eigen import DEFAULT_TOL
from .errors import BoundViolation, NonPositiveCurvature, QuotientViolation
from .fiber import Grid2D, assemble_fiber, build_grid, fiber_eigenpairs
from .geometry import CrossSection, epsilon_omega
from .parallel import ordered_map


@dataclass
class BandScan:
    p_grid: np.ndarray
    bands: np.ndarray  # (n_p, J), column j-1 holds E_j
    E_script: float
    argmin_p: float
    beta: float
    h: float
    simple_radius: float | None = None  # largest |p| with E_2 - E_1 above the gap threshold

    @property
    def E1(self):
        return self.bands[:, 0]

    def E1_at(self, p: float) -> float:
        i = int(np.argmin(np.abs(self.p_grid - p)))
        if abs(self.p_grid[i] - p) > 1e-12 * max(1.0, abs(p)):
            raise KeyError(f"p = {p} not on the scan grid")
        return float(self.bands[i, 0])

    def evenness_error(self) -> float:
        return float(np.max(np.abs(self.E1 - self.E1[::-1])))


def _band_task(p, grid, beta, J, tol):
    return np.sort(fiber_eigenpairs(grid, beta, p, k=J, tol=tol).values)


def band_values(grid: Grid2D, beta: float, momenta, J: int = 1, tol: float = DEFAULT_TOL,
                workers: int = 1) -> np.ndarray:
    """Lowest J eigenvalues at each momentum, shape (len(momenta), J)."""
    task = functools.partial(_band_task, grid=grid, beta=beta, J=J, tol=tol)
    return np.array(ordered_map(task, [float(p) for p in momenta], workers))


def _simple_radius(p_grid, bands, threshold):
    if bands.shape[1] < 2:
        return None
    gap_ok = (bands[:, 1] - bands[:, 0]) > threshold
    i0 = int(np.argmin(np.abs(p_grid)))
    if not gap_ok[i0]:
        return 0.0
    lo = hi = i0
    while lo > 0 and gap_ok[lo - 1]:
        lo -= 1
    while hi < len(p_grid) - 1 and gap_ok[hi + 1]:
        hi += 1
    return float(min(-p_grid[lo], p_grid[hi]))


def scan_bands(cs: CrossSection, beta: float, h: float, p_max: float, n_p: int, J: int = 1,
               tol: float = DEFAULT_TOL, workers: int = 1, grid: Grid2D | None = None,
               gap_threshold: float = 1e-3) -> BandScan:
    if n_p % 2 != 1 or n_p < 3:
        raise ValueError("n_p must be odd (and >= 3) so that p = 0 is sampled")
    if not p_max > 0:
        raise ValueError("p_max must be positive")
    grid = grid if grid is not None else build_grid(cs, h)
    p_grid = np.linspace(-p_max, p_max, n_p)
    p_grid[n_p // 2] = 0.0
    bands = band_values(grid, beta, p_grid, J=J, tol=tol, workers=workers)
    i = int(np.argmin(bands[:, 0]))
    return BandScan(p_grid, bands, float(bands[i, 0]), float(p_grid[i]), beta, grid.h,
                    _simple_radius(p_grid, bands, gap_threshold))


def band_tolerance(cs: CrossSection, beta: float, h: float, tol: float = DEFAULT_TOL,
                   safety: float = 3.0, order: int = 2) -> float:
    """Discretization tolerance for band comparisons at spacing h.

    ``safety`` times the Richardson estimate of the error in E_1(0) at h,
    taken from the pair (h, h/2) assuming the given convergence order.
    """
    e_h = fiber_eigenpairs(build_grid(cs, h), beta, 0.0, tol=tol).values[0]
    e_h2 = fiber_eigenpairs(build_grid(cs, h / 2), beta, 0.0, tol=tol).values[0]
    r = 2.0**order
    return float(safety * abs(e_h - e_h2) * r / (r - 1.0))


@dataclass
class EffectiveMass:
    mu: float
    stencil_h: float
    lower_bound_ok: bool | None = None
    upper_bound_ok: bool | None = None
    mu_coarse: float = float("nan")  # plain second difference at dp
    mu_fine: float = float("nan")  # plain second difference at dp/2
    beta: float = 0.0
    h: float = 0.0

    @property
    def richardson_error(self) -> float:
        return abs(self.mu - self.mu_fine)

    def record(self) -> dict:
        ok = None
        if self.lower_bound_ok is not None:
            ok = bool(self.lower_bound_ok and self.upper_bound_ok)
        return {"beta": self.beta, "mu": self.mu, "stencil_h": self.stencil_h, "bounds_ok": ok}


def _second_difference(e_plus, e_zero, e_minus, dp):
    return (e_plus - 2.0 * e_zero + e_minus) / (2.0 * dp * dp)


def effective_mass(cs: CrossSection, beta: float, h: float, dp: float = 0.05,
                   tol: float = DEFAULT_TOL, scan: BandScan | None = None,
                   tol_band: float = 0.0, grid: Grid2D | None = None,
                   workers: int = 1) -> EffectiveMass:
    """mu = E_1''(0) / 2 from centered second differences at dp and dp/2, Richardson-combined.

    With ``scan`` given, the two-sided mass bounds are also evaluated on
    every scanned momentum.
    """
    grid = grid if grid is not None else build_grid(cs, h)
    momenta = [-dp, -dp / 2, 0.0, dp / 2, dp]
    e = band_values(grid, beta, momenta, J=1, tol=tol, workers=workers)[:, 0]
    mu_coarse = _second_difference(e[4], e[2], e[0], dp)
    mu_fine = _second_difference(e[3], e[2], e[1], dp / 2)
    mu = (4.0 * mu_fine - mu_coarse) / 3.0
    if not mu > 0:
        raise NonPositiveCurvature(f"effective mass estimate {mu:.6e} is not positive")
    out = EffectiveMass(mu, dp, mu_coarse=mu_coarse, mu_fine=mu_fine, beta=beta, h=grid.h)
    if scan is not None:
        report = mass_bound_margins(scan, cs, beta, tol_band)
        out.lower_bound_ok = bool(np.all(report.lower >= 0))
        out.upper_bound_ok = bool(np.all(report.upper >= 0))
    return out


@dataclass
class BoundReport:
    p_grid: np.ndarray
    lower: np.ndarray  # E_1(p) - [E_1(0) + (1 - eps) p^2 - tol_band]
    upper: np.ndarray  # [E_1(0) + p^2 + tol_band] - E_1(p)
    eps: float
    tol_band: float

    @property
    def violations(self):
        bad = (self.lower < 0) | (self.upper < 0)
        return self.p_grid[bad]

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


def mass_bound_margins(scan: BandScan, cs: CrossSection, beta: float, tol_band: float) -> BoundReport:
    eps = epsilon_omega(cs, beta)
    p2 = scan.p_grid**2
    e0 = scan.E1_at(0.0)
    lower = scan.E1 - (e0 + (1.0 - eps) * p2 - tol_band)
    upper = (e0 + p2 + tol_band) - scan.E1
    return BoundReport(scan.p_grid, lower, upper, eps, tol_band)


def check_mass_bounds(scan: BandScan, cs: CrossSection, beta: float, tol_band: float) -> BoundReport:
    report = mass_bound_margins(scan, cs, beta, tol_band)
    if not report.ok:
        raise BoundViolation(report.violations)
    return report


# --- ground-state transform -------------------------------------------------


@dataclass
class QuotientResult:
    name: str
    R_quad: float  # quadrature of psi^2 (|grad u|^2 + |i beta d_phi u - p u|^2) / psi^2 |u|^2
    R_disc: float  # exact discrete quotient (psi u)^H (A(p) - E_1(0)) (psi u) / |psi u|^2
    gap: float  # E_1(p) - E_1(0)


@dataclass
class TransformReport:
    beta: float
    p: float
    gap: float
    results: list[QuotientResult] = field(default_factory=list)
    tol: float = 0.0

    @property
    def ratio_gap(self) -> float | None:
        """R_quad - gap for the eigenfunction-ratio trial (tends to 0 under refinement)."""
        for r in self.results:
            if r.name == "ratio":
                return r.R_quad - r.gap
        return None


def weighted_quotient(grid: Grid2D, psi0, u, beta: float, p: float) -> float:
    """Quadrature of the weighted quotient with one-sided gradients at the boundary layer."""
    g1, g2 = grid.gradient_one_sided()
    d1, d2 = g1 @ u, g2 @ u
    dphi = grid.x1 * d2 - grid.x2 * d1
    twist = 1j * beta * dphi - p * u
    w = grid.weights * psi0**2
    num = np.sum(w * (np.abs(d1) ** 2 + np.abs(d2) ** 2 + np.abs(twist) ** 2))
    den = np.sum(w * np.abs(u) ** 2)
    return float(num / den)


def discrete_quotient(A, psi0, u, e0: float) -> float:
    v = psi0 * u
    return float(np.real(np.vdot(v, A @ v)) / np.real(np.vdot(v, v)) - e0)


def smooth_bumps(cs: CrossSection, grid: Grid2D, count: int, rng=None, margin: float = 0.1):
    """Random complex bumps (1 - r^2/R^2)^3 e^{i k.x} with support well inside the domain."""
    rng = np.random.default_rng(rng)
    xmin, xmax, ymin, ymax = cs.bounding_box()
    size = min(xmax - xmin, ymax - ymin)
    angles = np.linspace(0.0, 2 * np.pi, 97)
    rings = np.linspace(0.2, 1.0 + margin, 6)
    bumps = []
    tries = 0
    while len(bumps) < count:
        tries += 1
        if tries > 1000 * count:
            raise RuntimeError("could not place bump trials inside the domain")
        c = grid.coords[rng.integers(grid.n)]
        radius = size * rng.uniform(0.15, 0.4)
        px = c[0] + radius * np.outer(rings, np.cos(angles))
        py = c[1] + radius * np.outer(rings, np.sin(angles))
        if not np.all(cs.contains(px, py)):
            continue
        r2 = ((grid.x1 - c[0]) ** 2 + (grid.x2 - c[1]) ** 2) / radius**2
        k = rng.normal(scale=2.0 / radius, size=2)
        u = np.where(r2 < 1.0, (1.0 - r2) ** 3, 0.0) * np.exp(1j * (k[0] * grid.x1 + k[1] * grid.x2))
        if np.count_nonzero(u) >= 9:
            bumps.append(u)
    return bumps


def groundstate_transform_check(cs: CrossSection, beta: float, p: float, h: float,
                                n_random: int = 20, tol: float = 1e-8, quad_tol: float | None = None,
                                rng=0, grid: Grid2D | None = None,
                                solver_tol: float = DEFAULT_TOL) -> TransformReport:
    """Test E_1(p) - E_1(0) <= R[u] on the constant, random bumps and the ratio psi(p)/psi(0).

    The exact discrete quotient must satisfy the bound within ``tol``
    (relative to max(1, E_1(0))). The quadrature quotient is additionally
    checked against ``quad_tol`` when given.
    """
    grid = grid if grid is not None else build_grid(cs, h)
    pair0 = fiber_eigenpairs(grid, beta, 0.0, tol=solver_tol)
    pairp = fiber_eigenpairs(grid, beta, p, tol=solver_tol)
    e0, ep = float(pair0.values[0]), float(pairp.values[0])
    psi0 = np.real(pair0.vectors[:, 0])
    psi0 = psi0 if psi0.sum() > 0 else -psi0
    gap = ep - e0
    A = assemble_fiber(grid, beta, p).entries

    trials = [("constant", np.ones(grid.n, dtype=complex))]
    trials += [(f"bump{i}", u) for i, u in enumerate(smooth_bumps(cs, grid, n_random, rng=rng))]
    if np.all(psi0 > 0):
        trials.append(("ratio", pairp.vectors[:, 0] / psi0))

    report = TransformReport(beta, p, gap, tol=tol)
    scale = max(1.0, abs(e0))
    bad = []
    for name, u in trials:
        res = QuotientResult(name, weighted_quotient(grid, psi0, u, beta, p),
                             discrete_quotient(A, psi0, u, e0), gap)
        report.results.append(res)
        if gap > res.R_disc + tol * scale:
            bad.append(name)
        elif quad_tol is not None and gap > res.R_quad + quad_tol:
            bad.append(name)
    if bad:
        raise QuotientViolation(f"trials {bad} beat E_1(p) - E_1(0) = {gap:.6e}")
    return report
