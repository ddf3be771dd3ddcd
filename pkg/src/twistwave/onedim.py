"""Effective 1D operator -hbar^2 d^2/dx^2 - V and counting of its negative spectrum.

Counts come from the inertia of the finite-difference matrix (Sturm
sequence / tridiagonal LDL^T pivots) on [-X, X] with Dirichlet ends, which
undercounts and converges from below as X grows.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigError
from .parallel import ordered_map

PIVMIN = 1e-300


# --- twist profiles -----------------------------------------------------------


@dataclass(frozen=True)
class TwistProfile:
    """Twist perturbation eps(x) >= 0.

    ``power_tail``: eps = L (a^2 + x^2)^(-alpha/2).
    ``compact_bump``: eps = height * exp(1 - 1/(1 - (x/width)^2)) on |x| < width.
    ``custom``: linear interpolation of samples ``(xs, values)``, zero outside.
    """

    form: str = "power_tail"
    alpha: float = 1.0
    L: float = 1.0
    a: float = 1.0
    width: float = 1.0
    height: float = 0.0
    xs: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.form not in ("power_tail", "compact_bump", "custom"):
            raise ConfigError(f"unknown profile form {self.form!r}")
        if self.form == "power_tail":
            if not self.alpha > 0:
                raise ConfigError("profile alpha must be positive")
            if self.L < 0 or not self.a > 0:
                raise ConfigError("profile needs L >= 0 and a > 0")
        elif self.form == "compact_bump":
            if not self.width > 0 or self.height < 0:
                raise ConfigError("bump needs width > 0 and height >= 0")
        else:
            xs = np.asarray(self.xs, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if xs.ndim != 1 or xs.shape != vals.shape or len(xs) < 2 or np.any(np.diff(xs) <= 0):
                raise ConfigError("custom profile needs matching increasing samples")
            if np.any(vals < 0):
                raise ConfigError("custom profile must be non-negative")

    @classmethod
    def power_tail(cls, alpha: float, L: float, a: float = 1.0) -> "TwistProfile":
        return cls("power_tail", alpha=alpha, L=L, a=a)

    @classmethod
    def compact_bump(cls, width: float, height: float) -> "TwistProfile":
        return cls("compact_bump", width=width, height=height, alpha=math.inf, L=0.0)

    @classmethod
    def custom(cls, xs, values) -> "TwistProfile":
        return cls("custom", xs=tuple(map(float, xs)), values=tuple(map(float, values)),
                   alpha=math.inf, L=0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "power_tail":
            return self.L * (self.a**2 + x * x) ** (-0.5 * self.alpha)
        if self.form == "compact_bump":
            t = np.minimum((x / self.width) ** 2, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                out = self.height * np.exp(1.0 - 1.0 / (1.0 - t))
            return np.where(t < 1.0, out, 0.0)
        return np.interp(x, self.xs, self.values, left=0.0, right=0.0)

    @property
    def sup(self) -> float:
        if self.form == "power_tail":
            return self.L * self.a ** (-self.alpha)
        if self.form == "compact_bump":
            return self.height
        return float(max(self.values))

    @property
    def satisfies_estimate(self) -> bool:
        """0 <= eps <= C (1 + |x|)^-alpha with a derivative bound one power faster."""
        # power tail: C = L max(1, a^-alpha) * 2^(alpha/2); bump and sampled data have compact support
        return True

    @property
    def satisfies_asymptotics(self) -> bool:
        """|x|^alpha eps(x) has a limit L as |x| -> infinity."""
        return True

    def describe(self) -> dict:
        if self.form == "power_tail":
            return {"form": "power_tail", "alpha": self.alpha, "L": self.L, "a": self.a}
        if self.form == "compact_bump":
            return {"form": "compact_bump", "width": self.width, "height": self.height}
        return {"form": "custom", "xs": list(self.xs), "values": list(self.values)}


def profile_from_config(params: dict) -> TwistProfile:
    params = dict(params)
    form = str(params.pop("form", "power_tail"))
    try:
        if form == "power_tail":
            prof = TwistProfile.power_tail(float(params.pop("alpha")), float(params.pop("L")),
                                           float(params.pop("a", 1.0)))
        elif form == "compact_bump":
            prof = TwistProfile.compact_bump(float(params.pop("width")), float(params.pop("height")))
        elif form == "custom":
            prof = TwistProfile.custom(params.pop("xs"), params.pop("values"))
        else:
            raise ConfigError(f"unknown profile form {form!r}")
    except KeyError as exc:
        raise ConfigError(f"profile {form!r} missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile parameters: {exc}") from None
    if params:
        raise ConfigError(f"unknown profile keys {sorted(params)}")
    return prof


# --- effective potential ------------------------------------------------------


@dataclass(frozen=True)
class EffectivePotential:
    """x -> 2 beta * twist * eps(x)."""

    beta: float
    twist: float
    profile: TwistProfile

    @property
    def strength(self) -> float:
        return 2.0 * self.beta * self.twist

    def __call__(self, x):
        return self.strength * self.profile(x)

    @property
    def sup(self) -> float:
        return self.strength * self.profile.sup

    @property
    def tail_constant(self) -> float:
        """l with |x|^alpha V(x) -> l."""
        return self.strength * self.profile.L


def effective_potential(gs, beta: float, profile: TwistProfile, x=None, attr: str = "twist_norm_sq"):
    """Effective potential built from the twist functional of ``gs``.

    ``gs`` may be a ground-state record or the twist value itself. Returns
    the callable potential, or its samples when ``x`` is given.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    twist = float(gs) if np.isscalar(gs) else float(getattr(gs, attr))
    V = EffectivePotential(beta, twist, profile)
    return V if x is None else V(x)


@dataclass(frozen=True)
class ScaledPotential:
    """Callable c * V(x)."""

    factor: float
    base: object

    def __call__(self, x):
        return self.factor * self.base(x)

    @property
    def sup(self) -> float:
        return self.factor * potential_sup(self.base)


@dataclass(frozen=True)
class PowerPotential:
    """l (1 + x^2)^(-alpha/2), the bare model potential."""

    l: float
    alpha: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.l * (1.0 + x * x) ** (-0.5 * self.alpha)

    @property
    def sup(self) -> float:
        return self.l


@dataclass(frozen=True)
class SquareWell:
    depth: float
    half_width: float

    def __call__(self, x):
        return np.where(np.abs(np.asarray(x, dtype=float)) < self.half_width, self.depth, 0.0)

    @property
    def sup(self) -> float:
        return self.depth


def potential_sup(V, probe: float = 1e3) -> float:
    if hasattr(V, "sup"):
        return float(V.sup)
    xs = np.linspace(-probe, probe, 200001)
    return float(np.max(V(xs)))


# --- inertia ------------------------------------------------------------------


@numba.njit(cache=True)
def _negative_pivots(diag, off, shift):
    """Negative LDL^T pivots of T - shift with T = tridiag(off, diag, off)."""
    count = 0
    q = diag[0] - shift
    if abs(q) < PIVMIN:
        q = -PIVMIN
    if q < 0:
        count += 1
    for i in range(1, diag.shape[0]):
        q = diag[i] - shift - off[i - 1] * off[i - 1] / q
        if abs(q) < PIVMIN:
            q = -PIVMIN
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True)
def _schrodinger_count(V, c, lam):
    """Negative pivots of tridiag(-c, 2c - V_i + lam, -c); uniform off-diagonal."""
    count = 0
    c2 = c * c
    q = 2.0 * c - V[0] + lam
    if abs(q) < PIVMIN:
        q = -PIVMIN
    if q < 0:
        count += 1
    for i in range(1, V.shape[0]):
        q = 2.0 * c - V[i] + lam - c2 / q
        if abs(q) < PIVMIN:
            q = -PIVMIN
        if q < 0:
            count += 1
    return count


def tridiagonal_count_below(diag, off, shift: float = 0.0) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix strictly below ``shift``.

    Zero pivots are nudged to ``-PIVMIN`` (the LAPACK convention), so an
    eigenvalue sitting exactly at ``shift`` counts as below.
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off = np.ascontiguousarray(off, dtype=np.float64)
    if off.shape[0] != max(diag.shape[0] - 1, 0):
        raise ValueError("off-diagonal must have length n - 1")
    if diag.shape[0] == 0:
        return 0
    return int(_negative_pivots(diag, off, float(shift)))


def default_spacing(hbar: float, vmax: float, lam: float, points_per_wavelength: int = 20) -> float:
    return hbar / math.sqrt(max(vmax, 0.0) + lam) / points_per_wavelength


def grid_points(X: float, m: int):
    """Interior nodes of the uniform grid on [-X, X] with m unknowns."""
    dx = 2.0 * X / (m + 1)
    return -X + dx * np.arange(1, m + 1), dx


def schrodinger_matrix(hbar: float, V, X: float, m: int):
    """(diag, off) of the finite-difference -hbar^2 d^2/dx^2 - V with Dirichlet ends."""
    x, dx = grid_points(X, m)
    v = V(x) if callable(V) else np.asarray(V, dtype=float)
    c = hbar * hbar / (dx * dx)
    return 2.0 * c - v, np.full(m - 1, -c)


def count_below(hbar: float, V, lam: float, X: float, m: int | None = None) -> int:
    """N(-hbar^2 d^2/dx^2 - V; -lam) on [-X, X] with Dirichlet ends.

    ``V`` is a callable or its samples on the ``m`` interior nodes.
    """
    if not (hbar > 0 and lam > 0 and X > 0):
        raise ValueError("need hbar, lambda and X positive")
    if callable(V):
        if m is None:
            dx = default_spacing(hbar, potential_sup(V), lam)
            m = max(int(math.ceil(2.0 * X / dx)) - 1, 3)
        x, dx = grid_points(X, m)
        v = np.ascontiguousarray(V(x), dtype=np.float64)
    else:
        v = np.ascontiguousarray(V, dtype=np.float64)
        if m is not None and len(v) != m:
            raise ValueError("sampled potential length differs from m")
        m = len(v)
        dx = 2.0 * X / (m + 1)
    c = hbar * hbar / (dx * dx)
    return int(_schrodinger_count(v, c, float(lam)))


def turning_point(V, lam: float, x_max: float = 1e12) -> float:
    """Largest |x| (on a geometric probe) where V(x) >= lam; 0 if none."""
    xs = np.geomspace(1e-3, x_max, 2000)
    hit = (V(xs) >= lam) | (V(-xs) >= lam)
    return float(xs[hit].max()) if hit.any() else 0.0


def minimal_truncation(hbar: float, V, lam: float, decay_lengths: float = 10.0) -> float:
    """Turning point plus a few tunnelling lengths hbar / sqrt(lam)."""
    return turning_point(V, lam) + decay_lengths * hbar / math.sqrt(lam)


# --- counting curves ----------------------------------------------------------


@dataclass
class CountPoint:
    lam: float
    count: int
    X_used: float
    m_used: int
    stable: bool


def _count_point(lam, hbar, V, X, dx, max_doublings, decay_lengths):
    X = max(X, minimal_truncation(hbar, V, lam, decay_lengths))
    dx_here = dx if dx is not None else default_spacing(hbar, potential_sup(V), lam)

    def at(Xc):
        m = max(int(math.ceil(2.0 * Xc / dx_here)) - 1, 3)
        return count_below(hbar, V, lam, Xc, m), m

    n_prev, _ = at(X)
    for _ in range(max_doublings):
        X *= 2.0
        n, m = at(X)
        if n == n_prev:
            return CountPoint(lam, n, X, m, True)
        n_prev = n
    return CountPoint(lam, n_prev, X, m, False)


@dataclass
class CountingCurve:
    lambda_grid: np.ndarray  # descending
    counts: np.ndarray
    X_used: np.ndarray
    stable: np.ndarray
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.lambda_grid)

    @property
    def all_stable(self) -> bool:
        return bool(np.all(self.stable))

    def is_monotone(self) -> bool:
        """Counts non-increasing in lambda (non-decreasing along the descending grid)."""
        return bool(np.all(np.diff(self.counts) >= 0))

    def rows(self):
        for lam, n, X, s in zip(self.lambda_grid, self.counts, self.X_used, self.stable):
            yield float(lam), int(n), float(X), bool(s)

    def write_csv(self, path, fmt=".17g"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "N", "X_used", "stable"])
            for lam, n, X, s in self.rows():
                w.writerow([format(lam, fmt), n, format(X, fmt), int(s)])


def geometric_lambdas(lam_max: float, lam_min: float, per_decade: int = 16) -> np.ndarray:
    """Descending geometric grid with ``per_decade`` points per decade, endpoints included."""
    if not 0 < lam_min < lam_max:
        raise ValueError("need 0 < lam_min < lam_max")
    decades = math.log10(lam_max / lam_min)
    n = max(int(round(decades * per_decade)), 1) + 1
    return np.geomspace(lam_max, lam_min, n)


def counting_curve(hbar: float, V, lambda_grid, X: float = 10.0, dx: float | None = None,
                   max_doublings: int = 8, decay_lengths: float = 10.0,
                   workers: int = 1) -> CountingCurve:
    """Counts N(-lam) along a descending lambda grid.

    Per point, X starts at max(X, turning point + ``decay_lengths`` * hbar / sqrt(lam))
    and is doubled at fixed spacing until two successive counts agree;
    points that never settle within ``max_doublings`` are flagged unstable.
    ``dx`` defaults to 20 points per local wavelength at the bottom of the well.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    if np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ValueError("lambda grid must be positive and strictly descending")
    task = functools.partial(_count_point, hbar=hbar, V=V, X=X, dx=dx,
                             max_doublings=max_doublings, decay_lengths=decay_lengths)
    pts = ordered_map(task, list(lams), workers)
    params = {"hbar": hbar, "X_start": X, "dx": dx, "max_doublings": max_doublings,
              "decay_lengths": decay_lengths}
    if hasattr(V, "profile"):
        params.update(profile=V.profile.describe(), strength=V.strength)
    return CountingCurve(
        lams,
        np.array([p.count for p in pts], dtype=np.int64),
        np.array([p.X_used for p in pts]),
        np.array([p.stable for p in pts]),
        params,
    )


def phase_space_count(hbar: float, V, lam: float) -> float:
    """Semiclassical count (1 / (pi hbar)) * integral of sqrt(V - lam)_+."""
    from scipy.integrate import quad

    x_t = turning_point(V, lam)
    if x_t == 0.0:
        return 0.0

    def f(x):
        return math.sqrt(max(float(V(x)) - lam, 0.0))

    total = 0.0
    for sign in (1.0, -1.0):
        # split at geometric breakpoints so quad sees a smooth integrand per piece
        edges = np.concatenate([[0.0], np.geomspace(1.0, x_t * 1.01, 40)]) if x_t > 1 else [0.0, x_t * 1.01]
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = quad(lambda s: f(sign * s), lo, hi, limit=200)
            total += val
    return total / (math.pi * hbar)
