"""Closed-form counting asymptotics, curve fitting and pass/fail verdicts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, InsufficientData, RegimeMismatch

POWER_LAW = "power_law"
LOG_LAW = "log_law"
BOUNDED = "bounded"
REGIMES = (POWER_LAW, LOG_LAW, BOUNDED)

GAMMA_MAX = 171.0  # math.gamma overflows beyond this


def beta_function(x: float, y: float) -> float:
    """Euler Beta B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)."""
    x, y = float(x), float(y)
    if not (x > 0 and y > 0) or math.isinf(x) or math.isinf(y):
        raise DomainError(f"Beta function needs positive finite arguments, got ({x}, {y})")
    if x + y < GAMMA_MAX:
        return math.gamma(x) * math.gamma(y) / math.gamma(x + y)
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


@dataclass
class AsymptoticPrediction:
    regime: str
    coefficient: float | None
    exponent: float | None  # expected d log N / d log lambda for the power law
    l: float  # tail constant of the effective potential, 2 beta L twist
    hbar: float
    inputs: dict = field(default_factory=dict)

    def record(self) -> dict:
        return asdict(self)


def predict(alpha: float, L: float, beta: float, mu: float, twist_norm_sq: float) -> AsymptoticPrediction:
    """Limit coefficient of the bound-state count of the effective model.

    alpha < 2: lambda^(1/alpha - 1/2) N -> 2 l^(1/alpha) B(3/2, 1/alpha - 1/2) / (pi alpha hbar);
    alpha = 2: N / |ln lambda| -> (l / mu - 1/4)_+^(1/2) / pi, bounded below l = mu / 4;
    alpha > 2: bounded. Here l = 2 beta L twist and hbar = sqrt(mu).
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    if L < 0 or twist_norm_sq < 0 or beta < 0:
        raise DomainError("L, beta and the twist functional must be non-negative")
    inputs = {"alpha": alpha, "L": L, "beta": beta, "mu": mu, "twist_norm_sq": twist_norm_sq}
    l = 2.0 * beta * L * twist_norm_sq
    hbar = math.sqrt(mu)
    if l == 0.0:
        return AsymptoticPrediction(BOUNDED, 0.0, None, l, hbar, inputs)
    if alpha < 2:
        coef = 2.0 * l ** (1.0 / alpha) * beta_function(1.5, 1.0 / alpha - 0.5) / (math.pi * alpha * hbar)
        return AsymptoticPrediction(POWER_LAW, coef, 0.5 - 1.0 / alpha, l, hbar, inputs)
    if alpha == 2:
        if l < mu / 4:
            return AsymptoticPrediction(BOUNDED, None, None, l, hbar, inputs)
        return AsymptoticPrediction(LOG_LAW, math.sqrt(l / mu - 0.25) / math.pi, None, l, hbar, inputs)
    return AsymptoticPrediction(BOUNDED, None, None, l, hbar, inputs)


@dataclass
class CountingFit:
    regime: str
    window: tuple[float, float]  # (lambda_min, lambda_max) of the points used
    n_points: int
    slope: float = float("nan")
    intercept: float = float("nan")
    level: float = float("nan")
    residual: float = float("nan")
    plateau: int | None = None
    constant: bool | None = None

    def record(self) -> dict:
        return asdict(self)


def _fit_window(curve, window, min_points):
    lam = np.asarray(curve.lambda_grid, dtype=float)
    counts = np.asarray(curve.counts, dtype=float)
    ok = np.asarray(curve.stable, dtype=bool)
    if window is None:
        if not ok.any():
            raise InsufficientData("no stable points on the curve")
        lo = lam[ok].min()
        window = (lo, 10.0 * lo * (1 + 1e-12))
    sel = ok & (lam >= window[0]) & (lam <= window[1])
    if sel.sum() < min_points:
        raise InsufficientData(f"{int(sel.sum())} stable points in window {window}, need {min_points}")
    return lam[sel], counts[sel]


def fit_counting(curve, regime: str, expected_slope: float | None = None,
                 window: tuple[float, float] | None = None, min_points: int = 8) -> CountingFit:
    """Fit the counting curve on a lambda window (default: the smallest stable decade).

    power law: log N against log lambda; ``level`` is the fitted N at the
    geometric window centre divided by lambda_c^expected_slope (fitted slope
    when no expectation is given). log law: N against |ln lambda|.
    bounded: maximal count and whether the counts are constant on the window.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    lam, counts = _fit_window(curve, window, min_points)
    win = (float(lam.min()), float(lam.max()))
    fit = CountingFit(regime, win, len(lam))
    fit.plateau = int(counts.max())
    fit.constant = bool(np.all(counts == counts[0]))
    if regime == POWER_LAW:
        pos = counts > 0
        if pos.sum() < 2:
            fit.level = 0.0
            return fit
        X, Y = np.log(lam[pos]), np.log(counts[pos])
        slope, intercept = np.polyfit(X, Y, 1)
        fit.slope, fit.intercept = float(slope), float(intercept)
        fit.residual = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
        log_c = 0.5 * (X.min() + X.max())
        p = slope if expected_slope is None else expected_slope
        fit.level = float(math.exp(intercept + slope * log_c - p * log_c))
    elif regime == LOG_LAW:
        X = np.abs(np.log(lam))
        slope, intercept = np.polyfit(X, counts, 1)
        fit.slope, fit.intercept = float(slope), float(intercept)
        fit.residual = float(np.sqrt(np.mean((counts - (slope * X + intercept)) ** 2)))
        fit.level = fit.slope
    return fit


@dataclass
class Verdict:
    passed: bool
    regime: str
    predicted: dict
    fitted: dict
    tolerances: dict
    reasons: list[str] = field(default_factory=list)

    def record(self) -> dict:
        return {"regime": self.regime, "predicted": self.predicted, "fitted": self.fitted,
                "tolerances": self.tolerances, "pass": self.passed, "reasons": self.reasons}


def verdict(prediction: AsymptoticPrediction, fit: CountingFit, slope_tol: float = 0.05,
            level_tol: float = 0.15, log_tol: float = 0.20) -> Verdict:
    if prediction.regime != fit.regime:
        raise RegimeMismatch(f"prediction is {prediction.regime}, fit is {fit.regime}")
    tols = {"slope_abs": slope_tol, "level_rel": level_tol, "log_slope_rel": log_tol}
    reasons = []
    if prediction.regime == POWER_LAW:
        if not abs(fit.slope - prediction.exponent) <= slope_tol:
            reasons.append(f"slope {fit.slope:.4f} vs expected {prediction.exponent:.4f}")
        if not abs(fit.level - prediction.coefficient) <= level_tol * prediction.coefficient:
            reasons.append(f"level {fit.level:.4f} vs predicted {prediction.coefficient:.4f}")
    elif prediction.regime == LOG_LAW:
        if not abs(fit.slope - prediction.coefficient) <= log_tol * max(prediction.coefficient, 1e-300):
            reasons.append(f"log slope {fit.slope:.4f} vs predicted {prediction.coefficient:.4f}")
    else:
        if not fit.constant:
            reasons.append("counts not constant on the window")
        if prediction.coefficient == 0.0 and fit.plateau != 0:
            reasons.append(f"plateau {fit.plateau} for a vanishing potential")
    return Verdict(not reasons, prediction.regime, prediction.record(), fit.record(), tols, reasons)
