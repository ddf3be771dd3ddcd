"""Planar cross-sections and their geometric functionals.

Every shape contains the origin. Membership is strict: points on the
boundary (up to a relative tolerance of ``EDGE_TOL``) are outside, which is
what the Dirichlet masking in :mod:`twistwave.fiber` needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

EDGE_TOL = 1e-10


@dataclass(frozen=True)
class CrossSection:
    """Base class; concrete shapes implement ``contains`` and ``bounding_box``."""

    def contains(self, x1, x2):
        raise NotImplementedError

    def bounding_box(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def c_omega(self) -> float:
        raise NotImplementedError

    def scaled(self, s: float) -> "CrossSection":
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def _check_origin(self):
        if not bool(self.contains(0.0, 0.0)):
            raise ConfigError(f"{self!r} does not contain the origin")


@dataclass(frozen=True)
class Disk(CrossSection):
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("disk radius must be positive")

    def contains(self, x1, x2):
        r2 = np.asarray(x1) ** 2 + np.asarray(x2) ** 2
        return r2 < self.radius**2 * (1 - EDGE_TOL)

    def bounding_box(self):
        r = self.radius
        return (-r, r, -r, r)

    def c_omega(self):
        return self.radius**2

    def scaled(self, s):
        return Disk(self.radius * s)

    def describe(self):
        return {"kind": "disk", "radius": self.radius}


@dataclass(frozen=True)
class Ellipse(CrossSection):
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError("ellipse semi-axes must be positive")

    def contains(self, x1, x2):
        q = (np.asarray(x1) / self.a) ** 2 + (np.asarray(x2) / self.b) ** 2
        return q < 1 - EDGE_TOL

    def bounding_box(self):
        return (-self.a, self.a, -self.b, self.b)

    def c_omega(self):
        return max(self.a, self.b) ** 2

    def scaled(self, s):
        return Ellipse(self.a * s, self.b * s)

    def describe(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Rectangle(CrossSection):
    """Centered rectangle ``(-w1, w1) x (-w2, w2)``."""

    w1: float
    w2: float

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 > 0):
            raise ConfigError("rectangle half-widths must be positive")

    def contains(self, x1, x2):
        inside1 = np.abs(np.asarray(x1)) < self.w1 * (1 - EDGE_TOL)
        inside2 = np.abs(np.asarray(x2)) < self.w2 * (1 - EDGE_TOL)
        return inside1 & inside2

    def bounding_box(self):
        return (-self.w1, self.w1, -self.w2, self.w2)

    def c_omega(self):
        return self.w1**2 + self.w2**2

    def scaled(self, s):
        return Rectangle(self.w1 * s, self.w2 * s)

    def describe(self):
        return {"kind": "rectangle", "w1": self.w1, "w2": self.w2}


@dataclass(frozen=True)
class Polygon(CrossSection):
    """Simple polygon given by its vertices (either orientation).

    Membership follows the even-odd crossing rule; points within
    ``EDGE_TOL * diameter`` of an edge count as outside.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ConfigError("polygon needs at least three vertices")
        object.__setattr__(self, "vertices", verts)
        self._check_origin()

    @property
    def _array(self):
        return np.asarray(self.vertices, dtype=float)

    def contains(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        v = self._array
        w = np.roll(v, -1, axis=0)
        diam = float(np.max(np.ptp(v, axis=0)))
        inside = np.zeros(np.broadcast(x1, x2).shape, dtype=bool)
        on_edge = np.zeros_like(inside)
        for (ax, ay), (bx, by) in zip(v, w):
            # even-odd crossing of a ray cast in +x1
            crosses = (ay > x2) != (by > x2)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = ax + (x2 - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (x1 < xcross)
            ex, ey = bx - ax, by - ay
            seg2 = ex * ex + ey * ey
            t = np.clip(((x1 - ax) * ex + (x2 - ay) * ey) / seg2, 0.0, 1.0)
            dist = np.hypot(x1 - (ax + t * ex), x2 - (ay + t * ey))
            on_edge |= dist <= EDGE_TOL * diam
        return inside & ~on_edge

    def bounding_box(self):
        v = self._array
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())

    def c_omega(self):
        return float(np.max(np.sum(self._array**2, axis=1)))

    def scaled(self, s):
        return Polygon(tuple((s * x, s * y) for x, y in self.vertices))

    def rotated(self, angle: float) -> "Polygon":
        c, s = math.cos(angle), math.sin(angle)
        return Polygon(tuple((c * x - s * y, s * x + c * y) for x, y in self.vertices))

    def describe(self):
        return {"kind": "polygon", "vertices": [list(p) for p in self.vertices]}


def c_omega(cs: CrossSection) -> float:
    """Squared distance from the origin to the farthest point of the closure."""
    return float(cs.c_omega())


def epsilon_omega(cs: CrossSection, beta: float) -> float:
    t = beta * beta * c_omega(cs)
    return t / (1.0 + t)


def from_config(params: dict) -> CrossSection:
    """Build a cross-section from ``{"kind": ..., <parameters>}``."""
    params = dict(params)
    kind = str(params.pop("kind", "")).lower()
    try:
        if kind == "disk":
            cs = Disk(float(params.pop("radius")))
        elif kind == "ellipse":
            cs = Ellipse(float(params.pop("a")), float(params.pop("b")))
        elif kind == "rectangle":
            cs = Rectangle(float(params.pop("w1")), float(params.pop("w2")))
        elif kind == "polygon":
            cs = Polygon(tuple(tuple(p) for p in params.pop("vertices")))
        else:
            raise ConfigError(f"unknown cross-section kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"cross-section {kind!r} missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad cross-section parameters: {exc}") from None
    if params:
        raise ConfigError(f"unknown cross-section keys {sorted(params)}")
    return cs
