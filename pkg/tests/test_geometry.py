import math

import numpy as np
import pytest

from twistwave.errors import ConfigError
from twistwave.geometry import Disk, Ellipse, Polygon, Rectangle, c_omega, epsilon_omega, from_config

SHAPES = [Disk(1.0), Disk(0.3), Ellipse(2.0, 1.0), Ellipse(1.5, 1.0), Rectangle(0.5, 0.5),
          Rectangle(1.0, 0.25), Polygon(((-1, -1), (2, -0.5), (0.5, 1.5), (-0.7, 0.8)))]


def test_c_omega_examples():
    assert c_omega(Rectangle(0.5, 0.5)) == 0.5
    assert c_omega(Disk(1)) == 1.0
    assert c_omega(Ellipse(2, 1)) == 4.0
    assert c_omega(Polygon(((-1, -1), (1, -1), (0, 2)))) == 4.0


def test_epsilon_examples():
    assert epsilon_omega(Rectangle(0.5, 0.5), 0.0) == 0.0
    assert math.isclose(epsilon_omega(Rectangle(0.5, 0.5), math.sqrt(2)), 0.5)
    assert epsilon_omega(Disk(1), 1.0) == 0.5
    # strictly below 1 while beta^2 C is resolvable in double precision
    assert epsilon_omega(Disk(1), 1e6) < 1.0


@pytest.mark.parametrize("cs", SHAPES)
def test_origin_inside_and_box_consistent(cs, rng):
    assert cs.contains(0.0, 0.0)
    xmin, xmax, ymin, ymax = cs.bounding_box()
    pts = rng.uniform(-3, 3, size=(20000, 2))
    inside = cs.contains(pts[:, 0], pts[:, 1])
    assert inside.any()
    p = pts[inside]
    assert np.all((p[:, 0] >= xmin) & (p[:, 0] <= xmax) & (p[:, 1] >= ymin) & (p[:, 1] <= ymax))


@pytest.mark.parametrize("cs", SHAPES)
def test_c_omega_bounds_sampled_points(cs, rng):
    pts = rng.uniform(-3, 3, size=(20000, 2))
    p = pts[cs.contains(pts[:, 0], pts[:, 1])]
    assert np.max(np.sum(p**2, axis=1)) <= c_omega(cs) + 1e-12


@pytest.mark.parametrize("cs", SHAPES)
def test_c_omega_scales_quadratically(cs):
    assert math.isclose(c_omega(cs.scaled(1.7)), 1.7**2 * c_omega(cs), rel_tol=1e-12)


def test_boundary_points_are_outside():
    assert not Disk(1).contains(1.0, 0.0)
    assert not Rectangle(0.5, 0.5).contains(0.5, 0.1)
    square = Polygon(((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)))
    assert not square.contains(0.5, 0.0)
    assert not square.contains(0.0, -0.5)
    assert square.contains(0.49, 0.49)


def test_polygon_matches_rectangle(rng):
    rect = Rectangle(0.5, 0.3)
    poly = Polygon(((-0.5, -0.3), (0.5, -0.3), (0.5, 0.3), (-0.5, 0.3)))
    pts = rng.uniform(-1, 1, size=(5000, 2))
    assert np.array_equal(rect.contains(pts[:, 0], pts[:, 1]), poly.contains(pts[:, 0], pts[:, 1]))


def test_polygon_rotation_preserves_c_omega():
    poly = Polygon(((-1, -0.5), (1.5, -0.5), (0.2, 1.0)))
    assert math.isclose(c_omega(poly.rotated(0.7)), c_omega(poly), rel_tol=1e-12)


def test_from_config():
    assert from_config({"kind": "disk", "radius": 2}) == Disk(2.0)
    assert from_config({"kind": "rectangle", "w1": 0.5, "w2": 0.5}) == Rectangle(0.5, 0.5)
    with pytest.raises(ConfigError):
        from_config({"kind": "torus"})
    with pytest.raises(ConfigError):
        from_config({"kind": "disk"})
    with pytest.raises(ConfigError):
        from_config({"kind": "disk", "radius": 1, "colour": "red"})
    with pytest.raises(ConfigError):
        Disk(-1.0)
    with pytest.raises(ConfigError):
        Polygon(((1, 1), (2, 1), (2, 2)))  # misses the origin
