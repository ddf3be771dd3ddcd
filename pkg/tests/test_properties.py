import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from twistwave.asympt import beta_function, predict
from twistwave.fiber import assemble_fiber, build_grid
from twistwave.geometry import Ellipse, Rectangle
from twistwave.onedim import PowerPotential, count_below, tridiagonal_count_below

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
GRID = build_grid(Ellipse(1.3, 0.9), 0.15)

pos = st.floats(0.05, 30.0, allow_nan=False)


@FAST
@given(beta=st.floats(0.0, 5.0), p=st.floats(-5.0, 5.0))
def test_fiber_hermitian(beta, p):
    A = assemble_fiber(GRID, beta, p).entries
    assert abs(A - A.conj().T).max() == 0.0


@FAST
@given(beta=st.floats(0.0, 3.0), p=st.floats(0.0, 3.0))
def test_fiber_conjugate_pair(beta, p):
    # the -p fiber is the complex conjugate of the +p fiber
    A = assemble_fiber(GRID, beta, p).entries
    B = assemble_fiber(GRID, beta, -p).entries
    assert abs(A.conj() - B).max() <= 1e-14 * abs(A).max()


@FAST
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 500))
def test_inertia_equals_dense(seed, n):
    rng = np.random.default_rng(seed)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    w = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    s = float(rng.choice(w)) + 0.5 * float(np.min(np.diff(np.concatenate([w, [w[-1] + 2]]))))
    assert tridiagonal_count_below(d, e, s) == int(np.sum(w < s))


@FAST
@given(l=st.floats(0.1, 5.0), lam=st.floats(1e-4, 1e-1), X=st.floats(5.0, 40.0))
def test_dirichlet_bracketing(l, lam, X):
    V, dx = PowerPotential(l, 1.0), 0.1
    m = lambda Y: int(round(2 * Y / dx)) - 1
    assert count_below(1.0, V, lam, X, m(X)) <= count_below(1.0, V, lam, 2 * X, m(2 * X))


@FAST
@given(l=st.floats(0.1, 5.0), lam1=st.floats(1e-4, 1e-1), lam2=st.floats(1e-4, 1e-1))
def test_count_monotone_in_lambda(l, lam1, lam2):
    V = PowerPotential(l, 1.0)
    lo, hi = sorted((lam1, lam2))
    assert count_below(1.0, V, hi, 30.0, 600) <= count_below(1.0, V, lo, 30.0, 600)


@settings(max_examples=200, deadline=None)
@given(x=pos, y=pos)
def test_beta_symmetry_and_recurrence(x, y):
    assert math.isclose(beta_function(x, y), beta_function(y, x), rel_tol=1e-12)
    assert math.isclose(beta_function(x + 1, y), beta_function(x, y) * x / (x + y), rel_tol=1e-12)


@FAST
@given(alpha=st.floats(0.2, 1.99), L=st.floats(0.01, 10.0), mu=st.floats(0.3, 1.0),
       tw=st.floats(1e-4, 1.0))
def test_prediction_positive_and_scales(alpha, L, mu, tw):
    a = predict(alpha, L, 1.0, mu, tw)
    b = predict(alpha, 2 * L, 1.0, mu, tw)
    assert a.coefficient > 0
    assert math.isclose(b.coefficient / a.coefficient, 2 ** (1 / alpha), rel_tol=1e-10)


def test_band_evenness_property():
    from twistwave.band import scan_bands

    for beta in (0.5, 1.0, 2.0):
        scan = scan_bands(Rectangle(0.5, 0.5), beta, 0.1, 2.0, 9)
        assert scan.evenness_error() <= 1e-9 * scan.E1.max()
