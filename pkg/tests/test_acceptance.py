"""Acceptance gate: one PASS/FAIL line per criterion at the stated tolerances.

Run ``pytest tests/test_acceptance.py -s`` (or plain ``pytest -v``; the lines
are printed through ``capsys.disabled``).
"""

import json
import math
import time

import numpy as np
import pytest

from oracles import J01_SQ, SQUARE_TWIST, TWO_PI_SQ
from twistwave.asympt import BOUNDED, POWER_LAW, beta_function, predict
from twistwave.band import band_tolerance, check_mass_bounds, effective_mass, scan_bands
from twistwave.cli import main
from twistwave.fiber import assemble_fiber, build_grid, fiber_eigenpairs
from twistwave.geometry import Disk, Ellipse, Rectangle
from twistwave.groundstate import compute_groundstate, disk_criterion
from twistwave.onedim import (PowerPotential, TwistProfile, count_below, counting_curve,
                              geometric_lambdas, phase_space_count, tridiagonal_count_below)
from twistwave.threedim import assemble_tube, count_discrete, validate_tube

SQ = Rectangle(0.5, 0.5)
DISK = Disk(1.0)
ELLIPSE = Ellipse(1.5, 1.0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok

    return emit


def test_criterion_1_cross_section_oracles(report):
    rows, ok = [], True
    for name, cs, exact in (("rectangle", SQ, TWO_PI_SQ), ("disk", DISK, J01_SQ)):
        t0 = time.perf_counter()
        e = fiber_eigenpairs(build_grid(cs, 0.01), 0.0, 0.0).values[0]
        dt = time.perf_counter() - t0
        rel = abs(e - exact) / exact
        ok &= rel <= 0.01 and dt <= 120
        rows.append(f"{name} E1={e:.6f} rel={rel:.2e} t={dt:.1f}s")
    assert report(1, ok, "; ".join(rows))


def test_criterion_2_effective_mass(report):
    t0 = time.perf_counter()
    m0 = effective_mass(SQ, 0.0, 0.02)
    md = effective_mass(DISK, 1.0, 0.02)
    m1 = effective_mass(SQ, 1.0, 0.02)
    tol_band = band_tolerance(SQ, 1.0, 0.02)
    dt = time.perf_counter() - t0
    ok = (abs(m0.mu - 1) <= 1e-8 and abs(md.mu - 1) <= 1e-4
          and 2 / 3 - tol_band <= m1.mu <= 1 + tol_band and dt <= 300)
    assert report(2, ok, f"beta=0 |mu-1|={abs(m0.mu - 1):.2e}; disk |mu-1|={abs(md.mu - 1):.2e}; "
                         f"rectangle mu={m1.mu:.7f} tol_band={tol_band:.2e}; t={dt:.1f}s")


def test_criterion_3_mass_bound_sweep(report):
    cases = [(SQ, 0.5), (SQ, 1.0), (SQ, 2.0), (ELLIPSE, 1.0)]
    rows, ok = [], True
    for cs, beta in cases:
        scan = scan_bands(cs, beta, 0.02, 2.0, 41)
        tol_band = band_tolerance(cs, beta, 0.02)
        try:
            rep = check_mass_bounds(scan, cs, beta, tol_band)
            n_bad = 0
            margin = min(rep.lower.min(), rep.upper.min())
        except Exception as exc:  # BoundViolation carries the offending momenta
            n_bad, margin = len(getattr(exc, "momenta", [None])), float("nan")
        ok &= n_bad == 0
        rows.append(f"{type(cs).__name__} b={beta}: violations={n_bad} min_margin={margin:.2e}")
    assert report(3, ok, "; ".join(rows))


def test_criterion_4_disk_criterion(report):
    d1 = compute_groundstate(DISK, 1.0, 0.01)
    d03 = compute_groundstate(Disk(0.3), 1.0, 0.003)
    sq = compute_groundstate(SQ, 0.0, 0.01)
    el = compute_groundstate(ELLIPSE, 1.0, 0.01)
    verdicts = {name: disk_criterion(gs) for name, gs in
                (("Disk(1)", d1), ("Disk(0.3)", d03), ("Rectangle", sq), ("Ellipse", el))}
    rel = abs(sq.twist_norm_sq - SQUARE_TWIST) / SQUARE_TWIST
    # dichotomy: disks carry no effective potential, the others a positive one
    preds = {name: predict(1.0, 1.0, 1.0, 1.0, 0.0 if v.is_disk else v.twist_norm_sq)
             for name, v in verdicts.items()}
    ok = (d1.twist_norm_sq < 1e-4 and d03.twist_norm_sq < 1e-4 and rel <= 0.05
          and verdicts["Disk(1)"].is_disk and verdicts["Disk(0.3)"].is_disk
          and not verdicts["Rectangle"].is_disk and not verdicts["Ellipse"].is_disk
          and preds["Disk(1)"].regime == BOUNDED and preds["Disk(0.3)"].regime == BOUNDED
          and preds["Rectangle"].regime == POWER_LAW and preds["Ellipse"].regime == POWER_LAW)
    assert report(4, ok, f"disk(1)={d1.twist_norm_sq:.2e} disk(0.3)={d03.twist_norm_sq:.2e} "
                         f"rectangle={sq.twist_norm_sq:.5f} (rel {rel:.2e}) ellipse={el.twist_norm_sq:.4f}; "
                         f"regimes {[p.regime for p in preds.values()]}")


def test_criterion_5_power_law_desk_scale(report):
    t0 = time.perf_counter()
    V = PowerPotential(1.0, 1.0)
    curve = counting_curve(1.0, V, [1e-4])
    n = int(curve.counts[0])
    ps = phase_space_count(1.0, V, 1e-4)
    dt = time.perf_counter() - t0
    scaled = math.sqrt(1e-4) * n
    ok = abs(scaled - 1) <= 0.15 and abs(n - ps) / ps <= 0.05 and curve.all_stable and dt <= 120
    assert report(5, ok, f"N={n} sqrt(lam)N={scaled:.4f} phase-space={ps:.3f} "
                         f"stable={curve.all_stable} t={dt:.1f}s")


def test_criterion_6_critical_and_fast_decay(report):
    lams = geometric_lambdas(1e-4, 1e-8, 4)
    sub = counting_curve(1.0, PowerPotential(0.2, 2.0), lams)
    crit = counting_curve(1.0, PowerPotential(0.25 + math.pi**2, 2.0), [1e-8])
    fast = counting_curve(1.0, PowerPotential(1.0, 3.0), lams)
    last = fast.lambda_grid <= 1e-6 * (1 + 1e-12)
    log_ratio = crit.counts[0] / abs(math.log(1e-8))
    ok = (sub.all_stable and np.all(sub.counts == sub.counts[0])
          and crit.all_stable and abs(log_ratio - 1) <= 0.20
          and fast.all_stable and np.all(fast.counts[last] == fast.counts[last][0]))
    assert report(6, ok, f"l=0.2 counts={sorted(set(sub.counts.tolist()))}; "
                         f"critical N={crit.counts[0]} ratio={log_ratio:.3f}; "
                         f"alpha=3 plateau={int(fast.counts[-1])}")


def test_criterion_7_verify_end_to_end(report, tmp_path):
    out = tmp_path / "verify"
    t0 = time.perf_counter()
    code = main(["verify", "--out", str(out), "--no-env"])
    dt = time.perf_counter() - t0
    v = json.loads((out / "verdict.json").read_text())
    pred, fit = v["predicted"], v["fitted"]
    ok = (code == 0 and v["pass"] and abs(fit["slope"] + 0.5) <= 0.05
          and abs(fit["level"] - pred["coefficient"]) <= 0.15 * pred["coefficient"] and dt <= 600)
    assert report(7, ok, f"predicted={pred['coefficient']:.5f} slope={fit['slope']:.5f} "
                         f"level={fit['level']:.5f} window={v['fit_window']} t={dt:.1f}s")


def test_criterion_8_three_dimensional_validation(report):
    t0 = time.perf_counter()
    lams = [0.02, 0.01, 0.005, 0.003, 0.002, 0.0015, 0.001, 0.0007, 0.0005]
    cmp = validate_tube(SQ, 1.0, TwistProfile.power_tail(1.0, 1.0), 400.0, 1 / 12, 0.4, lams)
    t_main = time.perf_counter() - t0
    zero_counts = {}
    for name, cs, h_t, X in (("rectangle", SQ, 1 / 12, 400.0), ("disk", DISK, 0.125, 50.0)):
        grid = build_grid(cs, h_t)
        E = scan_bands(cs, 1.0, h_t, 1.0, 11, grid=grid).E_script
        tube = assemble_tube(cs, 1.0, None, X, h_t, 0.4, grid=grid)
        zero_counts[name] = count_discrete(tube, E, [1e-8, 1e-6, 1e-4]).tolist()
    dt = time.perf_counter() - t0
    agree = int(cmp.agreement(1).sum())
    ok = (agree >= 3 and all(not any(c) for c in zero_counts.values())
          and cmp.params["dimension"] <= 300_000 and t_main <= 900)
    assert report(8, ok, f"dim={cmp.params['dimension']} N3d={cmp.counts_3d.tolist()} "
                         f"N1d={cmp.counts_1d.tolist()} agree={agree}/{len(lams)}; "
                         f"eps=0 counts={zero_counts}; t={dt:.1f}s")


def test_criterion_9_property_suites(report):
    rng = np.random.default_rng(20261015)
    checks = {}
    defects = []
    for cs, h in ((SQ, 0.05), (DISK, 0.1), (ELLIPSE, 0.1)):
        grid = build_grid(cs, h)
        for beta, p in ((0.0, 0.0), (1.0, 0.7), (2.5, -1.3)):
            A = assemble_fiber(grid, beta, p).entries
            defects.append(abs(A - A.conj().T).max())
    checks["hermitian"] = max(defects) == 0.0
    inertia_ok = True
    for n in (1, 2, 17, 120, 500):
        d, e = rng.normal(size=n), rng.normal(size=n - 1)
        w = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
        for s in rng.uniform(w[0] - 1, w[-1] + 1, 25):
            inertia_ok &= tridiagonal_count_below(d, e, s) == int(np.sum(w < s))
    checks["inertia"] = inertia_ok
    scan = scan_bands(SQ, 1.0, 0.05, 2.0, 21)
    checks["evenness"] = scan.evenness_error() <= 1e-9 * scan.E1.max()
    V = PowerPotential(1.0, 1.0)
    counts = [count_below(1.0, V, 1e-3, X, int(round(2 * X / 0.05)) - 1) for X in (20, 40, 80, 160)]
    checks["bracketing"] = counts == sorted(counts)
    beta_ok = True
    for x, y in rng.uniform(0.05, 30, size=(200, 2)):
        beta_ok &= math.isclose(beta_function(x, y), beta_function(y, x), rel_tol=1e-12)
        beta_ok &= math.isclose(beta_function(x + 1, y), beta_function(x, y) * x / (x + y), rel_tol=1e-12)
    checks["beta"] = beta_ok
    assert report(9, all(checks.values()), " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
