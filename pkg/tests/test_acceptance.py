"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
Reference values for the bounds are the exact closed forms evaluated at 50
digits, not rounded decimals.
"""

import math
import time
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from bhh_bounds import analytic, experiments, quadrature, tsp
from bhh_bounds.analytic import QSqrt2
from bhh_bounds.poisson import default_pad, trial_rng

pytestmark = pytest.mark.slow

INTENSITY = 1000.0
TRIALS = 200
SEED = 20260401


def report(k: int, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    ok = ok and elapsed < limit
    print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'} {detail} ({elapsed:.2f}s, limit {limit:.0f}s)")
    return ok


def rel(a, b) -> float:
    return abs(a - b) / abs(b)


def within_3se(values, ref) -> tuple[bool, float, float]:
    v = np.asarray(values, dtype=float)
    mean, se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))
    return abs(mean - ref) <= 3 * se, mean, se


@pytest.fixture(scope="module")
def mc_trials():
    start = time.perf_counter()
    res = experiments.run_trials(INTENSITY, TRIALS, SEED, default_pad(INTENSITY), check_closure=False)
    return res, time.perf_counter() - start


def test_criterion_1_constants():
    start = time.perf_counter()
    mp.mp.dps = 50
    s2 = mp.sqrt(2)
    targets = {
        "event_probability": (QSqrt2(Fraction(7, 324)), analytic.event_probability_closed_form(), mp.mpf(7) / 324),
        "half_plane_addend": (QSqrt2(Fraction(19, 10368)), analytic.half_plane_addend().value, mp.mpf(19) / 10368),
        "quadrant_addend": (QSqrt2(Fraction(-4325, 5376), Fraction(3072, 5376)), analytic.quadrant_addend().value,
                            (3072 * s2 - 4325) / 5376),
        "lower_bound_1": (QSqrt2(Fraction(5, 8) + Fraction(19, 10368)), analytic.lower_bound_1().value,
                          mp.mpf(5) / 8 + mp.mpf(19) / 10368),
        # c falls on either side of b with probability 1/2; each side contributes its own addend
        "lower_bound_2": (QSqrt2(Fraction(5, 8) + Fraction(19, 20736) - Fraction(4325, 10752), Fraction(3072, 10752)),
                          analytic.lower_bound_2().value,
                          mp.mpf(5) / 8 + mp.mpf(19) / 20736 + (3072 * s2 - 4325) / 10752),
    }
    ok = True
    for exact, computed, literal in targets.values():
        computed = QSqrt2.coerce(computed)
        ok &= computed == exact
        ok &= rel(float(computed), float(literal)) < 1e-12
        ok &= abs(computed.to_mpf() - literal) < mp.mpf(10) ** -40
    ok &= all(r.passed for r in experiments.verify_constants())
    lb2 = float(analytic.lower_bound_2().value)
    elapsed = time.perf_counter() - start
    assert report(1, ok, f"exact Q(sqrt2) identities hold; lowerBound2={lb2:.13f}", elapsed, 1.0)


def test_criterion_2_half_plane_integral():
    start = time.perf_counter()
    target = float(analytic.lemma_integral_closed_form().float_value(1.0))
    assert target == pytest.approx(19 / (27648 * math.pi ** 3), rel=1e-14)
    a = quadrature.lemma_integral(1.0, rel_tol=1e-10, order="reordered").value
    b = quadrature.lemma_integral(1.0, rel_tol=1e-10, order="original").value
    e1, e2 = rel(a, target), rel(a, b)
    elapsed = time.perf_counter() - start
    assert report(2, e1 < 1e-8 and e2 < 1e-8,
                  f"rel err vs 19/(27648 pi^3) = {e1:.2e}; order agreement {e2:.2e}", elapsed, 30.0)


def test_criterion_3_quadrant_integral():
    start = time.perf_counter()
    target = analytic.second_integral_closed_form().float_value(1.0)
    bracket = analytic.second_bracket()
    assert target == pytest.approx(float(bracket) * 15 / (16 * math.pi ** 3), rel=1e-14)
    a = quadrature.second_integral(1.0, rel_tol=1e-10, order="reordered").value
    b = quadrature.second_integral(1.0, rel_tol=1e-10, order="original").value
    identity_exact = bracket * Fraction(5, 2) == QSqrt2(Fraction(-4325, 5376), Fraction(3072, 5376))
    mp.mp.dps = 50
    id_err = rel(float(bracket.to_mpf() * 5 / 2), float((3072 * mp.sqrt(2) - 4325) / 5376))
    e1, e2 = rel(a, target), rel(a, b)
    elapsed = time.perf_counter() - start
    ok = e1 < 1e-8 and e2 < 1e-8 and identity_exact and id_err < 1e-12
    assert report(3, ok, f"rel err vs bracket*15/(16 pi^3) = {e1:.2e}; order agreement {e2:.2e}; "
                         f"identity exact={identity_exact}", elapsed, 60.0)


def test_criterion_4_density_suite():
    start = time.perf_counter()
    mass = quadrature.density_moment(None, 1.0, 1e-10).value
    m1 = quadrature.density_moment("r1", 1.0, 1e-10).value
    m2 = quadrature.density_moment("r2", 1.0, 1e-10).value
    pe = quadrature.event_probability("HalfPlaneEvent", 1e-10, 1.0).value
    errs = [abs(mass - 1), rel(m1, 0.5), rel(m2, 0.75), rel(pe, 7 / 324)]
    elapsed = time.perf_counter() - start
    assert report(4, max(errs) < 1e-8, "mass, E r1, E r2, P(E) errors " + ", ".join(f"{e:.1e}" for e in errs),
                  elapsed, 60.0)


def test_criterion_5_monte_carlo_nn():
    start = time.perf_counter()
    res = experiments.run_trials(INTENSITY, TRIALS, SEED + 1, default_pad(INTENSITY), check_closure=False)
    checks = [
        within_3se([r.mean_r1 for r in res], 1 / (2 * math.sqrt(INTENSITY))),
        within_3se([r.mean_r2 for r in res], 3 / (4 * math.sqrt(INTENSITY))),
        within_3se([r.event_fraction for r in res], 7 / 324),
    ]
    elapsed = time.perf_counter() - start
    detail = "; ".join(f"{name} {m:.6g}+-{se:.2g}" for name, (_, m, se) in zip(("r1", "r2", "P(E)"), checks))
    assert report(5, all(c[0] for c in checks), detail, elapsed, 120.0)


def test_criterion_6_triangle_closure():
    start = time.perf_counter()
    fuzz = np.random.SeedSequence(SEED).generate_state(4)
    checked = ok = 0
    for s in fuzz:
        for r in experiments.run_trials(INTENSITY, 70, int(s), default_pad(INTENSITY), check_closure=True):
            checked += r.closure_checked
            ok += r.closure_ok
    elapsed = time.perf_counter() - start
    assert report(6, checked >= 10_000 and ok == checked, f"{ok}/{checked} events close", elapsed, 120.0)


def test_criterion_7_bound_estimators(mc_trials):
    res, elapsed = mc_trials
    refs = {
        "scaledPlain": ([r.scaled_plain for r in res], 0.625),
        "HalfPlaneOnly": ([r.scaled_half_plane for r in res], analytic.lower_bound_1().float_value()),
        "QuadrantMix": ([r.scaled_quadrant_mix for r in res], analytic.lower_bound_2().float_value()),
    }
    out = {k: within_3se(v, ref) for k, (v, ref) in refs.items()}
    detail = "; ".join(f"{k} {m:.5f}+-{se:.5f} (ref {refs[k][1]:.6f})" for k, (_, m, se) in out.items())
    assert report(7, all(o[0] for o in out.values()), detail, elapsed, 180.0)


def test_criterion_8_tsp_oracles():
    start = time.perf_counter()
    exact_ok = heur_ok = 0
    for k in range(100):
        rng = trial_rng(SEED, k)
        pts = rng.random((int(rng.integers(3, 9)), 2))
        exact_ok += abs(tsp.solve_exact(pts).length - tsp.solve_brute_force(pts).length) <= 1e-9
        rng = trial_rng(SEED + 1, k)
        pts = rng.random((int(rng.integers(3, 13)), 2))
        heur_ok += tsp.solve_heuristic(pts, seed=k).length >= tsp.solve_exact(pts).length - 1e-9
    elapsed = time.perf_counter() - start
    assert report(8, exact_ok == 100 and heur_ok == 100,
                  f"Held-Karp = brute force {exact_ok}/100; heuristic >= exact {heur_ok}/100", elapsed, 120.0)


def test_criterion_9_sandwich():
    start = time.perf_counter()
    mean, se = tsp.estimate_beta_hat(500, 20, tsp.Mode.HEURISTIC, seed=SEED)
    lo, hi = analytic.lower_bound_2().float_value(), analytic.BETA_UPPER
    elapsed = time.perf_counter() - start
    assert report(9, lo < mean < hi, f"L/sqrt(n) at n=500: {mean:.4f}+-{se:.4f} in ({lo:.4f}, {hi})",
                  elapsed, 180.0)
