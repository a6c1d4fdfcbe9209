"""Nested adaptive Gauss-Kronrod quadrature over the correction-integral regions.

The integrals are computed numerically from their integrands and region
limits only; none of the closed-form algebra is reused. Each level is a
globally adaptive 7/15-point Gauss-Kronrod scheme that bisects the panel with
the largest error estimate. The innermost level is vectorized.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analytic

# 15-point Kronrod nodes (nonnegative half) and weights; the 7-point Gauss
# rule uses every second node.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_W = np.concatenate([_WK[:-1], _WK[::-1]])
_gauss_full = np.zeros(15)
_gauss_full[1:7:2] = _WG[:3]
_gauss_full[7] = _WG[3]
_gauss_full[9:14:2] = _WG[2::-1]
GAUSS_W = _gauss_full


class QuadratureError(RuntimeError):
    """Raised when the tolerance is not met within the evaluation budget."""

    def __init__(self, message: str, estimate: "QuadResult"):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


def _panel(f, a: float, b: float):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * NODES
    vals, errs = f(x)
    k = half * float(np.dot(KRONROD_W, vals))
    g = half * float(np.dot(GAUSS_W, vals))
    propagated = abs(half) * float(np.dot(KRONROD_W, errs))
    return k, abs(k - g) + propagated


def adaptive_gk(
    f: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    a: float,
    b: float,
    rel_tol: float,
    abs_tol: float = 0.0,
    max_panels: int = 2000,
) -> QuadResult:
    """Integrate ``f`` on ``[a, b]``.

    ``f`` maps an array of abscissae to ``(values, errors)``, where ``errors``
    carries the error of any nested integral producing ``values`` (zeros for
    a plain integrand); it is folded into the panel error estimates.
    """
    if b <= a:
        return QuadResult(0.0, 0.0, 0)
    k, e = _panel(f, a, b)
    evals = 15
    heap = [(-e, a, b, k)]
    total, err = k, e
    while err > max(abs_tol, rel_tol * abs(total)):
        if len(heap) >= max_panels:
            raise QuadratureError("no convergence", QuadResult(total, err, evals))
        neg_e, lo, hi, kv = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _panel(f, lo, mid)
        k2, e2 = _panel(f, mid, hi)
        evals += 30
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        # Re-sum in fixed panel order so the result does not depend on heap history.
        panels = sorted(heap, key=lambda p: p[1])
        total = math.fsum(p[3] for p in panels)
        err = math.fsum(-p[0] for p in panels)
    return QuadResult(total, err, evals)


def integrate_1d(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, rel_tol: float = 1e-10, abs_tol: float = 0.0) -> QuadResult:
    """Adaptive quadrature of a vectorized scalar integrand."""
    return adaptive_gk(lambda x: (f(x), np.zeros_like(x)), a, b, rel_tol, abs_tol)


# -- regions ------------------------------------------------------------------

_SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Region3:
    """Integration region in (r1, r2, r3) written as nested 1-D limits.

    ``order`` names the (outer, middle, inner) variables. ``outer`` is a
    fixed interval; ``middle(u)`` and ``inner(u, v)`` return limits given the
    outer value ``u`` and middle value ``v``. ``cutoff`` is the radius beyond
    which the Gaussian tail is discarded.
    """

    name: str
    order: tuple[str, str, str]
    outer: tuple[float, float]
    middle: Callable[[float], tuple[float, float]]
    inner: Callable[[float, float], tuple[float, float]]
    cutoff: float


def cutoff_radius(n: float) -> float:
    return 6.0 / math.sqrt(n)


def region(name: str, n: float = 1.0, order: str = "reordered") -> Region3:
    """Build one of the named regions truncated at ``r3 <= 6/sqrt(n)``.

    ``HalfPlaneEvent``: ``r1 <= r2``, ``r3 >= r1 + 2 r2``.
    ``QuadrantEvent``: ``r1 <= r2``, ``r3 >= r2 + sqrt(r1^2 + r2^2)``.
    ``FullSupport``: ``0 < r1 < r2 < r3``.

    ``order="reordered"`` integrates r3 outermost, then r1, then r2;
    ``order="original"`` integrates r1, then r2, then r3.
    """
    R = cutoff_radius(n)
    if name == "FullSupport":
        return Region3(name, ("r3", "r2", "r1"), (0.0, R), lambda r3: (0.0, r3), lambda r3, r2: (0.0, r2), R)
    if name == "HalfPlaneEvent":
        if order == "reordered":
            return Region3(
                name, ("r3", "r1", "r2"), (0.0, R),
                lambda r3: (0.0, r3 / 3.0),
                lambda r3, r1: (r1, (r3 - r1) / 2.0),
                R,
            )
        if order == "original":
            return Region3(
                name, ("r1", "r2", "r3"), (0.0, R / 3.0),
                lambda r1: (r1, (R - r1) / 2.0),
                lambda r1, r2: (r1 + 2.0 * r2, R),
                R,
            )
    if name == "QuadrantEvent":
        if order == "reordered":
            return Region3(
                name, ("r3", "r1", "r2"), (0.0, R),
                lambda r3: (0.0, r3 / (1.0 + _SQ2)),
                lambda r3, r1: (r1, (r3 * r3 - r1 * r1) / (2.0 * r3)),
                R,
            )
        if order == "original":
            return Region3(
                name, ("r1", "r2", "r3"), (0.0, R / (1.0 + _SQ2)),
                lambda r1: (r1, (R * R - r1 * r1) / (2.0 * R)),
                lambda r1, r2: (r2 + math.hypot(r1, r2), R),
                R,
            )
    raise ValueError(f"unknown region {name!r} / order {order!r}")


def _tail_bound(n: float, R: float) -> float:
    # int_R^inf r^7 exp(-n pi r^2) dr, times (2 n pi)^3 so density-normalized
    # integrands are covered as well.
    a = n * math.pi
    tail = math.exp(-a * R * R) * (a**3 * R**6 + 3 * a**2 * R**4 + 6 * a * R**2 + 6) / (2 * a**4)
    return tail * (2 * n * math.pi) ** 3


Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _nested(integrand: Integrand, reg: Region3, rel_tol: float, abs_tol: float) -> tuple[QuadResult, int]:
    names = reg.order
    lo, hi = reg.outer
    width = max(hi - lo, 1e-300)
    inner_rel, inner_abs = rel_tol * 1e-2, abs_tol * 1e-2 / (width * width)
    middle_rel, middle_abs = rel_tol * 1e-1, abs_tol * 1e-1 / width
    counter = [0]

    def call(u, v, w):
        vals = {names[0]: u, names[1]: v, names[2]: w}
        return integrand(vals["r1"], vals["r2"], vals["r3"])

    def middle_fn(us):
        out = np.empty_like(us)
        errs = np.empty_like(us)
        for i, u in enumerate(us):
            mlo, mhi = reg.middle(float(u))

            def inner_fn(vs, u=u):
                ivals = np.empty_like(vs)
                ierrs = np.empty_like(vs)
                for j, v in enumerate(vs):
                    a, b = reg.inner(float(u), float(v))
                    if b <= a:
                        ivals[j] = ierrs[j] = 0.0
                        continue
                    res = adaptive_gk(
                        lambda w, v=v: (np.asarray(call(u, v, w), dtype=float) * np.ones_like(w), np.zeros_like(w)),
                        a, b, inner_rel, inner_abs,
                    )
                    counter[0] += res.evaluations
                    ivals[j], ierrs[j] = res.value, res.error_estimate
                return ivals, ierrs

            res = adaptive_gk(inner_fn, mlo, mhi, middle_rel, middle_abs)
            out[i], errs[i] = res.value, res.error_estimate
        return out, errs

    return adaptive_gk(middle_fn, lo, hi, rel_tol, abs_tol), counter[0]


def integrate_triple(integrand: Integrand, reg: Region3, rel_tol: float = 1e-10, n: float = 1.0) -> QuadResult:
    """Integrate ``integrand(r1, r2, r3)`` over ``reg`` by nested adaptive quadrature.

    A coarse pass fixes the magnitude of the result, which sets absolute
    tolerances for the nested levels; the fine pass then meets ``rel_tol``.
    The integrand must accept numpy arrays. ``n`` only sizes the tail
    estimate that is added to the error.
    """
    if not (1e-14 <= rel_tol < 1e-2):
        raise ValueError("relTol out of range")
    coarse, c1 = _nested(integrand, reg, 1e-4, 1e-300)
    scale = abs(coarse.value) + coarse.error_estimate
    if scale == 0.0:
        return QuadResult(0.0, 0.0, max(c1, 1))
    res, c2 = _nested(integrand, reg, rel_tol, rel_tol * scale * 1e-1)
    return QuadResult(res.value, res.error_estimate + _tail_bound(n, reg.cutoff), c1 + c2)


def integrate_inner(integrand: Integrand, reg: Region3, outer_value: float, rel_tol: float = 1e-12) -> QuadResult:
    """The middle and inner integrals at a fixed outer value (a 2-D integral)."""
    names = reg.order
    u = float(outer_value)

    def call(v, w):
        vals = {names[0]: u, names[1]: v, names[2]: w}
        return integrand(vals["r1"], vals["r2"], vals["r3"])

    def solve(rtol, atol):
        lo, hi = reg.middle(u)
        inner_atol = atol * 1e-1 / max(hi - lo, 1e-300)

        def inner_fn(vs):
            ivals = np.empty_like(vs)
            ierrs = np.empty_like(vs)
            for j, v in enumerate(vs):
                a, b = reg.inner(u, float(v))
                res = adaptive_gk(
                    lambda w, v=v: (np.asarray(call(v, w), dtype=float) * np.ones_like(w), np.zeros_like(w)),
                    a, b, rtol * 1e-1, inner_atol,
                )
                ivals[j], ierrs[j] = res.value, res.error_estimate
            return ivals, ierrs

        return adaptive_gk(inner_fn, lo, hi, rtol, atol)

    coarse = solve(1e-4, 1e-300)
    scale = abs(coarse.value) + coarse.error_estimate
    if scale == 0.0:
        return coarse
    return solve(rel_tol, rel_tol * scale * 1e-1)


# -- integrands -------------------------------------------------------------


def half_plane_correction(r1, r2, r3):
    return r3 - 1.5 * r1 - 1.5 * r2


def quadrant_correction(r1, r2, r3):
    return r3 - 0.5 * r1 - 0.5 * r2 - np.hypot(r1, r2)


def weighted(correction: Integrand, n: float = 1.0) -> Integrand:
    """``correction * exp(-n pi r3^2) * r1 r2 r3`` (the lemma integrands)."""

    def f(r1, r2, r3):
        return correction(r1, r2, r3) * np.exp(-n * math.pi * r3 * r3) * r1 * r2 * r3

    return f


def density(n: float = 1.0, moment: str | None = None) -> Integrand:
    """Joint density of (r1, r2, r3), optionally multiplied by ``r1`` or ``r2``.

    The ordering constraint is supplied by the region, not by the integrand.
    """
    c = (2 * n * math.pi) ** 3

    def f(r1, r2, r3):
        base = c * r1 * r2 * r3 * np.exp(-n * math.pi * r3 * r3)
        if moment == "r1":
            return base * r1
        if moment == "r2":
            return base * r2
        return base

    return f


# -- verifications ----------------------------------------------------------


def _relerr(value: float, ref: float) -> float:
    return abs(value - ref) / abs(ref)


def _check(res: QuadResult, ref: float, rel_tol: float) -> float:
    err = _relerr(res.value, ref)
    if err >= rel_tol:
        raise QuadratureError(f"relative error {err:.3e} exceeds {rel_tol:.1e}", res)
    return err


def lemma_integral(n: float = 1.0, rel_tol: float = 1e-10, order: str = "reordered", direct: bool = False) -> QuadResult:
    """Half-plane correction integral at intensity ``n``.

    By default integrates at ``n = 1`` and applies the exact ``n^(-7/2)``
    scaling; ``direct=True`` integrates at ``n`` itself.
    """
    m = n if direct else 1.0
    res = integrate_triple(weighted(half_plane_correction, m), region("HalfPlaneEvent", m, order), rel_tol, m)
    s = (n / m) ** -3.5
    return QuadResult(res.value * s, res.error_estimate * s, res.evaluations)


def second_integral(n: float = 1.0, rel_tol: float = 1e-10, order: str = "reordered", direct: bool = False) -> QuadResult:
    """Quadrant correction integral at intensity ``n``."""
    m = n if direct else 1.0
    res = integrate_triple(weighted(quadrant_correction, m), region("QuadrantEvent", m, order), rel_tol, m)
    s = (n / m) ** -3.5
    return QuadResult(res.value * s, res.error_estimate * s, res.evaluations)


def verify_lemma_integral(n: float = 1.0, rel_tol: float = 1e-8, order: str = "reordered") -> float:
    """Relative error of the numerical half-plane integral against its closed form."""
    res = lemma_integral(n, rel_tol * 1e-2, order)
    return _check(res, analytic.lemma_integral_closed_form().float_value(n), rel_tol)


def verify_second_integral(n: float = 1.0, rel_tol: float = 1e-8, order: str = "reordered") -> float:
    """Relative error of the numerical quadrant integral against its closed form."""
    res = second_integral(n, rel_tol * 1e-2, order)
    return _check(res, analytic.second_integral_closed_form().float_value(n), rel_tol)


def event_probability(name: str = "HalfPlaneEvent", rel_tol: float = 1e-10, n: float = 1.0) -> QuadResult:
    """Probability mass of the joint density over a named region."""
    return integrate_triple(density(n), region(name, n), rel_tol, n)


def verify_event_probability(rel_tol: float = 1e-8) -> float:
    res = event_probability("HalfPlaneEvent", rel_tol * 1e-2)
    return _check(res, float(analytic.event_probability_closed_form()), rel_tol)


def density_moment(moment: str | None = None, n: float = 1.0, rel_tol: float = 1e-10) -> QuadResult:
    """Total mass (``moment=None``) or mean of ``r1`` / ``r2`` under the joint density."""
    return integrate_triple(density(n, moment), region("FullSupport", n), rel_tol, n)
