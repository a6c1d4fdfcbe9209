"""Closed-form constants for the two-nearest-neighbor lower bound on beta.

Every constant here is exact: a number ``a + b*sqrt(2)`` with rational
``a, b``, divided by a power of pi and multiplied by a power of the
intensity ``n``. Float values are projections of the exact form evaluated
at 50 digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import mpmath

_DPS = 50


@total_ordering
@dataclass(frozen=True)
class QSqrt2:
    """Exact element ``rational + sqrt2 * sqrt(2)`` of the field Q(sqrt 2)."""

    rational: Fraction = Fraction(0)
    sqrt2: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        object.__setattr__(self, "sqrt2", Fraction(self.sqrt2))

    @classmethod
    def coerce(cls, x) -> "QSqrt2":
        return x if isinstance(x, QSqrt2) else cls(Fraction(x))

    def __add__(self, other):
        o = QSqrt2.coerce(other)
        return QSqrt2(self.rational + o.rational, self.sqrt2 + o.sqrt2)

    __radd__ = __add__

    def __neg__(self):
        return QSqrt2(-self.rational, -self.sqrt2)

    def __sub__(self, other):
        return self + (-QSqrt2.coerce(other))

    def __rsub__(self, other):
        return QSqrt2.coerce(other) - self

    def __mul__(self, other):
        o = QSqrt2.coerce(other)
        a, b, c, d = self.rational, self.sqrt2, o.rational, o.sqrt2
        return QSqrt2(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self) -> "QSqrt2":
        return QSqrt2(self.rational, -self.sqrt2)

    def norm(self) -> Fraction:
        return self.rational**2 - 2 * self.sqrt2**2

    def __truediv__(self, other):
        o = QSqrt2.coerce(other)
        nrm = o.norm()
        if nrm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt 2)")
        p = self * o.conjugate()
        return QSqrt2(p.rational / nrm, p.sqrt2 / nrm)

    def __rtruediv__(self, other):
        return QSqrt2.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return QSqrt2(1) / self**-k
        out, base = QSqrt2(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = QSqrt2.coerce(other)
        except TypeError:
            return NotImplemented
        return self.rational == o.rational and self.sqrt2 == o.sqrt2

    def __hash__(self):
        return hash((self.rational, self.sqrt2))

    def sign(self) -> int:
        a, b = self.rational, self.sqrt2
        # sign of a + b*sqrt(2) without floats
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with 2 b^2
        big = a * a - 2 * b * b
        s = (big > 0) - (big < 0)
        return s if a > 0 else -s

    def __lt__(self, other):
        return (self - QSqrt2.coerce(other)).sign() < 0

    def to_mpf(self):
        with mpmath.workdps(_DPS):
            return mpmath.mpf(self.rational.numerator) / self.rational.denominator + (
                mpmath.mpf(self.sqrt2.numerator) / self.sqrt2.denominator
            ) * mpmath.sqrt(2)

    def __float__(self):
        return float(self.to_mpf())

    def __repr__(self):
        return f"QSqrt2({self.rational} + {self.sqrt2}*sqrt2)"


SQRT2 = QSqrt2(0, 1)


@dataclass(frozen=True)
class ClosedForm:
    """``value / pi**pi_power * n**n_power`` with ``value`` exact in Q(sqrt 2)."""

    value: QSqrt2
    pi_power: int = 0
    n_power: Fraction = Fraction(0)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", QSqrt2.coerce(self.value))
        object.__setattr__(self, "n_power", Fraction(self.n_power))

    @property
    def rational_part(self) -> Fraction:
        return self.value.rational

    @property
    def sqrt2_coefficient(self) -> Fraction:
        return self.value.sqrt2

    def __mul__(self, other: "ClosedForm") -> "ClosedForm":
        if not isinstance(other, ClosedForm):
            return ClosedForm(self.value * other, self.pi_power, self.n_power, self.label)
        return ClosedForm(
            self.value * other.value,
            self.pi_power + other.pi_power,
            self.n_power + other.n_power,
        )

    __rmul__ = __mul__

    def __add__(self, other: "ClosedForm") -> "ClosedForm":
        other = other if isinstance(other, ClosedForm) else ClosedForm(QSqrt2.coerce(other))
        if (self.pi_power, self.n_power) != (other.pi_power, other.n_power):
            raise ValueError("cannot add closed forms with different pi/n powers")
        return ClosedForm(self.value + other.value, self.pi_power, self.n_power)

    __radd__ = __add__

    def mp_value(self, n=1):
        with mpmath.workdps(_DPS):
            return self.value.to_mpf() / mpmath.pi**self.pi_power * mpmath.mpf(n) ** (
                mpmath.mpf(self.n_power.numerator) / self.n_power.denominator
            )

    def float_value(self, n: float = 1.0) -> float:
        return float(self.mp_value(n))

    def is_dimensionless(self) -> bool:
        return self.pi_power == 0 and self.n_power == 0


def _cf(value, pi_power=0, n_power=0, label="") -> ClosedForm:
    return ClosedForm(QSqrt2.coerce(value), pi_power, Fraction(n_power), label)


# -- densities and moments --------------------------------------------------


def joint_density(r1: float, r2: float, r3: float, n: float) -> float:
    """Density of the three nearest-neighbor distances of a fixed point.

    ``(2 n pi)^3 r1 r2 r3 exp(-n pi r3^2)`` on ``0 < r1 < r2 < r3``, zero
    elsewhere, for a Poisson process of intensity ``n`` on the plane.
    """
    if n <= 0:
        raise ValueError("intensity must be positive")
    if not (0 < r1 < r2 < r3):
        return 0.0
    return (2 * n * math.pi) ** 3 * r1 * r2 * r3 * math.exp(-n * math.pi * r3 * r3)


def gaussian_moment_closed_form(k: int) -> ClosedForm:
    """``int_0^inf r^k exp(-n pi r^2) dr`` as an exact closed form in ``n``.

    Uses ``M_k = (k-1)/(2 n pi) M_{k-2}`` with ``M_0 = 1/(2 sqrt n)`` and
    ``M_1 = 1/(2 n pi)``.
    """
    if k < 0:
        raise ValueError("moment order must be >= 0")
    if k % 2 == 0:
        m = _cf(Fraction(1, 2), 0, Fraction(-1, 2))
        start = 2
    else:
        m = _cf(Fraction(1, 2), 1, -1)
        start = 3
    for j in range(start, k + 1, 2):
        m = m * _cf(Fraction(j - 1, 2), 1, -1)
    return m


def gaussian_moment(k: int, n: float) -> float:
    if n <= 0:
        raise ValueError("intensity must be positive")
    return gaussian_moment_closed_form(k).float_value(n)


def expected_nn_distance(j: int, n: float) -> float:
    """Mean distance to the ``j``-th nearest point (``j`` in {1, 2})."""
    if n <= 0:
        raise ValueError("intensity must be positive")
    if j == 1:
        return 1.0 / (2.0 * math.sqrt(n))
    if j == 2:
        return 3.0 / (4.0 * math.sqrt(n))
    raise ValueError("unsupported order")


# -- the two correction integrals -------------------------------------------

# Inner double integral over the half-plane event region at r3 = 1:
# int_0^{1/3} r1 int_{r1}^{(1-r1)/2} r2 (1 - 3/2 r1 - 3/2 r2) dr2 dr1.
LEMMA_POLY_CONSTANT = (
    Fraction(9, 40) * Fraction(1, 3) ** 5
    - Fraction(3, 64) * Fraction(1, 3) ** 4
    - Fraction(1, 12) * Fraction(1, 3) ** 3
    + Fraction(1, 32) * Fraction(1, 3) ** 2
)

# 1/(1 + sqrt 2) = sqrt 2 - 1
_U = QSqrt2(-1, 1)


def second_bracket() -> QSqrt2:
    """Seven-term polynomial in ``u = 1/(1+sqrt 2)`` for the quadrant region, exact."""
    mid = Fraction(1, 8) + Fraction(1, 4) + Fraction(1, 6) + 2 * SQRT2 / 3
    return (
        -(_U**8) / (8 * 48)
        - _U**7 / (7 * 16)
        - _U**6 / (6 * 16)
        + mid * _U**5 / 5
        - 13 * _U**4 / 64
        - _U**3 / 48
        + _U**2 / 32
    )


def lemma_integral_closed_form() -> ClosedForm:
    """Half-plane correction integral: ``19 / (27648 pi^3 n^(7/2))``."""
    cf = gaussian_moment_closed_form(6) * LEMMA_POLY_CONSTANT
    return ClosedForm(cf.value, cf.pi_power, cf.n_power, "lemma_integral")


def second_integral_closed_form() -> ClosedForm:
    """Quadrant correction integral: ``bracket * 15 / (16 pi^3 n^(7/2))``."""
    cf = gaussian_moment_closed_form(6) * second_bracket()
    return ClosedForm(cf.value, cf.pi_power, cf.n_power, "second_integral")


QUADRANT_ADDEND = QSqrt2(Fraction(-4325, 5376), Fraction(3072, 5376))


def event_probability_closed_form() -> Fraction:
    """Probability that the third-nearest distance is at least ``r1 + 2 r2``."""
    return Fraction(7, 324)


def bound_prefactor() -> ClosedForm:
    """``(sqrt(n)/3) * (2 n pi)^3`` turning a correction integral into a beta addend."""
    return _cf(Fraction(8, 3), -3, Fraction(7, 2))


def half_plane_addend() -> ClosedForm:
    return bound_prefactor() * lemma_integral_closed_form()


def quadrant_addend() -> ClosedForm:
    return bound_prefactor() * second_integral_closed_form()


def lower_bound_1() -> ClosedForm:
    """``5/8 + 19/10368``."""
    add = half_plane_addend()
    assert add.is_dimensionless()
    return ClosedForm(Fraction(5, 8) + add.value, label="lower_bound_1")


def lower_bound_2() -> ClosedForm:
    """``5/8 + (19/10368)/2 + ((3072 sqrt2 - 4325)/5376)/2``."""
    hp, qd = half_plane_addend(), quadrant_addend()
    assert hp.is_dimensionless() and qd.is_dimensionless()
    return ClosedForm(Fraction(5, 8) + hp.value / 2 + qd.value / 2, label="lower_bound_2")


BASELINE_BOUND = Fraction(5, 8)
# Beardwood et al. upper bound, used only as a numeric ceiling.
BETA_UPPER = 0.92116


def constant_table() -> dict[str, ClosedForm]:
    """All exact constants keyed by identifier."""
    return {
        "event_probability": _cf(event_probability_closed_form()),
        "half_plane_addend": half_plane_addend(),
        "quadrant_addend": quadrant_addend(),
        "lower_bound_1": lower_bound_1(),
        "lower_bound_2": lower_bound_2(),
        "lemma_integral": lemma_integral_closed_form(),
        "second_integral": second_integral_closed_form(),
        "gaussian_moment_6": gaussian_moment_closed_form(6),
    }
