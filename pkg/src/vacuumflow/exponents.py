"""Exact exponent calculus for integrability hypotheses.

Admissibility of a velocity/solution pairing is decided by rational
inequalities between reciprocals of Lebesgue exponents, with infinity as a
legitimate value.  Boundary cases sit exactly on equality (e.g. 6/5 against
2 in three dimensions), so every comparison here is carried out in exact
rational arithmetic: an exponent is a ``Fraction`` or the tagged infinity,
never a float sentinel.

Everything in this module is pure and stateless; it is safe to call from any
number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "ANY_FINITE",
    "Exponent",
    "ExponentTuple",
    "INF",
    "Verdict",
    "check_diperna_lions",
    "check_gamma_condition",
    "check_product_theorem",
    "classify_renorm_growth",
    "holder_conjugate",
    "sobolev_star",
]

ExponentLike = Union["Exponent", int, float, str, Fraction]


class Exponent:
    """An exponent in [1, inf].  Finite values are exact rationals.

    Accepts ints, Fractions, strings ("inf", "3/2", "2"), floats (converted
    exactly to their binary rational value) and other Exponents.  For values
    meant to sit exactly on a rational boundary, pass a string or Fraction.
    """

    __slots__ = ("_value",)

    def __init__(self, value: ExponentLike):
        if isinstance(value, Exponent):
            self._value = value._value
            return
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "oo", "∞"):
                self._value = None
                return
            value = Fraction(text)
        if isinstance(value, float):
            if math.isinf(value):
                self._value = None
                return
            if math.isnan(value):
                raise ValueError("exponent cannot be NaN")
            value = Fraction(value)
        if isinstance(value, int):
            value = Fraction(value)
        if not isinstance(value, Fraction):
            raise TypeError(f"cannot build an exponent from {value!r}")
        if value < 1:
            raise ValueError(f"exponent must lie in [1, inf], got {value}")
        self._value = value

    @property
    def is_inf(self) -> bool:
        return self._value is None

    @property
    def value(self) -> Fraction:
        """The finite rational value; raises on infinity."""
        if self._value is None:
            raise ValueError("exponent is infinite")
        return self._value

    @property
    def reciprocal(self) -> Fraction:
        """1/value, with 1/inf = 0 exactly."""
        return Fraction(0) if self._value is None else 1 / self._value

    def _coerced(self, other) -> "Exponent":
        return other if isinstance(other, Exponent) else Exponent(other)

    def __eq__(self, other) -> bool:
        try:
            other = self._coerced(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._value == other._value

    def __lt__(self, other) -> bool:
        other = self._coerced(other)
        if self._value is None:
            return False
        if other._value is None:
            return True
        return self._value < other._value

    def __le__(self, other) -> bool:
        other = self._coerced(other)
        return self == other or self < other

    def __gt__(self, other) -> bool:
        return not self <= self._coerced(other)

    def __ge__(self, other) -> bool:
        return not self < self._coerced(other)

    def __hash__(self):
        return hash(self._value)

    def __float__(self) -> float:
        return math.inf if self._value is None else float(self._value)

    def __str__(self) -> str:
        return "inf" if self._value is None else str(self._value)

    def __repr__(self) -> str:
        return f"Exponent({self})"


INF = Exponent("inf")


class _AnyFinite:
    """Marker for the critical Sobolev case: any finite exponent works.

    Callers that need a concrete exponent must choose one themselves.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ANY_FINITE"


ANY_FINITE = _AnyFinite()


@dataclass(frozen=True)
class Verdict:
    """Outcome of an admissibility check; carries the first violated condition."""

    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _admissible() -> Verdict:
    return Verdict(True, None)


def _rejected(reason: str) -> Verdict:
    return Verdict(False, reason)


def holder_conjugate(q: ExponentLike) -> Exponent:
    """Conjugate exponent q/(q-1), with 1 <-> inf."""
    q = Exponent(q)
    if q.is_inf:
        return Exponent(1)
    if q.value == 1:
        return INF
    return Exponent(q.value / (q.value - 1))


def sobolev_star(q: ExponentLike, d: int):
    """Embedding exponent for one weak derivative in d dimensions.

    Returns d*q/(d-q) below the critical exponent, infinity above it, and the
    ANY_FINITE marker at q == d (where every finite exponent is admissible
    but infinity is not).
    """
    q = Exponent(q)
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if q.is_inf or q.value > d:
        return INF
    if q.value == d:
        return ANY_FINITE
    return Exponent(d * q.value / (d - q.value))


@dataclass(frozen=True)
class ExponentTuple:
    """The exponents of one velocity/solution pairing.

    p, q: time/space integrability of the velocity (one weak space derivative);
    alpha, beta: time/space integrability of the scalar solution;
    gamma, gamma_tilde: weak-continuity exponents of the two densities;
    d: spatial dimension.

    Derived exponents (q_prime, q_star, q_star_prime) are recomputed on each
    access, never stored.
    """

    p: Exponent
    q: Exponent
    alpha: Exponent
    beta: Exponent
    gamma: Exponent
    gamma_tilde: Exponent
    d: int

    def __post_init__(self):
        for name in ("p", "q", "alpha", "beta", "gamma", "gamma_tilde"):
            object.__setattr__(self, name, Exponent(getattr(self, name)))
        if not isinstance(self.d, int) or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")

    @property
    def q_prime(self) -> Exponent:
        return holder_conjugate(self.q)

    @property
    def q_star(self):
        return sobolev_star(self.q, self.d)

    @property
    def q_star_prime(self):
        qs = self.q_star
        if qs is ANY_FINITE:
            # conjugate of "any finite" approaches 1 from above
            return ANY_FINITE
        return holder_conjugate(qs)


def check_diperna_lions(e: ExponentTuple) -> Verdict:
    """Admissibility of (p, q, alpha, beta) for the Sobolev-velocity theory.

    Requires (q, beta) != (1, inf), 1/beta + 1/q <= 1 and 1/alpha + 1/p <= 1.
    """
    if e.q == 1 and e.beta.is_inf:
        return _rejected("(q, beta) = (1, inf) is excluded: (q, beta) != (1, inf)")
    s = e.beta.reciprocal + e.q.reciprocal
    if s > 1:
        return _rejected(f"1/beta + 1/q = {s} > 1")
    s = e.alpha.reciprocal + e.p.reciprocal
    if s > 1:
        return _rejected(f"1/alpha + 1/p = {s} > 1")
    return _admissible()


def check_gamma_condition(gamma: ExponentLike, q: ExponentLike, d: int) -> Verdict:
    """The density-integrability condition 1/gamma + 1/q <= 1 + 1/d.

    gamma must exceed 1; that is a precondition, not a verdict.
    """
    gamma, q = Exponent(gamma), Exponent(q)
    if not gamma > 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    if d < 2:
        raise ValueError("dimension must be at least 2")
    lhs = gamma.reciprocal + q.reciprocal
    rhs = 1 + Fraction(1, d)
    if lhs > rhs:
        return _rejected(f"1/gamma + 1/q = {lhs} > 1 + 1/d = {rhs}")
    return _admissible()


def _slot_reciprocal(fixed: Exponent, gate: Exponent):
    """Reciprocal contribution of a substitutable exponent.

    When the gate exponent exceeds 1 and the fixed one is infinite, any finite
    substitute in [1, inf) may be chosen; its reciprocal can be made
    arbitrarily small but never zero.  Returns (value, free) where free marks
    that case.
    """
    if gate > 1 and fixed.is_inf:
        return Fraction(0), True
    return fixed.reciprocal, False


def _sum_condition(terms, label: str) -> Verdict:
    total = Fraction(0)
    free = False
    for value, is_free in terms:
        total += value
        free = free or is_free
    if free:
        if total >= 1:
            return _rejected(
                f"{label}: fixed part {total} leaves no room for a finite substitute (< 1 required)"
            )
    elif total > 1:
        return _rejected(f"{label} = {total} > 1")
    return _admissible()


def check_product_theorem(
    e_rho: ExponentTuple, e_s: ExponentTuple, p: ExponentLike, q: ExponentLike
) -> Verdict:
    """Exponent hypotheses under which the product of a mass density and a
    transported scalar again solves the continuity equation.

    Uses alpha/beta from the two tuples and the velocity exponents p, q.
    Infinite alpha/beta slots may be substituted by a finite exponent when the
    paired velocity exponent exceeds 1; the substituted sum must then stay
    strictly below 1.
    """
    p, q = Exponent(p), Exponent(q)
    for tag, e in (("rho", e_rho), ("s", e_s)):
        if q == 1 and e.beta.is_inf:
            return _rejected(f"(q, beta_{tag}) = (1, inf) is excluded")
    s = e_rho.alpha.reciprocal + e_s.alpha.reciprocal + p.reciprocal
    if s > 1:
        return _rejected(f"1/alpha_rho + 1/alpha_s + 1/p = {s} > 1")
    verdict = _sum_condition(
        [
            _slot_reciprocal(e_rho.beta, q),
            _slot_reciprocal(e_s.beta, q),
            (q.reciprocal, False),
        ],
        "1/r_rho + 1/r_s + 1/q",
    )
    if not verdict:
        return verdict
    verdict = _sum_condition(
        [
            _slot_reciprocal(e_rho.alpha, p),
            _slot_reciprocal(e_s.alpha, p),
            (p.reciprocal, False),
        ],
        "1/t_rho + 1/t_s + 1/p",
    )
    if not verdict:
        return verdict
    return _admissible()


def _growth_ok(growth: Fraction, bound, strict: bool) -> bool:
    if bound is None:  # infinite bound
        return True
    return growth < bound or (growth == bound and not strict)


def classify_renorm_growth(b, e: ExponentTuple) -> set:
    """Growth classes a renormalizing function satisfies for a given tuple.

    ``b`` must expose ``growth_b`` and ``growth_zb_minus_b`` (declared growth
    exponents of b(z) and z*b'(z) - b(z); 0 means bounded) and
    ``bprime_compact`` (whether b' has compact support).  Constants in the
    growth bounds are ignored; only the declared exponents enter.

    Returns a subset of {"REN", "T13", "T13PLUS"}.
    """
    tags = set()
    if getattr(b, "bprime_compact", False):
        tags.add("REN")

    growth_b = Fraction(b.growth_b)
    growth_extra = Fraction(b.growth_zb_minus_b)

    if e.gamma.is_inf:
        thr_plain, strict_plain = None, False
        thr_star, strict_star = None, False
    else:
        # gamma / q' = gamma * (1 - 1/q)
        thr_plain, strict_plain = e.gamma.value * (1 - e.q.reciprocal), False
        qs = e.q_star
        if qs is ANY_FINITE:
            # sup over finite Sobolev exponents is gamma, not attained
            thr_star, strict_star = e.gamma.value, True
        else:
            thr_star, strict_star = e.gamma.value * (1 - qs.reciprocal), False

    if _growth_ok(growth_b, thr_plain, strict_plain):
        tags.add("T13PLUS")
    if _growth_ok(growth_b, thr_star, strict_star) and _growth_ok(
        growth_extra, thr_plain, strict_plain
    ):
        tags.add("T13")
    return tags
