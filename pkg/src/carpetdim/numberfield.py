"""Exact arithmetic in Q and in real algebraic number fields Q(theta).

A field is described by the monic integer minimal polynomial of its
generator theta together with a rational interval isolating the intended
real root.  Elements are vectors of rational coordinates in the power
basis 1, theta, ..., theta^(d-1); equality and zero tests are exact, and
signs are decided by refining the root interval until exact interval
arithmetic separates the value from zero.

The degree-1 field (minpoly x, theta = 0) plays the role of plain Q; the
module-level singleton RATIONALS is that field.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import FieldMismatch, PrecisionUnreachable

_MAX_BISECTIONS = 20000

Rational = int | Fraction


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _interval_mul(a, b):
    (alo, ahi), (blo, bhi) = a, b
    products = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
    return (min(products), max(products))


def _poly_eval_interval(coeffs: Sequence[Fraction], box) -> tuple[Fraction, Fraction]:
    """Exact interval Horner evaluation of a polynomial at an interval."""
    lo = hi = Fraction(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        lo, hi = _interval_mul((lo, hi), box)
        lo, hi = lo + c, hi + c
    return lo, hi


class NumberField:
    """A real number field Q(theta), theta a simple real root of a monic
    integer polynomial.

    Irreducibility of the minimal polynomial is asserted by the caller
    (verified in the test suite for the shipped presets); a reducible
    polynomial yields documented-undefined results.
    """

    __slots__ = ("minpoly", "degree", "_iso", "_reduction", "_frac_minpoly")

    def __init__(self, minpoly: Sequence[int], isolation: tuple[Rational, Rational]):
        coeffs = tuple(int(c) for c in minpoly)
        if len(coeffs) < 2:
            raise ValueError("minpoly must have degree >= 1")
        if coeffs[-1] != 1:
            raise ValueError("minpoly must be monic")
        self.minpoly = coeffs
        self.degree = len(coeffs) - 1
        self._frac_minpoly = tuple(Fraction(c) for c in coeffs)
        if self.degree == 1:
            theta = Fraction(-coeffs[0])
            self._iso = (theta, theta)
        else:
            lo, hi = Fraction(isolation[0]), Fraction(isolation[1])
            if not lo < hi:
                raise ValueError("isolation interval must be nondegenerate")
            plo = _poly_eval(self._frac_minpoly, lo)
            phi = _poly_eval(self._frac_minpoly, hi)
            if plo == 0 or phi == 0:
                raise ValueError("isolation endpoints must not be roots")
            if (plo > 0) == (phi > 0):
                raise ValueError("minpoly does not change sign on the isolation interval")
            self._iso = (lo, hi)
            self._ensure_unique_root()
        self._reduction = self._reduction_table()

    def _reduction_table(self) -> list[tuple[Fraction, ...]]:
        # vectors expressing theta^e, e = d .. 2(d-1), in the power basis
        d = self.degree
        table = []
        current = [Fraction(-c) for c in self.minpoly[:d]]  # theta^d
        table.append(tuple(current))
        for _ in range(d - 2):
            shifted = [Fraction(0)] + current[:-1]
            top = current[-1]
            current = [shifted[i] + top * table[0][i] for i in range(d)]
            table.append(tuple(current))
        return table

    def _bisect_once(self) -> None:
        lo, hi = self._iso
        mid = (lo + hi) / 2
        pm = _poly_eval(self._frac_minpoly, mid)
        if pm == 0:
            raise ValueError("minpoly has a rational root inside the isolation interval; "
                             "it is reducible")
        plo = _poly_eval(self._frac_minpoly, lo)
        if (plo > 0) != (pm > 0):
            self._iso = (lo, mid)
        else:
            self._iso = (mid, hi)

    def _ensure_unique_root(self) -> None:
        # refine until the derivative has constant sign on the interval,
        # which certifies exactly one (simple) root inside
        deriv = tuple(i * c for i, c in enumerate(self._frac_minpoly))[1:]
        for _ in range(_MAX_BISECTIONS):
            dlo, dhi = _poly_eval_interval(deriv, self._iso)
            if dlo > 0 or dhi < 0:
                return
            self._bisect_once()
        raise PrecisionUnreachable("could not certify a unique root; is the root simple?")

    def root_interval(self, max_width: Fraction | None = None) -> tuple[Fraction, Fraction]:
        """Current (optionally refined) isolating interval for theta."""
        if max_width is not None:
            lo, hi = self._iso
            steps = 0
            while hi - lo > max_width:
                self._bisect_once()
                lo, hi = self._iso
                steps += 1
                if steps > _MAX_BISECTIONS:
                    raise PrecisionUnreachable("root refinement iteration cap hit")
        return self._iso

    def theta_bounds(self, max_exp: int, max_width: Fraction) -> list[tuple[Fraction, Fraction]]:
        """Certified rational bounds for theta^0 .. theta^max_exp, each of
        width at most max_width."""
        one = (Fraction(1), Fraction(1))
        for _ in range(_MAX_BISECTIONS):
            iso = self.root_interval()
            bounds = [one]
            for _e in range(max_exp):
                bounds.append(_interval_mul(bounds[-1], iso))
            if all(hi - lo <= max_width for lo, hi in bounds):
                return bounds
            self._bisect_once()
        raise PrecisionUnreachable("theta power bounds refinement cap hit")

    def theta_doubles(self, max_exp: int) -> list[float]:
        bounds = self.theta_bounds(max_exp, Fraction(1, 1 << 70))
        return [float((lo + hi) / 2) for lo, hi in bounds]

    # -- element constructors ------------------------------------------------

    def element(self, coeffs: Iterable[Rational]) -> "FieldElement":
        vec = [Fraction(c) for c in coeffs]
        if len(vec) > self.degree:
            raise ValueError(f"expected at most {self.degree} coordinates")
        vec += [Fraction(0)] * (self.degree - len(vec))
        return FieldElement(self, tuple(vec))

    def from_rational(self, value: Rational) -> "FieldElement":
        return self.element([Fraction(value)])

    @property
    def zero(self) -> "FieldElement":
        return self.from_rational(0)

    @property
    def one(self) -> "FieldElement":
        return self.from_rational(1)

    @property
    def theta(self) -> "FieldElement":
        if self.degree == 1:
            return self.from_rational(self._iso[0])
        return self.element([0, 1])

    # -- identity ------------------------------------------------------------

    def same_field(self, other: "NumberField") -> bool:
        """Whether two field objects describe the same embedded field: equal
        minimal polynomial and isolating intervals pinning the same root."""
        if self is other:
            return True
        if self.minpoly != other.minpoly:
            return False
        if self.degree == 1:
            return True
        for _ in range(_MAX_BISECTIONS):
            alo, ahi = self._iso
            blo, bhi = other._iso
            lo, hi = max(alo, blo), min(ahi, bhi)
            if lo >= hi:
                return False
            plo = _poly_eval(self._frac_minpoly, lo)
            phi = _poly_eval(self._frac_minpoly, hi)
            if plo == 0 or phi == 0 or (plo > 0) != (phi > 0):
                # a root lies in the overlap, hence both isolate it
                return True
            self._bisect_once()
            other._bisect_once()
        raise PrecisionUnreachable("field comparison refinement cap hit")

    def __repr__(self):
        poly = " + ".join(f"{c}*x^{i}" for i, c in enumerate(self.minpoly) if c)
        lo, hi = self._iso
        return f"NumberField({poly} = 0, root in [{lo}, {hi}])"


RATIONALS = NumberField((0, 1), (0, 0))


def _coerce_pair(a: "FieldElement", b) -> tuple["FieldElement", "FieldElement"]:
    if isinstance(b, (int, Fraction)):
        return a, a.field.from_rational(b)
    if not isinstance(b, FieldElement):
        raise TypeError(f"cannot combine FieldElement with {type(b).__name__}")
    if a.field is b.field:
        return a, b
    if b.field.degree == 1 and b.is_rational():
        return a, a.field.from_rational(b.coeffs[0])
    if a.field.degree == 1 and a.is_rational():
        return b.field.from_rational(a.coeffs[0]), b
    if a.field.same_field(b.field):
        return a, FieldElement(a.field, b.coeffs)
    raise FieldMismatch(f"elements of {a.field!r} and {b.field!r} cannot be combined")


class FieldElement:
    """An exact element of a NumberField, canonical in the power basis."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: NumberField, coeffs: tuple[Fraction, ...]):
        self.field = field
        self.coeffs = coeffs

    # -- ring operations -----------------------------------------------------

    def __add__(self, other):
        a, b = _coerce_pair(self, other)
        return FieldElement(a.field, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-x for x in self.coeffs))

    def __sub__(self, other):
        a, b = _coerce_pair(self, other)
        return FieldElement(a.field, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = _coerce_pair(self, other)
        d = a.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, x in enumerate(a.coeffs):
            if not x:
                continue
            for j, y in enumerate(b.coeffs):
                if y:
                    prod[i + j] += x * y
        out = prod[:d]
        for e in range(d, 2 * d - 1):
            c = prod[e]
            if c:
                red = a.field._reduction[e - d]
                for i in range(d):
                    out[i] += c * red[i]
        return FieldElement(a.field, tuple(out))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("field element is zero")
        if self.field.degree == 1:
            return self.field.from_rational(1 / self.coeffs[0])
        # extended Euclid in Q[x] against the minimal polynomial
        r0 = list(self.field._frac_minpoly)
        r1 = list(self.coeffs)
        s0, s1 = [Fraction(0)], [Fraction(1)]

        def _strip(p):
            while p and p[-1] == 0:
                p.pop()
            return p

        _strip(r1)
        while len(_strip(r1)) > 1:
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        if not r1:
            raise ZeroDivisionError("element shares a factor with the minimal polynomial; "
                                    "is it reducible?")
        scale = 1 / r1[0]
        inv = [c * scale for c in s1]
        return self.field.element(inv[:self.field.degree])

    def __truediv__(self, other):
        a, b = _coerce_pair(self, other)
        return a * b.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise TypeError("exponent must be an integer")
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = self.field.one
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- predicates and comparisons -------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is not rational")
        return self._rational_value()

    def is_integer(self) -> bool:
        return self.is_rational() and self._rational_value().denominator == 1

    def _rational_value(self) -> Fraction:
        # exact rational value, valid only when is_rational()
        return self.coeffs[0]

    def sign(self) -> int:
        if self.is_zero():
            return 0
        if self.is_rational():
            return 1 if self.coeffs[0] > 0 else -1
        for _ in range(_MAX_BISECTIONS):
            lo, hi = _poly_eval_interval(self.coeffs, self.field.root_interval())
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            self.field._bisect_once()
        raise PrecisionUnreachable("sign determination cap hit")

    def __eq__(self, other):
        try:
            a, b = _coerce_pair(self, other)
        except (TypeError, FieldMismatch):
            return NotImplemented
        return a.coeffs == b.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self._rational_value())
        return hash((self.field.minpoly, self.coeffs))

    def __lt__(self, other):
        a, b = _coerce_pair(self, other)
        return (a - b).sign() < 0

    def __le__(self, other):
        a, b = _coerce_pair(self, other)
        return (a - b).sign() <= 0

    def __gt__(self, other):
        a, b = _coerce_pair(self, other)
        return (a - b).sign() > 0

    def __ge__(self, other):
        a, b = _coerce_pair(self, other)
        return (a - b).sign() >= 0

    # -- numeric embedding -----------------------------------------------------

    def embed(self, bits: int) -> tuple[Fraction, Fraction]:
        """A certified rational interval of width <= 2**-bits containing the value."""
        if self.is_rational():
            v = self._rational_value()
            return (v, v)
        target = Fraction(1, 1 << bits)
        for _ in range(_MAX_BISECTIONS):
            lo, hi = _poly_eval_interval(self.coeffs, self.field.root_interval())
            if hi - lo <= target:
                return lo, hi
            self.field._bisect_once()
        raise PrecisionUnreachable(f"embedding to {bits} bits hit the iteration cap")

    def __float__(self):
        lo, hi = self.embed(60)
        return float((lo + hi) / 2)

    def floor(self) -> int:
        if self.is_rational():
            return math.floor(self._rational_value())
        for _ in range(_MAX_BISECTIONS):
            lo, hi = _poly_eval_interval(self.coeffs, self.field.root_interval())
            n0 = math.floor(lo)
            if hi < n0 + 1:
                return n0
            if (self - (n0 + 1)).is_zero():
                return n0 + 1
            self.field._bisect_once()
        raise PrecisionUnreachable("floor refinement cap hit")

    def __repr__(self):
        if self.is_rational():
            return f"FieldElement({self._rational_value()})"
        terms = " + ".join(f"({c})*t^{i}" for i, c in enumerate(self.coeffs) if c)
        return f"FieldElement({terms or 0})"


# -- dense polynomial helpers over Fraction (little-endian, for inverses) ------

def _poly_divmod(a: list[Fraction], b: list[Fraction]):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    db, lb = len(b) - 1, b[-1]
    q = [Fraction(0)] * max(1, len(a) - db)
    while len(a) - 1 >= db and any(a):
        shift = len(a) - 1 - db
        c = a[-1] / lb
        q[shift] = c
        for i in range(db + 1):
            a[shift + i] -= c * b[i]
        while a and a[-1] == 0:
            a.pop()
    return q, a


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_sub(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    a = a + [Fraction(0)] * (n - len(a))
    b = b + [Fraction(0)] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


# -- JSON scalar form ----------------------------------------------------------

def field_from_root_hint(minpoly: Sequence[int], approx: float) -> NumberField:
    """Build a field whose generator is the real root of ``minpoly`` nearest
    the floating hint ``approx`` (the hint must be closer to the intended
    root than to any other)."""
    coeffs = tuple(int(c) for c in minpoly)
    if len(coeffs) == 2:
        return NumberField(coeffs, (0, 0))
    frac = tuple(Fraction(c) for c in coeffs)
    center = Fraction(approx).limit_denominator(10**12)
    width = Fraction(1, 1 << 16)
    for _ in range(80):
        lo, hi = center - width, center + width
        plo, phi = _poly_eval(frac, lo), _poly_eval(frac, hi)
        if plo == 0 or phi == 0:
            width *= Fraction(3, 2)
            continue
        if (plo > 0) != (phi > 0):
            return NumberField(coeffs, (lo, hi))
        width *= 2
    raise ValueError(f"no sign change of {coeffs} found near {approx}")


def scalar_to_json(x: FieldElement) -> dict:
    if x.is_rational():
        v = x._rational_value()
        return {"rat": [v.numerator, v.denominator]}
    field = x.field
    lo, hi = x.embed(40)
    return {
        "field": {
            "minpoly": list(field.minpoly),
            "coeffs": [[c.numerator, c.denominator] for c in x.coeffs],
            "approx": float((lo + hi) / 2),
        }
    }


def scalar_from_json(obj, field: NumberField | None = None) -> FieldElement:
    """Parse the Scalar JSON form.  ``field``, when given, is the carpet's
    ambient field: rationals are lifted into it and field scalars must match it."""
    if not isinstance(obj, dict):
        raise ValueError(f"scalar must be an object, got {type(obj).__name__}")
    if "rat" in obj:
        num, den = obj["rat"]
        value = Fraction(int(num), int(den))
        return (field or RATIONALS).from_rational(value)
    if "field" in obj:
        body = obj["field"]
        minpoly = [int(c) for c in body["minpoly"]]
        coeffs = [Fraction(int(n), int(d)) for n, d in body["coeffs"]]
        if field is None:
            field = field_from_root_hint(minpoly, float(body.get("approx", 0.0)))
        else:
            candidate = field_from_root_hint(minpoly, float(body.get("approx", 0.0)))
            if not field.same_field(candidate):
                raise FieldMismatch("scalar lives in a different field than the carpet")
        return field.element(coeffs)
    raise ValueError("scalar object must carry a 'rat' or 'field' key")
