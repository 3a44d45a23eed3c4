"""Self-affine carpet IFS: validation, word algebra and cylinder geometry.

All maps share the diagonal linear part (x, y) -> (beta*x, alpha*y) with
0 < alpha < beta < 1; map i adds its translation (tx_i, ty_i).  Words are
1-based tuples over the alphabet {1..m}; the leftmost index is the
outermost map, so the word (i1, ..., ik) denotes S_{i1} o ... o S_{ik}.

Every scalar is an exact FieldElement, which is what makes the overlap
equivalence decision downstream tolerance-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    IndexOutOfRange,
    NotContractive,
    OrderViolation,
    ParameterOutOfRange,
    RectangleOverlap,
    TranslationOutOfBox,
)
from .numberfield import RATIONALS, FieldElement, NumberField, scalar_from_json, scalar_to_json

Word = tuple[int, ...]


@dataclass(frozen=True)
class CarpetIFS:
    """A validated carpet IFS; construct through validate_carpet or pu_carpet."""

    field: NumberField
    alpha: FieldElement
    beta: FieldElement
    maps: tuple[tuple[FieldElement, FieldElement], ...]

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    @property
    def beta_float(self) -> float:
        return float(self.beta)

    @property
    def degenerate(self) -> bool:
        """Single-map carpets are accepted but flagged; s is 0 by convention."""
        return self.m == 1

    def check_word(self, word: Sequence[int]) -> Word:
        w = tuple(word)
        if not w:
            raise IndexOutOfRange("words must be non-empty")
        for idx in w:
            if not 1 <= idx <= self.m:
                raise IndexOutOfRange(f"symbol {idx} outside alphabet 1..{self.m}")
        return w

    def to_json(self) -> dict:
        return {
            "alpha": scalar_to_json(self.alpha),
            "beta": scalar_to_json(self.beta),
            "maps": [{"tx": scalar_to_json(tx), "ty": scalar_to_json(ty)}
                     for tx, ty in self.maps],
        }


@dataclass(frozen=True)
class CylinderRect:
    """The rectangle S_w([0,1]^2): width beta^k, height alpha^k, exact corner."""

    x0: FieldElement
    y0: FieldElement
    width: FieldElement
    height: FieldElement
    depth: int


def _as_element(field: NumberField, value) -> FieldElement:
    if isinstance(value, FieldElement):
        if value.field is field or value.is_rational():
            return field.from_rational(value.as_fraction()) if value.is_rational() \
                else value
        if value.field.same_field(field):
            return field.element(value.coeffs)
        raise ParameterOutOfRange("scalar lives in an incompatible field")
    return field.from_rational(Fraction(value))


def validate_carpet(alpha, beta, maps, field: NumberField | None = None) -> CarpetIFS:
    """Validate the standing assumptions and return the carpet.

    maps is a sequence of (tx, ty) pairs; scalars may be ints, Fractions or
    FieldElements of ``field``.  Raises NotContractive, OrderViolation,
    TranslationOutOfBox or RectangleOverlap (with the offending 1-based pair).
    """
    if field is None:
        candidates = [v for v in (alpha, beta) if isinstance(v, FieldElement)]
        for pair in maps:
            candidates.extend(v for v in pair if isinstance(v, FieldElement))
        field = next((v.field for v in candidates if v.field.degree > 1), RATIONALS)
    alpha = _as_element(field, alpha)
    beta = _as_element(field, beta)
    if not maps:
        raise ParameterOutOfRange("a carpet needs at least one map")
    maps = tuple((_as_element(field, tx), _as_element(field, ty)) for tx, ty in maps)

    zero, one = field.zero, field.one
    for name, ratio in (("alpha", alpha), ("beta", beta)):
        if not (zero < ratio < one):
            raise NotContractive(f"{name} must lie in (0, 1)")
    if not alpha < beta:
        raise OrderViolation("standing assumption alpha < beta fails")

    bx, by = one - beta, one - alpha
    for k, (tx, ty) in enumerate(maps, start=1):
        if not (zero <= tx <= bx):
            raise TranslationOutOfBox(f"map {k}: tx outside [0, 1-beta]")
        if not (zero <= ty <= by):
            raise TranslationOutOfBox(f"map {k}: ty outside [0, 1-alpha]")

    # rectangular open set condition: pairwise disjoint open rectangles,
    # decided exactly on each axis (touching boundaries are allowed)
    for i in range(len(maps)):
        for j in range(i + 1, len(maps)):
            xi, yi = maps[i]
            xj, yj = maps[j]
            x_overlap = (xi < xj + beta) and (xj < xi + beta)
            y_overlap = (yi < yj + alpha) and (yj < yi + alpha)
            if x_overlap and y_overlap:
                raise RectangleOverlap(i + 1, j + 1)

    return CarpetIFS(field=field, alpha=alpha, beta=beta, maps=maps)


def carpet_from_json(doc: dict) -> CarpetIFS:
    """Ingest the carpet JSON document form."""
    if not isinstance(doc, dict):
        raise ParameterOutOfRange("carpet document must be a JSON object")
    for key in ("alpha", "beta", "maps"):
        if key not in doc:
            raise ParameterOutOfRange(f"carpet document missing '{key}'")
    scalars = [doc["alpha"], doc["beta"]]
    for entry in doc["maps"]:
        scalars.extend((entry["tx"], entry["ty"]))
    field = None
    for obj in scalars:
        if isinstance(obj, dict) and "field" in obj:
            field = scalar_from_json(obj).field
            break
    if field is None:
        field = RATIONALS
    alpha = scalar_from_json(doc["alpha"], field)
    beta = scalar_from_json(doc["beta"], field)
    maps = [(scalar_from_json(entry["tx"], field), scalar_from_json(entry["ty"], field))
            for entry in doc["maps"]]
    return validate_carpet(alpha, beta, maps, field=field)


def pu_carpet(alpha, beta, field: NumberField | None = None) -> CarpetIFS:
    """The two-map family S_1 = (beta*x, alpha*y), S_2 = S_1 + (1-beta, 1-alpha),
    requiring 0 < alpha <= 1/2 < beta < 1."""
    if field is None:
        for v in (beta, alpha):
            if isinstance(v, FieldElement) and v.field.degree > 1:
                field = v.field
                break
        else:
            field = RATIONALS
    alpha = _as_element(field, alpha)
    beta = _as_element(field, beta)
    half = field.from_rational(Fraction(1, 2))
    if not (field.zero < alpha <= half):
        raise ParameterOutOfRange("need 0 < alpha <= 1/2")
    if not (half < beta < field.one):
        raise ParameterOutOfRange("need 1/2 < beta < 1")
    one = field.one
    return validate_carpet(alpha, beta,
                           [(field.zero, field.zero), (one - beta, one - alpha)],
                           field=field)


def compose_cylinder(ifs: CarpetIFS, word: Sequence[int]) -> CylinderRect:
    """Exact rectangle of the composed map: x0 = sum tx_{i_j} beta^(j-1),
    y0 = sum ty_{i_j} alpha^(j-1)."""
    w = ifs.check_word(word)
    x0, y0 = ifs.field.zero, ifs.field.zero
    bx, by = ifs.field.one, ifs.field.one
    for idx in w:
        tx, ty = ifs.maps[idx - 1]
        x0 = x0 + tx * bx
        y0 = y0 + ty * by
        bx = bx * ifs.beta
        by = by * ifs.alpha
    return CylinderRect(x0=x0, y0=y0, width=bx, height=by, depth=len(w))


def left_endpoint(ifs: CarpetIFS, word: Sequence[int]) -> FieldElement:
    """Left endpoint of the projected cylinder pi S_w(X)."""
    w = ifs.check_word(word)
    x0 = ifs.field.zero
    bx = ifs.field.one
    for idx in w:
        x0 = x0 + ifs.maps[idx - 1][0] * bx
        bx = bx * ifs.beta
    return x0
