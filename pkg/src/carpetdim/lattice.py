"""Integer-lattice representation of cylinder endpoints.

Endpoint sums  sum_j t(i_j) * ratio^(j-1[-n])  are linear in the power
basis of the field, so once a common denominator D is factored out every
per-level increment is an integer coordinate vector.  Enumeration then
runs on integer vectors (exact by construction), with floating point used
only as a fast certified filter.

Schemes also carry conservative magnitude bounds so callers can prove
that an int64 kernel cannot overflow before dispatching to it; when the
proof fails, callers fall back to arbitrary-precision Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carpet import CarpetIFS
from .errors import BudgetExceeded
from .numberfield import FieldElement, NumberField

INT64_SAFE = 1 << 62


@dataclass
class LatticeScheme:
    """Per-level integer increments for one endpoint sum."""

    field: NumberField
    depth: int
    m: int
    denom: int                      # global denominator D
    incs: list[list[tuple[int, ...]]]   # [level][symbol] -> coords (value = coords.theta / D)
    theta_dbl: list[float]

    @property
    def d(self) -> int:
        return self.field.degree

    @property
    def coord_bound(self) -> int:
        """Bound on any partial-sum coordinate along the enumeration."""
        return sum(max(max(abs(c) for c in vec) for vec in level) for level in self.incs)

    @property
    def value_bound(self) -> float:
        return sum(max(abs(self.value_float(vec)) for vec in level) for level in self.incs)

    def value_float(self, coords) -> float:
        return sum(c * t for c, t in zip(coords, self.theta_dbl)) / self.denom

    def element(self, coords) -> FieldElement:
        return self.field.element([Fraction(int(c), self.denom) for c in coords])

    def fits_int64(self) -> bool:
        return self.coord_bound < INT64_SAFE

    def inc_arrays(self):
        """(int64 [depth, m, d] increments, float64 [depth, m] value increments)."""
        w = np.array(self.incs, dtype=np.int64)
        wd = np.array([[self.value_float(vec) for vec in level] for level in self.incs],
                      dtype=np.float64)
        return w, wd


def _common_denominator(elements) -> int:
    denom = 1
    for elem in elements:
        for c in elem.coeffs:
            denom = denom * c.denominator // math.gcd(denom, c.denominator)
    return denom


def _build_scheme(field: NumberField, translations, ratio_powers) -> LatticeScheme:
    """Increments t_i * ratio_powers[j] for level j, symbol i."""
    elements = [[t * p for t in translations] for p in ratio_powers]
    flat = [e for level in elements for e in level]
    denom = _common_denominator(flat)
    incs = []
    for level in elements:
        row = []
        for e in level:
            row.append(tuple(int(c * denom) for c in e.coeffs))
        incs.append(row)
    theta_dbl = field.theta_doubles(field.degree - 1) if field.degree > 1 else [1.0]
    if field.degree == 1:
        # power basis is just {1}; theta never appears in coordinates
        theta_dbl = [1.0]
    return LatticeScheme(field=field, depth=len(ratio_powers), m=len(translations),
                         denom=denom, incs=incs, theta_dbl=theta_dbl)


def projection_lattice(ifs: CarpetIFS, depth: int, adapted: bool = False) -> LatticeScheme:
    """Scheme for x-endpoints: weights beta^(j-1), or beta^(j-1-depth) when
    ``adapted`` (so word values are already measured in bins of width beta^depth)."""
    tx = [pair[0] for pair in ifs.maps]
    powers = []
    if adapted:
        p = ifs.beta ** (-depth)
    else:
        p = ifs.field.one
    for _ in range(depth):
        powers.append(p)
        p = p * ifs.beta
    return _build_scheme(ifs.field, tx, powers)


def vertical_lattice(ifs: CarpetIFS, depth: int) -> LatticeScheme:
    """Scheme for y-endpoints: weights alpha^(j-1)."""
    ty = [pair[1] for pair in ifs.maps]
    powers = []
    p = ifs.field.one
    for _ in range(depth):
        powers.append(p)
        p = p * ifs.alpha
    return _build_scheme(ifs.field, ty, powers)


def ceil_element(x: FieldElement) -> int:
    f = x.floor()
    return f if (x - f).is_zero() else f + 1


def enumerate_coords(scheme: LatticeScheme, chunk_size: int = 1 << 18):
    """Yield (start_index, int64 coords[rows, d]) chunks over all m^depth words
    in lexicographic order.  Requires scheme.fits_int64()."""
    if not scheme.fits_int64():
        raise OverflowError("lattice coordinates exceed the int64-safe range")
    m, n, d = scheme.m, scheme.depth, scheme.d
    total = m ** n
    w = np.array(scheme.incs, dtype=np.int64)  # [n, m, d]
    pw = [m ** (n - 1 - j) for j in range(n)]
    for start in range(0, total, chunk_size):
        stop = min(start + chunk_size, total)
        idx = np.arange(start, stop, dtype=np.int64)
        coords = np.zeros((stop - start, d), dtype=np.int64)
        for j in range(n):
            digits = (idx // pw[j]) % m
            coords += w[j][digits]
        yield start, coords


def iter_words_coords(scheme: LatticeScheme):
    """Slow exact generator of (word, coords tuple) pairs; arbitrary precision."""
    m, n = scheme.m, scheme.depth
    d = scheme.d
    vec = [0] * d

    def rec(level, vec):
        if level == n:
            yield (), tuple(vec)
            return
        for sym in range(m):
            inc = scheme.incs[level][sym]
            nxt = [a + b for a, b in zip(vec, inc)]
            for word, coords in rec(level + 1, nxt):
                yield (sym + 1,) + word, coords

    yield from rec(0, vec)


def floor_scaled_batch(coords: np.ndarray, denom: int, field: NumberField,
                       theta_dbl, num: int, den: int):
    """Exact (floor(value * den / num), aligned?) per coords row, where
    value = coords.theta / denom and num/den > 0 is rational.

    Float fast path with certified tolerance; rows near an integer are
    resolved exactly in the field.  ``aligned`` marks exact integer ratios.
    """
    n_rows = len(coords)
    aligned = np.zeros(n_rows, dtype=bool)
    scale_num, scale_den = den, denom * num
    if scale_den > 1 << 600 or scale_num > 1 << 600:
        suspect = range(n_rows)          # too large for float; resolve all exactly
        floors = np.zeros(n_rows, dtype=np.int64)
    else:
        scale = scale_num / scale_den
        theta = np.asarray(theta_dbl)
        fcoords = coords.astype(np.float64)
        vals = (fcoords @ theta) * scale
        # tolerance tracks the absolute-value dot product: cancellation between
        # terms does not shrink the rounding error
        absdot = (np.abs(fcoords) @ np.abs(theta)) * scale
        tol = absdot * 2.0 ** -45 + np.abs(fcoords).sum(axis=1) * scale * 2.0 ** -66 \
            + 2.0 ** -45
        floors = np.floor(vals).astype(np.int64)
        dist = np.abs(vals - np.rint(vals))
        suspect = np.nonzero(dist <= tol)[0]
    for row in suspect:
        shifted = [Fraction(int(c) * den, denom * num) for c in coords[row]]
        elem = field.element(shifted)
        f = elem.floor()
        floors[row] = f
        aligned[row] = (elem - f).is_zero()
    return floors, aligned


def check_word_budget(m: int, depth: int, budget: int) -> None:
    if m ** depth > budget:
        raise BudgetExceeded(
            f"enumeration of {m}^{depth} words exceeds the budget of {budget}")
