"""Pure-Python binning kernel: the reference implementation.

Semantically identical to the compiled kernel in ``carpetdim._binner`` but
runs on arbitrary-precision Python integers, so it has no overflow
certificate to satisfy.  It is used when the extension is unavailable,
when the int64 certificate fails, or when forced via CARPETDIM_KERNEL=pure;
the test suite also compares both backends bin-for-bin.
"""

from __future__ import annotations

import math
from fractions import Fraction

from ..lattice import LatticeScheme


def bin_adapted_sparse(scheme: LatticeScheme, B: int) -> dict[int, list[int]]:
    """Distribute the uniform word masses over a grid of B bins of width
    beta^depth.  Returns coords-per-bin at lattice scale D: the exact mass of
    bin j is (coords . theta) / (D * m^depth).

    Each depth-n cylinder has width exactly one bin, so it either aligns with
    a bin (full mass) or splits across two adjacent bins proportionally.
    """
    if scheme.d == 1:
        return _bin_adapted_rational(scheme, B)
    return _bin_adapted_field(scheme, B)


def _bin_adapted_rational(scheme: LatticeScheme, B: int) -> dict[int, list[int]]:
    # degree-1 field: lattice coordinates ARE scaled values, so floor and
    # alignment are plain integer arithmetic
    m, n, D = scheme.m, scheme.depth, scheme.denom
    incs = [[vec[0] for vec in level] for level in scheme.incs]
    acc: dict[int, int] = {}
    digits = [0] * n
    partial = [0] * (n + 1)
    for j in range(n):
        partial[j + 1] = partial[j] + incs[j][0]
    while True:
        v = partial[n]
        j0, rem = divmod(v, D)
        if rem == 0 or j0 >= B - 1:
            j = min(j0, B - 1)
            acc[j] = acc.get(j, 0) + D
        else:
            acc[j0] = acc.get(j0, 0) + (D - rem)
            acc[j0 + 1] = acc.get(j0 + 1, 0) + rem
        lvl = n - 1
        while lvl >= 0 and digits[lvl] == m - 1:
            digits[lvl] = 0
            lvl -= 1
        if lvl < 0:
            break
        digits[lvl] += 1
        for l in range(lvl, n):
            partial[l + 1] = partial[l] + incs[l][digits[l]]
    return {j: [c] for j, c in acc.items()}


def _bin_adapted_field(scheme: LatticeScheme, B: int) -> dict[int, list[int]]:
    m, n, d, D = scheme.m, scheme.depth, scheme.d, scheme.denom
    incs = scheme.incs
    incf = [[scheme.value_float(vec) for vec in level] for level in incs]
    err = _float_error_bound(scheme)
    theta_lo, theta_hi = _theta_bounds(scheme)
    acc: dict[int, list[int]] = {}

    def add(j, delta):
        row = acc.get(j)
        if row is None:
            acc[j] = list(delta)
        else:
            for c in range(d):
                row[c] += delta[c]

    digits = [0] * n
    pvec = [(0,) * d for _ in range(n + 1)]
    pdbl = [0.0] * (n + 1)
    for j in range(n):
        pvec[j + 1] = tuple(a + b for a, b in zip(pvec[j], incs[j][0]))
        pdbl[j + 1] = pdbl[j] + incf[j][0]
    while True:
        v = pvec[n]
        x = pdbl[n]
        fj = math.floor(x)
        fr = x - fj
        if err < fr < 1.0 - err and fj >= 0 and fj <= B - 2:
            j0 = fj
            d0 = [-c for c in v]
            d0[0] += (j0 + 1) * D
            add(j0, d0)
            d1 = list(v)
            d1[0] -= j0 * D
            add(j0 + 1, d1)
        else:
            _exact_leaf(scheme, theta_lo, theta_hi, v, x, B, D, d, add)
        lvl = n - 1
        while lvl >= 0 and digits[lvl] == m - 1:
            digits[lvl] = 0
            lvl -= 1
        if lvl < 0:
            break
        digits[lvl] += 1
        for l in range(lvl, n):
            sym = digits[l]
            pvec[l + 1] = tuple(a + b for a, b in zip(pvec[l], incs[l][sym]))
            pdbl[l + 1] = pdbl[l] + incf[l][sym]
    return acc


def _exact_leaf(scheme, theta_lo, theta_hi, v, x, B, D, d, add):
    jr = _exact_floor_boundary(scheme, theta_lo, theta_hi, v, x, D)
    j0, aligned = jr
    if aligned or j0 >= B - 1:
        j = min(j0, B - 1)
        delta = [0] * d
        delta[0] = D
        add(j, delta)
    else:
        d0 = [-c for c in v]
        d0[0] += (j0 + 1) * D
        add(j0, d0)
        d1 = list(v)
        d1[0] -= j0 * D
        add(j0 + 1, d1)


def _exact_floor_boundary(scheme, theta_lo, theta_hi, v, x, D):
    """(floor(value), aligned?) for value = v.theta/D known to be within 0.5
    of round(x)."""
    jr = round(x)
    if v[0] == jr * D and all(c == 0 for c in v[1:]):
        return jr, True
    # sign of value - jr via certified rational bounds, exact fallback
    lo = hi = Fraction(v[0] - jr * D)
    for c, (tl, th) in zip(v[1:], zip(theta_lo[1:], theta_hi[1:])):
        if c >= 0:
            lo += c * tl
            hi += c * th
        else:
            lo += c * th
            hi += c * tl
    if lo > 0:
        return jr, False
    if hi < 0:
        return jr - 1, False
    sign = (scheme.element(v) - jr).sign()
    if sign == 0:
        return jr, True  # unreachable: exact alignment was tested above
    return (jr if sign > 0 else jr - 1), False


def _theta_bounds(scheme):
    bounds = scheme.field.theta_bounds(scheme.d - 1, Fraction(1, 1 << 80))
    return [b[0] for b in bounds], [b[1] for b in bounds]


def _float_error_bound(scheme: LatticeScheme) -> float:
    """Certified bound on |float partial sum - true value| at any leaf."""
    magnitude = scheme.value_bound
    err = magnitude * (scheme.depth + 2) * 2.0 ** -48 + 2.0 ** -48
    return max(err, 1e-12)
