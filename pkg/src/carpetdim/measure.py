"""Finite-depth binning of the projected measure and the L^q spectrum.

The projected measure assigns mass m^-n to each depth-n projected cylinder
[x0, x0 + beta^n]; binning distributes that mass over a uniform grid
proportionally to exact overlap length, so the total is exactly 1 at every
depth.  Grid moment sums over the exact masses stand in for the packing
sums behind the L^q spectrum, and two independent estimators recover the
asymptote slope s: the large-q tail of the fitted spectrum, and the
scaling of the heaviest bin across depths.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carpet import CarpetIFS
from .errors import (
    BudgetExceeded,
    InsufficientTail,
    InternalInvariantError,
    NonpositiveQ,
    ParameterOutOfRange,
    ZeroBins,
)
from .kernels import bin_depth_adapted
from .lattice import ceil_element, check_word_budget, projection_lattice
from .numberfield import FieldElement, NumberField
from .regression import SlopeFit, fit_line, rms_residual

DEFAULT_WORD_BUDGET = 1 << 28
DEFAULT_BIN_BUDGET = 1 << 24

# q grid whose tail drives the asymptote fit; the spec's default window
DEFAULT_Q_TAIL = (16.0, 48.0)
DEFAULT_QS = (1.0, 2.0, 4.0, 8.0, 12.0) + tuple(float(q) for q in range(16, 49, 4))


def resolve_workers(workers: int | None = None) -> int:
    cap = None
    env = os.environ.get("CARPETDIM_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            cap = None
    if workers is None:
        workers = min(os.cpu_count() or 1, 8)
    if cap is not None:
        workers = min(workers, cap)
    return max(1, int(workers))


class BinnedMeasure:
    """Exact masses of the projected measure on a uniform grid.

    Bin j covers [j*r, (j+1)*r) with the last bin closed at 1.  Masses are
    held sparsely as integer lattice rows: mass(idx[i]) equals
    rows[i] . theta / (denom * mass_scale), exactly.
    """

    def __init__(self, *, field: NumberField, depth: int, bins: int,
                 bin_width: FieldElement, idx, rows, denom: int, mass_scale: int):
        self.field = field
        self.depth = depth
        self.bins = bins
        self.bin_width_exact = bin_width
        self._idx = np.asarray(idx, dtype=np.int64)
        self._rows = rows
        self.denom = denom
        self.mass_scale = mass_scale

    @property
    def bin_width(self) -> float:
        return float(self.bin_width_exact)

    @property
    def nnz(self) -> int:
        return len(self._idx)

    def nonzero_indices(self) -> np.ndarray:
        return self._idx

    def _row(self, i: int):
        return self._rows[i]

    def mass(self, j: int) -> FieldElement:
        """Exact mass of bin j."""
        if not 0 <= j < self.bins:
            raise IndexError(f"bin {j} outside 0..{self.bins - 1}")
        pos = int(np.searchsorted(self._idx, j))
        if pos >= len(self._idx) or int(self._idx[pos]) != j:
            return self.field.zero
        scale = self.denom * self.mass_scale
        return self.field.element([Fraction(int(c), scale) for c in self._row(pos)])

    def masses_exact(self) -> list[FieldElement]:
        """Dense list of exact masses; intended for small bin counts."""
        return [self.mass(j) for j in range(self.bins)]

    def nonzero_mass_floats(self) -> np.ndarray:
        scale = float(self.denom) * float(self.mass_scale)
        if isinstance(self._rows, np.ndarray):
            theta = np.asarray(self.field.theta_doubles(self.field.degree - 1))
            return (self._rows.astype(np.float64) @ theta) / scale
        return np.array([float(self.field.element(
            [Fraction(int(c), self.denom * self.mass_scale) for c in row]))
            for row in self._rows])

    def masses_float(self) -> np.ndarray:
        dense = np.zeros(self.bins)
        dense[self._idx] = self.nonzero_mass_floats()
        return dense

    def total(self) -> FieldElement:
        acc = self.field.zero
        for i in range(self.nnz):
            acc = acc + self.field.element(
                [Fraction(int(c), self.denom * self.mass_scale) for c in self._row(i)])
        return acc

    def aggregate(self, factor: int) -> "BinnedMeasure":
        """Merge blocks of ``factor`` adjacent bins exactly (grids must nest)."""
        if factor < 1 or self.bins % factor:
            raise ParameterOutOfRange("factor must divide the bin count")
        merged: dict[int, list[int]] = {}
        d = self.field.degree
        for i in range(self.nnz):
            j = int(self._idx[i]) // factor
            row = merged.setdefault(j, [0] * d)
            for c in range(d):
                row[c] += int(self._row(i)[c])
        idx = np.array(sorted(merged), dtype=np.int64)
        rows = [tuple(merged[int(j)]) for j in idx]
        arr: object = rows
        if all(all(abs(c) < (1 << 62) for c in row) for row in rows):
            arr = np.array(rows, dtype=np.int64).reshape(len(rows), d)
        return BinnedMeasure(field=self.field, depth=self.depth,
                             bins=self.bins // factor,
                             bin_width=self.bin_width_exact * factor,
                             idx=idx, rows=arr, denom=self.denom,
                             mass_scale=self.mass_scale)

    # -- binary cache dump (length-prefixed integers) --------------------------

    def to_binary(self, path) -> None:
        def put_int(f, value: int):
            raw = value.to_bytes((value.bit_length() + 8) // 8, "little", signed=True)
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)

        with open(path, "wb") as f:
            f.write(b"CBM1")
            f.write(struct.pack("<qqq", self.depth, self.bins, self.field.degree))
            put_int(f, self.denom)
            put_int(f, self.mass_scale)
            f.write(struct.pack("<q", self.nnz))
            for i in range(self.nnz):
                f.write(struct.pack("<q", int(self._idx[i])))
                for c in self._row(i):
                    put_int(f, int(c))

    @classmethod
    def from_binary(cls, path, field: NumberField, bin_width: FieldElement) -> "BinnedMeasure":
        def get_int(f) -> int:
            (ln,) = struct.unpack("<I", f.read(4))
            return int.from_bytes(f.read(ln), "little", signed=True)

        with open(path, "rb") as f:
            if f.read(4) != b"CBM1":
                raise ValueError("not a BinnedMeasure dump")
            depth, bins, d = struct.unpack("<qqq", f.read(24))
            if d != field.degree:
                raise ValueError("field degree mismatch")
            denom = get_int(f)
            mass_scale = get_int(f)
            (nnz,) = struct.unpack("<q", f.read(8))
            idx = np.empty(nnz, dtype=np.int64)
            rows = []
            for i in range(nnz):
                (idx[i],) = struct.unpack("<q", f.read(8))
                rows.append(tuple(get_int(f) for _ in range(d)))
            arr: object = rows
            if all(all(abs(c) < (1 << 62) for c in row) for row in rows):
                arr = np.array(rows, dtype=np.int64).reshape(nnz, d)
            return cls(field=field, depth=depth, bins=bins, bin_width=bin_width,
                       idx=idx, rows=arr, denom=denom, mass_scale=mass_scale)


def bin_projected_measure(ifs: CarpetIFS, depth: int, bins: int | None = None,
                          workers: int | None = None,
                          word_budget: int = DEFAULT_WORD_BUDGET,
                          bin_budget: int = DEFAULT_BIN_BUDGET) -> BinnedMeasure:
    """Exact binned pushforward at the given depth.

    bins=None selects the measure-adapted grid of width beta^depth
    (B = ceil(beta^-depth)), the scale the estimators use; an explicit bin
    count selects the uniform grid of width 1/bins.
    """
    if depth < 1:
        raise ParameterOutOfRange("depth must be >= 1")
    check_word_budget(ifs.m, depth, word_budget)
    if bins is None:
        width = ifs.beta ** depth
        B = ceil_element(ifs.beta ** (-depth))
        if B > bin_budget:
            raise BudgetExceeded(f"{B} bins exceed the bin budget {bin_budget}")
        scheme = projection_lattice(ifs, depth, adapted=True)
        idx, rows = bin_depth_adapted(scheme, B, workers=resolve_workers(workers))
        return BinnedMeasure(field=ifs.field, depth=depth, bins=B, bin_width=width,
                             idx=idx, rows=rows, denom=scheme.denom,
                             mass_scale=ifs.m ** depth)
    if bins < 1:
        raise ZeroBins("need at least one bin")
    if bins > bin_budget:
        raise BudgetExceeded(f"{bins} bins exceed the bin budget {bin_budget}")
    return _bin_general(ifs, depth, bins)


def _iter_endpoints(ifs: CarpetIFS, depth: int):
    """Exact left endpoints of all depth-n projected cylinders, in lex order."""
    m = ifs.m
    tx = [pair[0] for pair in ifs.maps]
    powers = []
    p = ifs.field.one
    for _ in range(depth):
        powers.append(p)
        p = p * ifs.beta
    digits = [0] * depth
    partial = [ifs.field.zero] * (depth + 1)
    for j in range(depth):
        partial[j + 1] = partial[j] + tx[0] * powers[j]
    while True:
        yield partial[depth]
        lvl = depth - 1
        while lvl >= 0 and digits[lvl] == m - 1:
            digits[lvl] = 0
            lvl -= 1
        if lvl < 0:
            return
        digits[lvl] += 1
        for l in range(lvl, depth):
            partial[l + 1] = partial[l] + tx[digits[l]] * powers[l]


def _bin_general(ifs: CarpetIFS, depth: int, B: int) -> BinnedMeasure:
    field = ifs.field
    width = ifs.beta ** depth
    r = Fraction(1, B)
    scale = (width * (ifs.m ** depth)).inverse()
    masses: dict[int, FieldElement] = {}
    for x0 in _iter_endpoints(ifs, depth):
        x1 = x0 + width
        jlo = (x0 * B).floor()
        x1B = x1 * B
        jhi = x1B.floor()
        if (x1B - jhi).is_zero():
            jhi -= 1  # right-open bins: zero-length overlap contributes nothing
        jhi = min(jhi, B - 1)
        for j in range(jlo, jhi + 1):
            lo = x0 if j == jlo else field.from_rational(j * r)
            hi = x1 if j == jhi else field.from_rational((j + 1) * r)
            overlap = hi - lo
            masses[j] = masses.get(j, field.zero) + overlap * scale
    idx = np.array(sorted(masses), dtype=np.int64)
    denom = 1
    for j in masses:
        for c in masses[j].coeffs:
            denom = denom * c.denominator // math.gcd(denom, c.denominator)
    rows = [tuple(int(c * denom) for c in masses[int(j)].coeffs) for j in idx]
    arr: object = rows
    if all(all(abs(c) < (1 << 62) for c in row) for row in rows):
        arr = np.array(rows, dtype=np.int64).reshape(len(rows), field.degree)
    bm = BinnedMeasure(field=field, depth=depth, bins=B,
                       bin_width=field.from_rational(r), idx=idx, rows=arr,
                       denom=denom, mass_scale=1)
    if not (bm.total() - 1).is_zero():
        raise InternalInvariantError("general binning lost mass")
    return bm


def moment_sum(bm: BinnedMeasure, q: float) -> float:
    """Grid moment sum over bins of positive mass: sum mass^q."""
    if q <= 0:
        raise NonpositiveQ("moment sums require q > 0")
    vals = bm.nonzero_mass_floats()
    vals = np.clip(vals, 0.0, None)  # guard float cancellation on exact-nonzero rows
    return float(np.sum(vals ** q))


@dataclass(frozen=True)
class TauSample:
    q: float
    tau_hat: float
    residual: float


@dataclass(frozen=True)
class LqSpectrumEstimate:
    samples: tuple[TauSample, ...]
    scale_range: tuple[float, float]
    method: str = "grid-moment-beta-adapted"

    def tau(self, q: float) -> float:
        for s in self.samples:
            if s.q == q:
                return s.tau_hat
        raise KeyError(f"q={q} not sampled")


def estimate_tau(ifs: CarpetIFS, q_list=DEFAULT_QS, depths=(8, 10, 12, 14),
                 workers: int | None = None,
                 word_budget: int = DEFAULT_WORD_BUDGET,
                 bin_budget: int = DEFAULT_BIN_BUDGET) -> LqSpectrumEstimate:
    """Fit tau(q) as the slope of log moment sums against log bin width over
    the depth schedule (bin width beta^n at depth n)."""
    depths = sorted(set(int(n) for n in depths))
    if len(depths) < 3:
        raise ParameterOutOfRange("need at least 3 depths")
    qs = sorted(set(float(q) for q in q_list))
    if not qs:
        raise ParameterOutOfRange("empty q list")
    if qs[0] <= 0:
        raise NonpositiveQ("q values must be positive")
    logb = math.log(ifs.beta_float)
    log_r = [n * logb for n in depths]
    log_m = {q: [] for q in qs}
    for n in depths:
        bm = bin_projected_measure(ifs, n, workers=workers,
                                   word_budget=word_budget, bin_budget=bin_budget)
        for q in qs:
            # moment sums are mathematically positive; the max guards float underflow
            log_m[q].append(math.log(max(moment_sum(bm, q), 1e-300)))
    samples = []
    for q in qs:
        fit = fit_line(log_r, log_m[q])
        samples.append(TauSample(q=q, tau_hat=fit.slope,
                                 residual=rms_residual(fit, log_r, log_m[q])))
    return LqSpectrumEstimate(samples=tuple(samples),
                              scale_range=(math.exp(min(log_r)), math.exp(max(log_r))))


def estimate_s_from_tau(spec: LqSpectrumEstimate,
                        q_tail: tuple[float, float] = DEFAULT_Q_TAIL) -> SlopeFit:
    """Slope of the spectrum asymptote: fit tau_hat = s*q - c on the
    large-q tail."""
    lo, hi = q_tail
    tail = [s for s in spec.samples if lo <= s.q <= hi]
    if len(tail) < 3:
        raise InsufficientTail(
            f"need >= 3 samples with q in [{lo}, {hi}], have {len(tail)}")
    return fit_line([s.q for s in tail], [s.tau_hat for s in tail])


def min_bin_series(ifs: CarpetIFS, depths, workers: int | None = None,
                   word_budget: int = DEFAULT_WORD_BUDGET,
                   bin_budget: int = DEFAULT_BIN_BUDGET):
    """Per-depth rows (depth, bin_width, min_bin_dim) where min_bin_dim is the
    minimum over nonzero bins of log mass / log bin width."""
    rows = []
    for n in sorted(set(int(n) for n in depths)):
        bm = bin_projected_measure(ifs, n, workers=workers,
                                   word_budget=word_budget, bin_budget=bin_budget)
        vals = bm.nonzero_mass_floats()
        vals = vals[vals > 0]
        r = bm.bin_width
        dims = np.log(vals) / math.log(r)
        rows.append((n, r, float(np.min(dims))))
    return rows


def fit_min_bin(series) -> SlopeFit:
    """Extrapolate the min-bin dimension across depths: slope of log max-mass
    against log bin width (the constant C drops out of the slope)."""
    if len(series) < 3:
        raise ParameterOutOfRange("need at least 3 depths")
    xs = [math.log(r) for _, r, _ in series]
    ys = [dim * math.log(r) for _, r, dim in series]
    return fit_line(xs, ys)


def estimate_s_min_bin(ifs: CarpetIFS, depths, workers: int | None = None,
                       word_budget: int = DEFAULT_WORD_BUDGET,
                       bin_budget: int = DEFAULT_BIN_BUDGET) -> SlopeFit:
    """Independent estimator of s from the scaling of the heaviest bin."""
    return fit_min_bin(min_bin_series(ifs, depths, workers=workers,
                                      word_budget=word_budget, bin_budget=bin_budget))


def convolution_lower_bound(beta) -> float:
    """Lower bound for s(beta) from the convolution structure: with n the
    unique integer satisfying beta^n <= 1/2 < beta^(n-1), the bound is
    log 2 / (-n log beta), and it exceeds 1/2 for every beta in (1/2, 1)."""
    if isinstance(beta, FieldElement):
        field = beta.field
    else:
        from .numberfield import RATIONALS
        field = RATIONALS
        beta = field.from_rational(Fraction(beta))
    half = field.from_rational(Fraction(1, 2))
    if not (half < beta < field.one):
        raise ParameterOutOfRange("need 1/2 < beta < 1")
    power = beta
    n = 1
    while power > half:
        power = power * beta
        n += 1
        if n > 10000:
            raise ParameterOutOfRange("beta too close to 1")
    if (power - half).is_zero():
        # beta^n = 1/2 exactly, so -n log beta = log 2 and the bound is exactly 1
        return 1.0
    return math.log(2.0) / (-n * math.log(float(beta)))
