"""Box counting for the attractor and its projection, and the two-scale
covering-exponent estimator behind the Assouad dimension.

Counting convention: grid cells are half-open per axis, [j*r, (j+1)*r),
and so are cylinder sides, so exact boundary touching never counts (a
grid-aligned OSC carpet at its natural scale is counted by exactly its
cylinders).  The set F is approximated by its depth-n cylinders with the
height below the counting resolution.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carpet import CarpetIFS, compose_cylinder
from .errors import BudgetExceeded, InsufficientScales, ParameterOutOfRange
from .lattice import (
    check_word_budget,
    enumerate_coords,
    floor_scaled_batch,
    iter_words_coords,
    projection_lattice,
    vertical_lattice,
)
from .measure import DEFAULT_WORD_BUDGET, bin_projected_measure
from .numberfield import FieldElement
from .regression import SlopeFit, fit_line

_DEPTH_CAP = 512


def _auto_depth(ratio: FieldElement, r: Fraction) -> int:
    """Smallest n >= 1 with ratio^n <= r (exact comparison)."""
    if not 0 < r < 1:
        raise ParameterOutOfRange("scale r must lie in (0, 1)")
    power = ratio
    n = 1
    while power > r:
        power = power * ratio
        n += 1
        if n > _DEPTH_CAP:
            raise BudgetExceeded("scale requires unreasonable depth")
    return n


def _denominator_of(elem: FieldElement) -> int:
    denom = 1
    for c in elem.coeffs:
        denom = denom * c.denominator // math.gcd(denom, c.denominator)
    return denom


def _halfopen_ranges(scheme, coords, shift_vec, D2, s, r: Fraction, grid: int):
    """Cell index ranges [a, b] of half-open intervals [x, x + w) at scale r,
    where x = coords.theta/D and the lattice vector of w (at denominator D2)
    is shift_vec."""
    scaled = coords * s if s != 1 else coords
    lo_f, _ = floor_scaled_batch(scaled, D2, scheme.field, scheme.theta_dbl,
                                 r.numerator, r.denominator)
    hi_f, hi_al = floor_scaled_batch(scaled + shift_vec, D2, scheme.field,
                                     scheme.theta_dbl, r.numerator, r.denominator)
    a = np.clip(lo_f, 0, grid - 1)
    b = np.clip(hi_f - hi_al.astype(np.int64), 0, grid - 1)
    return a, b


def _width_lattice(scheme, width: FieldElement):
    """(D2, s, shift_vec): lattice data for adding ``width`` to endpoints held
    at scheme.denom; D2 = lcm(denoms), endpoints scale by s = D2/denom."""
    wden = _denominator_of(width)
    D = scheme.denom
    D2 = D * wden // math.gcd(D, wden)
    s = D2 // D
    vec = np.array([int(c * D2) for c in width.coeffs], dtype=np.int64)
    return D2, s, vec


def box_count_projection(ifs: CarpetIFS, r, word_budget: int = DEFAULT_WORD_BUDGET) -> int:
    """Number of width-r grid intervals meeting the union of depth-n projected
    cylinders, with beta^n <= r auto-selected."""
    r = Fraction(r)
    n = _auto_depth(ifs.beta, r)
    check_word_budget(ifs.m, n, word_budget)
    grid = math.ceil(1 / r)
    scheme = projection_lattice(ifs, n)
    width = ifs.beta ** n
    D2, s, wvec = _width_lattice(scheme, width)
    if scheme.coord_bound * s + int(np.abs(wvec).max()) >= 1 << 62:
        return _box_count_projection_exact(ifs, n, r, grid)
    bitmap = np.zeros(grid, dtype=bool)
    for _start, coords in enumerate_coords(scheme):
        a, b = _halfopen_ranges(scheme, coords, wvec, D2, s, r, grid)
        for lo, hi in zip(a, b):
            bitmap[lo:hi + 1] = True
    return int(bitmap.sum())


def _cells_halfopen(lo: FieldElement, hi: FieldElement, rinv: FieldElement):
    """Cell range [a, b] of the half-open interval [lo, hi) at scale 1/rinv;
    returns None when empty."""
    t = lo * rinv
    a = t.floor()
    u = hi * rinv
    b = u.floor()
    if (u - b).is_zero():
        b -= 1
    if b < a:
        return None
    return a, b


def _box_count_projection_exact(ifs: CarpetIFS, n: int, r: Fraction, grid: int) -> int:
    scheme = projection_lattice(ifs, n)
    width = ifs.beta ** n
    rinv = ifs.field.from_rational(1 / r)
    bitmap = np.zeros(grid, dtype=bool)
    for _word, coords in iter_words_coords(scheme):
        x0 = scheme.element(coords)
        rng = _cells_halfopen(x0, x0 + width, rinv)
        if rng is not None:
            a, b = max(rng[0], 0), min(rng[1], grid - 1)
            bitmap[a:b + 1] = True
    return int(bitmap.sum())


def box_count_attractor(ifs: CarpetIFS, r, word_budget: int = DEFAULT_WORD_BUDGET) -> int:
    """Number of r-grid cells on [0,1]^2 meeting the union of depth-n cylinder
    rectangles, with alpha^n <= r auto-selected (height below resolution)."""
    r = Fraction(r)
    n = _auto_depth(ifs.alpha, r)
    check_word_budget(ifs.m, n, word_budget)
    grid = math.ceil(1 / r)
    sx = projection_lattice(ifs, n)
    sy = vertical_lattice(ifs, n)
    wx = ifs.beta ** n
    wy = ifs.alpha ** n
    DX, scx, wxvec = _width_lattice(sx, wx)
    DY, scy, wyvec = _width_lattice(sy, wy)
    if (sx.coord_bound * scx + int(np.abs(wxvec).max()) >= 1 << 62
            or sy.coord_bound * scy + int(np.abs(wyvec).max()) >= 1 << 62):
        raise BudgetExceeded("attractor count needs exact path beyond int64; "
                             "reduce the scale or depth")
    chunks = []
    gen_y = enumerate_coords(sy)
    for (_s1, cx), (_s2, cy) in zip(enumerate_coords(sx), gen_y):
        ax, bx = _halfopen_ranges(sx, cx, wxvec, DX, scx, r, grid)
        ay, by = _halfopen_ranges(sy, cy, wyvec, DY, scy, r, grid)
        packed = []
        for i in range(len(ax)):
            xs = np.arange(ax[i], bx[i] + 1, dtype=np.int64)
            ys = np.arange(ay[i], by[i] + 1, dtype=np.int64)
            packed.append((xs[:, None] * grid + ys).ravel())
        if packed:
            chunks.append(np.unique(np.concatenate(packed)))
    if not chunks:
        return 0
    return int(np.unique(np.concatenate(chunks)).size)


@dataclass(frozen=True)
class BoxCountSeries:
    target: str                                  # "attractor" | "projection"
    entries: tuple[tuple[Fraction, int], ...]    # (r, N_r)
    depths: tuple[int, ...]


def box_count_series(ifs: CarpetIFS, scales, target: str = "projection",
                     word_budget: int = DEFAULT_WORD_BUDGET) -> BoxCountSeries:
    scales = sorted((Fraction(s) for s in scales), reverse=True)
    counter = box_count_projection if target == "projection" else box_count_attractor
    ratio = ifs.beta if target == "projection" else ifs.alpha
    entries = []
    depths = []
    for r in scales:
        entries.append((r, counter(ifs, r, word_budget=word_budget)))
        depths.append(_auto_depth(ratio, r))
    return BoxCountSeries(target=target, entries=tuple(entries), depths=tuple(depths))


def fit_box_dimension(series: BoxCountSeries) -> SlopeFit:
    """Slope of log N_r against log(1/r); needs >= 4 scales spanning two decades."""
    if len(series.entries) < 4:
        raise InsufficientScales("need at least 4 scales")
    rs = [r for r, _ in series.entries]
    if max(rs) / min(rs) < 100:
        raise InsufficientScales("scales must span at least two decades")
    xs = [math.log(1 / r) for r, _ in series.entries]
    ys = [math.log(max(n, 1)) for _, n in series.entries]
    return fit_line(xs, ys)


# -- two-scale Assouad estimator -------------------------------------------------


@dataclass(frozen=True)
class AssouadWindowSample:
    k: int
    n_k: int
    descriptor: str        # localizing prefix word + window kind
    R: float
    r: float
    count: int

    @property
    def exponent(self) -> float:
        return math.log(self.count) / math.log(self.R / self.r)


def _coupled_depth(ifs: CarpetIFS, k: int) -> int:
    """Unique n with beta^(n+1) < (alpha/beta)^k <= beta^n."""
    gamma = (ifs.alpha * ifs.beta.inverse()) ** k
    n = 0
    power = ifs.field.one
    while power >= gamma:
        power = power * ifs.beta
        n += 1
        if n > _DEPTH_CAP:
            raise BudgetExceeded("scale coupling requires unreasonable depth")
    return n - 1


def _suffix_data(ifs: CarpetIFS, n: int):
    """(x coords rows, y coords rows, schemes) for all depth-n words."""
    sx = projection_lattice(ifs, n)
    sy = vertical_lattice(ifs, n)
    xs, ys = [], []
    for _start, cx in enumerate_coords(sx):
        xs.append(cx)
    for _start, cy in enumerate_coords(sy):
        ys.append(cy)
    return np.concatenate(xs), np.concatenate(ys), sx, sy


def _count_window(ifs: CarpetIFS, keep_idx, coords_x, coords_y, sx, sy,
                  px0, py0, bk, ak, wx, wy, Qx, Qy, rinv) -> int:
    """Cells of size r (= 1/rinv) meeting the window-clipped images of the
    kept suffix cylinders under the prefix map (x,y) -> (px0+bk*x, py0+ak*y)."""
    packed = []
    for i in keep_idx:
        sx0 = sx.element(coords_x[i])
        sy0 = sy.element(coords_y[i])
        xlo = px0 + bk * sx0
        xhi = xlo + bk * wx
        ylo = py0 + ak * sy0
        yhi = ylo + ak * wy
        if not Qx[0] < xhi or not xlo < Qx[1]:
            continue
        if not Qy[0] < yhi or not ylo < Qy[1]:
            continue
        xlo = xlo if Qx[0] < xlo else Qx[0]
        xhi = xhi if xhi < Qx[1] else Qx[1]
        ylo = ylo if Qy[0] < ylo else Qy[0]
        yhi = yhi if yhi < Qy[1] else Qy[1]
        xr = _cells_halfopen(xlo, xhi, rinv)
        yr = _cells_halfopen(ylo, yhi, rinv)
        if xr is None or yr is None:
            continue
        xs = np.arange(xr[0], xr[1] + 1, dtype=np.int64)
        ys = np.arange(yr[0], yr[1] + 1, dtype=np.int64)
        packed.append((xs[:, None] << 32 | ys).ravel())
    if not packed:
        return 0
    return int(np.unique(np.concatenate(packed)).size)


def estimate_assouad_two_scale(ifs: CarpetIFS, k_list, windows_per_k: int = 3,
                               seed: int = 0, workers: int | None = None,
                               word_budget: int = DEFAULT_WORD_BUDGET):
    """Two-scale covering exponents at R = alpha^k, r = alpha^(n(k)+k).

    Windows of side ~R slide over a depth-(n+k) approximation of F: squares
    anchored at sampled depth-k cylinder corners, plus the measure-guided
    window above the bin where the projected measure is heaviest at scale
    beta^n(k) (the proof's concentration tube).  Returns the per-window
    samples and the slope fit of log max-count against log(R/r) across k.
    """
    if not k_list:
        raise ParameterOutOfRange("k_list must be nonempty")
    rng = random.Random(seed)
    field = ifs.field
    af = ifs.alpha_float
    samples: list[AssouadWindowSample] = []
    best: dict[int, int] = {}
    ns: dict[int, int] = {}
    for k in sorted(set(int(k) for k in k_list)):
        n = _coupled_depth(ifs, k)
        if n < 1:
            continue
        check_word_budget(ifs.m, n, word_budget)
        ns[k] = n
        bm = bin_projected_measure(ifs, n, workers=workers, word_budget=word_budget)
        vals = bm.nonzero_mass_floats()
        jstar = int(bm.nonzero_indices()[int(np.argmax(vals))])
        wn = ifs.beta ** n
        tube_lo = wn * jstar
        tube_hi = wn * (jstar + 1)
        if tube_hi > field.one:
            tube_hi = field.one

        coords_x, coords_y, sx, sy = _suffix_data(ifs, n)
        fx = coords_x.astype(np.float64) @ np.asarray(sx.theta_dbl) / sx.denom
        wxf = ifs.beta_float ** n
        margin = 1e-9 + abs(fx).max() * 2.0 ** -40

        prefixes = [(1,) * k]
        while len(prefixes) < max(1, windows_per_k - 1):
            prefixes.append(tuple(rng.randrange(1, ifs.m + 1) for _ in range(k)))

        R = ifs.alpha ** k
        Rf = af ** k
        rf = af ** (n + k)
        rinv = (ifs.alpha ** (n + k)).inverse()
        gamma_f = (af / ifs.beta_float) ** k
        tl_f, th_f = float(jstar) * wxf, float(jstar + 1) * wxf

        for prefix in prefixes:
            cyl = compose_cylinder(ifs, prefix)
            px0, py0 = cyl.x0, cyl.y0
            bk, ak = cyl.width, cyl.height
            windows = [
                ("tube", (px0 + bk * tube_lo, px0 + bk * tube_hi), (py0, py0 + ak),
                 np.nonzero((fx < th_f + margin) & (fx + wxf > tl_f - margin))[0]),
                ("corner", (px0, px0 + ak), (py0, py0 + ak),
                 np.nonzero(fx < gamma_f + wxf + margin)[0]),
            ]
            for kind, Qx, Qy, keep in windows:
                count = _count_window(ifs, keep, coords_x, coords_y, sx, sy,
                                      px0, py0, bk, ak, wn, ifs.alpha ** n,
                                      Qx, Qy, rinv)
                if count < 1:
                    continue
                word = "".join(str(sym) for sym in prefix)
                samples.append(AssouadWindowSample(
                    k=k, n_k=n, descriptor=f"{kind}@{word}", R=Rf, r=rf, count=count))
                best[k] = max(best.get(k, 0), count)

    usable = sorted(k for k in best if best[k] >= 1)
    if len(usable) < 2:
        raise InsufficientScales("not enough usable k values for the two-scale fit")
    xs = [ns[k] * (-math.log(af)) for k in usable]
    ys = [math.log(best[k]) for k in usable]
    return samples, fit_line(xs, ys)
