"""Backend selection for the binning kernel.

The compiled Cython kernel is used when it imported successfully, the
run's int64 no-overflow certificate holds, and CARPETDIM_KERNEL does not
force the pure backend.  Both backends produce identical exact integer
accumulators; the test suite and the benchmark compare them directly.
"""

from __future__ import annotations

import math
import os
import threading
from fractions import Fraction

import numpy as np

from ..errors import InternalInvariantError
from ..lattice import INT64_SAFE, LatticeScheme
from . import pure

try:
    from .. import _binner
except ImportError:  # extension not built; pure fallback
    _binner = None

HAVE_COMPILED = _binner is not None

_DEFER_CAP = 4096
_WORKER_ACC_BYTES = 1 << 29  # cap on total per-worker accumulator memory


def default_backend() -> str:
    forced = os.environ.get("CARPETDIM_KERNEL", "").strip().lower()
    if forced in ("pure", "python"):
        return "pure"
    if forced in ("compiled", "ext"):
        if not HAVE_COMPILED:
            raise RuntimeError("CARPETDIM_KERNEL=compiled but carpetdim._binner is not built")
        return "compiled"
    if forced:
        raise ValueError(f"unknown CARPETDIM_KERNEL value {forced!r}")
    return "compiled" if HAVE_COMPILED else "pure"


def _certificate(scheme: LatticeScheme, B: int):
    """Inputs for the compiled kernel if its int64 arithmetic provably
    cannot overflow, else None."""
    n, d, m, D = scheme.depth, scheme.d, scheme.m, scheme.denom
    if n > 64 or d > 8 or not scheme.fits_int64():
        return None
    VB = scheme.coord_bound
    if (B + 1) * D + VB >= INT64_SAFE:
        return None
    per_word = D if d == 1 else VB + (B + 1) * D
    if (m ** n) * per_word >= INT64_SAFE:
        return None
    err = pure._float_error_bound(scheme)
    if err >= 0.25:
        return None
    bounds = scheme.field.theta_bounds(d - 1, Fraction(1, 1 << 80))
    maxmag = max(max(abs(lo), abs(hi)) for lo, hi in bounds)
    F = 59
    while maxmag * (1 << F) >= (1 << 60) and F > 0:
        F -= 1
    if F < 24:
        return None
    tlo = np.array([math.floor(lo * (1 << F)) for lo, _ in bounds], dtype=np.int64)
    thi = np.array([math.ceil(hi * (1 << F)) for _, hi in bounds], dtype=np.int64)
    return {"err": err, "tlo": tlo, "thi": thi}


def _resolve_leaf(scheme: LatticeScheme, B: int, coords) -> list[tuple[int, list[int]]]:
    """Exact (bin, delta-coords) contributions of one deferred leaf."""
    D, d = scheme.denom, scheme.d
    elem = scheme.element(coords)
    j0 = elem.floor()
    if (elem - j0).is_zero() or j0 >= B - 1:
        delta = [0] * d
        delta[0] = D
        return [(min(j0, B - 1), delta)]
    d0 = [-int(c) for c in coords]
    d0[0] += (j0 + 1) * D
    d1 = [int(c) for c in coords]
    d1[0] -= j0 * D
    return [(j0, d0), (j0 + 1, d1)]


def _run_compiled(scheme: LatticeScheme, B: int, workers: int, cert):
    m, n, d, D = scheme.m, scheme.depth, scheme.d, scheme.denom
    total = m ** n
    workers = max(1, min(workers, total))
    while workers > 1 and B * d * 8 * workers > _WORKER_ACC_BYTES:
        workers -= 1
    W, Wd = scheme.inc_arrays()
    accs = [np.zeros((B, d), dtype=np.int64) for _ in range(workers)]
    defers = [np.zeros((_DEFER_CAP, d), dtype=np.int64) for _ in range(workers)]
    ndefers = [0] * workers
    base, extra = divmod(total, workers)
    ranges = []
    pos = 0
    for i in range(workers):
        cnt = base + (1 if i < extra else 0)
        ranges.append((pos, cnt))
        pos += cnt

    def work(i):
        start, cnt = ranges[i]
        ndefers[i] = _binner.bin_adapted_range(
            W, Wd, D, B, m, n, d, cert["tlo"], cert["thi"], cert["err"],
            start, cnt, accs[i], defers[i])

    if workers == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(i,)) for i in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    if any(nd > _DEFER_CAP for nd in ndefers):
        return None  # defer buffer overflow; caller reruns on the pure backend
    acc = accs[0]
    for extra_acc in accs[1:]:
        acc += extra_acc
    for i in range(workers):
        for row in range(ndefers[i]):
            for j, delta in _resolve_leaf(scheme, B, defers[i][row]):
                for c in range(d):
                    acc[j, c] += delta[c]
    nz = np.nonzero(np.any(acc != 0, axis=1))[0]
    return nz.astype(np.int64), acc[nz].copy()


def bin_depth_adapted(scheme: LatticeScheme, B: int, workers: int = 1,
                      backend: str | None = None):
    """Sparse exact bin accumulators (bin indices, coords rows) for the
    depth-adapted grid; mass of bin idx[i] is rows[i].theta / (D * m^depth)."""
    chosen = backend or default_backend()
    cert = None
    if chosen == "compiled":
        cert = _certificate(scheme, B)
        if cert is None:
            chosen = "pure"
    if chosen == "compiled":
        result = _run_compiled(scheme, B, workers, cert)
        if result is None:
            chosen = "pure"
        else:
            idx, rows = result
    if chosen == "pure":
        sparse = pure.bin_adapted_sparse(scheme, B)
        idx = np.array(sorted(sparse), dtype=np.int64)
        raw = [sparse[int(j)] for j in idx]
        if all(all(abs(c) < INT64_SAFE for c in row) for row in raw):
            rows = np.array(raw, dtype=np.int64).reshape(len(raw), scheme.d)
        else:
            rows = [tuple(row) for row in raw]

    _check_total(scheme, idx, rows)
    return idx, rows


def _check_total(scheme: LatticeScheme, idx, rows) -> None:
    d, D = scheme.d, scheme.denom
    total = [0] * d
    if isinstance(rows, np.ndarray):
        # object dtype: the sum itself may exceed int64 even when entries fit
        sums = rows.astype(object).sum(axis=0) if len(rows) else [0] * d
        total = [int(s) for s in sums]
    else:
        for row in rows:
            for c in range(d):
                total[c] += row[c]
    expected = [0] * d
    expected[0] = (scheme.m ** scheme.depth) * D
    if total != expected:
        raise InternalInvariantError(
            f"bin masses do not sum to 1 exactly (got {total}, want {expected})")
