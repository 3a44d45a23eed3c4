# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled enumeration kernel for depth-adapted measure binning.

Lattice coordinates are int64 under a caller-side no-overflow certificate.
Per leaf, a float fast path decides the destination bin; near-boundary
leaves fall through to an exact integer test (grid alignment) and then a
fixed-point interval sign evaluation in 128-bit arithmetic.  Leaves the
fixed-point tier cannot certify are written to a defer buffer and resolved
exactly by the caller, so results are exact in all cases.
"""

from libc.stdint cimport int64_t
from libc.math cimport floor as c_floor, llround

cdef extern from *:
    ctypedef long long int128 "__int128_t"


cdef inline int _fixed_sign(int64_t* v, int64_t* tlo, int64_t* thi, int d) noexcept nogil:
    # sign of sum_c v[c] * theta^c given outward fixed-point bounds
    # [tlo[c], thi[c]] * 2^-F for theta^c; 0 means "uncertain"
    cdef int128 lo = 0, hi = 0
    cdef int128 a, b
    cdef int c
    for c in range(d):
        a = <int128>v[c] * <int128>tlo[c]
        b = <int128>v[c] * <int128>thi[c]
        if a <= b:
            lo += a
            hi += b
        else:
            lo += b
            hi += a
    if lo > 0:
        return 1
    if hi < 0:
        return -1
    return 0


def bin_adapted_range(int64_t[:, :, ::1] W, double[:, ::1] Wd,
                      long long D, long long B, int m, int n, int d,
                      int64_t[::1] tlo, int64_t[::1] thi,
                      double err, long long start, long long count,
                      int64_t[:, ::1] acc, int64_t[:, ::1] defer_buf):
    """Bin the word-index range [start, start+count) into ``acc`` ([B, d]).

    Returns the number of deferred leaves; their lattice vectors occupy the
    first min(returned, capacity) rows of ``defer_buf``.
    """
    if n > 64 or d > 8:
        raise ValueError("kernel supports depth <= 64 and field degree <= 8")
    if count <= 0:
        return 0
    cdef long long cap = defer_buf.shape[0]
    cdef long long ndefer = 0
    cdef int64_t svec[520]          # (64+1) * 8 partial-sum stack
    cdef double sdbl[65]
    cdef int digits[64]
    cdef int64_t tmp[8]
    cdef int64_t* tl = &tlo[0]
    cdef int64_t* th = &thi[0]
    cdef long long rem, w, j0, jr
    cdef int j, c, lvl, sym, s
    cdef double x, fj, fr
    cdef bint aligned

    with nogil:
        rem = start
        for j in range(n - 1, -1, -1):
            digits[j] = <int>(rem % m)
            rem //= m
        for c in range(d):
            svec[c] = 0
        sdbl[0] = 0.0
        for j in range(n):
            sym = digits[j]
            for c in range(d):
                svec[(j + 1) * d + c] = svec[j * d + c] + W[j, sym, c]
            sdbl[j + 1] = sdbl[j] + Wd[j, sym]

        for w in range(count):
            x = sdbl[n]
            fj = c_floor(x)
            fr = x - fj
            if fr > err and fr < 1.0 - err and fj >= 0.0 and fj <= <double>(B - 2):
                # certainly strictly between bin boundaries
                j0 = <long long>fj
                acc[j0, 0] += (j0 + 1) * D - svec[n * d]
                acc[j0 + 1, 0] += svec[n * d] - j0 * D
                for c in range(1, d):
                    acc[j0, c] -= svec[n * d + c]
                    acc[j0 + 1, c] += svec[n * d + c]
            else:
                jr = llround(x)
                aligned = svec[n * d] == jr * D
                if aligned:
                    for c in range(1, d):
                        if svec[n * d + c] != 0:
                            aligned = False
                            break
                if aligned:
                    if 0 <= jr <= B - 1:
                        acc[jr, 0] += D
                    else:
                        if ndefer < cap:
                            for c in range(d):
                                defer_buf[ndefer, c] = svec[n * d + c]
                        ndefer += 1
                else:
                    tmp[0] = svec[n * d] - jr * D
                    for c in range(1, d):
                        tmp[c] = svec[n * d + c]
                    s = _fixed_sign(tmp, tl, th, d)
                    if s > 0:
                        j0 = jr
                    else:
                        j0 = jr - 1
                    if s == 0 or j0 < 0 or j0 > B - 2:
                        if ndefer < cap:
                            for c in range(d):
                                defer_buf[ndefer, c] = svec[n * d + c]
                        ndefer += 1
                    else:
                        acc[j0, 0] += (j0 + 1) * D - svec[n * d]
                        acc[j0 + 1, 0] += svec[n * d] - j0 * D
                        for c in range(1, d):
                            acc[j0, c] -= svec[n * d + c]
                            acc[j0 + 1, c] += svec[n * d + c]

            if w == count - 1:
                break
            lvl = n - 1
            while digits[lvl] == m - 1:
                digits[lvl] = 0
                lvl -= 1
            digits[lvl] += 1
            for j in range(lvl, n):
                sym = digits[j]
                for c in range(d):
                    svec[(j + 1) * d + c] = svec[j * d + c] + W[j, sym, c]
                sdbl[j + 1] = sdbl[j] + Wd[j, sym]
    return ndefer
