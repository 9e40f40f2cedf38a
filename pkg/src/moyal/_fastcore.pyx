# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: displacement matrices and the star quadrature.

Same contracts as `_purepy`; selected automatically at import when built.
"""

import numpy as np

from libc.math cimport cos, exp, lgamma, log, sin, sqrt
from scipy.linalg.cython_blas cimport zgemm


cdef inline double complex _cis(double phi) noexcept nogil:
    return cos(phi) + 1j * sin(phi)


cdef void _fill_displacement(double complex gamma, int dim,
                             double complex[:, ::1] out) noexcept nogil:
    cdef double mod = abs(gamma)
    cdef int k, n
    cdef double x, loggam, pref
    cdef double complex unit, lower_ph, upper_ph, nconj, val
    cdef double lprev, lcur, lnew
    if mod < 1e-300:
        for n in range(dim):
            out[n, n] = 1.0
        return
    x = mod * mod
    loggam = log(mod)
    unit = gamma / mod
    nconj = -(unit.real - 1j * unit.imag)
    lower_ph = 1.0
    upper_ph = 1.0
    for k in range(dim):
        if k > 0:
            lower_ph = lower_ph * unit
            upper_ph = upper_ph * nconj
        pref = exp(k * loggam - 0.5 * lgamma(k + 1.0) - 0.5 * x)
        lprev = 0.0
        lcur = 1.0
        for n in range(dim - k):
            if n == 1:
                lnew = (1.0 + k - x) * lcur
                lprev = lcur
                lcur = lnew
            elif n > 1:
                lnew = ((2.0 * n - 1.0 + k - x) * lcur - (n - 1.0 + k) * lprev) / n
                lprev = lcur
                lcur = lnew
            if n > 0:
                pref = pref * sqrt(n / (n + <double> k))
            val = pref * lcur
            out[n + k, n] = val * lower_ph
            if k > 0:
                out[n, n + k] = val * upper_ph


def displacement_matrix(gamma, int dim):
    """Single closed-form displacement matrix (dim, dim)."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] view = out
    cdef double complex g = gamma
    with nogil:
        _fill_displacement(g, dim, view)
    return out


def displacement_batch(gammas, int dim):
    """Displacement matrices for a batch of amplitudes, shape (len, dim, dim)."""
    cdef double complex[::1] g = np.ascontiguousarray(gammas, dtype=np.complex128)
    cdef int npts = g.shape[0]
    out = np.zeros((npts, dim, dim), dtype=np.complex128)
    cdef double complex[:, :, ::1] view = out
    cdef int p
    with nogil:
        for p in range(npts):
            _fill_displacement(g[p], dim, view[p])
    return out


def star_phase_quadrature(faw, q1, p1, fbw, q2, p2, out_q, out_p, int block=512):
    """Blocked double trapezoid sum against the pure-phase kernel.

    Identical grouping to the numpy fallback: V once, then per N1-block a
    phase matrix, one zgemm, and a row-dot accumulation.
    """
    cdef double complex[::1] faw_v = np.ascontiguousarray(faw, dtype=np.complex128)
    cdef double complex[::1] fbw_v = np.ascontiguousarray(fbw, dtype=np.complex128)
    cdef double[::1] q1_v = np.ascontiguousarray(q1, dtype=np.float64)
    cdef double[::1] p1_v = np.ascontiguousarray(p1, dtype=np.float64)
    cdef double[::1] q2_v = np.ascontiguousarray(q2, dtype=np.float64)
    cdef double[::1] p2_v = np.ascontiguousarray(p2, dtype=np.float64)
    cdef double[::1] oq_v = np.ascontiguousarray(out_q, dtype=np.float64)
    cdef double[::1] op_v = np.ascontiguousarray(out_p, dtype=np.float64)
    cdef int n1 = q1_v.shape[0]
    cdef int n2 = q2_v.shape[0]
    cdef int m = oq_v.shape[0]
    s_arr = np.zeros(m, dtype=np.complex128)
    cdef double complex[::1] s = s_arr
    if m == 0 or n1 == 0 or n2 == 0:
        return s_arr
    v_arr = np.empty((n2, m), dtype=np.complex128)
    cdef double complex[:, ::1] v = v_arr
    mid_arr = np.empty((block, n2), dtype=np.complex128)
    cdef double complex[:, ::1] mid = mid_arr
    t_arr = np.empty((block, m), dtype=np.complex128)
    cdef double complex[:, ::1] t = t_arr
    cdef int a, b, j, lo, hi, blk
    cdef double qa, pa
    cdef double complex acc, one = 1.0, zero = 0.0
    cdef double pi_sq = 9.869604401089358  # pi^2
    with nogil:
        for b in range(n2):
            for j in range(m):
                v[b, j] = fbw_v[b] * _cis(2.0 * (q2_v[b] * op_v[j] - oq_v[j] * p2_v[b]))
    lo = 0
    while lo < n1:
        hi = min(lo + block, n1)
        blk = hi - lo
        with nogil:
            for a in range(blk):
                qa = q1_v[lo + a]
                pa = p1_v[lo + a]
                for b in range(n2):
                    mid[a, b] = _cis(2.0 * (qa * p2_v[b] - q2_v[b] * pa))
            # row-major T(blk, m) = mid(blk, n2) @ V(n2, m) via the
            # column-major transpose identity
            zgemm("N", "N", &m, &blk, &n2, &one, &v[0, 0], &m,
                  &mid[0, 0], &n2, &zero, &t[0, 0], &m)
            for a in range(blk):
                qa = q1_v[lo + a]
                pa = p1_v[lo + a]
                for j in range(m):
                    s[j] = s[j] + faw_v[lo + a] * _cis(2.0 * (oq_v[j] * pa - qa * op_v[j])) * t[a, j]
        lo = hi
    with nogil:
        for j in range(m):
            s[j] = s[j] / pi_sq
    return s_arr
