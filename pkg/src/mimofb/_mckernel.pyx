# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled eigenvalue kernel for the Monte Carlo hot path.

Per sample: build the m-by-m Hermitian Gram matrix of the channel draw
(H^dagger H when tx <= rx, H H^dagger otherwise) and diagonalize it with
cyclic Jacobi rotations. m never exceeds a handful of antennas here, where
Jacobi converges in a few sweeps at machine precision.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

DEF MAXM = 8
DEF MAXDIM = 64  # tx*rx upper bound for the stack-local channel copy


cdef inline void _jacobi_hermitian(double* ar, double* ai, int m, double* lam) noexcept nogil:
    # Diagonalize the Hermitian matrix (ar + i*ai), m <= MAXM.
    # One Jacobi rotation zeroes entry (p, q); sweeps repeat until the
    # off-diagonal mass is negligible relative to the trace scale.
    cdef int p, q, k, sweep, i
    cdef double app, aqq, beta, phre, phim, tau, t, c, s
    cdef double off, scale, tmpre, tmpim, kpre, kpim, kqre, kqim
    cdef double lmax, tmp
    cdef int imax

    scale = 0.0
    for p in range(m):
        scale += fabs(ar[p * m + p])
    if scale == 0.0:
        scale = 1.0

    for sweep in range(60):
        off = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off += ar[p * m + q] * ar[p * m + q] + ai[p * m + q] * ai[p * m + q]
        if off <= 1e-28 * scale * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                beta = sqrt(ar[p * m + q] * ar[p * m + q] + ai[p * m + q] * ai[p * m + q])
                if beta <= 1e-150:
                    ar[p * m + q] = 0.0
                    ai[p * m + q] = 0.0
                    ar[q * m + p] = 0.0
                    ai[q * m + p] = 0.0
                    continue
                phre = ar[p * m + q] / beta
                phim = ai[p * m + q] / beta
                app = ar[p * m + p]
                aqq = ar[q * m + q]
                tau = (aqq - app) / (2.0 * beta)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # Columns p and q of every other row k; rows follow by symmetry.
                for k in range(m):
                    if k == p or k == q:
                        continue
                    kpre = ar[k * m + p]
                    kpim = ai[k * m + p]
                    # a_kq * e^{-i phi}
                    kqre = ar[k * m + q] * phre + ai[k * m + q] * phim
                    kqim = ai[k * m + q] * phre - ar[k * m + q] * phim
                    tmpre = c * kpre - s * kqre
                    tmpim = c * kpim - s * kqim
                    kqre = s * kpre + c * kqre
                    kqim = s * kpim + c * kqim
                    ar[k * m + p] = tmpre
                    ai[k * m + p] = tmpim
                    # restore the e^{i phi} factor on column q
                    ar[k * m + q] = kqre * phre - kqim * phim
                    ai[k * m + q] = kqre * phim + kqim * phre
                    ar[p * m + k] = tmpre
                    ai[p * m + k] = -tmpim
                    ar[q * m + k] = ar[k * m + q]
                    ai[q * m + k] = -ai[k * m + q]
                ar[p * m + p] = app - t * beta
                ar[q * m + q] = aqq + t * beta
                ar[p * m + q] = 0.0
                ai[p * m + q] = 0.0
                ar[q * m + p] = 0.0
                ai[q * m + p] = 0.0

    for p in range(m):
        lam[p] = ar[p * m + p]
    # selection sort, descending; clip the tiny negatives Jacobi can leave
    for p in range(m - 1):
        imax = p
        lmax = lam[p]
        for i in range(p + 1, m):
            if lam[i] > lmax:
                lmax = lam[i]
                imax = i
        if imax != p:
            tmp = lam[p]
            lam[p] = lam[imax]
            lam[imax] = tmp
    for p in range(m):
        if lam[p] < 0.0:
            lam[p] = 0.0


cdef inline void _gram_from_normals(const double* row, int tx, int rx,
                                    double* gr, double* gi, int m) noexcept nogil:
    # H[i, j] = (row[2*(i*tx+j)] + i*row[2*(i*tx+j)+1]) / sqrt(2)
    # Gram = H^dagger H (tx x tx) when tx <= rx, else H H^dagger (rx x rx).
    cdef int a, b, i
    cdef double sre, sim
    cdef double x1, y1, x2, y2
    if tx <= rx:
        for a in range(m):
            for b in range(a, m):
                sre = 0.0
                sim = 0.0
                for i in range(rx):
                    x1 = row[2 * (i * tx + a)]
                    y1 = row[2 * (i * tx + a) + 1]
                    x2 = row[2 * (i * tx + b)]
                    y2 = row[2 * (i * tx + b) + 1]
                    # conj(H[i,a]) * H[i,b]
                    sre += x1 * x2 + y1 * y2
                    sim += x1 * y2 - y1 * x2
                gr[a * m + b] = 0.5 * sre
                gi[a * m + b] = 0.5 * sim
                gr[b * m + a] = 0.5 * sre
                gi[b * m + a] = -0.5 * sim
    else:
        for a in range(m):
            for b in range(a, m):
                sre = 0.0
                sim = 0.0
                for i in range(tx):
                    x1 = row[2 * (a * tx + i)]
                    y1 = row[2 * (a * tx + i) + 1]
                    x2 = row[2 * (b * tx + i)]
                    y2 = row[2 * (b * tx + i) + 1]
                    # H[a,i] * conj(H[b,i])
                    sre += x1 * x2 + y1 * y2
                    sim += y1 * x2 - x1 * y2
                gr[a * m + b] = 0.5 * sre
                gi[a * m + b] = 0.5 * sim
                gr[b * m + a] = 0.5 * sre
                gi[b * m + a] = -0.5 * sim


def eig_batch(cnp.ndarray[cnp.float64_t, ndim=2] normals, int tx, int rx):
    """Eigenvalues (descending) of H H^dagger for a batch of channel draws."""
    cdef int m = tx if tx < rx else rx
    cdef Py_ssize_t count = normals.shape[0]
    if normals.shape[1] != 2 * tx * rx:
        raise ValueError("normals must have shape (count, 2*tx*rx)")
    if m > MAXM or tx * rx > MAXDIM:
        raise ValueError("compiled kernel supports min(tx, rx) <= 8")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((count, m))
    cdef double[:, ::1] nv = np.ascontiguousarray(normals)
    cdef double[:, ::1] ov = out
    cdef double gr[64]
    cdef double gi[64]
    cdef double lam[8]
    cdef Py_ssize_t s
    cdef int p
    cdef double acc
    with nogil:
        if m == 1:
            for s in range(count):
                acc = 0.0
                for p in range(2 * tx * rx):
                    acc += nv[s, p] * nv[s, p]
                ov[s, 0] = 0.5 * acc
        else:
            for s in range(count):
                _gram_from_normals(&nv[s, 0], tx, rx, gr, gi, m)
                _jacobi_hermitian(gr, gi, m, lam)
                for p in range(m):
                    ov[s, p] = lam[p]
    return out


def eig_gram(g):
    """Eigenvalues (descending) of a single Hermitian PSD matrix."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] gc = np.ascontiguousarray(g, dtype=np.complex128)
    cdef int m = gc.shape[0]
    if gc.shape[1] != m:
        raise ValueError("matrix must be square")
    if m > MAXM:
        raise ValueError("compiled kernel supports matrices up to 8x8")
    cdef double gr[64]
    cdef double gi[64]
    cdef double lam[8]
    cdef int a, b
    for a in range(m):
        for b in range(m):
            gr[a * m + b] = gc[a, b].real
            gi[a * m + b] = gc[a, b].imag
    _jacobi_hermitian(gr, gi, m, lam)
    out = np.empty(m)
    for a in range(m):
        out[a] = lam[a]
    return out
