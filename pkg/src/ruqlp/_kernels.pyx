# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Householder QR (optionally column pivoted), the
accumulation of its orthogonal factor, and one-sided Jacobi sweeps.

All arrays are float64 and Fortran ordered so that every column is a
contiguous strip handed straight to level-1/2 BLAS.  The pure numpy
versions in ``_pykernels`` implement the same contracts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot, copysign, ldexp
from libc.float cimport DBL_EPSILON
from scipy.linalg.cython_blas cimport ddot, dnrm2, drot, dgemv, dger, dscal, dswap

cnp.import_array()


cdef inline void _apply_reflector(double[::1, :] a, Py_ssize_t j, Py_ssize_t col0,
                                  double tau, double* v, double* work) noexcept nogil:
    # a[j:, col0:] -= tau * v (v^T a[j:, col0:]), v[0] == 1
    cdef int mj = <int>(a.shape[0] - j)
    cdef int nc = <int>(a.shape[1] - col0)
    cdef int lda = <int>a.shape[0]
    cdef int one = 1
    cdef double done = 1.0, dzero = 0.0, mtau = -tau
    cdef char trans = b'T'
    if nc <= 0 or mj <= 0:
        return
    dgemv(&trans, &mj, &nc, &done, &a[j, col0], &lda, v, &one, &dzero, work, &one)
    dger(&mj, &nc, &mtau, v, &one, work, &one, &a[j, col0], &lda)


def householder_qr(double[::1, :] a not None, bint pivot=False):
    """Overwrite ``a`` with its compact Householder QR.

    On return the upper triangle holds R (diagonal >= 0) and the strict
    lower triangle holds the reflector tails (implicit leading 1).
    Returns ``(tau, perm)``; ``perm`` is None unless ``pivot``.
    """
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t p = min(m, n)
    cdef Py_ssize_t j, c, piv
    cdef int mj1, one = 1, im = <int>m, mj
    cdef double alpha, xnorm, beta, v0, scale, best, nrm
    tau_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] tau = tau_arr
    work_arr = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] work = work_arr
    vec_arr = np.empty(max(m, 1), dtype=np.float64)
    cdef double[::1] v = vec_arr
    perm_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] perm = perm_arr
    cdef long long itmp
    cdef double small = ldexp(1.0, -300)
    cdef double grow = ldexp(1.0, 300)
    cdef int knt

    with nogil:
        for j in range(p):
            mj = <int>(m - j)
            if pivot:
                piv = j
                best = -1.0
                for c in range(j, n):
                    nrm = dnrm2(&mj, &a[j, c], &one)
                    if nrm > best:
                        best = nrm
                        piv = c
                if piv != j:
                    dswap(&im, &a[0, j], &one, &a[0, piv], &one)
                    itmp = perm[j]
                    perm[j] = perm[piv]
                    perm[piv] = itmp

            alpha = a[j, j]
            mj1 = <int>(m - j - 1)
            xnorm = dnrm2(&mj1, &a[j + 1, j], &one) if mj1 > 0 else 0.0
            if xnorm == 0.0:
                if alpha >= 0.0:
                    tau[j] = 0.0
                    continue
                tau[j] = 2.0
                a[j, j] = -alpha
            else:
                beta = hypot(alpha, xnorm)
                # tiny columns: rescale so v0 and tau do not underflow
                knt = 0
                while beta < small and knt < 4:
                    knt += 1
                    dscal(&mj1, &grow, &a[j + 1, j], &one)
                    alpha = alpha * grow
                    xnorm = dnrm2(&mj1, &a[j + 1, j], &one)
                    beta = hypot(alpha, xnorm)
                if alpha > 0.0 and xnorm <= DBL_EPSILON * alpha:
                    # tail below roundoff of alpha: drop it instead of forming
                    # a reflector whose scale factor would underflow
                    for c in range(1, mj):
                        a[j + c, j] = 0.0
                    while knt > 0:
                        alpha = alpha * small
                        knt -= 1
                    a[j, j] = alpha
                    continue
                if alpha <= 0.0:
                    v0 = alpha - beta
                else:
                    v0 = -(xnorm / (alpha + beta)) * xnorm
                scale = xnorm / v0
                tau[j] = 2.0 / (1.0 + scale * scale)
                scale = 1.0 / v0
                dscal(&mj1, &scale, &a[j + 1, j], &one)
                while knt > 0:
                    beta = beta * small
                    knt -= 1
                a[j, j] = beta

            if j + 1 < n:
                v[0] = 1.0
                for c in range(1, mj):
                    v[c] = a[j + c, j]
                _apply_reflector(a, j, j + 1, tau[j], &v[0], &work[0])

    return tau_arr, (perm_arr if pivot else None)


def form_q(double[::1, :] packed not None, double[::1] tau not None, Py_ssize_t ncols):
    """Accumulate the first ``ncols`` columns of Q from compact reflectors."""
    cdef Py_ssize_t m = packed.shape[0]
    cdef Py_ssize_t p = tau.shape[0]
    cdef Py_ssize_t i, j, r
    q_arr = np.zeros((m, ncols), dtype=np.float64, order="F")
    cdef double[::1, :] q = q_arr
    for i in range(min(m, ncols)):
        q[i, i] = 1.0
    work_arr = np.empty(max(ncols, 1), dtype=np.float64)
    cdef double[::1] work = work_arr
    vec_arr = np.empty(max(m, 1), dtype=np.float64)
    cdef double[::1] v = vec_arr
    with nogil:
        for j in range(min(p, ncols) - 1, -1, -1):
            if tau[j] == 0.0:
                continue
            v[0] = 1.0
            for r in range(1, m - j):
                v[r] = packed[j + r, j]
            _apply_reflector(q, j, j, tau[j], &v[0], &work[0])
    return q_arr


def jacobi_sweeps(double[::1, :] g not None, double[::1, :] v not None,
                  double tol, int max_sweeps):
    """Cyclic one-sided Jacobi on the columns of ``g`` (in place).

    Every rotation is mirrored onto ``v`` when it has columns.  Returns
    the number of sweeps used, or -1 if ``max_sweeps`` was exhausted
    before a sweep finished without rotating.
    """
    cdef Py_ssize_t m = g.shape[0], n = g.shape[1]
    cdef Py_ssize_t nv = v.shape[0]
    cdef bint want_v = v.shape[1] == n and nv > 0
    cdef Py_ssize_t i, j
    cdef int sweep, rotations
    cdef int im = <int>m, inv = <int>nv, one = 1
    cdef double a, b, gam, zeta, t, c, s, ms
    cdef int used = -1
    nrm_arr = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] nrm = nrm_arr
    if n < 2 or m == 0:
        return 1

    with nogil:
        for sweep in range(max_sweeps):
            for j in range(n):
                nrm[j] = ddot(&im, &g[0, j], &one, &g[0, j], &one)
            rotations = 0
            for i in range(n - 1):
                for j in range(i + 1, n):
                    a = nrm[i]
                    b = nrm[j]
                    if a == 0.0 or b == 0.0:
                        continue
                    gam = ddot(&im, &g[0, i], &one, &g[0, j], &one)
                    if fabs(gam) <= tol * sqrt(a) * sqrt(b):
                        continue
                    rotations += 1
                    zeta = (b - a) / (2.0 * gam)
                    if fabs(zeta) > 1e150:
                        t = 0.5 / zeta
                    else:
                        t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    ms = -s
                    drot(&im, &g[0, i], &one, &g[0, j], &one, &c, &ms)
                    if want_v:
                        drot(&inv, &v[0, i], &one, &v[0, j], &one, &c, &ms)
                    nrm[i] = a - t * gam
                    nrm[j] = b + t * gam
                    # cancellation guard: refresh from the data
                    if nrm[i] < 0.25 * a:
                        nrm[i] = ddot(&im, &g[0, i], &one, &g[0, i], &one)
                    if nrm[j] < 0.25 * b:
                        nrm[j] = ddot(&im, &g[0, j], &one, &g[0, j], &one)
            if rotations == 0:
                used = sweep + 1
                break
    return used
