# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Lloyd iterations; semantics mirror ``scsid._lloyd_py.lloyd``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] X, Py_ssize_t i,
                           const double[:, ::1] C, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t d
    cdef double acc = 0.0, diff
    for d in range(X.shape[1]):
        diff = X[i, d] - C[j, d]
        acc += diff * diff
    return acc


def lloyd(X, init, int max_iter, int max_repairs):
    """Run Lloyd's algorithm from ``init`` centroids.

    Returns ``(labels, centroids, inertia, n_iter, n_repairs, status)`` where
    ``status`` is 0 on success, 1 if an empty cluster could not be repaired.
    """
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    C_arr = np.array(init, dtype=np.float64, order="C")
    cdef double[:, ::1] C = C_arr
    cdef Py_ssize_t n = Xv.shape[0], dim = Xv.shape[1], k = C.shape[0]
    labels_arr = np.full(n, -1, dtype=np.int64)
    new_arr = np.empty(n, dtype=np.int64)
    counts_arr = np.zeros(k, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.float64)
    sums_arr = np.zeros((k, dim), dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef cnp.int64_t[::1] new = new_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] dist = dist_arr
    cdef double[:, ::1] sums = sums_arr
    cdef Py_ssize_t i, j, d, best, far
    cdef double bd, dd, fd, inertia = 0.0
    cdef int it = 0, repairs = 0, status = 0
    cdef bint changed

    with nogil:
        while it < max_iter:
            it += 1
            for j in range(k):
                counts[j] = 0
            for i in range(n):
                best = 0
                bd = _sqdist(Xv, i, C, 0)
                for j in range(1, k):
                    dd = _sqdist(Xv, i, C, j)
                    if dd < bd:
                        bd = dd
                        best = j
                new[i] = best
                dist[i] = bd
                counts[best] += 1
            for j in range(k):
                if counts[j] != 0:
                    continue
                if repairs >= max_repairs:
                    status = 1
                    break
                far = -1
                fd = -1.0
                for i in range(n):
                    if counts[new[i]] > 1 and dist[i] > fd:
                        fd = dist[i]
                        far = i
                if far < 0:
                    status = 1
                    break
                counts[new[far]] -= 1
                new[far] = j
                counts[j] = 1
                dist[far] = 0.0
                repairs += 1
            if status:
                break
            changed = False
            for i in range(n):
                if new[i] != labels[i]:
                    changed = True
                labels[i] = new[i]
            for j in range(k):
                for d in range(dim):
                    sums[j, d] = 0.0
            for i in range(n):
                for d in range(dim):
                    sums[labels[i], d] += Xv[i, d]
            for j in range(k):
                for d in range(dim):
                    C[j, d] = sums[j, d] / counts[j]
            if not changed:
                break
        if status == 0:
            for i in range(n):
                inertia += _sqdist(Xv, i, C, labels[i])
    return labels_arr, C_arr, inertia, it, repairs, status
