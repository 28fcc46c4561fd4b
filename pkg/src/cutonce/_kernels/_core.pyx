# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-image hot loops.

Must stay bitwise-equivalent to ``_numpy``: identical selection semantics,
identical floating point evaluation order (see that module's docstring).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def mirror_upper(double[:, ::1] s not None):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                s[j, i] = s[i, j]
    return np.asarray(s)


cdef inline void _sift_down(double* heap, Py_ssize_t k, Py_ssize_t root) noexcept nogil:
    # min-heap on values
    cdef Py_ssize_t child
    cdef double tmp
    while True:
        child = 2 * root + 1
        if child >= k:
            return
        if child + 1 < k and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] < heap[root]:
            tmp = heap[root]
            heap[root] = heap[child]
            heap[child] = tmp
            root = child
        else:
            return


def topk_mean(double[:, ::1] s not None, Py_ssize_t k):
    """Row-wise mean of the k largest off-diagonal entries.

    A size-k min-heap tracks the current top values; the kept values are
    then sorted descending and summed serially, matching the fallback.
    """
    cdef Py_ssize_t n = s.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    heap_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] heap = heap_arr
    cdef double* hp = &heap[0]
    cdef Py_ssize_t i, j, m, pos
    cdef double v, acc, key
    with nogil:
        for i in range(n):
            m = 0
            for j in range(n):
                v = s[i, j] if j != i else -2.0
                if m < k:
                    hp[m] = v
                    m += 1
                    if m == k:
                        for pos in range(k // 2 - 1, -1, -1):
                            _sift_down(hp, k, pos)
                elif v > hp[0]:
                    hp[0] = v
                    _sift_down(hp, k, 0)
            # insertion sort descending, then serial sum
            for j in range(1, k):
                key = hp[j]
                pos = j
                while pos > 0 and hp[pos - 1] < key:
                    hp[pos] = hp[pos - 1]
                    pos -= 1
                hp[pos] = key
            acc = hp[0]
            for j in range(1, k):
                acc += hp[j]
            out[i] = acc / k
    return out_arr


def tune_threshold(double[:, ::1] s not None, double[::1] rho not None,
                   double t0, double alpha, double tau):
    cdef Py_ssize_t n = s.shape[0]
    w_arr = np.empty((n, n), dtype=np.float64)
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] w = w_arr
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t i, j
    cdef double t, wij
    cdef long long c
    with nogil:
        for i in range(n):
            c = 0
            for j in range(n):
                t = t0 + alpha * (0.5 * (rho[i] + rho[j]))
                wij = s[i, j] / t
                if wij >= tau:
                    w[i, j] = 1.0
                    c += 1
                else:
                    w[i, j] = 1e-5
            counts[i] = c
    return w_arr, counts_arr


def boundary_field(double[:, ::1] raw not None, int neighborhood):
    cdef Py_ssize_t h = raw.shape[0]
    cdef Py_ssize_t w = raw.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    # pinned accumulation order; must match _numpy.OFFSETS_8 / OFFSETS_4
    cdef int[8] dy8 = [-1, -1, -1, 0, 0, 1, 1, 1]
    cdef int[8] dx8 = [-1, 0, 1, -1, 1, -1, 0, 1]
    cdef int[4] dy4 = [-1, 0, 0, 1]
    cdef int[4] dx4 = [0, -1, 1, 0]
    cdef Py_ssize_t y, x, ny, nx
    cdef int t, k = neighborhood
    cdef double acc, center
    with nogil:
        for y in range(h):
            for x in range(w):
                center = raw[y, x]
                acc = 0.0
                for t in range(k):
                    if k == 8:
                        ny = y + dy8[t]
                        nx = x + dx8[t]
                    else:
                        ny = y + dy4[t]
                        nx = x + dx4[t]
                    if ny < 0:
                        ny = 0
                    elif ny >= h:
                        ny = h - 1
                    if nx < 0:
                        nx = 0
                    elif nx >= w:
                        nx = w - 1
                    acc = acc + fabs(center - raw[ny, nx])
                out[y, x] = acc / k
    return out_arr


def label_components(fg):
    """4-connected labeling by raster-order flood fill (first-encounter ids)."""
    fg8 = np.ascontiguousarray(fg, dtype=np.uint8)
    cdef unsigned char[:, ::1] f = fg8
    cdef Py_ssize_t h = f.shape[0]
    cdef Py_ssize_t w = f.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] lab = labels_arr
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t y, x, cy, cx, top
    cdef long long p
    cdef int nlab = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                if f[y, x] != 0 and lab[y, x] == 0:
                    nlab += 1
                    lab[y, x] = nlab
                    top = 0
                    stack[top] = y * w + x
                    top += 1
                    while top > 0:
                        top -= 1
                        p = stack[top]
                        cy = p // w
                        cx = p - cy * w
                        if cy > 0 and f[cy - 1, cx] != 0 and lab[cy - 1, cx] == 0:
                            lab[cy - 1, cx] = nlab
                            stack[top] = p - w
                            top += 1
                        if cy + 1 < h and f[cy + 1, cx] != 0 and lab[cy + 1, cx] == 0:
                            lab[cy + 1, cx] = nlab
                            stack[top] = p + w
                            top += 1
                        if cx > 0 and f[cy, cx - 1] != 0 and lab[cy, cx - 1] == 0:
                            lab[cy, cx - 1] = nlab
                            stack[top] = p - 1
                            top += 1
                        if cx + 1 < w and f[cy, cx + 1] != 0 and lab[cy, cx + 1] == 0:
                            lab[cy, cx + 1] = nlab
                            stack[top] = p + 1
                            top += 1
    return labels_arr, nlab
