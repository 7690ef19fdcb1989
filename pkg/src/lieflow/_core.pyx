# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chain-graph kernels: grid edge construction and Tarjan SCC."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.math cimport ceil, floor
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef Py_ssize_t _scan(
    Py_ssize_t i,
    const double[:, ::1] images,
    const double[:, :, ::1] c,
    bint has_bracket,
    const double[::1] origin,
    double h,
    const long long[::1] shape,
    const long long[::1] strides,
    const double[:, ::1] radius,
    double eps2,
    long long* lo,
    long long* hi,
    long long* cur,
    double* a,
    long long* out,
) noexcept nogil:
    cdef Py_ssize_t d = images.shape[1]
    cdef Py_ssize_t k, p, q, count = 0
    cdef long long j
    cdef double y, r, w, d2, br
    for k in range(d):
        y = images[i, k]
        r = radius[i, k]
        lo[k] = <long long>ceil((y - r - origin[k]) / h)
        hi[k] = <long long>floor((y + r - origin[k]) / h)
        if lo[k] < 0:
            lo[k] = 0
        if hi[k] > shape[k] - 1:
            hi[k] = shape[k] - 1
        if hi[k] < lo[k]:
            return 0
        cur[k] = lo[k]
    while True:
        j = 0
        for k in range(d):
            a[k] = origin[k] + cur[k] * h
            j += cur[k] * strides[k]
        d2 = 0.0
        for k in range(d):
            w = images[i, k] - a[k]
            if has_bracket:
                br = 0.0
                for p in range(d):
                    for q in range(d):
                        br += a[p] * (images[i, q] - a[q]) * c[p, q, k]
                w = w - 0.5 * br
            d2 += w * w
        if d2 < eps2:
            if out != NULL:
                out[count] = j
            count += 1
        # odometer over the candidate box, last axis fastest (ascending j)
        k = d - 1
        while k >= 0:
            cur[k] += 1
            if cur[k] <= hi[k]:
                break
            cur[k] = lo[k]
            k -= 1
        if k < 0:
            break
    return count


def edges_step2(images, c, origin, double spacing, shape, radius, double eps):
    """CSR adjacency ``i -> j`` iff ``||log(x_j^-1 y_i)|| < eps`` on a regular grid (nilpotency step <= 2).

    Two passes over sources (count, then fill), each split across OpenMP
    threads; every row is written in ascending target order, so the output
    does not depend on the thread count.
    """
    cdef const double[:, ::1] img = np.ascontiguousarray(images, dtype=np.float64)
    cdef Py_ssize_t n = img.shape[0]
    cdef Py_ssize_t d = img.shape[1]
    cdef bint has_bracket = c is not None and bool(np.any(c))
    cc_arr = np.ascontiguousarray(c if c is not None else np.zeros((d, d, d)), dtype=np.float64)
    cdef const double[:, :, ::1] cc = cc_arr
    cdef const double[::1] org = np.ascontiguousarray(origin, dtype=np.float64)
    shape_arr = np.ascontiguousarray(shape, dtype=np.int64)
    cdef const long long[::1] shp = shape_arr
    strides_arr = np.ones(d, dtype=np.int64)
    cdef Py_ssize_t k
    for k in range(d - 2, -1, -1):
        strides_arr[k] = strides_arr[k + 1] * shape_arr[k + 1]
    cdef const long long[::1] strd = strides_arr
    cdef const double[:, ::1] rad = np.ascontiguousarray(radius, dtype=np.float64)
    cdef double eps2 = eps * eps
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t i
    cdef long long* lo
    cdef long long* hi
    cdef long long* cur
    cdef double* a

    with nogil, parallel():
        lo = <long long*>malloc(d * sizeof(long long))
        hi = <long long*>malloc(d * sizeof(long long))
        cur = <long long*>malloc(d * sizeof(long long))
        a = <double*>malloc(d * sizeof(double))
        for i in prange(n, schedule="static"):
            counts[i] = _scan(i, img, cc, has_bracket, org, spacing, shp, strd, rad, eps2, lo, hi, cur, a, NULL)
        free(lo)
        free(hi)
        free(cur)
        free(a)

    indptr_arr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts_arr, out=indptr_arr[1:])
    cdef long long[::1] indptr = indptr_arr
    indices_arr = np.zeros(int(indptr_arr[n]), dtype=np.int64)
    cdef long long[::1] indices = indices_arr
    cdef long long* base = &indices[0] if indices.shape[0] > 0 else NULL

    if base != NULL:
        with nogil, parallel():
            lo = <long long*>malloc(d * sizeof(long long))
            hi = <long long*>malloc(d * sizeof(long long))
            cur = <long long*>malloc(d * sizeof(long long))
            a = <double*>malloc(d * sizeof(double))
            for i in prange(n, schedule="static"):
                if counts[i] > 0:
                    _scan(i, img, cc, has_bracket, org, spacing, shp, strd, rad, eps2, lo, hi, cur, a, base + indptr[i])
            free(lo)
            free(hi)
            free(cur)
            free(a)
    return indptr_arr, indices_arr


def tarjan_scc(indptr_in, indices_in):
    """Iterative Tarjan; labels are assigned in order of component completion."""
    cdef const long long[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int64)
    cdef const long long[::1] adj = np.ascontiguousarray(indices_in, dtype=np.int64)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    index_arr = np.full(n, -1, dtype=np.int64)
    low_arr = np.zeros(n, dtype=np.int64)
    onstack_arr = np.zeros(n, dtype=np.uint8)
    labels_arr = np.full(n, -1, dtype=np.int64)
    stack_arr = np.zeros(max(n, 1), dtype=np.int64)
    work_v_arr = np.zeros(max(n, 1), dtype=np.int64)
    work_p_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef long long[::1] index = index_arr
    cdef long long[::1] low = low_arr
    cdef unsigned char[::1] onstack = onstack_arr
    cdef long long[::1] labels = labels_arr
    cdef long long[::1] stack = stack_arr
    cdef long long[::1] work_v = work_v_arr
    cdef long long[::1] work_p = work_p_arr
    cdef Py_ssize_t root, sp = 0, wp = 0
    cdef long long v, w, u, pos, end, counter = 0, ncomp = 0
    cdef bint descended
    with nogil:
        for root in range(n):
            if index[root] != -1:
                continue
            index[root] = counter
            low[root] = counter
            counter += 1
            stack[sp] = root
            sp += 1
            onstack[root] = 1
            work_v[0] = root
            work_p[0] = indptr[root]
            wp = 1
            while wp > 0:
                v = work_v[wp - 1]
                pos = work_p[wp - 1]
                end = indptr[v + 1]
                descended = False
                while pos < end:
                    w = adj[pos]
                    pos += 1
                    if index[w] == -1:
                        work_p[wp - 1] = pos
                        index[w] = counter
                        low[w] = counter
                        counter += 1
                        stack[sp] = w
                        sp += 1
                        onstack[w] = 1
                        work_v[wp] = w
                        work_p[wp] = indptr[w]
                        wp += 1
                        descended = True
                        break
                    if onstack[w] and index[w] < low[v]:
                        low[v] = index[w]
                if descended:
                    continue
                wp -= 1
                if low[v] == index[v]:
                    while True:
                        sp -= 1
                        w = stack[sp]
                        onstack[w] = 0
                        labels[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                if wp > 0:
                    u = work_v[wp - 1]
                    if low[v] < low[u]:
                        low[u] = low[v]
    return labels_arr
