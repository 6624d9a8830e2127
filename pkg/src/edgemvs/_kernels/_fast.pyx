# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the numpy kernels in _pure.py.

Same contract, same results bit for bit: per-axis distance accumulation in
the same order, strict less-than comparisons so ties keep the lowest index.
"""

import numpy as np

from libc.math cimport floor

cdef int AXIS_BITS = 21


cdef inline Py_ssize_t _lower_bound(long long[::1] keys, long long target) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    return lo


def count_within(query, ref, double d):
    """Count query points with at least one ref point within distance <= d."""
    q = np.ascontiguousarray(query, dtype=np.float64)
    r = np.ascontiguousarray(ref, dtype=np.float64)
    if q.shape[0] == 0 or r.shape[0] == 0:
        return 0

    cdef double dsq = d * d
    cdef double[:, ::1] qv = q
    cdef Py_ssize_t n = qv.shape[0], m = r.shape[0]
    cdef Py_ssize_t i, j, k

    cells = np.floor(r / d).astype(np.int64)
    lo = cells.min(axis=0)
    span = cells.max(axis=0) - lo + 1
    cdef long long cap = (<long long>1 << AXIS_BITS) - 2
    cdef double[:, ::1] rv = r
    cdef double dx, dy, dz, acc
    cdef Py_ssize_t count = 0

    if span.max() >= cap:
        # degenerate coordinate span: plain exact scan
        for i in range(n):
            for j in range(m):
                dx = qv[i, 0] - rv[j, 0]
                dy = qv[i, 1] - rv[j, 1]
                dz = qv[i, 2] - rv[j, 2]
                acc = dx * dx
                acc += dy * dy
                acc += dz * dz
                if acc <= dsq:
                    count += 1
                    break
        return count

    cells -= lo
    keys = (
        (cells[:, 0] << (2 * AXIS_BITS)) | (cells[:, 1] << AXIS_BITS) | cells[:, 2]
    ).astype(np.int64)
    order = np.argsort(keys, kind="stable")
    sorted_keys_arr = keys[order]
    ref_sorted = np.ascontiguousarray(r[order])

    cdef long long[::1] sorted_keys = sorted_keys_arr
    cdef double[:, ::1] rs = ref_sorted
    cdef long long offx = lo[0], offy = lo[1], offz = lo[2]
    cdef long long sx = span[0], sy = span[1], sz = span[2]
    cdef long long cx, cy, cz, nx, ny, nz, key
    cdef Py_ssize_t pos, ax, ay, az
    cdef bint found

    with nogil:
        for i in range(n):
            cx = <long long>floor(qv[i, 0] / d) - offx
            cy = <long long>floor(qv[i, 1] / d) - offy
            cz = <long long>floor(qv[i, 2] / d) - offz
            found = False
            for ax in range(-1, 2):
                nx = cx + ax
                if nx < 0 or nx >= sx:
                    continue
                for ay in range(-1, 2):
                    ny = cy + ay
                    if ny < 0 or ny >= sy:
                        continue
                    for az in range(-1, 2):
                        nz = cz + az
                        if nz < 0 or nz >= sz:
                            continue
                        key = (nx << (2 * AXIS_BITS)) | (ny << AXIS_BITS) | nz
                        pos = _lower_bound(sorted_keys, key)
                        while pos < sorted_keys.shape[0] and sorted_keys[pos] == key:
                            dx = qv[i, 0] - rs[pos, 0]
                            dy = qv[i, 1] - rs[pos, 1]
                            dz = qv[i, 2] - rs[pos, 2]
                            acc = dx * dx
                            acc += dy * dy
                            acc += dz * dz
                            if acc <= dsq:
                                found = True
                                break
                            pos += 1
                        if found:
                            break
                    if found:
                        break
                if found:
                    break
            if found:
                count += 1
    return count


def assign_labels(points, centroids):
    """Nearest-centroid index per point; ties resolve to the lowest index."""
    p = np.ascontiguousarray(points, dtype=np.float64)
    c = np.ascontiguousarray(centroids, dtype=np.float64)
    labels = np.empty(p.shape[0], dtype=np.int64)

    cdef double[:, ::1] pv = p
    cdef double[:, ::1] cv = c
    cdef long long[::1] lv = labels
    cdef Py_ssize_t n = pv.shape[0], k = cv.shape[0], dim = pv.shape[1]
    cdef Py_ssize_t i, j, a, best
    cdef double acc, diff, bestd

    with nogil:
        for i in range(n):
            best = 0
            bestd = 0.0
            for j in range(k):
                acc = 0.0
                for a in range(dim):
                    diff = pv[i, a] - cv[j, a]
                    acc += diff * diff
                if j == 0 or acc < bestd:
                    bestd = acc
                    best = j
            lv[i] = best
    return labels
