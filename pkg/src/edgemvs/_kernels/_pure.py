"""Numpy implementations of the hot kernels.

This is the fallback used when the compiled extension is unavailable. Both
backends must return bit-identical results: distance terms are accumulated
per coordinate in the same order, and nearest-centroid ties resolve to the
lowest index in both.
"""

from __future__ import annotations

import numpy as np

# 21 bits per axis in the packed cell key; spans beyond this fall back to a
# plain scan (still exact, just slower).
_AXIS_BITS = 21
_AXIS_CAP = 1 << _AXIS_BITS


def _pack(cells: np.ndarray) -> np.ndarray:
    return (
        (cells[:, 0].astype(np.int64) << (2 * _AXIS_BITS))
        | (cells[:, 1].astype(np.int64) << _AXIS_BITS)
        | cells[:, 2].astype(np.int64)
    )


def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # per-axis accumulation keeps float ops in the same order as the C loop
    d2 = (a[:, 0] - b[:, 0]) ** 2
    d2 += (a[:, 1] - b[:, 1]) ** 2
    d2 += (a[:, 2] - b[:, 2]) ** 2
    return d2


def _count_within_brute(query: np.ndarray, ref: np.ndarray, dsq: float) -> int:
    count = 0
    for start in range(0, len(query), 512):
        chunk = query[start : start + 512]
        d2 = (chunk[:, None, 0] - ref[None, :, 0]) ** 2
        d2 += (chunk[:, None, 1] - ref[None, :, 1]) ** 2
        d2 += (chunk[:, None, 2] - ref[None, :, 2]) ** 2
        count += int((d2 <= dsq).any(axis=1).sum())
    return count


def count_within(query: np.ndarray, ref: np.ndarray, d: float) -> int:
    """Count query points with at least one ref point within distance <= d.

    Uses a uniform hash grid with cell size d, so each query inspects only
    the 27 cells surrounding its own. Exactness is preserved: a neighbour
    at distance <= d can never sit outside that 3x3x3 block.
    """
    query = np.ascontiguousarray(query, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    if len(query) == 0 or len(ref) == 0:
        return 0
    dsq = d * d

    ref_cells = np.floor(ref / d).astype(np.int64)
    lo = ref_cells.min(axis=0)
    span = ref_cells.max(axis=0) - lo + 1
    if (span >= _AXIS_CAP - 2).any():
        return _count_within_brute(query, ref, dsq)
    ref_cells -= lo

    keys = _pack(ref_cells)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    ref_sorted = ref[order]

    offsets = np.array(
        [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)],
        dtype=np.int64,
    )

    count = 0
    for start in range(0, len(query), 4096):
        chunk = query[start : start + 4096]
        cells = np.floor(chunk / d).astype(np.int64) - lo
        # (chunk, 27, 3) neighbour cells; out-of-range ones get a key that
        # cannot occur among ref keys (axis value -1 packs negative)
        neigh = cells[:, None, :] + offsets[None, :, :]
        valid = ((neigh >= 0) & (neigh < span)).all(axis=2)
        flat = neigh.reshape(-1, 3)
        nkeys = np.where(valid.ravel(), _pack(np.clip(flat, 0, None)), np.int64(-1))

        starts = np.searchsorted(sorted_keys, nkeys, side="left")
        ends = np.searchsorted(sorted_keys, nkeys, side="right")
        lens = ends - starts
        total = int(lens.sum())
        if total == 0:
            continue
        # expand [start, end) ranges into flat candidate indices
        qidx = np.repeat(np.arange(len(chunk)), lens.reshape(len(chunk), 27).sum(axis=1))
        base = np.repeat(np.cumsum(lens) - lens, lens)
        ridx = np.arange(total) - base + np.repeat(starts, lens)

        within = _sq_dist(chunk[qidx], ref_sorted[ridx]) <= dsq
        covered = np.zeros(len(chunk), dtype=bool)
        covered[qidx[within]] = True
        count += int(covered.sum())
    return count


def assign_labels(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid index per point; ties resolve to the lowest index."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    labels = np.empty(len(points), dtype=np.int64)
    for start in range(0, len(points), 8192):
        chunk = points[start : start + 8192]
        d2 = (chunk[:, None, 0] - centroids[None, :, 0]) ** 2
        for axis in range(1, points.shape[1]):
            d2 += (chunk[:, None, axis] - centroids[None, :, axis]) ** 2
        labels[start : start + 8192] = np.argmin(d2, axis=1)
    return labels
