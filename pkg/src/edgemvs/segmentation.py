"""Background subtraction and mask clustering for grayscale frames.

The background is a per-pixel running Gaussian: exponentially weighted mean
and variance folded over the frame sequence. Foreground pixels are those
deviating from the mean by more than k_sigma standard deviations (with a
floor so freshly initialized pixels do not flag sensor noise). Connected
foreground blobs are separated with k-means over pixel coordinates, the
cluster count picked by silhouette score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

DEFAULT_ALPHA = 0.05
DEFAULT_SIGMA_FLOOR = 2.0
# minimum silhouette for accepting a multi-cluster split; a single compact
# blob scores ~0.3 against k=2, well-separated blobs score >0.9
SILHOUETTE_THRESHOLD = 0.5
_MAX_ITER = 100


@dataclass
class BackgroundModel:
    """Per-pixel running mean/variance of the static scene."""

    mean: np.ndarray
    variance: np.ndarray
    frames_seen: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean.shape  # type: ignore[return-value]


def update_background(
    model: BackgroundModel | None,
    frame: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
) -> BackgroundModel:
    """Fold one frame into the background model, returning a new model.

    The first frame initializes mean = frame, variance = 0. Afterwards,
    with diff = frame - mean:

        mean     <- mean + alpha * diff
        variance <- (1 - alpha) * variance + alpha * diff**2

    Args:
        model: previous model, or None to start from this frame.
        frame: (height, width) grayscale array.
        alpha: learning rate in (0, 1].
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    pixels = np.asarray(frame, dtype=np.float64)
    if pixels.ndim != 2:
        raise ValueError("frame must be 2-D grayscale")
    if model is None or model.frames_seen == 0:
        return BackgroundModel(pixels.copy(), np.zeros_like(pixels), 1)
    if pixels.shape != model.shape:
        raise ValueError(f"frame is {pixels.shape}, model is {model.shape}")
    diff = pixels - model.mean
    mean = model.mean + alpha * diff
    variance = (1.0 - alpha) * model.variance + alpha * diff * diff
    return BackgroundModel(mean, variance, model.frames_seen + 1)


def extract_mask(
    model: BackgroundModel,
    frame: np.ndarray,
    k_sigma: float,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> np.ndarray:
    """Boolean foreground mask: |frame - mean| > k_sigma * max(sigma, floor)."""
    if model.frames_seen < 1:
        raise ValueError("background model has seen no frames")
    if k_sigma <= 0:
        raise ValueError("k_sigma must be positive")
    pixels = np.asarray(frame, dtype=np.float64)
    if pixels.shape != model.shape:
        raise ValueError(f"frame is {pixels.shape}, model is {model.shape}")
    sigma = np.maximum(np.sqrt(model.variance), sigma_floor)
    return np.abs(pixels - model.mean) > k_sigma * sigma


def kmeans(
    points: np.ndarray, k: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd's k-means with k-means++ seeding.

    Deterministic for a given seed; runs to an assignment fixpoint or 100
    iterations. Empty clusters are re-seeded to the point farthest from its
    centroid (ties to the lowest index).

    Args:
        points: (n, d) array.
        k: cluster count, 1 <= k <= n.
        seed: RNG seed for the seeding step.

    Returns:
        (labels, centroids, inertia): per-point cluster index, (k, d)
        centroid array, and the total squared distance to assigned
        centroids.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")

    centroids = _seed_plus_plus(pts, k, np.random.default_rng(seed))
    labels = _kernels.assign_labels(pts, centroids)
    for _ in range(_MAX_ITER):
        centroids = _recompute_centroids(pts, labels, centroids, k)
        new_labels = _kernels.assign_labels(pts, centroids)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    inertia = float(((pts - centroids[labels]) ** 2).sum())
    return labels, centroids, inertia


def _seed_plus_plus(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pts)
    chosen = [int(rng.integers(n))]
    d2 = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a seed: take lowest unchosen
            taken = np.zeros(n, dtype=bool)
            taken[chosen] = True
            nxt = int(np.flatnonzero(~taken)[0])
        else:
            r = rng.random() * total
            nxt = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            nxt = min(nxt, n - 1)
        chosen.append(nxt)
        d2 = np.minimum(d2, ((pts - pts[nxt]) ** 2).sum(axis=1))
    return pts[chosen].copy()


def _recompute_centroids(
    pts: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int
) -> np.ndarray:
    out = centroids.copy()
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j] > 0:
            out[j] = pts[labels == j].mean(axis=0)
    # re-seed empty clusters to the point farthest from its assigned
    # centroid (np.argmax ties resolve to the lowest index); bounded so a
    # fully coincident point set cannot cycle
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0:
            break
        dist = ((pts - out[labels]) ** 2).sum(axis=1)
        out[int(empty[0])] = pts[int(np.argmax(dist))]
        labels = _kernels.assign_labels(pts, out)
    return out


def silhouette_score(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over all points; singleton-cluster points score 0."""
    pts = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError("silhouette needs at least two clusters")
    counts = {int(c): int((labels == c).sum()) for c in ids}
    scores = np.zeros(len(pts))
    for start in range(0, len(pts), 512):
        chunk = slice(start, min(start + 512, len(pts)))
        d = np.sqrt(
            ((pts[chunk][:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        )
        for row, i in enumerate(range(chunk.start, chunk.stop)):
            own = int(labels[i])
            if counts[own] == 1:
                continue
            a = d[row][labels == own].sum() / (counts[own] - 1)
            b = min(
                d[row][labels == c].mean() for c in counts if c != own
            )
            denom = max(a, b)
            scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def cluster_mask(
    mask: np.ndarray,
    k_max: int = 5,
    seed: int = 0,
    threshold: float = SILHOUETTE_THRESHOLD,
) -> list[np.ndarray]:
    """Partition a foreground mask into per-object masks.

    Foreground pixel coordinates are clustered with k-means for each
    k = 2..k_max; the k with the best silhouette wins if that score exceeds
    the acceptance threshold, otherwise the mask stays whole (k = 1). Ties
    across k resolve to the smallest k. The returned masks are disjoint and
    their union equals the input mask.

    Args:
        mask: (height, width) boolean raster.
        k_max: largest cluster count to consider (>= 1).
        seed: k-means seed.
        threshold: minimum silhouette for accepting a split.

    Returns:
        One boolean mask per cluster; empty list for an empty input mask.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    n = len(ys)
    if n == 0:
        return []
    pts = np.stack([xs, ys], axis=1).astype(np.float64)

    best_k, best_score, best_labels = 1, -1.0, np.zeros(n, dtype=np.int64)
    for k in range(2, min(k_max, n) + 1):
        labels, _, _ = kmeans(pts, k, seed)
        if len(np.unique(labels)) < 2:
            continue
        score = silhouette_score(pts, labels)
        if score > best_score + 1e-12:
            best_k, best_score, best_labels = k, score, labels
    if best_k == 1 or best_score <= threshold:
        return [mask.copy()]

    out = []
    for c in range(best_k):
        sel = best_labels == c
        m = np.zeros_like(mask)
        m[ys[sel], xs[sel]] = True
        out.append(m)
    return out
