"""Camera-subset selection maximizing two-view point coverage.

Given a visibility matrix (which cameras see which key points), pick exactly
n_prime cameras so that as many points as possible stay covered by at least
two chosen views, the minimum for triangulation. Solved exactly with
branch-and-bound up to 24 cameras, greedily above that. A camera map
collects the optimal subset for every candidate size so the online
controller can trade camera count against latency.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pointcloud import CameraModel, PointCloud, project_array
from .segmentation import kmeans

DEFAULT_KEYPOINT_FRACTION = 0.05
EXACT_LIMIT = 24
MIN_CAMERAS = 3


@dataclass
class VisibilityMatrix:
    """Point-to-camera coverage with the point coordinates retained."""

    coverage: np.ndarray  # (n_points, n_cameras) bool
    camera_ids: list[int]
    coords: np.ndarray  # (n_points, 3) float64

    def __post_init__(self) -> None:
        self.coverage = np.asarray(self.coverage, dtype=bool)
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 3)
        if self.coverage.ndim != 2:
            raise ValueError("coverage must be 2-D")
        if self.coverage.shape[1] != len(self.camera_ids):
            raise ValueError("camera id count does not match coverage columns")
        if self.coverage.shape[0] != len(self.coords):
            raise ValueError("coordinate count does not match coverage rows")
        if len(set(self.camera_ids)) != len(self.camera_ids):
            raise ValueError("duplicate camera ids")

    @property
    def n_points(self) -> int:
        return self.coverage.shape[0]

    @property
    def n_cameras(self) -> int:
        return self.coverage.shape[1]


@dataclass
class SelectionSolution:
    """A chosen camera subset and its two-view coverage objective."""

    cameras: tuple[int, ...]
    objective: int
    exact: bool = True


@dataclass
class CameraMap:
    """Optimal camera subset per subset size, for sizes MIN_CAMERAS..N."""

    n_cameras: int
    entries: dict[int, SelectionSolution] = field(default_factory=dict)

    def subset(self, n_prime: int) -> tuple[int, ...]:
        return self.entries[n_prime].cameras

    def objective(self, n_prime: int) -> int:
        return self.entries[n_prime].objective


def build_visibility(cloud: PointCloud, cameras: Sequence[CameraModel]) -> VisibilityMatrix:
    """Project every point into every camera and record image-bounds hits.

    A point is visible to a camera when it lies in front of it and its
    projection falls inside the raster (pixel convention: floor(u), floor(v)
    within bounds). Cameras are ordered by id in the matrix columns.

    Raises:
        ValueError: fewer than three cameras.
    """
    cams = sorted(cameras, key=lambda c: c.camera_id)
    if len(cams) < MIN_CAMERAS:
        raise ValueError(f"need at least {MIN_CAMERAS} cameras, got {len(cams)}")
    cols = []
    for cam in cams:
        uv, in_front = project_array(cloud.coords, cam)
        px = np.floor(uv[:, 0])
        py = np.floor(uv[:, 1])
        cols.append(
            in_front & (px >= 0) & (px < cam.width) & (py >= 0) & (py < cam.height)
        )
    return VisibilityMatrix(
        coverage=np.stack(cols, axis=1) if cols else np.zeros((len(cloud), 0), bool),
        camera_ids=[c.camera_id for c in cams],
        coords=cloud.coords.copy(),
    )


def select_keypoints(
    matrix: VisibilityMatrix, fraction: float = DEFAULT_KEYPOINT_FRACTION, seed: int = 0
) -> VisibilityMatrix:
    """Thin the matrix to ceil(fraction * n) cluster-representative points.

    Points are clustered by position with k-means; each cluster contributes
    the member nearest its centroid (ties to the lowest row index).
    Representatives keep their original relative order. fraction = 1 is the
    identity.

    Raises:
        ValueError: fraction outside (0, 1] or an empty matrix.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    n = matrix.n_points
    if n == 0:
        raise ValueError("cannot select key points from an empty matrix")
    k = math.ceil(fraction * n)
    if k >= n:
        return VisibilityMatrix(
            matrix.coverage.copy(), list(matrix.camera_ids), matrix.coords.copy()
        )
    labels, centroids, _ = kmeans(matrix.coords, k, seed)
    used: set[int] = set()
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        d2 = ((matrix.coords[members] - centroids[c]) ** 2).sum(axis=1)
        used.add(int(members[int(np.argmin(d2))]))
    # clusters that stayed empty (coincident points) still owe a
    # representative: lowest-index rows not already chosen
    for idx in range(n):
        if len(used) == k:
            break
        used.add(idx)
    reps = sorted(used)
    return VisibilityMatrix(
        coverage=matrix.coverage[reps].copy(),
        camera_ids=list(matrix.camera_ids),
        coords=matrix.coords[reps].copy(),
    )


def solve_p2(matrix: VisibilityMatrix, n_prime: int) -> SelectionSolution:
    """Choose exactly n_prime cameras maximizing points covered >= 2 times.

    Exact branch-and-bound for up to 24 cameras: cameras are decided in id
    order, include-branch first, and an incumbent is only replaced when
    strictly better, so the first optimum found is the lexicographically
    smallest. The bound counts points already covered twice plus points
    that could still reach two views given the undecided cameras and the
    remaining slots. Beyond 24 cameras a greedy sweep is used and the
    result is flagged exact=False.

    Raises:
        ValueError: n_prime outside [2, n_cameras].
    """
    n = matrix.n_cameras
    if not 2 <= n_prime <= n:
        raise ValueError(f"n_prime={n_prime} outside [2, {n}]")
    if n > EXACT_LIMIT:
        return _solve_greedy(matrix, n_prime)

    cov = matrix.coverage.astype(np.int64)
    counts = np.zeros(matrix.n_points, dtype=np.int64)
    avail = cov.sum(axis=1)
    best_obj = -1
    best_set: tuple[int, ...] = ()

    def bound(slots: int) -> int:
        done = counts >= 2
        one_more = (counts == 1) & (avail >= 1)
        two_more = (counts == 0) & (avail >= 2)
        ub = int(done.sum())
        if slots >= 1:
            ub += int((one_more & ~done).sum())
        if slots >= 2:
            ub += int(two_more.sum())
        return ub

    def dfs(i: int, chosen: list[int]) -> None:
        nonlocal best_obj, best_set, counts, avail
        slots = n_prime - len(chosen)
        if slots == 0:
            obj = int((counts >= 2).sum())
            if obj > best_obj:
                best_obj = obj
                best_set = tuple(matrix.camera_ids[j] for j in chosen)
            return
        if n - i < slots:
            return
        if bound(slots) <= best_obj:
            return
        col = cov[:, i]
        # include camera i
        counts += col
        avail -= col
        chosen.append(i)
        dfs(i + 1, chosen)
        chosen.pop()
        counts -= col
        # exclude camera i
        dfs(i + 1, chosen)
        avail += col

    dfs(0, [])
    return SelectionSolution(cameras=best_set, objective=best_obj, exact=True)


def _solve_greedy(matrix: VisibilityMatrix, n_prime: int) -> SelectionSolution:
    cov = matrix.coverage
    n = matrix.n_cameras
    counts = np.zeros(matrix.n_points, dtype=np.int64)
    chosen: list[int] = []
    remaining = list(range(n))
    for _ in range(n_prime):
        gains = []
        for j in remaining:
            new = counts + cov[:, j]
            gains.append(int((new >= 2).sum()))
        pick = remaining[int(np.argmax(gains))]
        counts += cov[:, pick]
        chosen.append(pick)
        remaining.remove(pick)
    ids = tuple(sorted(matrix.camera_ids[j] for j in chosen))
    return SelectionSolution(cameras=ids, objective=int((counts >= 2).sum()), exact=False)


def build_camera_map(matrix: VisibilityMatrix, n_min: int = MIN_CAMERAS) -> CameraMap:
    """Solve the subset problem for every size from n_min up to all cameras."""
    n = matrix.n_cameras
    if n < n_min:
        raise ValueError(f"matrix has {n} cameras, need at least {n_min}")
    entries = {k: solve_p2(matrix, k) for k in range(n_min, n + 1)}
    return CameraMap(n_cameras=n, entries=entries)


def matrix_to_csv(matrix: VisibilityMatrix) -> str:
    """Serialize as CSV: x,y,z columns then one 0/1 column per camera id."""
    buf = io.StringIO()
    header = ["x", "y", "z"] + [str(c) for c in matrix.camera_ids]
    buf.write(",".join(header) + "\n")
    for row in range(matrix.n_points):
        x, y, z = matrix.coords[row]
        cells = [repr(float(x)), repr(float(y)), repr(float(z))]
        cells += [str(int(v)) for v in matrix.coverage[row]]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def matrix_from_csv(text: str) -> VisibilityMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty visibility CSV")
    header = lines[0].split(",")
    if header[:3] != ["x", "y", "z"]:
        raise ValueError("visibility CSV must start with x,y,z columns")
    ids = [int(tok) for tok in header[3:]]
    coords, rows = [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        coords.append([float(v) for v in cells[:3]])
        rows.append([cell.strip() == "1" for cell in cells[3:]])
    return VisibilityMatrix(
        coverage=np.array(rows, dtype=bool).reshape(len(rows), len(ids)),
        camera_ids=ids,
        coords=np.array(coords, dtype=np.float64).reshape(len(rows), 3),
    )


def map_to_json(cmap: CameraMap) -> str:
    doc = {
        "n_cameras": cmap.n_cameras,
        "entries": {
            str(k): {
                "cameras": list(sol.cameras),
                "objective": sol.objective,
                "exact": sol.exact,
            }
            for k, sol in sorted(cmap.entries.items())
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def map_from_json(text: str) -> CameraMap:
    doc = json.loads(text)
    entries = {
        int(k): SelectionSolution(
            cameras=tuple(v["cameras"]), objective=int(v["objective"]),
            exact=bool(v.get("exact", True)),
        )
        for k, v in doc["entries"].items()
    }
    return CameraMap(n_cameras=int(doc["n_cameras"]), entries=entries)
