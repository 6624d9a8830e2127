"""Point-cloud domain types, pinhole projection, and foreground splitting.

Clouds are stored as (n, 3) float64 coordinate arrays with parallel (n, 3)
uint8 colors; Point3 is the scalar view used at API edges. All operations
are pure: they return new clouds and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_COLOR = (255, 255, 255)


@dataclass(frozen=True)
class Point3:
    """A single colored 3-D point."""

    x: float
    y: float
    z: float
    color: tuple[int, int, int] = DEFAULT_COLOR


@dataclass
class PointCloud:
    """Ordered colored point set with a role label ("fg", "bg", "full", ...)."""

    coords: np.ndarray
    colors: np.ndarray | None = None
    label: str = ""

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 3)
        if self.colors is None:
            self.colors = np.full((len(self.coords), 3), 255, dtype=np.uint8)
        else:
            self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if len(self.colors) != len(self.coords):
            raise ValueError("colors and coords length mismatch")
        if not np.isfinite(self.coords).all():
            raise ValueError("non-finite coordinate")

    @classmethod
    def from_points(cls, points: Iterable[Point3], label: str = "") -> "PointCloud":
        pts = list(points)
        coords = np.array([(p.x, p.y, p.z) for p in pts], dtype=np.float64).reshape(-1, 3)
        colors = np.array([p.color for p in pts], dtype=np.uint8).reshape(-1, 3)
        return cls(coords=coords, colors=colors, label=label)

    @property
    def points(self) -> list[Point3]:
        return [
            Point3(float(x), float(y), float(z), (int(r), int(g), int(b)))
            for (x, y, z), (r, g, b) in zip(self.coords, self.colors)
        ]

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[Point3]:
        return iter(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.label == other.label
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.colors, other.colors)
        )


@dataclass
class CameraModel:
    """Calibrated pinhole camera: intrinsics plus world-to-camera pose."""

    camera_id: int
    focal: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.validate()

    def validate(self) -> None:
        if self.focal <= 0:
            raise ValueError(f"camera {self.camera_id}: focal must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"camera {self.camera_id}: image size must be positive")
        err = np.abs(self.rotation @ self.rotation.T - np.eye(3)).max()
        if err > 1e-6:
            raise ValueError(
                f"camera {self.camera_id}: rotation not orthonormal (err={err:.2e})"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.camera_id,
            "focal": self.focal,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(
            camera_id=int(d["id"]),
            focal=float(d["focal"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
            rotation=np.array(d["rotation"], dtype=np.float64),
            translation=np.array(d["translation"], dtype=np.float64),
        )


@dataclass
class ForegroundMask:
    """Per-camera binary raster; True marks foreground pixels."""

    camera_id: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=bool)
        if self.pixels.ndim != 2:
            raise ValueError("mask raster must be 2-D")


def project(point, camera: CameraModel) -> tuple[float, float] | None:
    """Project one world point; None when it lies behind the camera.

    Args:
        point: Point3 or any (x, y, z) triple.
        camera: target camera.

    Returns:
        Continuous pixel coordinates (u, v), or None for camera-frame
        depth <= 0.
    """
    if isinstance(point, Point3):
        p = np.array([point.x, point.y, point.z])
    else:
        p = np.asarray(point, dtype=np.float64).reshape(3)
    cam = camera.rotation @ p + camera.translation
    if cam[2] <= 0.0:
        return None
    u = camera.focal * cam[0] / cam[2] + camera.cx
    v = camera.focal * cam[1] / cam[2] + camera.cy
    return float(u), float(v)


def project_array(coords: np.ndarray, camera: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of an (n, 3) array.

    Returns:
        (uv, in_front): (n, 2) pixel coordinates (valid only where in_front)
        and the boolean in-front-of-camera flags.
    """
    cam = coords @ camera.rotation.T + camera.translation
    in_front = cam[:, 2] > 0.0
    z = np.where(in_front, cam[:, 2], 1.0)
    uv = np.empty((len(coords), 2), dtype=np.float64)
    uv[:, 0] = camera.focal * cam[:, 0] / z + camera.cx
    uv[:, 1] = camera.focal * cam[:, 1] / z + camera.cy
    return uv, in_front


def _mask_hits(coords: np.ndarray, mask: ForegroundMask, camera: CameraModel) -> np.ndarray:
    """True per point when its projection lands on a foreground pixel.

    Pixel convention: (u, v) lands on pixel column floor(u), row floor(v);
    points behind the camera or projecting outside the raster never hit.
    """
    h, w = mask.pixels.shape
    if (w, h) != (camera.width, camera.height):
        raise ValueError(
            f"mask for camera {camera.camera_id} is {w}x{h}, "
            f"camera is {camera.width}x{camera.height}"
        )
    uv, in_front = project_array(coords, camera)
    px = np.floor(uv[:, 0]).astype(np.int64)
    py = np.floor(uv[:, 1]).astype(np.int64)
    inside = in_front & (px >= 0) & (px < w) & (py >= 0) & (py < h)
    hits = np.zeros(len(coords), dtype=bool)
    idx = np.flatnonzero(inside)
    hits[idx] = mask.pixels[py[idx], px[idx]]
    return hits


def split_points(
    cloud: PointCloud,
    masks: Sequence[ForegroundMask],
    cameras: Sequence[CameraModel],
    min_views: int = 2,
) -> tuple[PointCloud, PointCloud]:
    """Split a cloud into foreground and background by mask agreement.

    A point is foreground when its projection lands on a foreground pixel
    in at least min_views cameras. Point order is preserved within each
    output cloud, and together they partition the input exactly.

    Raises:
        ValueError: a mask references an unknown camera, mask/camera
            dimensions disagree, or min_views < 1.
    """
    if min_views < 1:
        raise ValueError("min_views must be >= 1")
    by_id = {cam.camera_id: cam for cam in cameras}
    votes = np.zeros(len(cloud), dtype=np.int64)
    for mask in masks:
        cam = by_id.get(mask.camera_id)
        if cam is None:
            raise ValueError(f"mask references unknown camera {mask.camera_id}")
        votes += _mask_hits(cloud.coords, mask, cam)
    fg_sel = votes >= min_views
    fg = PointCloud(cloud.coords[fg_sel].copy(), cloud.colors[fg_sel].copy(), "fg")
    bg = PointCloud(cloud.coords[~fg_sel].copy(), cloud.colors[~fg_sel].copy(), "bg")
    return fg, bg


def merge_clouds(fg: PointCloud, bg: PointCloud) -> PointCloud:
    """Concatenate foreground and background back into one full cloud."""
    return PointCloud(
        np.concatenate([fg.coords, bg.coords]),
        np.concatenate([fg.colors, bg.colors]),
        "full",
    )
