"""Shared fixtures: small camera rigs and random-cloud helpers."""

import numpy as np
import pytest

from edgemvs.pointcloud import CameraModel, PointCloud


def make_camera(camera_id: int, x_offset: float = 0.0, width: int = 64, height: int = 48):
    """Camera at (x_offset, 0, 0) looking down +z with identity rotation."""
    return CameraModel(
        camera_id=camera_id,
        focal=40.0,
        cx=width / 2,
        cy=height / 2,
        width=width,
        height=height,
        rotation=np.eye(3),
        translation=np.array([-x_offset, 0.0, 0.0]),
    )


def random_cloud(rng: np.random.Generator, n: int, label: str = "full") -> PointCloud:
    coords = rng.uniform(-1.0, 1.0, size=(n, 3))
    colors = rng.integers(0, 256, size=(n, 3), dtype=np.uint8)
    return PointCloud(coords, colors, label)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def three_cameras():
    return [make_camera(i, x_offset=0.3 * i) for i in range(3)]
