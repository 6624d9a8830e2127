"""Domain types, projection, and split/merge tests."""

import numpy as np
import pytest

from edgemvs.pointcloud import (
    CameraModel,
    ForegroundMask,
    Point3,
    PointCloud,
    merge_clouds,
    project,
    project_array,
    split_points,
)

from conftest import make_camera, random_cloud


def test_cloud_validation():
    with pytest.raises(ValueError, match="length mismatch"):
        PointCloud(np.zeros((2, 3)), np.zeros((3, 3), dtype=np.uint8))
    with pytest.raises(ValueError, match="non-finite"):
        PointCloud(np.array([[0.0, np.inf, 0.0]]))


def test_cloud_default_colors_white():
    cloud = PointCloud(np.zeros((4, 3)))
    assert (cloud.colors == 255).all()


def test_from_points_round_trip():
    pts = [Point3(1, 2, 3, (9, 8, 7)), Point3(-1, 0, 4)]
    cloud = PointCloud.from_points(pts, label="fg")
    assert cloud.points == pts
    assert list(cloud) == pts
    assert len(cloud) == 2


def test_cloud_equality_includes_label():
    a = PointCloud(np.zeros((1, 3)), label="fg")
    b = PointCloud(np.zeros((1, 3)), label="bg")
    assert a != b
    assert a == PointCloud(np.zeros((1, 3)), label="fg")


def test_camera_rejects_non_orthonormal_rotation():
    with pytest.raises(ValueError, match="orthonormal"):
        CameraModel(0, 40.0, 32, 24, 64, 48, rotation=np.ones((3, 3)))


def test_camera_rejects_bad_intrinsics():
    with pytest.raises(ValueError, match="focal"):
        CameraModel(0, 0.0, 32, 24, 64, 48)
    with pytest.raises(ValueError, match="size"):
        CameraModel(0, 40.0, 32, 24, 0, 48)


def test_camera_dict_round_trip():
    cam = make_camera(3, x_offset=0.5)
    back = CameraModel.from_dict(cam.to_dict())
    assert back.camera_id == 3
    assert np.allclose(back.rotation, cam.rotation)
    assert np.allclose(back.translation, cam.translation)


def test_project_axis_point_hits_principal_point():
    cam = make_camera(0)  # at origin, looking +z, f=40, c=(32, 24)
    assert project(Point3(0, 0, 5), cam) == (32.0, 24.0)


def test_project_known_offsets():
    cam = make_camera(0)
    # x = z/f * (u - cx): a point at (1, 0.5, 4) lands at f*1/4+32, f*0.5/4+24
    assert project((1.0, 0.5, 4.0), cam) == (42.0, 29.0)


def test_project_behind_camera_is_none():
    cam = make_camera(0)
    assert project(Point3(0, 0, -1), cam) is None
    assert project(Point3(0, 0, 0), cam) is None


def test_project_array_agrees_with_scalar(rng):
    cam = make_camera(1, x_offset=0.2)
    coords = rng.normal(size=(100, 3)) + [0, 0, 3]
    uv, in_front = project_array(coords, cam)
    for i, p in enumerate(coords):
        scalar = project(p, cam)
        if scalar is None:
            assert not in_front[i]
        else:
            assert in_front[i]
            assert uv[i, 0] == pytest.approx(scalar[0])
            assert uv[i, 1] == pytest.approx(scalar[1])


def test_split_respects_min_views():
    cams = [make_camera(i) for i in range(3)]
    # two points in front of every camera; full-frame fg masks for cams 0, 1
    cloud = PointCloud(np.array([[0.0, 0.0, 5.0], [0.1, 0.1, 4.0]]))
    full = np.ones((48, 64), dtype=bool)
    masks = [ForegroundMask(0, full), ForegroundMask(1, full), ForegroundMask(2, ~full)]
    fg2, bg2 = split_points(cloud, masks, cams, min_views=2)
    assert len(fg2) == 2 and len(bg2) == 0
    fg3, bg3 = split_points(cloud, masks, cams, min_views=3)
    assert len(fg3) == 0 and len(bg3) == 2


def test_split_pixel_membership_is_floor():
    cam = make_camera(0)
    mask = np.zeros((48, 64), dtype=bool)
    mask[29, 42] = True  # exactly where (1, 0.5, 4) projects, (u,v)=(42,29)
    cloud = PointCloud(np.array([[1.0, 0.5, 4.0], [1.04, 0.5, 4.0]]))
    # second point projects to u=42.4 -> same pixel column 42
    fg, bg = split_points(cloud, [ForegroundMask(0, mask)], [cam], min_views=1)
    assert len(fg) == 2
    mask2 = np.zeros((48, 64), dtype=bool)
    mask2[29, 43] = True
    fg2, _ = split_points(cloud, [ForegroundMask(0, mask2)], [cam], min_views=1)
    assert len(fg2) == 0


def test_split_ignores_points_behind_or_outside():
    cam = make_camera(0)
    mask = np.ones((48, 64), dtype=bool)
    cloud = PointCloud(np.array([[0.0, 0.0, -5.0], [100.0, 0.0, 1.0]]))
    fg, bg = split_points(cloud, [ForegroundMask(0, mask)], [cam], min_views=1)
    assert len(fg) == 0
    assert len(bg) == 2


def test_split_labels_and_merge_label():
    cloud = PointCloud(np.array([[0.0, 0.0, 5.0]]))
    cam = make_camera(0)
    fg, bg = split_points(cloud, [ForegroundMask(0, np.ones((48, 64), bool))], [cam], 1)
    assert fg.label == "fg" and bg.label == "bg"
    assert merge_clouds(fg, bg).label == "full"


def test_split_merge_multiset_round_trip(rng):
    for _ in range(20):
        n = int(rng.integers(1, 200))
        cloud = random_cloud(rng, n)
        cloud.coords[:, 2] = rng.uniform(1.0, 6.0, size=n)  # keep points in front
        cams = [make_camera(i, x_offset=0.2 * i) for i in range(3)]
        masks = [
            ForegroundMask(i, rng.uniform(size=(48, 64)) > 0.5) for i in range(3)
        ]
        fg, bg = split_points(cloud, masks, cams)
        assert len(fg) + len(bg) == n
        merged = merge_clouds(fg, bg)
        key = lambda c: sorted(map(tuple, np.hstack([c.coords, c.colors])))
        assert key(merged) == key(cloud)


def test_split_rejects_unknown_camera():
    cloud = PointCloud(np.zeros((1, 3)))
    with pytest.raises(ValueError, match="unknown camera"):
        split_points(cloud, [ForegroundMask(9, np.ones((48, 64), bool))], [make_camera(0)])


def test_split_rejects_dimension_mismatch():
    cloud = PointCloud(np.zeros((1, 3)))
    with pytest.raises(ValueError, match="64x48"):
        split_points(
            cloud, [ForegroundMask(0, np.ones((10, 10), bool))], [make_camera(0)], 1
        )


def test_split_rejects_bad_min_views():
    cloud = PointCloud(np.zeros((1, 3)))
    with pytest.raises(ValueError, match="min_views"):
        split_points(cloud, [], [], min_views=0)
