"""F-score evaluation tests, checked against a brute-force scan."""

import logging

import numpy as np
import pytest

from edgemvs._kernels import _pure
from edgemvs.pointcloud import PointCloud
from edgemvs.quality import fscore, online_quality, precision, recall

try:
    from edgemvs._kernels import _fast
except ImportError:  # extension not built; selector already fell back
    _fast = None

BACKENDS = [_pure] + ([_fast] if _fast is not None else [])


def brute_matched(query: np.ndarray, ref: np.ndarray, d: float) -> int:
    """O(n*m) reference: query points with some ref point within <= d."""
    if len(query) == 0 or len(ref) == 0:
        return 0
    diff = query[:, None, :] - ref[None, :, :]
    dsq = np.einsum("ijk,ijk->ij", diff, diff)
    return int((dsq.min(axis=1) <= d * d).sum())


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
def test_count_within_matches_brute_force(backend, rng):
    for _ in range(40):
        n, m = rng.integers(0, 300, size=2)
        spread = rng.uniform(0.5, 20.0)
        q = rng.normal(size=(n, 3)) * spread
        r = rng.normal(size=(m, 3)) * spread
        d = rng.uniform(1e-3, spread)
        assert backend.count_within(q, r, d) == brute_matched(q, r, d)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
def test_count_within_boundary_is_inclusive(backend):
    q = np.array([[0.0, 0.0, 0.0]])
    r = np.array([[0.5, 0.0, 0.0]])
    assert backend.count_within(q, r, 0.5) == 1
    assert backend.count_within(q, r, 0.5 - 1e-12) == 0


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
def test_count_within_huge_span_falls_back_exactly(backend, rng):
    # coordinates spread so wide the packed grid cannot index them
    q = rng.normal(size=(40, 3))
    q[0] = [3e6, 0, 0]
    r = rng.normal(size=(40, 3))
    d = 0.5
    assert backend.count_within(q, r, d) == brute_matched(q, r, d)


def test_identity_cloud_is_perfect(rng):
    coords = rng.normal(size=(300, 3))
    cloud = PointCloud(coords, label="fg")
    for d in (0.01, 0.02):
        report = fscore(cloud, PointCloud(coords.copy(), label="fg"), d)
        assert report.fscore == 1.0
        assert report.precision == 1.0 and report.recall == 1.0


def test_disjoint_clouds_score_zero():
    a = PointCloud(np.zeros((5, 3)))
    b = PointCloud(np.zeros((7, 3)) + 100.0)
    report = fscore(a, b, 0.01)
    assert report.precision == 0.0 and report.recall == 0.0 and report.fscore == 0.0


def test_half_matched_hand_case():
    # two recon points, one on a truth point and one far away
    recon = PointCloud(np.array([[0.0, 0.0, 0.0], [50.0, 0.0, 0.0]]))
    truth = PointCloud(np.array([[0.0, 0.0, 0.0]]))
    report = fscore(recon, truth, 0.1)
    assert report.precision == 0.5
    assert report.recall == 1.0
    assert report.fscore == pytest.approx(2 * 0.5 * 1.0 / 1.5)
    assert (report.recon_matched, report.truth_matched) == (1, 1)


def test_precision_recall_match_brute_on_random_pairs(rng):
    for _ in range(25):
        n, m = rng.integers(1, 150, size=2)
        a = PointCloud(rng.normal(size=(n, 3)))
        b = PointCloud(rng.normal(size=(m, 3)))
        d = rng.uniform(0.05, 2.0)
        assert precision(a, b, d) == brute_matched(a.coords, b.coords, d) / n
        assert recall(a, b, d) == brute_matched(b.coords, a.coords, d) / m


def test_empty_cloud_conventions():
    empty = PointCloud(np.empty((0, 3)))
    full = PointCloud(np.zeros((3, 3)))
    assert precision(empty, full, 0.1) == 1.0
    assert precision(full, empty, 0.1) == 0.0
    assert recall(full, empty, 0.1) == 1.0
    report = fscore(full, empty, 0.1)
    assert report.truth_empty
    assert report.fscore == pytest.approx(2 * 0.0 * 1.0 / 1.0)
    both = fscore(empty, empty, 0.1)
    assert both.fscore == 1.0


def test_distance_must_be_positive():
    cloud = PointCloud(np.zeros((1, 3)))
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError, match="positive"):
            fscore(cloud, cloud, bad)


def test_report_to_dict_keys():
    cloud = PointCloud(np.zeros((2, 3)))
    doc = fscore(cloud, cloud, 0.01).to_dict()
    assert set(doc) == {
        "precision", "recall", "fscore", "distance",
        "recon_points", "truth_points", "recon_matched", "truth_matched",
        "truth_empty",
    }


def test_online_quality_warns_on_non_foreground(caplog):
    cloud = PointCloud(np.zeros((2, 3)), label="full")
    with caplog.at_level(logging.WARNING):
        report = online_quality(cloud, cloud, 0.01)
    assert report.fscore == 1.0
    assert any("foreground" in rec.message for rec in caplog.records)
