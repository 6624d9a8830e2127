"""Reconstruction quality: precision, recall, and F-score between clouds.

A reconstructed point counts as correct when some reference point lies
within Euclidean distance d of it (precision); recall swaps the roles.
Membership queries run on a uniform hash grid with cell size d, which
returns exactly what a full O(n*m) scan would, just faster. F = 2PR/(P+R)
with the 0/0 convention F = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import _kernels
from .pointcloud import PointCloud

logger = logging.getLogger(__name__)


@dataclass
class QualityReport:
    """Precision/recall/F-score of a reconstruction against a reference."""

    precision: float
    recall: float
    fscore: float
    distance: float
    recon_points: int
    truth_points: int
    recon_matched: int
    truth_matched: int
    truth_empty: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "distance": self.distance,
            "recon_points": self.recon_points,
            "truth_points": self.truth_points,
            "recon_matched": self.recon_matched,
            "truth_matched": self.truth_matched,
            "truth_empty": self.truth_empty,
        }


def _check_distance(d: float) -> None:
    if not d > 0.0:
        raise ValueError(f"distance threshold must be positive, got {d}")


def _matched(query: PointCloud, ref: PointCloud, d: float) -> int:
    return int(_kernels.count_within(query.coords, ref.coords, d))


def precision(recon: PointCloud, truth: PointCloud, d: float) -> float:
    """Fraction of recon points with a truth point within distance <= d.

    Empty recon is vacuously precise (1.0); empty truth leaves nothing to
    match (0.0).
    """
    _check_distance(d)
    if len(recon) == 0:
        return 1.0
    return _matched(recon, truth, d) / len(recon)


def recall(recon: PointCloud, truth: PointCloud, d: float) -> float:
    """Fraction of truth points with a recon point within distance <= d."""
    _check_distance(d)
    if len(truth) == 0:
        return 1.0
    return _matched(truth, recon, d) / len(truth)


def fscore(recon: PointCloud, truth: PointCloud, d: float) -> QualityReport:
    """Evaluate precision, recall, and their harmonic mean at threshold d.

    Conventions: empty recon has precision 1, empty truth has recall 1 (and
    the report is flagged), and P + R = 0 yields F = 0.
    """
    _check_distance(d)
    recon_matched = _matched(recon, truth, d) if len(recon) else 0
    truth_matched = _matched(truth, recon, d) if len(truth) else 0
    p = recon_matched / len(recon) if len(recon) else 1.0
    r = truth_matched / len(truth) if len(truth) else 1.0
    f = 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0
    return QualityReport(
        precision=p,
        recall=r,
        fscore=f,
        distance=d,
        recon_points=len(recon),
        truth_points=len(truth),
        recon_matched=recon_matched,
        truth_matched=truth_matched,
        truth_empty=len(truth) == 0,
    )


def online_quality(fg_sparse: PointCloud, golden: PointCloud, d: float) -> QualityReport:
    """Per-task quality signal: foreground sparse cloud against the golden run.

    Identical computation to fscore; labels are advisory, so a non-"fg"
    input only logs a warning.
    """
    if fg_sparse.label and fg_sparse.label != "fg":
        logger.warning(
            "online quality expects a foreground cloud, got label %r",
            fg_sparse.label,
        )
    return fscore(fg_sparse, golden, d)
