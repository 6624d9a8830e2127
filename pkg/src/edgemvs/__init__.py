"""Latency/quality co-optimization for multi-view 3D reconstruction.

The library covers the full loop of a deadline-driven reconstruction
pipeline: point-cloud I/O and foreground/background handling, frame
segmentation, exact camera-subset selection, F-score evaluation, the
online bi-section configuration controller, and a deterministic
simulator of the two-node schedule.
"""

from .camselect import (
    CameraMap,
    SelectionSolution,
    VisibilityMatrix,
    build_camera_map,
    build_visibility,
    select_keypoints,
    solve_p2,
)
from .controller import (
    ControllerState,
    InfeasibleDeadlineError,
    Observation,
    PipelineConfig,
    init_controller,
    minor_adjustment,
    next_config,
)
from .ply import PlyParseError, parse_ply, write_ply
from .pointcloud import (
    CameraModel,
    ForegroundMask,
    Point3,
    PointCloud,
    merge_clouds,
    project,
    split_points,
)
from .quality import QualityReport, fscore, online_quality, precision, recall
from .segmentation import (
    BackgroundModel,
    cluster_mask,
    extract_mask,
    kmeans,
    silhouette_score,
    update_background,
)
from .sim import (
    ScenarioModel,
    ScheduleStats,
    StreamResult,
    TaskStream,
    calibrate_model,
    dance1_scenario,
    run_task,
    simulate_collaboration,
    simulate_stream,
)

__version__ = "0.1.0"

__all__ = [
    "BackgroundModel",
    "CameraMap",
    "CameraModel",
    "ControllerState",
    "ForegroundMask",
    "InfeasibleDeadlineError",
    "Observation",
    "PipelineConfig",
    "PlyParseError",
    "Point3",
    "PointCloud",
    "QualityReport",
    "ScenarioModel",
    "ScheduleStats",
    "SelectionSolution",
    "StreamResult",
    "TaskStream",
    "VisibilityMatrix",
    "build_camera_map",
    "build_visibility",
    "calibrate_model",
    "cluster_mask",
    "dance1_scenario",
    "extract_mask",
    "fscore",
    "init_controller",
    "kmeans",
    "merge_clouds",
    "minor_adjustment",
    "next_config",
    "online_quality",
    "parse_ply",
    "precision",
    "project",
    "recall",
    "run_task",
    "select_keypoints",
    "silhouette_score",
    "simulate_collaboration",
    "simulate_stream",
    "solve_p2",
    "split_points",
    "update_background",
    "write_ply",
    "__version__",
]
