"""Command-line entry point.

Subcommands mirror the library: quality evaluation, camera selection,
stream simulation, frame segmentation, and the split/merge pipeline.
Every subcommand is deterministic for a fixed --seed; repeated runs
produce byte-identical files and stdout.

Exit codes: 0 success, 2 input or usage error, 3 infeasible deadline.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import camselect, pgm, ply, quality, segmentation, sim
from .controller import InfeasibleDeadlineError
from .pointcloud import CameraModel, ForegroundMask, merge_clouds, split_points

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
OUT_DIR_ENV = "EDGEMVS_OUT_DIR"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


@dataclass(frozen=True)
class RunManifest:
    """What one invocation is about to do; logged for reproduction."""

    subcommand: str
    inputs: tuple[str, ...]
    seed: int
    out_dir: str | None
    overrides: dict = field(default_factory=dict)


def _resolve_out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_cloud(path: str):
    return ply.parse_ply(Path(path).read_bytes())


def _load_cameras(path: str) -> list[CameraModel]:
    doc = json.loads(Path(path).read_text())
    items = doc["cameras"] if isinstance(doc, dict) else doc
    cameras = [CameraModel.from_dict(entry) for entry in items]
    return sorted(cameras, key=lambda c: c.camera_id)


def _sorted_pgms(directory: str) -> list[Path]:
    folder = Path(directory)
    if not folder.is_dir():
        raise ValueError(f"not a directory: {directory}")
    return sorted(folder.glob("*.pgm"))


def cmd_eval(args: argparse.Namespace) -> int:
    if args.d <= 0:
        raise ValueError("--d must be positive")
    recon = _load_cloud(args.recon)
    truth = _load_cloud(args.truth)
    report = quality.fscore(recon, truth, args.d)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.cloud)
    cameras = _load_cameras(args.cameras)
    matrix = camselect.build_visibility(cloud, cameras)
    if args.fraction < 1.0:
        matrix = camselect.select_keypoints(matrix, args.fraction, args.seed)
    if args.map:
        print(camselect.map_to_json(camselect.build_camera_map(matrix)))
        return EXIT_OK
    solution = camselect.solve_p2(matrix, args.nprime)
    doc = {
        "n_prime": args.nprime,
        "cameras": list(solution.cameras),
        "objective": solution.objective,
        "exact": solution.exact,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario == "dance1":
        model, camera_map, _ = sim.dance1_scenario()
    else:
        model, camera_map, _ = sim.scenario_from_json(Path(args.scenario).read_text())
    stream = sim.TaskStream(n_tasks=args.tasks, deadline=args.deadline, seed=args.seed)
    result = sim.simulate_stream(model, camera_map, stream)
    stats = sim.simulate_collaboration(model, result)
    out = _resolve_out_dir(args.out_dir)
    trace_path = out / "trace.csv"
    summary_path = out / "summary.json"
    trace_path.write_text(sim.trace_to_csv(result, stats))
    summary = sim.summary_to_dict(result, stats)
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"trace: {trace_path}")
    print(f"summary: {summary_path}")
    if result.infeasible_deadline:
        log.warning("deadline %.3fs proved infeasible", args.deadline)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_segment(args: argparse.Namespace) -> int:
    frame_paths = _sorted_pgms(args.frames_dir)
    if len(frame_paths) < 2:
        raise ValueError("need at least 2 PGM frames")
    frames = [pgm.read_pgm(p.read_bytes()) for p in frame_paths]
    shape = frames[0].shape
    for path, frame in zip(frame_paths, frames):
        if frame.shape != shape:
            raise ValueError(
                f"frame size mismatch: {path.name} is {frame.shape}, expected {shape}"
            )
    out = _resolve_out_dir(args.out_dir)
    model = None
    for path, frame in zip(frame_paths, frames):
        if model is None:
            mask = np.zeros(frame.shape, dtype=bool)
        else:
            mask = segmentation.extract_mask(model, frame, args.ksigma)
        model = segmentation.update_background(model, frame)
        stem = path.stem
        (out / f"{stem}_mask.pgm").write_bytes(pgm.mask_to_pgm(mask))
        clusters = segmentation.cluster_mask(mask, k_max=args.kmax, seed=args.seed)
        for j, cluster in enumerate(clusters):
            (out / f"{stem}_mask_c{j}.pgm").write_bytes(pgm.mask_to_pgm(cluster))
        log.info("%s: %d foreground px, %d clusters", stem, int(mask.sum()), len(clusters))
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.cloud)
    cameras = _load_cameras(args.cameras)
    mask_paths = _sorted_pgms(args.masks_dir)
    if len(mask_paths) != len(cameras):
        raise ValueError(
            f"{len(mask_paths)} masks for {len(cameras)} cameras; counts must match"
        )
    masks = [
        ForegroundMask(camera_id=cam.camera_id, pixels=pgm.pgm_to_mask(p.read_bytes()))
        for cam, p in zip(cameras, mask_paths)
    ]
    fg, bg = split_points(cloud, masks, cameras, min_views=args.min_views)
    merged = merge_clouds(fg, bg)
    out = _resolve_out_dir(args.out_dir)
    for name, part in (("fg.ply", fg), ("bg.ply", bg), ("merged.ply", merged)):
        (out / name).write_bytes(ply.write_ply(part))
    log.info("split %d points into %d fg / %d bg", len(cloud), len(fg), len(bg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgemvs",
        description="Latency/quality co-optimization toolkit for multi-view reconstruction",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="F-score of a reconstruction against a reference")
    p_eval.add_argument("recon", help="reconstructed PLY")
    p_eval.add_argument("truth", help="reference PLY")
    p_eval.add_argument("--d", type=float, default=0.01, help="match distance threshold")
    p_eval.set_defaults(func=cmd_eval)

    p_sel = sub.add_parser("select-cameras", help="exact camera-subset selection")
    p_sel.add_argument("cloud", help="sparse PLY cloud")
    p_sel.add_argument("cameras", help="camera rig JSON")
    p_sel.add_argument(
        "--fraction",
        type=float,
        default=camselect.DEFAULT_KEYPOINT_FRACTION,
        help="key-point subsample fraction (1.0 keeps every point)",
    )
    group = p_sel.add_mutually_exclusive_group(required=True)
    group.add_argument("--nprime", type=int, help="subset size to solve for")
    group.add_argument("--map", action="store_true", help="emit the full size->subset map")
    p_sel.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sel.set_defaults(func=cmd_select)

    p_simulate = sub.add_parser("simulate", help="drive the controller over a task stream")
    p_simulate.add_argument("scenario", help='scenario JSON path, or the preset name "dance1"')
    p_simulate.add_argument("--deadline", type=float, required=True, help="per-task deadline, s")
    p_simulate.add_argument("--tasks", type=int, default=60)
    p_simulate.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_simulate.add_argument("--out-dir", default=None, help=f"output directory (or ${OUT_DIR_ENV})")
    p_simulate.set_defaults(func=cmd_simulate)

    p_seg = sub.add_parser("segment", help="foreground masks for a PGM frame sequence")
    p_seg.add_argument("frames_dir", help="directory of equally sized PGM frames")
    p_seg.add_argument("--ksigma", type=float, default=2.5, help="foreground threshold in sigmas")
    p_seg.add_argument("--kmax", type=int, default=5, help="largest cluster count to try")
    p_seg.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_seg.add_argument("--out-dir", default=None, help=f"output directory (or ${OUT_DIR_ENV})")
    p_seg.set_defaults(func=cmd_segment)

    p_pipe = sub.add_parser("pipeline", help="split a cloud by masks, then merge back")
    p_pipe.add_argument("cloud", help="input PLY cloud")
    p_pipe.add_argument("masks_dir", help="directory of per-camera mask PGMs (sorted by name)")
    p_pipe.add_argument("cameras", help="camera rig JSON (matched to masks by sorted id)")
    p_pipe.add_argument("--min-views", type=int, default=2)
    p_pipe.add_argument("--out-dir", default=None, help=f"output directory (or ${OUT_DIR_ENV})")
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    manifest = RunManifest(
        subcommand=args.command,
        inputs=tuple(
            str(getattr(args, name))
            for name in ("recon", "truth", "cloud", "cameras", "scenario", "frames_dir", "masks_dir")
            if hasattr(args, name)
        ),
        seed=getattr(args, "seed", DEFAULT_SEED),
        out_dir=getattr(args, "out_dir", None),
    )
    log.info("run: %s", manifest)
    try:
        return args.func(args)
    except InfeasibleDeadlineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, KeyError, OSError, json.JSONDecodeError, ply.PlyParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
