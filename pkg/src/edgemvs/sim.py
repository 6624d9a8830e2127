"""Deterministic simulator for the two-node reconstruction pipeline.

Latency and quality respond to the controller's knobs through smooth
power laws calibrated from measured runs:

    T(r, n') = t0 * r**alpha * (n'/N)**beta * (1 + eps),  eps ~ U(-eta, eta)
    Q(r, n') = q_max * r**gamma * coverage(n')/coverage(N)

The camera factor reuses the two-view coverage objective of the selected
camera subsets, so camera selection quality feeds the quality surface.
simulate_stream drives the online controller over a task stream;
simulate_collaboration replays the stream against the two-node schedule:
the front-end runs each task's critical path (SfM, split, foreground MVS,
merge), while the back-end does background subtraction, the golden SfM,
and the online evaluation per task, then spends whatever is left before
the next arrival on long-running background reconstructions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .camselect import CameraMap, VisibilityMatrix, build_camera_map
from .controller import (
    ADJUSTING,
    SEARCHING,
    ControllerState,
    InfeasibleDeadlineError,
    Observation,
    PipelineConfig,
    init_controller,
    next_config,
)

DEFAULT_ETA = 0.03


@dataclass(frozen=True)
class StageFractions:
    """Front-end critical-path shares; must sum to 1."""

    sfm: float
    split: float
    mvs_fg: float
    merge: float

    def __post_init__(self) -> None:
        parts = (self.sfm, self.split, self.mvs_fg, self.merge)
        if any(p < 0 for p in parts):
            raise ValueError("stage fractions must be non-negative")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise ValueError(f"stage fractions sum to {sum(parts)}, expected 1")

    def durations(self, total: float) -> tuple[float, float, float, float]:
        return (
            self.sfm * total,
            self.split * total,
            self.mvs_fg * total,
            self.merge * total,
        )


# Dance1 measured stage seconds at full resolution: SfM 2.94, foreground
# MVS 8.78, split+merge 0.26 (halved between the two)
DANCE1_STAGE_FRACTIONS = StageFractions(
    sfm=2.94 / 11.98,
    split=0.13 / 11.98,
    mvs_fg=8.78 / 11.98,
    merge=0.13 / 11.98,
)


@dataclass
class ScenarioModel:
    """Calibrated latency/quality surfaces plus pipeline timing constants."""

    t0: float
    alpha: float
    beta: float
    q_max: float
    gamma: float
    n_cameras: int
    coverage: dict[int, int]
    eta: float = DEFAULT_ETA
    stage_fractions: StageFractions = DANCE1_STAGE_FRACTIONS
    t_background: float = 22.5
    t_subtract: float = 0.4
    t_golden_sfm: float = 2.56
    t_eval: float = 0.3
    transfer_delay: float = 0.1

    def __post_init__(self) -> None:
        if min(self.t0, self.alpha, self.beta, self.gamma) <= 0 or self.q_max <= 0:
            raise ValueError("t0, alpha, beta, gamma, q_max must be positive")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must be in [0, 1)")
        if self.n_cameras not in self.coverage:
            raise ValueError("coverage must include the full camera count")

    def coverage_ratio(self, n_prime: int) -> float:
        return self.coverage[n_prime] / self.coverage[self.n_cameras]

    def latency(self, r: float, n_prime: int) -> float:
        """Noise-free processing time of one task at (r, n_prime)."""
        return (
            self.t0
            * r**self.alpha
            * (n_prime / self.n_cameras) ** self.beta
        )

    def quality(self, r: float, n_prime: int) -> float:
        """Noise-free foreground F-score of one task at (r, n_prime)."""
        return min(1.0, max(0.0, self.q_max * r**self.gamma * self.coverage_ratio(n_prime)))

    @property
    def backend_busy(self) -> float:
        """Back-end work per task before any idle window opens."""
        return self.t_subtract + self.t_golden_sfm + self.t_eval


@dataclass(frozen=True)
class TaskStream:
    """A periodic stream of reconstruction tasks sharing one deadline."""

    n_tasks: int
    deadline: float
    seed: int = 42

    def __post_init__(self) -> None:
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be >= 1")
        if self.deadline <= 0:
            raise ValueError("deadline must be positive")


@dataclass(frozen=True)
class CalibrationResult:
    """Least-squares fit of the latency power law."""

    t0: float
    alpha: float
    beta: float
    n_cameras: int
    max_rel_residual: float


def calibrate_model(
    samples: Sequence[tuple[float, int, float]], n_cameras: int | None = None
) -> CalibrationResult:
    """Fit log T = log t0 + alpha log r + beta log(n'/N) by least squares.

    Args:
        samples: (r, n_prime, seconds) measurements; at least three, with
            at least two distinct r values, all positive.
        n_cameras: rig size N; defaults to the largest n_prime seen.

    Returns:
        Fitted constants and the worst relative residual over the samples.
        When every sample uses all N cameras the beta column is zero and
        the minimum-norm solution pins beta = 0.

    Raises:
        ValueError: under-determined or non-positive input.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    rs = np.array([s[0] for s in samples], dtype=np.float64)
    ns = np.array([s[1] for s in samples], dtype=np.float64)
    ts = np.array([s[2] for s in samples], dtype=np.float64)
    if (rs <= 0).any() or (ns <= 0).any() or (ts <= 0).any():
        raise ValueError("samples must be positive")
    if len(np.unique(rs)) < 2:
        raise ValueError("need at least 2 distinct resolution scales")
    n_total = int(n_cameras if n_cameras is not None else ns.max())

    design = np.stack([np.ones_like(rs), np.log(rs), np.log(ns / n_total)], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.log(ts), rcond=None)
    t0, alpha, beta = float(math.exp(coef[0])), float(coef[1]), float(coef[2])
    pred = np.exp(design @ coef)
    resid = float(np.max(np.abs(pred - ts) / ts))
    return CalibrationResult(
        t0=t0, alpha=alpha, beta=beta, n_cameras=n_total, max_rel_residual=resid
    )


def run_task(
    model: ScenarioModel,
    config: PipelineConfig,
    rng: np.random.Generator,
    task_index: int = 0,
) -> Observation:
    """Execute one simulated task and measure it.

    Exactly one noise draw is consumed per call, so streams with different
    eta stay aligned on the same seed.
    """
    eps = model.eta * rng.uniform(-1.0, 1.0)
    t = model.latency(config.resolution, config.n_prime) * (1.0 + eps)
    q = model.quality(config.resolution, config.n_prime)
    return Observation(task_index=task_index, processing_time=t, quality=q)


@dataclass(frozen=True)
class TaskRecord:
    """One line of a stream trace."""

    index: int
    resolution: float
    n_prime: int
    processing_time: float
    quality: float
    phase: str


@dataclass
class StreamResult:
    """Everything observed while the controller drove a task stream."""

    deadline: float
    records: list[TaskRecord]
    infeasible_deadline: bool
    search_steps: int
    final_state: ControllerState


def simulate_stream(
    model: ScenarioModel, camera_map: CameraMap, stream: TaskStream
) -> StreamResult:
    """Drive the controller through a stream of simulated tasks.

    Stops early if the controller proves the deadline infeasible; the
    result is flagged and holds the trace up to that point. search_steps
    counts searching-phase tasks, the forced golden first task excluded.
    """
    rng = np.random.default_rng(stream.seed)
    state, config = init_controller(camera_map, stream.deadline)
    phase = state.phase
    records: list[TaskRecord] = []
    infeasible = False
    for i in range(stream.n_tasks):
        obs = run_task(model, config, rng, i)
        records.append(
            TaskRecord(
                index=i,
                resolution=config.resolution,
                n_prime=config.n_prime,
                processing_time=obs.processing_time,
                quality=obs.quality,
                phase=phase,
            )
        )
        try:
            state, config = next_config(state, obs)
        except InfeasibleDeadlineError:
            infeasible = True
            break
        phase = state.phase
    searching = sum(1 for rec in records if rec.phase == SEARCHING)
    return StreamResult(
        deadline=stream.deadline,
        records=records,
        infeasible_deadline=infeasible,
        search_steps=max(0, searching - 1),
        final_state=state,
    )


@dataclass
class ScheduleStats:
    """Replay of a trace against the two-node schedule."""

    critical_paths: list[float]
    idle_windows: list[float]
    bg_after_task: list[int]
    bg_completed: int
    avg_time: float
    avg_quality: float


def simulate_collaboration(model: ScenarioModel, result: StreamResult) -> ScheduleStats:
    """Account the front-end critical path and back-end idle per task.

    Tasks arrive with period equal to the deadline. The front-end critical
    path of task i is the sum of its four stage durations (fractions of the
    observed processing time), exactly. The back-end performs its per-task
    work from the arrival (or after its previous task work finishes, if
    late) and then runs background reconstruction until the next arrival;
    each completed background cloud costs one transfer before the next one
    starts accumulating.
    """
    dt = result.deadline
    busy = model.backend_busy
    backend_free = 0.0
    bg_progress = 0.0
    transfer_left = 0.0
    completed = 0
    critical_paths: list[float] = []
    idle_windows: list[float] = []
    bg_after: list[int] = []

    for i, rec in enumerate(result.records):
        critical_paths.append(sum(model.stage_fractions.durations(rec.processing_time)))
        arrival = i * dt
        work_end = max(arrival, backend_free) + busy
        backend_free = work_end
        idle = max(0.0, (i + 1) * dt - work_end)
        idle_windows.append(idle)
        remaining = idle
        while remaining > 0.0:
            if transfer_left > 0.0:
                spent = min(remaining, transfer_left)
                transfer_left -= spent
                remaining -= spent
                continue
            need = model.t_background - bg_progress
            if remaining >= need:
                remaining -= need
                bg_progress = 0.0
                completed += 1
                transfer_left = model.transfer_delay
            else:
                bg_progress += remaining
                remaining = 0.0
        bg_after.append(completed)

    times = [rec.processing_time for rec in result.records]
    quals = [rec.quality for rec in result.records]
    return ScheduleStats(
        critical_paths=critical_paths,
        idle_windows=idle_windows,
        bg_after_task=bg_after,
        bg_completed=completed,
        avg_time=float(np.mean(times)) if times else 0.0,
        avg_quality=float(np.mean(quals)) if quals else 0.0,
    )


def latency_reduction(optimized_total: float, baseline_total: float) -> float:
    """Percent reduction of the optimized critical path versus the baseline."""
    if baseline_total <= 0:
        raise ValueError("baseline must be positive")
    return 100.0 * (1.0 - optimized_total / baseline_total)


def build_designed_matrix(
    n_cameras: int,
    core_points: int,
    pair_points: dict[tuple[int, int], int],
    seed: int = 7,
) -> VisibilityMatrix:
    """Construct a synthetic visibility matrix with a known coverage shape.

    core_points rows are visible to every camera; each (a, b) pair entry
    adds rows visible to exactly those two cameras, so dropping either
    camera costs those points their second view. Coordinates are seeded
    random positions (core in the unit ball, pair points on a wider shell)
    and only matter to key-point clustering.
    """
    rows = [np.ones((core_points, n_cameras), dtype=bool)]
    for (a, b), count in sorted(pair_points.items()):
        block = np.zeros((count, n_cameras), dtype=bool)
        block[:, a] = True
        block[:, b] = True
        rows.append(block)
    coverage = np.concatenate(rows, axis=0)
    rng = np.random.default_rng(seed)
    n = len(coverage)
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.where(
        np.arange(n) < core_points,
        rng.uniform(0.0, 1.0, size=n) ** (1 / 3),
        rng.uniform(1.2, 1.6, size=n),
    )
    return VisibilityMatrix(
        coverage=coverage,
        camera_ids=list(range(n_cameras)),
        coords=direction * radius[:, None],
    )


# Dance1-like preset: latency law pinned to the measured full-pipeline
# scales (26.17 s at r=1.0 with 7 cameras, ~2.1 resolution exponent), the
# quality law to the online F-score sweep, and a 7-camera rig whose
# coverage decays gently as cameras are dropped
DANCE1_PRESET: dict = {
    "latency": {"t0": 26.17, "alpha": 2.1, "beta": 1.5},
    "quality": {"q_max": 0.92, "gamma": 0.31},
    "noise": DEFAULT_ETA,
    "stage_fractions": {
        "sfm": 2.94 / 11.98,
        "split": 0.13 / 11.98,
        "mvs_fg": 8.78 / 11.98,
        "merge": 0.13 / 11.98,
    },
    "t_background": 22.5,
    "backend": {"t_subtract": 0.4, "t_golden_sfm": 2.56, "t_eval": 0.3},
    "transfer_delay": 0.1,
    "rig": {
        "n_cameras": 7,
        "core_points": 160,
        "pair_points": {
            "1,2": 2,
            "3,4": 3,
            "5,6": 4,
            "0,2": 8,
            "2,4": 8,
            "4,6": 8,
            "2,6": 7,
        },
        "seed": 7,
    },
}


def scenario_from_dict(doc: dict) -> tuple[ScenarioModel, CameraMap, VisibilityMatrix]:
    """Build (model, camera map, visibility matrix) from a scenario document."""
    rig = doc["rig"]
    pairs = {
        tuple(int(t) for t in key.split(",")): int(count)
        for key, count in rig["pair_points"].items()
    }
    matrix = build_designed_matrix(
        n_cameras=int(rig["n_cameras"]),
        core_points=int(rig["core_points"]),
        pair_points=pairs,  # type: ignore[arg-type]
        seed=int(rig.get("seed", 7)),
    )
    cmap = build_camera_map(matrix)
    coverage = {k: sol.objective for k, sol in cmap.entries.items()}
    fr = doc["stage_fractions"]
    model = ScenarioModel(
        t0=float(doc["latency"]["t0"]),
        alpha=float(doc["latency"]["alpha"]),
        beta=float(doc["latency"]["beta"]),
        q_max=float(doc["quality"]["q_max"]),
        gamma=float(doc["quality"]["gamma"]),
        n_cameras=int(rig["n_cameras"]),
        coverage=coverage,
        eta=float(doc.get("noise", DEFAULT_ETA)),
        stage_fractions=StageFractions(
            sfm=float(fr["sfm"]),
            split=float(fr["split"]),
            mvs_fg=float(fr["mvs_fg"]),
            merge=float(fr["merge"]),
        ),
        t_background=float(doc.get("t_background", 22.5)),
        t_subtract=float(doc.get("backend", {}).get("t_subtract", 0.4)),
        t_golden_sfm=float(doc.get("backend", {}).get("t_golden_sfm", 2.56)),
        t_eval=float(doc.get("backend", {}).get("t_eval", 0.3)),
        transfer_delay=float(doc.get("transfer_delay", 0.1)),
    )
    return model, cmap, matrix


def scenario_from_json(text: str) -> tuple[ScenarioModel, CameraMap, VisibilityMatrix]:
    return scenario_from_dict(json.loads(text))


def dance1_scenario() -> tuple[ScenarioModel, CameraMap, VisibilityMatrix]:
    """The built-in preset scenario used by tests and the CLI."""
    return scenario_from_dict(DANCE1_PRESET)


def default_scenario_json() -> str:
    """The preset as a JSON document, usable as a template for custom runs."""
    return json.dumps(DANCE1_PRESET, indent=2, sort_keys=True)


def trace_to_csv(result: StreamResult, stats: ScheduleStats) -> str:
    """Render a stream trace with per-task background progress as CSV."""
    lines = ["task,resolution,n_prime,processing_time,quality,phase,bg_completed"]
    for rec, bg in zip(result.records, stats.bg_after_task):
        lines.append(
            f"{rec.index},{rec.resolution!r},{rec.n_prime},"
            f"{rec.processing_time!r},{rec.quality!r},{rec.phase},{bg}"
        )
    return "\n".join(lines) + "\n"


def summary_to_dict(result: StreamResult, stats: ScheduleStats) -> dict:
    """Converged-behaviour summary of one stream run.

    Averages cover the adjusting phase when the controller got there,
    otherwise the whole trace.
    """
    adjusting = [rec for rec in result.records if rec.phase == ADJUSTING]
    window = adjusting if adjusting else result.records
    state = result.final_state
    return {
        "deadline": result.deadline,
        "tasks": len(result.records),
        "infeasible_deadline": result.infeasible_deadline,
        "search_steps": result.search_steps,
        "n_cameras": state.best_n_prime if state.phase == ADJUSTING else None,
        "avg_resolution": float(np.mean([r.resolution for r in window])) if window else None,
        "avg_processing_time": float(np.mean([r.processing_time for r in window])) if window else None,
        "avg_quality": float(np.mean([r.quality for r in window])) if window else None,
        "bg_clouds_completed": stats.bg_completed,
        "mean_idle_per_task": float(np.mean(stats.idle_windows)) if stats.idle_windows else None,
    }
