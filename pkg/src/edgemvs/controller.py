"""Online configuration search for a deadline-bound reconstruction stream.

The controller tunes two knobs between tasks: the image resolution scale r
and the camera-subset size n_prime (realized through a precomputed camera
map). It bisects r level by level: within one n_prime it narrows the
feasible-resolution interval until it is tighter than tau_search, then
drops one camera and searches again starting from the best r found so far.
Every feasible observation is recorded; when fewer than three cameras would
remain, the best recorded configuration wins and the controller switches to
a steady phase that nudges r by tau_adjust per task to keep the running
average processing time at the deadline.

Three prunes cut hopeless work: an infeasible level-opening probe abandons
the level (this falls out of the interval update, since the probe sits at
r_min); an infeasible observation whose quality cannot beat the incumbent
abandons the level when the incumbent has as few cameras, and terminates
the whole search when the incumbent holds strictly more cameras, because
quality only degrades as cameras are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .camselect import MIN_CAMERAS, CameraMap, SelectionSolution

R_FLOOR = 0.3
TAU_SEARCH = 0.01
TAU_ADJUST = 0.02

SEARCHING = "searching"
ADJUSTING = "adjusting"


class InfeasibleDeadlineError(RuntimeError):
    """No configuration met the deadline anywhere in the search space."""


@dataclass(frozen=True)
class PipelineConfig:
    """One task's knob settings: resolution scale and camera subset."""

    resolution: float
    n_prime: int
    cameras: tuple[int, ...]


@dataclass(frozen=True)
class Observation:
    """Measured outcome of one completed task."""

    task_index: int
    processing_time: float
    quality: float


@dataclass
class ControllerState:
    """Full search state; owned by one thread, serializable for replay."""

    camera_map: CameraMap
    deadline: float
    phase: str = SEARCHING
    r_min: float = R_FLOOR
    r_max: float = 1.0
    r_star: float = 1.0
    r: float = 1.0  # resolution of the config awaiting observation
    n_prime: int = 0
    bootstrap: bool = True  # golden first task not yet observed
    solutions: list[tuple[float, int, float]] = field(default_factory=list)
    best_n_prime: int = 0
    adjust_sum: float = 0.0
    adjust_count: int = 0
    infeasible: bool = False
    r_floor: float = R_FLOOR
    tau_search: float = TAU_SEARCH
    tau_adjust: float = TAU_ADJUST

    def config(self) -> PipelineConfig:
        n = self.best_n_prime if self.phase == ADJUSTING else self.n_prime
        r = self.r_star if self.phase == ADJUSTING else self.r
        return PipelineConfig(
            resolution=r, n_prime=n, cameras=self.camera_map.subset(n)
        )

    def to_json(self) -> str:
        doc = {
            "deadline": self.deadline,
            "phase": self.phase,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "r_star": self.r_star,
            "r": self.r,
            "n_prime": self.n_prime,
            "bootstrap": self.bootstrap,
            "solutions": [list(s) for s in self.solutions],
            "best_n_prime": self.best_n_prime,
            "adjust_sum": self.adjust_sum,
            "adjust_count": self.adjust_count,
            "infeasible": self.infeasible,
            "r_floor": self.r_floor,
            "tau_search": self.tau_search,
            "tau_adjust": self.tau_adjust,
            "camera_map": {
                "n_cameras": self.camera_map.n_cameras,
                "entries": {
                    str(k): {
                        "cameras": list(sol.cameras),
                        "objective": sol.objective,
                        "exact": sol.exact,
                    }
                    for k, sol in sorted(self.camera_map.entries.items())
                },
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ControllerState":
        doc = json.loads(text)
        cmap = CameraMap(
            n_cameras=int(doc["camera_map"]["n_cameras"]),
            entries={
                int(k): SelectionSolution(
                    cameras=tuple(v["cameras"]),
                    objective=int(v["objective"]),
                    exact=bool(v["exact"]),
                )
                for k, v in doc["camera_map"]["entries"].items()
            },
        )
        state = cls(camera_map=cmap, deadline=float(doc["deadline"]))
        state.phase = doc["phase"]
        state.r_min = float(doc["r_min"])
        state.r_max = float(doc["r_max"])
        state.r_star = float(doc["r_star"])
        state.r = float(doc["r"])
        state.n_prime = int(doc["n_prime"])
        state.bootstrap = bool(doc["bootstrap"])
        state.solutions = [
            (float(r), int(n), float(q)) for r, n, q in doc["solutions"]
        ]
        state.best_n_prime = int(doc["best_n_prime"])
        state.adjust_sum = float(doc["adjust_sum"])
        state.adjust_count = int(doc["adjust_count"])
        state.infeasible = bool(doc["infeasible"])
        state.r_floor = float(doc["r_floor"])
        state.tau_search = float(doc["tau_search"])
        state.tau_adjust = float(doc["tau_adjust"])
        return state


def init_controller(
    camera_map: CameraMap,
    deadline: float,
    *,
    r_floor: float = R_FLOOR,
    tau_search: float = TAU_SEARCH,
    tau_adjust: float = TAU_ADJUST,
) -> tuple[ControllerState, PipelineConfig]:
    """Start a search; the first emitted config is the golden full run.

    Args:
        camera_map: optimal camera subset per size, covering 3..N.
        deadline: per-task latency budget in seconds, > 0.

    Returns:
        (state, config) with config = (r = 1.0, all N cameras). The next
        call to next_config emits the level-opening probe (r_floor, all N).
    """
    if deadline <= 0:
        raise ValueError("deadline must be positive")
    n = camera_map.n_cameras
    for k in range(MIN_CAMERAS, n + 1):
        if k not in camera_map.entries:
            raise ValueError(f"camera map lacks an entry for {k} cameras")
    state = ControllerState(
        camera_map=camera_map,
        deadline=deadline,
        r_min=r_floor,
        r_max=1.0,
        r_star=1.0,
        r=1.0,
        n_prime=n,
        r_floor=r_floor,
        tau_search=tau_search,
        tau_adjust=tau_adjust,
    )
    return state, state.config()


def next_config(
    state: ControllerState, obs: Observation
) -> tuple[ControllerState, PipelineConfig]:
    """Consume the observation of the last emitted config, emit the next.

    In the searching phase this advances the bisection (with pruning); in
    the adjusting phase it delegates to minor_adjustment.

    Raises:
        InfeasibleDeadlineError: the search exhausted every level without a
            single feasible observation. The state is left holding
            (r_floor, minimum cameras) in the adjusting phase.
    """
    if state.phase == ADJUSTING:
        return minor_adjustment(state, obs)
    if state.bootstrap:
        # the golden run seeds quality references downstream; it does not
        # participate in the interval update
        state.bootstrap = False
        state.r = state.r_min
        return state, state.config()

    feasible = obs.processing_time <= state.deadline
    if feasible:
        state.r_min = state.r
        state.r_star = state.r
        state.solutions.append((state.r, state.n_prime, obs.quality))
    else:
        state.r_max = state.r
        best = _best_solution(state)
        if best is not None and obs.quality <= best[2]:
            if best[1] > state.n_prime:
                # nothing at this or any lower level can beat the incumbent
                return _finalize(state)
            return _descend(state)

    if state.r_max - state.r_min <= state.tau_search:
        return _descend(state)
    state.r = (state.r_max + state.r_min) / 2.0
    return state, state.config()


def minor_adjustment(
    state: ControllerState, obs: Observation
) -> tuple[ControllerState, PipelineConfig]:
    """Steady-phase step: nudge r* to hold the average latency at the deadline.

    r* moves up by tau_adjust when both the running average and the latest
    time are under the deadline, down when both are over, and stays put
    otherwise, clamped to [r_floor, 1.0]. The camera subset is fixed.
    """
    if state.phase != ADJUSTING:
        raise ValueError("minor_adjustment requires the adjusting phase")
    state.adjust_sum += obs.processing_time
    state.adjust_count += 1
    average = state.adjust_sum / state.adjust_count
    if average < state.deadline and obs.processing_time < state.deadline:
        state.r_star += state.tau_adjust
    elif average > state.deadline and obs.processing_time > state.deadline:
        state.r_star -= state.tau_adjust
    state.r_star = min(1.0, max(state.r_floor, state.r_star))
    return state, state.config()


def _best_solution(state: ControllerState) -> tuple[float, int, float] | None:
    """Best feasible (r, n_prime, Q): max Q, ties to larger n_prime then r."""
    if not state.solutions:
        return None
    return max(state.solutions, key=lambda s: (s[2], s[1], s[0]))


def _descend(state: ControllerState) -> tuple[ControllerState, PipelineConfig]:
    state.r_min = state.r_star
    state.r_max = 1.0
    state.r = state.r_min
    state.n_prime -= 1
    if state.n_prime < MIN_CAMERAS:
        return _finalize(state)
    return state, state.config()


def _finalize(state: ControllerState) -> tuple[ControllerState, PipelineConfig]:
    state.phase = ADJUSTING
    state.adjust_sum = 0.0
    state.adjust_count = 0
    best = _best_solution(state)
    if best is None:
        state.infeasible = True
        state.r_star = state.r_floor
        state.best_n_prime = MIN_CAMERAS
        raise InfeasibleDeadlineError(
            f"no configuration met the {state.deadline} s deadline; "
            f"holding (r={state.r_floor}, {MIN_CAMERAS} cameras)"
        )
    state.r_star = best[0]
    state.best_n_prime = best[1]
    return state, state.config()
