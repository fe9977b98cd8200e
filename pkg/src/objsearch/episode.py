"""Closed-loop episode execution: observe, fuse, plan, step, verify.

Each tick senses the visible cells, fuses the semantic observation (when a
scorer is configured), updates the explored mask, runs one planner cycle, and
advances the robot by a bounded step. A simulated detector drives the
three-stage target verification (trigger, near-range recheck, arrival).
Everything is determined by the seeds; identical configuration reproduces a
bitwise-identical result.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evidence import (
    PromptSet,
    ScoreGrid,
    SemanticScorer,
    aggregate_observation,
    default_prompt_set,
    fuse_frame,
    make_frame,
)
from .planner import (
    ExploredMask,
    GlobalGraph,
    PlannerConfig,
    PlanTree,
    SubgoalSelection,
    distance_bias,
    escape_direction,
    expand_tree,
    global_fallback,
    rewire_root,
    select_subgoal,
    stuck_check,
    utilities_at,
)
from .prior import IGMModel
from .world import (
    FREE,
    Cell,
    OccupancyGrid,
    Point,
    Pose,
    Scenario,
    grid_shortest_path_length,
    line_of_sight,
    visible_cells,
    wrap_angle,
)

ARRIVAL = "arrival"
BUDGET_EXHAUSTED = "budget_exhausted"
NO_PROGRESS = "no_progress"

STAGE_SEARCH = "search"
STAGE_APPROACH = "approach"
STAGE_RECHECK = "recheck"
STAGE_CONFIRMED = "confirmed"


@dataclass(frozen=True)
class SensorConfig:
    """Sensing geometry.

    ``range`` bounds semantic scoring and detection; ``mask_range`` bounds the
    explored-region mask. Keeping the mask radius shorter reflects that an
    area only counts as searched once observed from nearby, while semantic
    scores project out to the full view distance.
    """

    fov: float = math.pi / 2.0
    range: float = 3.0
    mask_range: float = 1.5


@dataclass(frozen=True)
class DetectorConfig:
    detect_range: float = 3.0
    fov: float = math.pi / 2.0
    false_positive_rate: float = 0.0
    false_negative_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("false_positive_rate", "false_negative_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {rate}")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.5
    speed: float = 0.5
    d_succ: float = 1.0
    r_check: float = 1.5
    k_confirm: int = 3
    max_stuck_cycles: int = 3


class SimDetector:
    """Deterministic detector stand-in: range/FOV/line-of-sight gated truth
    plus seeded false positives and negatives. Per-tick randomness depends
    only on (seed, tick)."""

    def __init__(self, config: DetectorConfig, scenario: Scenario):
        self.config = config
        self.scenario = scenario

    def _rng(self, tick: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.config.seed & 0xFFFFFFFF, tick])
        )

    def sees(self, pose: Pose, p: Point) -> bool:
        dx, dy = p[0] - pose.x, p[1] - pose.y
        dist = math.hypot(dx, dy)
        if dist > self.config.detect_range:
            return False
        if dist > 0.0 and abs(
            wrap_angle(math.atan2(dy, dx) - pose.heading)
        ) > self.config.fov / 2.0:
            return False
        return line_of_sight(self.scenario.grid, pose.position, p)

    def detect(self, tick: int, pose: Pose) -> Point | None:
        """Detection point for this tick, or None."""
        rng = self._rng(tick)
        target = self.scenario.target_true_position
        if self.sees(pose, target):
            if self.config.false_negative_rate == 0.0 or (
                rng.random() >= self.config.false_negative_rate
            ):
                return target
        if self.config.false_positive_rate > 0.0 and (
            rng.random() < self.config.false_positive_rate
        ):
            grid = self.scenario.grid
            cand = [
                grid.center_of((int(r), int(c)))
                for r, c in np.argwhere(grid.cells == FREE).tolist()
                if self.sees(pose, grid.center_of((int(r), int(c))))
            ]
            cand = [p for p in cand if p != target]
            if cand:
                return cand[int(rng.integers(len(cand)))]
        return None


@dataclass
class VerificationState:
    stage: str = STAGE_SEARCH
    candidate: Point | None = None
    confirm_count: int = 0
    rejections: int = 0


def verify_target(
    state: VerificationState,
    detector: SimDetector,
    tick: int,
    pose: Pose,
    scenario: Scenario,
    sim: SimConfig,
    mask: ExploredMask,
) -> bool:
    """Advance the verification state machine by one tick.

    Stage 1 (trigger): any detection overrides the goal with its point.
    Stage 2 (recheck): within r_check of the candidate, k_confirm consecutive
    matching detections are required; a contradicting tick on which the
    candidate point is observable rejects it, marks its cell in the mask, and
    reverts to search. Stage 3 (arrival) is resolved by the episode loop
    against the true target position.

    Returns True when a candidate was rejected this tick (callers replan).
    """
    detection = detector.detect(tick, pose)
    if state.stage == STAGE_SEARCH:
        if detection is not None:
            state.stage = STAGE_APPROACH
            state.candidate = detection
            state.confirm_count = 0
        return False

    assert state.candidate is not None
    dist = math.hypot(pose.x - state.candidate[0], pose.y - state.candidate[1])
    if state.stage == STAGE_APPROACH and dist <= sim.r_check:
        state.stage = STAGE_RECHECK
    if state.stage == STAGE_RECHECK and detector.sees(pose, state.candidate):
        matched = (
            detection is not None
            and math.hypot(
                detection[0] - state.candidate[0],
                detection[1] - state.candidate[1],
            )
            <= sim.d_succ
        )
        if matched:
            state.confirm_count += 1
            if state.confirm_count >= sim.k_confirm:
                state.stage = STAGE_CONFIRMED
        else:
            _reject_candidate(state, scenario, mask)
            return True
    if state.stage == STAGE_CONFIRMED and dist <= 1e-6:
        # standing on a confirmed point that never produced arrival: bogus
        _reject_candidate(state, scenario, mask)
        return True
    return False


def _reject_candidate(
    state: VerificationState, scenario: Scenario, mask: ExploredMask
) -> None:
    cell = scenario.grid.cell_of(state.candidate)
    if scenario.grid.in_bounds(cell):
        mask.mark_cells({cell})
    state.stage = STAGE_SEARCH
    state.candidate = None
    state.confirm_count = 0
    state.rejections += 1


@dataclass(frozen=True)
class EpisodeResult:
    """Per-episode outcome feeding the SR/SPL metrics."""

    success: bool
    path_length: float
    optimal_length: float
    steps_used: int
    termination: str
    trajectory: tuple[tuple[float, float, float, float], ...]
    stage_log: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.path_length < 0:
            raise ValueError("path_length must be >= 0")
        if not self.optimal_length > 0:
            raise ValueError("optimal_length must be > 0")
        if self.success and self.termination != ARRIVAL:
            raise ValueError("success requires termination == arrival")


def _grid_path_points(grid: OccupancyGrid, a: Point, b: Point) -> list[Point] | None:
    """Waypoints of a shortest 8-connected free-cell path from a to b."""
    start = grid.cell_of(a)
    goal = grid.cell_of(b)
    if grid.state_at(start) != FREE or grid.state_at(goal) != FREE:
        return None
    if start == goal:
        return [a, b]
    cells = grid.cells
    h, w = grid.height, grid.width
    dist = np.full((h, w), np.inf)
    dist[start] = 0.0
    prev: dict[Cell, Cell] = {}
    heap: list[tuple[float, Cell]] = [(0.0, start)]
    diag = math.sqrt(2.0)
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if (r, c) == goal:
            chain = [goal]
            while chain[-1] != start:
                chain.append(prev[chain[-1]])
            chain.reverse()
            return [a] + [grid.center_of(cell) for cell in chain[1:-1]] + [b]
        if d > dist[r, c]:
            continue
        for dr, dc in (
            (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
        ):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or cells[nr, nc] != FREE:
                continue
            if dr != 0 and dc != 0:
                if cells[r + dr, c] != FREE or cells[r, c + dc] != FREE:
                    continue
            nd = d + (diag if dr != 0 and dc != 0 else 1.0)
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                prev[(nr, nc)] = (r, c)
                heapq.heappush(heap, (nd, (nr, nc)))
    return None


def _advance_along(
    pose: Pose, path: Sequence[Point], step_len: float
) -> tuple[Pose, list[Point]]:
    """Walk up to step_len meters along the polyline; returns (pose, rest).

    ``rest`` restarts at the new position followed by the unconsumed
    waypoints, so it can be fed back in on the next tick.
    """
    x, y, heading = pose.x, pose.y, pose.heading
    remaining = step_len
    i = 0
    n = len(path)
    while i < n:
        wp = path[i]
        dx, dy = wp[0] - x, wp[1] - y
        seg = math.hypot(dx, dy)
        if seg <= 1e-12:
            i += 1
            continue
        heading = math.atan2(dy, dx)
        if seg > remaining:
            x += dx / seg * remaining
            y += dy / seg * remaining
            break
        x, y = wp
        remaining -= seg
        i += 1
        if remaining <= 1e-12:
            break
    return Pose(x, y, heading), [(x, y), *path[i:]]


def run_episode(
    scenario: Scenario,
    igm: IGMModel,
    planner: PlannerConfig,
    scorer: SemanticScorer | None = None,
    detector: SimDetector | None = None,
    sensor: SensorConfig | None = None,
    sim: SimConfig | None = None,
    prompts: PromptSet | None = None,
) -> EpisodeResult:
    """Execute one episode to termination; fully determined by the seeds."""
    sensor = sensor or SensorConfig()
    sim = sim or SimConfig()
    grid = scenario.grid
    if igm.grid != grid:
        raise ValueError(
            "configuration mismatch: IGM grid geometry disagrees with the scenario grid"
        )
    if planner.enable_vlm and scorer is None:
        raise ValueError("planner.enable_vlm is set but no scorer was provided")
    score_grid = ScoreGrid.for_grid(grid) if scorer is not None else None
    if detector is None:
        detector = SimDetector(DetectorConfig(seed=scenario.seed), scenario)
    prompts = prompts or default_prompt_set(scenario.target_category)

    p_opt = grid_shortest_path_length(
        grid, scenario.robot_start.position, scenario.target_true_position
    )
    if not math.isfinite(p_opt) or p_opt <= 0.0:
        raise ValueError("target is unreachable from the robot start")

    rng = np.random.default_rng(
        np.random.SeedSequence([scenario.seed & 0xFFFFFFFF, planner.seed & 0xFFFFFFFF])
    )
    pose = scenario.robot_start
    mask = ExploredMask(grid)
    tree = PlanTree(pose.position, planner.rewire_radius, planner.max_edge_length)
    graph = GlobalGraph()
    graph_ids: dict[int, int] = {0: graph.add_vertex(pose.position)}
    verify = VerificationState()

    step_len = sim.speed * sim.dt
    trajectory: list[tuple[float, float, float, float]] = [
        (0.0, pose.x, pose.y, pose.heading)
    ]
    stage_log: list[str] = []
    history: list[tuple[float, Point]] = [(0.0, pose.position)]

    escape_heading = 0.0
    escape_remaining = 0.0
    stuck_cycles = 0
    mask_count_at_stuck = -1
    approach_path: list[Point] | None = None
    goal_point: Point | None = None
    goal_plan: list[Point] | None = None

    success = False
    termination = BUDGET_EXHAUSTED
    steps_used = 0

    mask_range2 = sensor.mask_range * sensor.mask_range
    for tick in range(scenario.step_budget):
        steps_used = tick + 1
        visible = visible_cells(grid, pose, sensor.fov, sensor.range)
        if scorer is not None:
            frame = make_frame(scenario, pose, visible, sensor.fov, sensor.range)
            v_obs = aggregate_observation(scorer, frame, prompts)
            fuse_frame(score_grid, pose, v_obs, visible, sensor.fov)
        # the explored mask is the shorter-range visible set: the union of
        # visible_cells(pose, fov, mask_range) over the episode so far
        mask.mark_cells(
            {
                cell
                for cell in visible
                if (grid.center_of(cell)[0] - pose.x) ** 2
                + (grid.center_of(cell)[1] - pose.y) ** 2
                <= mask_range2
            }
        )

        rejected = verify_target(verify, detector, tick, pose, scenario, sim, mask)
        if rejected:
            # full replan: drop the local tree and any committed guidance
            tree = PlanTree(pose.position, planner.rewire_radius, planner.max_edge_length)
            graph_ids = {0: graph.add_vertex(pose.position)}
            approach_path = None
            goal_point = None
            goal_plan = None
        stage_log.append(verify.stage)

        if escape_remaining > 0.0:
            step = min(step_len, escape_remaining)
            nxt = (
                pose.x + math.cos(escape_heading) * step,
                pose.y + math.sin(escape_heading) * step,
            )
            if line_of_sight(grid, pose.position, nxt):
                pose = Pose(nxt[0], nxt[1], escape_heading)
                escape_remaining -= step
            else:
                escape_remaining = 0.0
        elif verify.stage != STAGE_SEARCH:
            cand = verify.candidate
            if line_of_sight(grid, pose.position, cand):
                approach_path = [pose.position, cand]
            elif not approach_path or len(approach_path) < 2:
                approach_path = _grid_path_points(grid, pose.position, cand)
            if approach_path:
                pose, approach_path = _advance_along(pose, approach_path, step_len)
        else:
            approach_path = None
            rewire_root(tree, pose.position, grid, graph, graph_ids)
            expand_tree(tree, grid, rng, planner.samples_per_cycle, graph, graph_ids)
            if tree.size > planner.max_nodes:
                kept = tree.prune_far_leaves(
                    pose.position, planner.prune_keep_radius, planner.max_nodes
                )
                graph_ids = {
                    new: graph_ids[old]
                    for new, old in enumerate(kept)
                    if old in graph_ids
                }
            sg_eff = score_grid if planner.enable_vlm else None
            mask_eff = mask if planner.enable_mask else None
            sel = select_subgoal(
                tree, igm, sg_eff, mask_eff, planner.weights,
                planner.min_candidates, planner.u_margin,
            )
            if isinstance(sel, SubgoalSelection):
                # residual near-floor candidates are not worth chasing
                sel_floor = float(
                    distance_bias(np.array([sel.path[-1]]), igm, planner.weights)[0]
                )
                if sel.utility - sel_floor <= planner.min_goal_gain:
                    sel = None
            else:
                sel = None

            # one committed sub-goal (local, fallback, or frontier): keep it
            # until reached; switch only for a clearly better local candidate
            # or once its own gain collapses with nothing better in the tree
            goal_util = -math.inf
            goal_collapsed = False
            if goal_point is not None:
                reached = (
                    math.hypot(pose.x - goal_point[0], pose.y - goal_point[1])
                    <= step_len
                )
                if reached or not goal_plan:
                    goal_point = None
                    goal_plan = None
                else:
                    pt = np.array([goal_point])
                    goal_util = float(
                        utilities_at(pt, igm, sg_eff, mask_eff, planner.weights)[0]
                    )
                    goal_floor = float(distance_bias(pt, igm, planner.weights)[0])
                    goal_collapsed = goal_util <= goal_floor + planner.min_goal_gain

            if sel is not None:
                if goal_point is None or sel.utility > goal_util * planner.commit_factor:
                    goal_point = sel.path[-1]
                    goal_plan = list(sel.path)
                elif sel.path[-1] == goal_point:
                    goal_plan = list(sel.path)
            elif goal_point is None or goal_collapsed:
                goal_point = None
                goal_plan = None
                plan = global_fallback(
                    graph, pose.position, igm, sg_eff, mask_eff,
                    planner.weights, grid,
                )
                if plan is not None:
                    vertex_floor = float(
                        distance_bias(np.array([plan.path[-1]]), igm, planner.weights)[0]
                    )
                    if plan.utility > vertex_floor + planner.min_goal_gain:
                        goal_point = plan.path[-1]
                        goal_plan = list(plan.path)
                if goal_plan is None:
                    frontier = _nearest_frontier(grid, mask, pose.position)
                    if frontier is not None:
                        path = _grid_path_points(grid, pose.position, frontier)
                        if path:
                            goal_point = frontier
                            goal_plan = path

            if goal_plan and line_of_sight(grid, pose.position, goal_plan[0]):
                pose, goal_plan = _advance_along(pose, goal_plan, step_len)

        t_now = (tick + 1) * sim.dt
        trajectory.append((t_now, pose.x, pose.y, pose.heading))
        history.append((t_now, pose.position))

        d_true = math.hypot(
            pose.x - scenario.target_true_position[0],
            pose.y - scenario.target_true_position[1],
        )
        if verify.stage == STAGE_CONFIRMED and d_true <= sim.d_succ:
            success = True
            termination = ARRIVAL
            break

        if escape_remaining <= 0.0 and stuck_check(history, planner.tau_s, planner.eps_s):
            escape_heading = escape_direction(grid, pose, planner.probe_radius)
            escape_remaining = planner.escape_length
            goal_point = None
            goal_plan = None
            count = mask.count()
            if count <= mask_count_at_stuck:
                stuck_cycles += 1
            else:
                stuck_cycles = 1
            mask_count_at_stuck = count
            if stuck_cycles >= sim.max_stuck_cycles:
                termination = NO_PROGRESS
                break

    xs = np.asarray([(p[1], p[2]) for p in trajectory])
    path_length = float(np.sum(np.hypot(np.diff(xs[:, 0]), np.diff(xs[:, 1]))))
    return EpisodeResult(
        success=success,
        path_length=path_length,
        optimal_length=p_opt,
        steps_used=steps_used,
        termination=termination,
        trajectory=tuple(trajectory),
        stage_log=tuple(stage_log),
    )


def _nearest_frontier(
    grid: OccupancyGrid, mask: ExploredMask, p: Point
) -> Point | None:
    """Center of the nearest unexplored free cell, or None when fully explored."""
    open_cells = (grid.cells == FREE) & ~mask.array
    rows, cols = np.nonzero(open_cells)
    if rows.size == 0:
        return None
    xs = grid.origin[0] + (cols + 0.5) * grid.resolution
    ys = grid.origin[1] + (rows + 0.5) * grid.resolution
    d2 = (xs - p[0]) ** 2 + (ys - p[1]) ** 2
    i = int(np.argmin(d2))
    return (float(xs[i]), float(ys[i]))


def compute_metrics(results: Sequence[EpisodeResult]) -> tuple[float, float]:
    """(SR %, SPL %) over a result set; SPL weights successes by path optimality."""
    if not results:
        raise ValueError("cannot compute metrics over an empty result list")
    n = len(results)
    sr = 100.0 * sum(1 for r in results if r.success) / n
    spl = (
        100.0
        * sum(
            r.optimal_length / max(r.optimal_length, r.path_length)
            for r in results
            if r.success
        )
        / n
    )
    return sr, spl
