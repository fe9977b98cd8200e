"""Online semantic score grid: per-frame scoring and recursive per-cell fusion.

A pluggable scorer rates each observation frame against four query prompts of
increasing context granularity; the weighted aggregate lands on the grid
through a field-of-view confidence model and the confidence/relevance
recursions. A deterministic oracle scorer stands in for real vision-language
inference so episodes stay hermetic and seedable.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .prior import EmbeddingTable, bundled_embedding_table, cosine_similarity
from .world import Cell, OccupancyGrid, Point, Pose, Scenario, line_of_sight, wrap_angle


class ScorerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptSet:
    """Exactly four query templates plus convex aggregation weights."""

    queries: tuple[str, str, str, str]
    weights: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.queries) != 4 or len(self.weights) != 4:
            raise ValueError("prompt set must hold exactly 4 queries and 4 weights")
        if any(w < 0 for w in self.weights):
            raise ValueError("prompt weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("prompt weights must sum to 1 within 1e-9")


DEFAULT_PROMPT_WEIGHTS = (0.4, 0.3, 0.2, 0.1)


def default_prompt_set(
    target: str, weights: tuple[float, float, float, float] = DEFAULT_PROMPT_WEIGHTS
) -> PromptSet:
    """Static prompt templates, from direct presence down to broad scene context."""
    return PromptSet(
        queries=(
            f"a view that directly shows a {target}",
            f"a spot where a {target} is usually placed",
            f"a room that would normally hold a {target}",
            f"indoor surroundings loosely related to a {target}",
        ),
        weights=weights,
    )


@dataclass(frozen=True)
class Frame:
    """Observation descriptor consumed by scorers in place of an image."""

    pose: Pose
    visible: frozenset[Cell]
    visible_anchor_ids: tuple[int, ...]
    target_visible: bool
    target_distance: float


class SemanticScorer(Protocol):
    def score(self, frame: Frame, query: str) -> float:
        """Relevance of the frame to the query, in [0, 1]; deterministic."""
        ...


def _in_frustum(
    grid: OccupancyGrid, pose: Pose, p: Point, fov: float, sensor_range: float
) -> bool:
    dx = p[0] - pose.x
    dy = p[1] - pose.y
    dist = math.hypot(dx, dy)
    if dist > sensor_range:
        return False
    if dist > 0.0 and abs(wrap_angle(math.atan2(dy, dx) - pose.heading)) > fov / 2.0:
        return False
    return line_of_sight(grid, pose.position, p)


def make_frame(
    scenario: Scenario,
    pose: Pose,
    visible: set[Cell],
    fov: float,
    sensor_range: float,
) -> Frame:
    target_in_view = _in_frustum(
        scenario.grid, pose, scenario.target_true_position, fov, sensor_range
    )
    anchor_ids = tuple(
        a.id
        for a in scenario.anchors_at_T
        if _in_frustum(scenario.grid, pose, a.position, fov, sensor_range)
    )
    t = scenario.target_true_position
    return Frame(
        pose=pose,
        visible=frozenset(visible),
        visible_anchor_ids=anchor_ids,
        target_visible=target_in_view,
        target_distance=math.hypot(t[0] - pose.x, t[1] - pose.y)
        if target_in_view
        else math.inf,
    )


@dataclass
class ScoreGrid:
    """Per-cell accumulated confidence and fused relevance, both in [0, 1]."""

    width: int
    height: int
    resolution: float
    origin: Point
    confidence: np.ndarray
    relevance: np.ndarray

    @classmethod
    def for_grid(cls, grid: OccupancyGrid) -> "ScoreGrid":
        return cls(
            width=grid.width,
            height=grid.height,
            resolution=grid.resolution,
            origin=grid.origin,
            confidence=np.zeros((grid.height, grid.width)),
            relevance=np.zeros((grid.height, grid.width)),
        )

    def matches_geometry(self, grid: OccupancyGrid) -> bool:
        return (
            self.width == grid.width
            and self.height == grid.height
            and self.resolution == grid.resolution
            and self.origin == grid.origin
        )


def aggregate_observation(
    scorer: SemanticScorer, frame: Frame, prompts: PromptSet
) -> float:
    """Weighted per-prompt aggregation; convex, hence already in [0, 1]."""
    total = 0.0
    for k, (query, weight) in enumerate(zip(prompts.queries, prompts.weights), start=1):
        try:
            s = scorer.score(frame, query)
        except Exception as e:
            raise ScorerError(f"scorer failed on prompt {k}: {e}") from e
        if not 0.0 <= s <= 1.0:
            raise ScorerError(f"scorer returned {s} outside [0, 1] on prompt {k}")
        total += weight * s
    return min(1.0, max(0.0, total))


def _relative_bearings(pose: Pose, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    dx = xs - pose.x
    dy = ys - pose.y
    rel = np.arctan2(dy, dx) - pose.heading
    rel = (rel + math.pi) % (2.0 * math.pi) - math.pi
    rel = np.where(rel == -math.pi, math.pi, rel)
    # a cell center on the robot position has no bearing; treat it as on-axis
    return np.where((dx == 0.0) & (dy == 0.0), 0.0, rel)


def _confidence_from_bearing(rel: np.ndarray, fov: float) -> np.ndarray:
    half = fov / 2.0
    inside = np.abs(rel) <= half
    c = np.cos((rel / half) * (math.pi / 2.0)) ** 2
    return np.where(inside, c, 0.0)


def instantaneous_confidence(pose: Pose, cell_center: Point, fov: float) -> float:
    """Angular observation confidence: cos^2 taper from 1 on-axis to 0 at the edge."""
    if not 0.0 < fov < 2.0 * math.pi:
        raise ValueError(f"fov must be in (0, 2*pi), got {fov}")
    rel = _relative_bearings(
        pose, np.asarray(cell_center[0], dtype=np.float64), np.asarray(cell_center[1], dtype=np.float64)
    )
    return float(_confidence_from_bearing(rel, fov))


def fuse_cell_values(c_prev, v_prev, c_inst, v_obs):
    """One fusion step; accepts scalars or same-shaped arrays with c_inst > 0."""
    denom = c_prev + c_inst
    c_new = (c_prev * c_prev + c_inst * c_inst) / denom
    v_new = (c_prev * v_prev + c_inst * v_obs) / denom
    return c_new, v_new


def fuse_frame(
    score_grid: ScoreGrid,
    pose: Pose,
    v_obs: float,
    visible: set[Cell],
    fov: float,
) -> ScoreGrid:
    """Fuse one observation into the visible cells; untouched elsewhere.

    Mutates and returns the grid (single writer per episode). Cells with zero
    instantaneous confidence are skipped, which also removes the 0/0 case.
    """
    if not 0.0 <= v_obs <= 1.0:
        raise ValueError(f"v_obs must be in [0, 1], got {v_obs}")
    if not 0.0 < fov < 2.0 * math.pi:
        raise ValueError(f"fov must be in (0, 2*pi), got {fov}")
    if not visible:
        return score_grid
    cells = sorted(visible)
    rows = np.fromiter((c[0] for c in cells), dtype=np.intp, count=len(cells))
    cols = np.fromiter((c[1] for c in cells), dtype=np.intp, count=len(cells))
    xs = score_grid.origin[0] + (cols + 0.5) * score_grid.resolution
    ys = score_grid.origin[1] + (rows + 0.5) * score_grid.resolution
    c_inst = _confidence_from_bearing(_relative_bearings(pose, xs, ys), fov)
    hit = c_inst > 0.0
    if not np.any(hit):
        return score_grid
    rows, cols, c_inst = rows[hit], cols[hit], c_inst[hit]
    c_prev = score_grid.confidence[rows, cols]
    v_prev = score_grid.relevance[rows, cols]
    c_new, v_new = fuse_cell_values(c_prev, v_prev, c_inst, v_obs)
    score_grid.confidence[rows, cols] = c_new
    score_grid.relevance[rows, cols] = v_new
    return score_grid


@dataclass(frozen=True)
class ScorerConfig:
    """Knobs of the simulated scorer, surfaced in the episode config file."""

    noise_bound: float = 0.05
    similarity_threshold: float = 0.5
    context_floor: float = 0.02
    direct_decay: float = 0.5
    direct_range: float = 3.0
    context_ranges: tuple[float, float, float] = (1.5, 3.0, 4.5)


class OracleScorer:
    """Deterministic stand-in for image-text relevance scoring.

    Rules, with all shaping constants in ScorerConfig:
      * direct-presence query: ``1 - direct_decay * d / direct_range`` when the
        target is inside the frustum at distance d, else 0 (occlusion included).
      * context queries: ``floor + (1 - floor) * max(0, 1 - d_a / range_k)``
        over visible anchors whose category similarity to the target exceeds
        ``similarity_threshold``; plain floor when none is visible.
      * every score gets seeded bounded noise of at most ``noise_bound`` and is
        clamped to [0, 1]. Identical (seed, frame, query) give identical scores.
    """

    def __init__(
        self,
        scenario: Scenario,
        seed: int,
        prompts: PromptSet,
        config: ScorerConfig | None = None,
        table: EmbeddingTable | None = None,
    ):
        self.config = config or ScorerConfig()
        self.seed = int(seed)
        table = table or bundled_embedding_table()
        self._query_index = {q: k for k, q in enumerate(prompts.queries)}
        target_vec = table.vector(scenario.target_category)
        self._anchor_pos = {a.id: a.position for a in scenario.anchors_at_T}
        self._related_ids = frozenset(
            a.id
            for a in scenario.anchors_at_T
            if cosine_similarity(target_vec, table.vector(a.category))
            > self.config.similarity_threshold
        )

    def _noise(self, frame: Frame, query_index: int) -> float:
        bound = self.config.noise_bound
        if bound == 0.0:
            return 0.0
        key = struct.pack(
            "<qiddd?",
            self.seed,
            query_index,
            frame.pose.x,
            frame.pose.y,
            frame.pose.heading,
            frame.target_visible,
        ) + b"".join(struct.pack("<i", i) for i in frame.visible_anchor_ids)
        digest = hashlib.blake2b(key, digest_size=8).digest()
        unit = struct.unpack("<Q", digest)[0] / 2**64
        return (2.0 * unit - 1.0) * bound

    def score(self, frame: Frame, query: str) -> float:
        try:
            k = self._query_index[query]
        except KeyError:
            raise ValueError(f"unknown query for this scorer: {query!r}") from None
        cfg = self.config
        if k == 0:
            raw = 0.0
            if frame.target_visible:
                raw = max(
                    0.0,
                    1.0 - cfg.direct_decay * frame.target_distance / cfg.direct_range,
                )
        else:
            reach = cfg.context_ranges[k - 1]
            best = 0.0
            for aid in frame.visible_anchor_ids:
                if aid not in self._related_ids:
                    continue
                ax, ay = self._anchor_pos[aid]
                d = math.hypot(ax - frame.pose.x, ay - frame.pose.y)
                best = max(best, max(0.0, 1.0 - d / reach))
            raw = cfg.context_floor + (1.0 - cfg.context_floor) * best
        return min(1.0, max(0.0, raw + self._noise(frame, k)))


def make_oracle_scorer(
    scenario: Scenario,
    seed: int,
    prompts: PromptSet | None = None,
    config: ScorerConfig | None = None,
    table: EmbeddingTable | None = None,
) -> OracleScorer:
    prompts = prompts or default_prompt_set(scenario.target_category)
    return OracleScorer(scenario, seed, prompts, config=config, table=table)
