"""Scene data model: occupancy grid, anchors, scenarios, and visibility queries.

All values here are immutable after load and safe to share across episodes.
The scenario file format is UTF-8 JSON; see the repository README for the
documented schema. Grid rows are strings of '.' (free), '#' (occupied) and
'?' (unknown); row 0 is the southernmost row (lowest y).
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

_CHAR_TO_STATE = {".": FREE, "#": OCCUPIED, "?": UNKNOWN}
_STATE_TO_CHAR = {FREE: ".", OCCUPIED: "#", UNKNOWN: "?"}

Point = tuple[float, float]
Cell = tuple[int, int]


class ScenarioError(ValueError):
    """Raised when a scenario file fails to parse or validate."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = (a + math.pi) % (2.0 * math.pi) - math.pi
    if a == -math.pi:
        return math.pi
    return a


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Tri-state occupancy raster over a metric plane.

    ``cells`` is an int8 array of shape (height, width); cell (r, c) covers
    the square whose lower-left corner is ``origin + (c, r) * resolution``.
    Unknown cells are non-traversable and block visibility.
    """

    width: int
    height: int
    resolution: float
    origin: Point
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ScenarioError("grid.resolution must be > 0")
        if self.width < 1 or self.height < 1:
            raise ScenarioError("grid.width and grid.height must be >= 1")
        if self.cells.shape != (self.height, self.width):
            raise ScenarioError("grid.rows shape does not match width/height")
        self.cells.flags.writeable = False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and self.origin == other.origin
            and np.array_equal(self.cells, other.cells)
        )

    def cell_of(self, p: Point) -> Cell:
        """Containing cell (row, col) of a world point; may be out of bounds."""
        c = math.floor((p[0] - self.origin[0]) / self.resolution)
        r = math.floor((p[1] - self.origin[1]) / self.resolution)
        return r, c

    def center_of(self, cell: Cell) -> Point:
        r, c = cell
        return (
            self.origin[0] + (c + 0.5) * self.resolution,
            self.origin[1] + (r + 0.5) * self.resolution,
        )

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def state_at(self, cell: Cell) -> int:
        """Cell state; out-of-bounds reads as OCCUPIED."""
        if not self.in_bounds(cell):
            return OCCUPIED
        return int(self.cells[cell[0], cell[1]])

    def is_free_point(self, p: Point) -> bool:
        cell = self.cell_of(p)
        return self.in_bounds(cell) and self.cells[cell[0], cell[1]] == FREE

    @property
    def world_min(self) -> Point:
        return self.origin

    @property
    def world_max(self) -> Point:
        return (
            self.origin[0] + self.width * self.resolution,
            self.origin[1] + self.height * self.resolution,
        )

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width * self.resolution, self.height * self.resolution)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) arrays of shape (height, width) with cell-center coordinates."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        return np.broadcast_to(xs, (self.height, self.width)), np.broadcast_to(
            ys[:, None], (self.height, self.width)
        )

    def free_mask(self) -> np.ndarray:
        return self.cells == FREE


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float

    @property
    def position(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class Anchor:
    """A prior-time object instance seeding one mixture component."""

    id: int
    category: str
    position: Point
    confidence: float
    footprint_radius: float
    context_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ScenarioError(
                f"anchors[{self.id}].confidence must be in [0, 1], got {self.confidence}"
            )
        if self.footprint_radius <= 0:
            raise ScenarioError(
                f"anchors[{self.id}].footprint_radius must be > 0, got {self.footprint_radius}"
            )


@dataclass(frozen=True)
class Scenario:
    """One search task: a grid, the anchor snapshot, and the displaced target."""

    grid: OccupancyGrid
    anchors_at_T: tuple[Anchor, ...]
    target_category: str
    target_true_position: Point
    robot_start: Pose
    step_budget: int
    seed: int

    def __post_init__(self) -> None:
        for a in self.anchors_at_T:
            if not self.grid.in_bounds(self.grid.cell_of(a.position)):
                raise ScenarioError(
                    f"anchors[{a.id}].position {a.position} lies outside the grid"
                )
        if not self.grid.is_free_point(self.target_true_position):
            raise ScenarioError(
                f"target.true_position {self.target_true_position} is not in a free cell"
            )
        if not self.grid.is_free_point(self.robot_start.position):
            raise ScenarioError(
                f"robot_start.position {self.robot_start.position} is not in a free cell"
            )
        if self.step_budget < 1:
            raise ScenarioError(f"step_budget must be >= 1, got {self.step_budget}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"missing required field '{where}{key}'")
    return obj[key]


def _point(value, where: str) -> Point:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ScenarioError(f"field '{where}' must be a [x, y] pair")
    return float(value[0]), float(value[1])


def grid_from_dict(obj: dict) -> OccupancyGrid:
    width = int(_require(obj, "width", "grid."))
    height = int(_require(obj, "height", "grid."))
    resolution = float(_require(obj, "resolution", "grid."))
    origin = _point(_require(obj, "origin", "grid."), "grid.origin")
    rows = _require(obj, "rows", "grid.")
    if not isinstance(rows, list) or len(rows) != height:
        raise ScenarioError(f"field 'grid.rows' must hold {height} row strings")
    cells = np.empty((height, width), dtype=np.int8)
    for r, row in enumerate(rows):
        if not isinstance(row, str) or len(row) != width:
            raise ScenarioError(f"field 'grid.rows[{r}]' must be a string of length {width}")
        for c, ch in enumerate(row):
            try:
                cells[r, c] = _CHAR_TO_STATE[ch]
            except KeyError:
                raise ScenarioError(
                    f"field 'grid.rows[{r}]' has invalid cell character {ch!r}"
                ) from None
    return OccupancyGrid(width, height, resolution, origin, cells)


def grid_to_dict(grid: OccupancyGrid) -> dict:
    rows = [
        "".join(_STATE_TO_CHAR[int(v)] for v in grid.cells[r]) for r in range(grid.height)
    ]
    return {
        "width": grid.width,
        "height": grid.height,
        "resolution": grid.resolution,
        "origin": list(grid.origin),
        "rows": rows,
    }


def scenario_from_dict(obj: dict) -> Scenario:
    grid = grid_from_dict(_require(obj, "grid", ""))
    anchors = []
    for i, a in enumerate(_require(obj, "anchors", "")):
        where = f"anchors[{i}]."
        anchors.append(
            Anchor(
                id=int(_require(a, "id", where)),
                category=str(_require(a, "category", where)),
                position=_point(_require(a, "position", where), where + "position"),
                confidence=float(_require(a, "confidence", where)),
                footprint_radius=float(_require(a, "footprint_radius", where)),
                context_labels=tuple(a.get("context", [])),
            )
        )
    target = _require(obj, "target", "")
    start = _require(obj, "robot_start", "")
    return Scenario(
        grid=grid,
        anchors_at_T=tuple(anchors),
        target_category=str(_require(target, "category", "target.")),
        target_true_position=_point(
            _require(target, "true_position", "target."), "target.true_position"
        ),
        robot_start=Pose(
            *_point(_require(start, "position", "robot_start."), "robot_start.position"),
            heading=float(_require(start, "heading", "robot_start.")),
        ),
        step_budget=int(_require(obj, "step_budget", "")),
        seed=int(_require(obj, "seed", "")),
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "grid": grid_to_dict(s.grid),
        "anchors": [
            {
                "id": a.id,
                "category": a.category,
                "position": list(a.position),
                "confidence": a.confidence,
                "footprint_radius": a.footprint_radius,
                "context": list(a.context_labels),
            }
            for a in s.anchors_at_T
        ],
        "target": {
            "category": s.target_category,
            "true_position": list(s.target_true_position),
        },
        "robot_start": {
            "position": [s.robot_start.x, s.robot_start.y],
            "heading": s.robot_start.heading,
        },
        "step_budget": s.step_budget,
        "seed": s.seed,
    }


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file; raises ScenarioError naming the bad field."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {e}") from e
    return scenario_from_dict(obj)


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(s), indent=1) + "\n", encoding="utf-8"
    )


def line_of_sight(grid: OccupancyGrid, a: Point, b: Point) -> bool:
    """True iff the segment a->b crosses only free cells.

    Conservative grid ray traversal: every cell the segment enters blocks it
    if non-free; endpoints count, out-of-bounds counts as occupied.
    """
    res = grid.resolution
    gx0 = (a[0] - grid.origin[0]) / res
    gy0 = (a[1] - grid.origin[1]) / res
    gx1 = (b[0] - grid.origin[0]) / res
    gy1 = (b[1] - grid.origin[1]) / res
    c = math.floor(gx0)
    r = math.floor(gy0)
    c_end = math.floor(gx1)
    r_end = math.floor(gy1)
    cells = grid.cells
    h, w = grid.height, grid.width

    if not (0 <= r < h and 0 <= c < w) or cells[r, c] != FREE:
        return False
    if r == r_end and c == c_end:
        return True

    dx = gx1 - gx0
    dy = gy1 - gy0
    if dx > 0:
        step_c, t_max_x, t_delta_x = 1, (math.floor(gx0) + 1.0 - gx0) / dx, 1.0 / dx
    elif dx < 0:
        step_c, t_max_x, t_delta_x = -1, (gx0 - math.floor(gx0)) / -dx, -1.0 / dx
    else:
        step_c, t_max_x, t_delta_x = 0, math.inf, math.inf
    if dy > 0:
        step_r, t_max_y, t_delta_y = 1, (math.floor(gy0) + 1.0 - gy0) / dy, 1.0 / dy
    elif dy < 0:
        step_r, t_max_y, t_delta_y = -1, (gy0 - math.floor(gy0)) / -dy, -1.0 / dy
    else:
        step_r, t_max_y, t_delta_y = 0, math.inf, math.inf

    max_steps = abs(c_end - c) + abs(r_end - r) + 2
    for _ in range(max_steps):
        if t_max_x <= t_max_y:
            c += step_c
            t_max_x += t_delta_x
        else:
            r += step_r
            t_max_y += t_delta_y
        if not (0 <= r < h and 0 <= c < w) or cells[r, c] != FREE:
            return False
        if r == r_end and c == c_end:
            return True
    return True


def line_of_sight_batch(
    grid: OccupancyGrid, origin: Point, targets: np.ndarray
) -> np.ndarray:
    """Vectorized line_of_sight from one origin to an (N, 2) array of points.

    Runs the same conservative traversal as the scalar version, ray by ray in
    lockstep; results are identical bit for bit.
    """
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    n = targets.shape[0]
    res = grid.resolution
    gx0 = (origin[0] - grid.origin[0]) / res
    gy0 = (origin[1] - grid.origin[1]) / res
    c0 = math.floor(gx0)
    r0 = math.floor(gy0)
    h, w = grid.height, grid.width
    cells = grid.cells
    if not (0 <= r0 < h and 0 <= c0 < w) or cells[r0, c0] != FREE:
        return np.zeros(n, dtype=bool)

    gx1 = (targets[:, 0] - grid.origin[0]) / res
    gy1 = (targets[:, 1] - grid.origin[1]) / res
    c_end = np.floor(gx1).astype(np.int64)
    r_end = np.floor(gy1).astype(np.int64)
    dx = gx1 - gx0
    dy = gy1 - gy0

    with np.errstate(divide="ignore"):
        t_delta_x = np.where(dx != 0.0, 1.0 / np.abs(dx), np.inf)
        t_delta_y = np.where(dy != 0.0, 1.0 / np.abs(dy), np.inf)
        t_max_x = np.where(
            dx > 0.0,
            (math.floor(gx0) + 1.0 - gx0) / np.where(dx > 0.0, dx, 1.0),
            np.where(
                dx < 0.0,
                (gx0 - math.floor(gx0)) / np.where(dx < 0.0, -dx, 1.0),
                np.inf,
            ),
        )
        t_max_y = np.where(
            dy > 0.0,
            (math.floor(gy0) + 1.0 - gy0) / np.where(dy > 0.0, dy, 1.0),
            np.where(
                dy < 0.0,
                (gy0 - math.floor(gy0)) / np.where(dy < 0.0, -dy, 1.0),
                np.inf,
            ),
        )
    step_c = np.sign(dx).astype(np.int64)
    step_r = np.sign(dy).astype(np.int64)

    cur_c = np.full(n, c0, dtype=np.int64)
    cur_r = np.full(n, r0, dtype=np.int64)
    out = np.ones(n, dtype=bool)
    active = (cur_c != c_end) | (cur_r != r_end)
    max_steps = int(np.max(np.abs(c_end - c0) + np.abs(r_end - r0), initial=0)) + 2
    for _ in range(max_steps):
        if not np.any(active):
            break
        go_x = active & (t_max_x <= t_max_y)
        go_y = active & ~go_x
        cur_c = np.where(go_x, cur_c + step_c, cur_c)
        t_max_x = np.where(go_x, t_max_x + t_delta_x, t_max_x)
        cur_r = np.where(go_y, cur_r + step_r, cur_r)
        t_max_y = np.where(go_y, t_max_y + t_delta_y, t_max_y)
        oob = active & ((cur_r < 0) | (cur_r >= h) | (cur_c < 0) | (cur_c >= w))
        out[oob] = False
        active &= ~oob
        blocked = active & (
            cells[np.clip(cur_r, 0, h - 1), np.clip(cur_c, 0, w - 1)] != FREE
        )
        out[blocked] = False
        active &= ~blocked
        active &= ~((cur_c == c_end) & (cur_r == r_end))
    return out


def visible_cells(
    grid: OccupancyGrid, pose: Pose, fov: float, sensor_range: float
) -> set[Cell]:
    """Free cells whose center is in range, inside the angular window, and in sight.

    A cell center coincident with the robot position passes the angular test
    unconditionally (its bearing is undefined).
    """
    if not 0.0 < fov <= 2.0 * math.pi:
        raise ValueError(f"fov must be in (0, 2*pi], got {fov}")
    if sensor_range <= 0:
        raise ValueError(f"sensor_range must be > 0, got {sensor_range}")

    res = grid.resolution
    r0 = max(0, math.floor((pose.y - sensor_range - grid.origin[1]) / res))
    r1 = min(grid.height - 1, math.floor((pose.y + sensor_range - grid.origin[1]) / res))
    c0 = max(0, math.floor((pose.x - sensor_range - grid.origin[0]) / res))
    c1 = min(grid.width - 1, math.floor((pose.x + sensor_range - grid.origin[0]) / res))
    if r1 < r0 or c1 < c0:
        return set()

    sub = grid.cells[r0 : r1 + 1, c0 : c1 + 1]
    xs = grid.origin[0] + (np.arange(c0, c1 + 1) + 0.5) * res
    ys = grid.origin[1] + (np.arange(r0, r1 + 1) + 0.5) * res
    dx = xs[None, :] - pose.x
    dy = ys[:, None] - pose.y
    dist2 = dx * dx + dy * dy
    cand = (sub == FREE) & (dist2 <= sensor_range * sensor_range)
    if fov < 2.0 * math.pi:
        rel = np.arctan2(dy, dx) - pose.heading
        rel = (rel + math.pi) % (2.0 * math.pi) - math.pi
        rel = np.where(rel == -math.pi, math.pi, rel)
        cand &= (np.abs(rel) <= fov / 2.0) | (dist2 == 0.0)

    rows, cols = np.nonzero(cand)
    if rows.size == 0:
        return set()
    centers = np.stack(
        [xs[cols], ys[rows]], axis=1
    )
    seen = line_of_sight_batch(grid, pose.position, centers)
    return {
        (r0 + int(rr), c0 + int(cc))
        for rr, cc, ok in zip(rows, cols, seen)
        if ok
    }


_DIAG = math.sqrt(2.0)
_NEIGHBORS8 = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, _DIAG),
    (1, -1, _DIAG),
    (-1, 1, _DIAG),
    (-1, -1, _DIAG),
)


def grid_shortest_path_length(grid: OccupancyGrid, a: Point, b: Point) -> float:
    """Shortest free-space path length in meters, 8-connected with sqrt(2) diagonals.

    Diagonal moves require both adjacent orthogonal cells free (no corner
    cutting). Returns math.inf when no path exists; the Euclidean distance
    when both points share a cell.
    """
    start = grid.cell_of(a)
    goal = grid.cell_of(b)
    if grid.state_at(start) != FREE or grid.state_at(goal) != FREE:
        return math.inf
    if start == goal:
        return math.hypot(b[0] - a[0], b[1] - a[1])

    res = grid.resolution
    cells = grid.cells
    h, w = grid.height, grid.width
    dist = np.full((h, w), np.inf)
    dist[start] = 0.0
    heap: list[tuple[float, Cell]] = [(0.0, start)]
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if (r, c) == goal:
            return d * res
        if d > dist[r, c]:
            continue
        for dr, dc, step in _NEIGHBORS8:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or cells[nr, nc] != FREE:
                continue
            if dr != 0 and dc != 0:
                if cells[r + dr, c] != FREE or cells[r, c + dc] != FREE:
                    continue
            nd = d + step
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                heapq.heappush(heap, (nd, (nr, nc)))
    return math.inf
