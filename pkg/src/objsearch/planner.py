"""Utility-guided sampling-tree planner.

A rooted tree is expanded by sample/nearest/steer with rewiring, and its root
follows the robot (root-rewiring). Candidate nodes are ranked by a joint
utility of distance bias toward the prior target point, prior entropy gain,
and online semantic support, with both gain terms gated by the explored-region
mask. When too few candidates clear the pure-distance floor the planner asks
for region-level guidance over a persistent graph of historical vertices.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evidence import ScoreGrid
from .prior import IGMModel
from .world import (
    FREE,
    Cell,
    OccupancyGrid,
    Point,
    Pose,
    line_of_sight,
    wrap_angle,
)


class ExploredMask:
    """Monotone per-cell visited flags: the union of all sensor footprints."""

    def __init__(self, grid: OccupancyGrid):
        self.width = grid.width
        self.height = grid.height
        self.resolution = grid.resolution
        self.origin = grid.origin
        self.array = np.zeros((grid.height, grid.width), dtype=bool)

    def mark_cells(self, cells: set[Cell]) -> None:
        if not cells:
            return
        rows = np.fromiter((c[0] for c in cells), dtype=np.intp, count=len(cells))
        cols = np.fromiter((c[1] for c in cells), dtype=np.intp, count=len(cells))
        self.array[rows, cols] = True

    def count(self) -> int:
        return int(self.array.sum())

    def cell_of(self, p: Point) -> Cell:
        return (
            math.floor((p[1] - self.origin[1]) / self.resolution),
            math.floor((p[0] - self.origin[0]) / self.resolution),
        )

    def contains_point(self, p: Point) -> bool:
        r, c = self.cell_of(p)
        if 0 <= r < self.height and 0 <= c < self.width:
            return bool(self.array[r, c])
        return False


@dataclass(frozen=True)
class UtilityWeights:
    """Joint-utility coefficients; defaults keep lambda_s > lambda_e > lambda_d."""

    lambda_d: float = 0.1
    lambda_e: float = 0.5
    lambda_s: float = 1.0
    omega_radius: float = 1.5
    d_max: float | None = None  # None resolves to the grid diagonal

    def resolved_d_max(self, grid: OccupancyGrid) -> float:
        return self.d_max if self.d_max is not None else grid.diagonal


class PlanTree:
    """Rooted tree over free space with cost-from-root bookkeeping."""

    def __init__(
        self,
        root_position: Point,
        rewire_radius: float = 1.5,
        max_edge_length: float = 1.0,
    ):
        self.rewire_radius = rewire_radius
        self.max_edge_length = max_edge_length
        self._pos = np.zeros((64, 2))
        self._pos[0] = root_position
        self._cost = np.zeros(64)
        self.parents: list[int] = [-1]
        self.children: list[list[int]] = [[]]
        self.size = 1
        self.root = 0

    @property
    def positions(self) -> np.ndarray:
        return self._pos[: self.size]

    @property
    def costs(self) -> np.ndarray:
        return self._cost[: self.size]

    def position_of(self, i: int) -> Point:
        return (float(self._pos[i, 0]), float(self._pos[i, 1]))

    def _grow(self) -> None:
        cap = self._pos.shape[0]
        if self.size < cap:
            return
        new_pos = np.zeros((cap * 2, 2))
        new_pos[:cap] = self._pos
        new_cost = np.zeros(cap * 2)
        new_cost[:cap] = self._cost
        self._pos, self._cost = new_pos, new_cost

    def add_node(self, position: Point, parent: int) -> int:
        self._grow()
        i = self.size
        self._pos[i] = position
        edge = math.hypot(
            position[0] - self._pos[parent, 0], position[1] - self._pos[parent, 1]
        )
        self._cost[i] = self._cost[parent] + edge
        self.parents.append(parent)
        self.children.append([])
        self.children[parent].append(i)
        self.size += 1
        return i

    def nearest(self, p: Point) -> int:
        d = self.positions - np.asarray(p)
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    def reparent(self, node: int, new_parent: int, new_cost: float) -> None:
        """Re-hang ``node`` under ``new_parent`` and shift its subtree costs."""
        old_parent = self.parents[node]
        self.children[old_parent].remove(node)
        self.children[new_parent].append(node)
        self.parents[node] = new_parent
        delta = new_cost - self._cost[node]
        stack = [node]
        while stack:
            n = stack.pop()
            self._cost[n] += delta
            stack.extend(self.children[n])

    def path_to_root(self, node: int) -> list[Point]:
        """Positions from the root to ``node``, both inclusive."""
        chain = [node]
        while self.parents[chain[-1]] != -1:
            chain.append(self.parents[chain[-1]])
        chain.reverse()
        return [self.position_of(i) for i in chain]

    def reroot(self, new_root: int) -> None:
        """Make ``new_root`` the root by reversing its ancestor chain."""
        if new_root == self.root:
            return
        chain = [new_root]
        while self.parents[chain[-1]] != -1:
            chain.append(self.parents[chain[-1]])
        for child, parent in zip(chain, chain[1:]):
            self.children[parent].remove(child)
            self.children[child].append(parent)
            self.parents[parent] = child
        self.parents[new_root] = -1
        self.root = new_root
        self.recompute_costs()

    def recompute_costs(self) -> None:
        n = self.size
        parents = np.asarray(self.parents, dtype=np.intp)
        lens = np.zeros(n)
        nz = parents >= 0
        pos = self.positions
        lens[nz] = np.hypot(
            pos[nz, 0] - pos[parents[nz], 0], pos[nz, 1] - pos[parents[nz], 1]
        )
        cost = self._cost
        cost[self.root] = 0.0
        stack = [self.root]
        children = self.children
        while stack:
            i = stack.pop()
            base = cost[i]
            for ch in children[i]:
                cost[ch] = base + lens[ch]
                stack.append(ch)

    def prune_far_leaves(
        self, center: Point, keep_radius: float, max_nodes: int
    ) -> list[int]:
        """Drop farthest leaves beyond ``keep_radius`` until at most ``max_nodes``.

        Surviving nodes keep their relative order; returns their old indices
        (new index -> old index) so callers can remap side tables.
        """
        survivors = list(range(self.size))
        while self.size > max_nodes:
            d = self.positions - np.asarray(center)
            dist2 = np.einsum("ij,ij->i", d, d)
            droppable = sorted(
                (
                    i
                    for i in range(self.size)
                    if i != self.root
                    and not self.children[i]
                    and dist2[i] > keep_radius * keep_radius
                ),
                key=lambda i: (-dist2[i], i),
            )
            if not droppable:
                break
            drop = set(droppable[: self.size - max_nodes])
            keep = [i for i in range(self.size) if i not in drop]
            remap = {old: new for new, old in enumerate(keep)}
            self._pos[: len(keep)] = self._pos[keep]
            self._cost[: len(keep)] = self._cost[keep]
            self.parents = [
                -1 if self.parents[i] == -1 else remap[self.parents[i]] for i in keep
            ]
            self.children = [
                [remap[c] for c in self.children[i] if c not in drop] for i in keep
            ]
            self.root = remap[self.root]
            self.size = len(keep)
            survivors = [survivors[i] for i in keep]
        return survivors

    def validate(self, grid: OccupancyGrid | None = None, tol: float = 1e-9) -> None:
        """Assert the structural invariants; intended for tests."""
        assert self.parents[self.root] == -1
        assert sum(1 for p in self.parents if p == -1) == 1
        seen = {self.root}
        stack = [self.root]
        while stack:
            n = stack.pop()
            for ch in self.children[n]:
                assert self.parents[ch] == n
                assert ch not in seen, "cycle detected"
                seen.add(ch)
                stack.append(ch)
        assert len(seen) == self.size, "tree is not connected"
        for i in range(self.size):
            if i == self.root:
                assert abs(self._cost[i]) <= tol
                continue
            p = self.parents[i]
            edge = math.hypot(
                self._pos[i, 0] - self._pos[p, 0], self._pos[i, 1] - self._pos[p, 1]
            )
            assert edge <= self.max_edge_length + tol
            assert abs(self._cost[i] - (self._cost[p] + edge)) <= tol
            if grid is not None:
                assert line_of_sight(grid, self.position_of(p), self.position_of(i))


class GlobalGraph:
    """Undirected graph of historical vertices with traversable edges."""

    def __init__(self) -> None:
        self.positions: list[Point] = []
        self.adj: list[list[tuple[int, float]]] = []

    def __len__(self) -> int:
        return len(self.positions)

    def add_vertex(self, p: Point) -> int:
        self.positions.append((float(p[0]), float(p[1])))
        self.adj.append([])
        return len(self.positions) - 1

    def add_edge(self, i: int, j: int, length: float) -> None:
        self.adj[i].append((j, length))
        self.adj[j].append((i, length))

    def nearest(self, p: Point) -> int:
        arr = np.asarray(self.positions)
        d = arr - np.asarray(p)
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    def shortest_path(self, src: int, dst: int) -> list[int] | None:
        dist = {src: 0.0}
        prev: dict[int, int] = {}
        heap: list[tuple[float, int]] = [(0.0, src)]
        done: set[int] = set()
        while heap:
            d, n = heapq.heappop(heap)
            if n in done:
                continue
            done.add(n)
            if n == dst:
                path = [dst]
                while path[-1] != src:
                    path.append(prev[path[-1]])
                path.reverse()
                return path
            for m, length in self.adj[n]:
                nd = d + length
                if nd < dist.get(m, math.inf):
                    dist[m] = nd
                    prev[m] = n
                    heapq.heappush(heap, (nd, m))
        return None


def expand_tree(
    tree: PlanTree,
    grid: OccupancyGrid,
    rng: np.random.Generator,
    n_samples: int,
    graph: GlobalGraph | None = None,
    graph_ids: dict[int, int] | None = None,
) -> PlanTree:
    """Grow the tree by sample/nearest/steer with cost-improving rewiring.

    New vertices and edges are mirrored into ``graph`` when given;
    ``graph_ids`` maps tree index -> graph vertex and is kept up to date.
    Zero-growth cycles are fine in cramped regions.
    """
    lo = grid.world_min
    hi = grid.world_max
    for _ in range(n_samples):
        sx = float(rng.uniform(lo[0], hi[0]))
        sy = float(rng.uniform(lo[1], hi[1]))
        near = tree.nearest((sx, sy))
        nx, ny = tree.position_of(near)
        dx, dy = sx - nx, sy - ny
        dist = math.hypot(dx, dy)
        if dist == 0.0:
            continue
        scale = min(1.0, tree.max_edge_length / dist)
        new = (nx + dx * scale, ny + dy * scale)
        if not line_of_sight(grid, (nx, ny), new):
            continue
        idx = tree.add_node(new, near)
        if graph is not None and graph_ids is not None:
            gid = graph.add_vertex(new)
            graph_ids[idx] = gid
            if near in graph_ids:
                graph.add_edge(
                    graph_ids[near], gid, math.hypot(new[0] - nx, new[1] - ny)
                )
        _rewire_through(tree, idx, grid)
    return tree


def _rewire_through(tree: PlanTree, idx: int, grid: OccupancyGrid) -> None:
    """Re-parent neighbors of node ``idx`` through it when that lowers cost."""
    pos = tree.position_of(idx)
    diffs = tree.positions - np.asarray(pos)
    d2 = np.einsum("ij,ij->i", diffs, diffs)
    radius = min(tree.rewire_radius, tree.max_edge_length)
    base = tree.costs[idx]
    for j in np.nonzero(d2 <= radius * radius)[0].tolist():
        if j == idx or j == tree.root:
            continue
        edge = math.sqrt(d2[j])
        if edge == 0.0:
            continue
        new_cost = base + edge
        if new_cost < tree.costs[j] and line_of_sight(grid, pos, tree.position_of(j)):
            tree.reparent(j, idx, new_cost)


def rewire_root(
    tree: PlanTree,
    position: Point,
    grid: OccupancyGrid,
    graph: GlobalGraph | None = None,
    graph_ids: dict[int, int] | None = None,
) -> bool:
    """Move the root to the robot's advanced position, re-parenting the tree.

    Inserts a vertex at ``position`` unless one already sits there. Returns
    False (tree untouched) when the connecting edge would be in collision.
    """
    near = tree.nearest(position)
    nx, ny = tree.position_of(near)
    dist = math.hypot(position[0] - nx, position[1] - ny)
    if dist <= 1e-9:
        new_root = near
    else:
        if not line_of_sight(grid, (nx, ny), position):
            return False
        new_root = tree.add_node(position, near)
        if graph is not None and graph_ids is not None:
            gid = graph.add_vertex(position)
            graph_ids[new_root] = gid
            if near in graph_ids:
                graph.add_edge(graph_ids[near], gid, dist)
    tree.reroot(new_root)
    _rewire_through(tree, new_root, grid)
    return True


def _neighborhood_sums(
    points: np.ndarray,
    values: np.ndarray,
    origin: Point,
    resolution: float,
    radius: float,
) -> np.ndarray:
    """Sum ``values`` over cells whose center is within ``radius`` of each point.

    Membership is tested on squared distance against the exact cell centers;
    cells outside the grid contribute nothing (zero padding).
    """
    h, w = values.shape
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    rows = np.floor((pts[:, 1] - origin[1]) / resolution).astype(np.intp)
    cols = np.floor((pts[:, 0] - origin[0]) / resolution).astype(np.intp)
    k = math.ceil(radius / resolution)
    ph, pw = h + 2 * k, w + 2 * k
    padded = np.zeros((ph, pw))
    padded[k : k + h, k : k + w] = values
    flat = padded.ravel()
    offsets = np.arange(-k, k + 1)
    dr = np.repeat(offsets, 2 * k + 1)[None, :]
    dc = np.tile(offsets, 2 * k + 1)[None, :]
    cand_r = rows[:, None] + dr
    cand_c = cols[:, None] + dc
    pad_r = cand_r + k
    pad_c = cand_c + k
    if np.all((rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)):
        gathered = flat.take(pad_r * pw + pad_c)
    else:
        # points whose cell lies off-grid can index outside the padding
        valid = (pad_r >= 0) & (pad_r < ph) & (pad_c >= 0) & (pad_c < pw)
        np.clip(pad_r, 0, ph - 1, out=pad_r)
        np.clip(pad_c, 0, pw - 1, out=pad_c)
        gathered = flat.take(pad_r * pw + pad_c)
        gathered[~valid] = 0.0
    cx = origin[0] + (cand_c + 0.5) * resolution
    cy = origin[1] + (cand_r + 0.5) * resolution
    ddx = cx - pts[:, 0:1]
    ddy = cy - pts[:, 1:2]
    inside = ddx * ddx + ddy * ddy <= radius * radius
    return np.where(inside, gathered, 0.0).sum(axis=1)


def info_gain(
    v: Point, igm: IGMModel, mask: ExploredMask | None, omega_radius: float
) -> float:
    """Entropy contribution of unexplored cells in the disc around ``v``."""
    values = igm.entropy_raster
    if mask is not None:
        values = np.where(mask.array, 0.0, values)
    return float(
        _neighborhood_sums(
            np.array([v]), values, igm.grid.origin, igm.grid.resolution, omega_radius
        )[0]
    )


def semantic_support(
    v: Point, score_grid: ScoreGrid, mask: ExploredMask | None, omega_radius: float
) -> float:
    """Fused relevance accumulated over unexplored cells in the disc around ``v``."""
    values = score_grid.relevance
    if mask is not None:
        values = np.where(mask.array, 0.0, values)
    return float(
        _neighborhood_sums(
            np.array([v]), values, score_grid.origin, score_grid.resolution, omega_radius
        )[0]
    )


def distance_bias(points: np.ndarray, igm: IGMModel, weights: UtilityWeights) -> np.ndarray:
    """The always-on directional term toward the prior target point."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    d_max = weights.resolved_d_max(igm.grid)
    target = np.asarray(igm.prior_target_point)
    dist = np.hypot(pts[:, 0] - target[0], pts[:, 1] - target[1])
    return weights.lambda_d * (1.0 - np.minimum(1.0, dist / d_max))


def utilities_at(
    points: np.ndarray,
    igm: IGMModel,
    score_grid: ScoreGrid | None,
    mask: ExploredMask | None,
    weights: UtilityWeights,
) -> np.ndarray:
    """Joint utility at each point.

    Passing ``mask=None`` disables explored-region gating entirely; passing
    ``score_grid=None`` (or ``lambda_s == 0``) drops the semantic term. Masked
    points keep exactly the distance term, bit for bit.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    grid = igm.grid
    util = distance_bias(pts, igm, weights)

    if mask is not None:
        rows = np.floor((pts[:, 1] - grid.origin[1]) / grid.resolution).astype(np.intp)
        cols = np.floor((pts[:, 0] - grid.origin[0]) / grid.resolution).astype(np.intp)
        in_b = (rows >= 0) & (rows < grid.height) & (cols >= 0) & (cols < grid.width)
        gated = np.zeros(len(pts), dtype=bool)
        gated[in_b] = mask.array[rows[in_b], cols[in_b]]
    else:
        gated = np.zeros(len(pts), dtype=bool)

    open_idx = np.nonzero(~gated)[0]
    if open_idx.size:
        # one shared-geometry pass: lambda_e * entropy + lambda_s * relevance
        combined = None
        if weights.lambda_e != 0.0:
            combined = weights.lambda_e * igm.entropy_raster
        if score_grid is not None and weights.lambda_s != 0.0:
            rel = weights.lambda_s * score_grid.relevance
            combined = rel if combined is None else combined + rel
        if combined is not None:
            if mask is not None:
                combined = np.where(mask.array, 0.0, combined)
            util[open_idx] += _neighborhood_sums(
                pts[open_idx],
                combined,
                grid.origin,
                grid.resolution,
                weights.omega_radius,
            )
    return util


def utility(
    v: Point,
    igm: IGMModel,
    score_grid: ScoreGrid | None,
    mask: ExploredMask | None,
    weights: UtilityWeights,
) -> float:
    return float(utilities_at(np.array([v]), igm, score_grid, mask, weights)[0])


@dataclass(frozen=True)
class SubgoalSelection:
    node: int
    path: list[Point]
    utility: float


@dataclass(frozen=True)
class FallbackRequest:
    reason: str


def select_subgoal(
    tree: PlanTree,
    igm: IGMModel,
    score_grid: ScoreGrid | None,
    mask: ExploredMask | None,
    weights: UtilityWeights,
    min_candidates: int = 3,
    u_margin: float = 1e-6,
) -> SubgoalSelection | FallbackRequest:
    """Pick the maximal-utility tree node (ties: lowest index) and its root path.

    Emits a FallbackRequest when fewer than ``min_candidates`` nodes beat the
    pure-distance floor by more than ``u_margin``.
    """
    if tree.size <= 1:
        return FallbackRequest("tree has no candidate nodes")
    pts = tree.positions
    util = utilities_at(pts, igm, score_grid, mask, weights)
    floor = distance_bias(pts, igm, weights)

    candidate = np.ones(tree.size, dtype=bool)
    candidate[tree.root] = False
    above = candidate & (util > floor + u_margin)
    if int(above.sum()) < min_candidates:
        return FallbackRequest(
            f"only {int(above.sum())} candidates above the distance floor"
        )
    masked_util = np.where(candidate, util, -np.inf)
    best = int(np.argmax(masked_util))
    return SubgoalSelection(
        node=best, path=tree.path_to_root(best), utility=float(util[best])
    )


@dataclass(frozen=True)
class FallbackPlan:
    vertex: int
    path: list[Point]
    utility: float


def global_fallback(
    graph: GlobalGraph,
    robot_position: Point,
    igm: IGMModel,
    score_grid: ScoreGrid | None,
    mask: ExploredMask | None,
    weights: UtilityWeights,
    grid: OccupancyGrid | None = None,
) -> FallbackPlan | None:
    """Highest-utility historical vertex plus the graph path leading to it.

    The path starts at the robot position and enters the graph at the nearest
    vertex in line of sight. Returns None when the graph is empty or cannot be
    entered, which callers treat as an episode-level exploration reset.
    """
    if len(graph) == 0:
        return None
    util = utilities_at(np.asarray(graph.positions), igm, score_grid, mask, weights)
    best = int(np.argmax(util))

    grid = grid or igm.grid
    arr = np.asarray(graph.positions)
    d = arr - np.asarray(robot_position)
    order = np.argsort(np.einsum("ij,ij->i", d, d), kind="stable")
    entry = -1
    for cand in order[:32].tolist():
        if line_of_sight(grid, robot_position, graph.positions[cand]):
            entry = cand
            break
    if entry < 0:
        return None
    hops = graph.shortest_path(entry, best)
    if hops is None:
        return None
    path = [robot_position] + [graph.positions[i] for i in hops]
    return FallbackPlan(vertex=best, path=path, utility=float(util[best]))


def stuck_check(
    history: Sequence[tuple[float, Point]], tau_s: float, eps_s: float
) -> bool:
    """True iff the net displacement over the trailing ``tau_s`` window is < eps_s.

    Endpoint metric: intermediate excursions do not count. False while the
    history does not yet span the window.
    """
    if not history:
        return False
    t_now, p_now = history[-1]
    cutoff = t_now - tau_s
    ref: Point | None = None
    for t, p in reversed(history):
        if t <= cutoff:
            ref = p
            break
    if ref is None:
        return False
    return math.hypot(p_now[0] - ref[0], p_now[1] - ref[1]) < eps_s


ESCAPE_DIRECTIONS = tuple(i * math.pi / 4.0 for i in range(8))


def escape_direction(grid: OccupancyGrid, pose: Pose, probe_radius: float) -> float:
    """Least-obstructed of the eight 45-degree map-frame directions.

    Each direction owns a sector of half-width 22.5 degrees and radius
    ``probe_radius``; the count covers non-traversable (occupied or unknown)
    cell centers, the robot's own cell excluded. Ties go to the smallest angle.
    """
    counts = escape_sector_counts(grid, pose, probe_radius)
    best = 0
    for i in range(1, 8):
        if counts[i] < counts[best]:
            best = i
    return ESCAPE_DIRECTIONS[best]


def escape_sector_counts(
    grid: OccupancyGrid, pose: Pose, probe_radius: float
) -> list[int]:
    res = grid.resolution
    r0 = max(0, math.floor((pose.y - probe_radius - grid.origin[1]) / res))
    r1 = min(grid.height - 1, math.floor((pose.y + probe_radius - grid.origin[1]) / res))
    c0 = max(0, math.floor((pose.x - probe_radius - grid.origin[0]) / res))
    c1 = min(grid.width - 1, math.floor((pose.x + probe_radius - grid.origin[0]) / res))
    counts = [0] * 8
    if r1 < r0 or c1 < c0:
        return counts
    sub = grid.cells[r0 : r1 + 1, c0 : c1 + 1]
    xs = grid.origin[0] + (np.arange(c0, c1 + 1) + 0.5) * res
    ys = grid.origin[1] + (np.arange(r0, r1 + 1) + 0.5) * res
    dx = xs[None, :] - pose.x
    dy = ys[:, None] - pose.y
    dist2 = dx * dx + dy * dy
    blocked = (sub != FREE) & (dist2 <= probe_radius * probe_radius) & (dist2 > 0.0)
    if not np.any(blocked):
        return counts
    brs, bcs = np.nonzero(blocked)
    bearing = np.arctan2(dy[brs, 0], dx[0, bcs])
    for i, ang in enumerate(ESCAPE_DIRECTIONS):
        rel = np.abs(
            (bearing - ang + math.pi) % (2.0 * math.pi) - math.pi
        )
        counts[i] = int(np.sum(rel <= math.pi / 8.0))
    return counts


@dataclass(frozen=True)
class PlannerConfig:
    """Planner block of the episode config, ablation switches included."""

    weights: UtilityWeights = field(default_factory=UtilityWeights)
    rewire_radius: float = 1.5
    max_edge_length: float = 1.0
    samples_per_cycle: int = 20
    max_nodes: int = 400
    prune_keep_radius: float = 7.0
    min_candidates: int = 3
    u_margin: float = 1e-6
    # hysteresis: switch sub-goals only for a clearly better candidate
    commit_factor: float = 1.3
    # below this gain over the pure-distance floor a sub-goal is not worth
    # chasing and the episode falls through to region-level guidance
    min_goal_gain: float = 0.01
    tau_s: float = 5.0
    eps_s: float = 0.15
    probe_radius: float = 1.0
    escape_length: float = 0.5
    enable_vlm: bool = True
    enable_mask: bool = True
    seed: int = 0
