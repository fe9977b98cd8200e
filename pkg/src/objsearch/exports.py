"""CSV exports for rasters, score grids, trajectories, and tree snapshots.

All rasters share one scheme: a kind line, a geometry line, then one or more
named blocks of row-major comma-separated values (row 0 first). Floats are
written with repr so files round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .episode import EpisodeResult
from .evidence import ScoreGrid
from .planner import PlanTree
from .prior import IGMModel
from .world import Point


def _fmt(v: float) -> str:
    return repr(float(v))


def write_raster_csv(
    path: str | Path,
    kind: str,
    width: int,
    height: int,
    resolution: float,
    origin: Point,
    blocks: list[tuple[str, np.ndarray]],
) -> None:
    lines = [
        f"# {kind}",
        f"# width={width} height={height} resolution={_fmt(resolution)}"
        f" origin_x={_fmt(origin[0])} origin_y={_fmt(origin[1])}",
    ]
    for name, arr in blocks:
        if arr.shape != (height, width):
            raise ValueError(f"block {name!r} shape {arr.shape} != ({height}, {width})")
        lines.append(f"# block={name}")
        for r in range(height):
            lines.append(",".join(_fmt(v) for v in arr[r]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_raster_csv(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if len(text) < 2 or not text[0].startswith("# "):
        raise ValueError(f"{path}: not a raster CSV")
    kind = text[0][2:]
    geom: dict[str, float] = {}
    for token in text[1][2:].split():
        key, value = token.split("=", 1)
        geom[key] = float(value)
    width, height = int(geom["width"]), int(geom["height"])
    blocks: dict[str, np.ndarray] = {}
    i = 2
    while i < len(text):
        line = text[i]
        if not line.startswith("# block="):
            raise ValueError(f"{path}: expected block header at line {i + 1}")
        name = line[len("# block=") :]
        rows = [
            [float(v) for v in text[i + 1 + r].split(",")] for r in range(height)
        ]
        blocks[name] = np.asarray(rows)
        i += 1 + height
    return kind, geom, blocks


def write_igm_raster(model: IGMModel, path: str | Path) -> None:
    """Cell masses (and entropy contributions) of the prior, for plotting."""
    grid = model.grid
    write_raster_csv(
        path,
        "igm-raster",
        grid.width,
        grid.height,
        grid.resolution,
        grid.origin,
        [("mass", model.mass_raster), ("entropy", model.entropy_raster)],
    )


def write_score_grid(sg: ScoreGrid, path: str | Path) -> None:
    """Persist the evidence layer: block C (confidence), then block V (relevance)."""
    write_raster_csv(
        path,
        "score-grid",
        sg.width,
        sg.height,
        sg.resolution,
        sg.origin,
        [("C", sg.confidence), ("V", sg.relevance)],
    )


def read_score_grid(path: str | Path) -> ScoreGrid:
    kind, geom, blocks = read_raster_csv(path)
    if kind != "score-grid" or "C" not in blocks or "V" not in blocks:
        raise ValueError(f"{path}: not a score-grid export")
    return ScoreGrid(
        width=int(geom["width"]),
        height=int(geom["height"]),
        resolution=geom["resolution"],
        origin=(geom["origin_x"], geom["origin_y"]),
        confidence=blocks["C"],
        relevance=blocks["V"],
    )


def write_trajectory_csv(result: EpisodeResult, path: str | Path) -> None:
    """tick,x,y,heading,stage rows; tick 0 is the pre-episode start pose."""
    lines = ["tick,x,y,heading,stage"]
    for i, (_, x, y, heading) in enumerate(result.trajectory):
        stage = "start" if i == 0 else result.stage_log[min(i, len(result.stage_log)) - 1]
        lines.append(f"{i},{_fmt(x)},{_fmt(y)},{_fmt(heading)},{stage}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_tree_snapshot_csv(
    tree: PlanTree, chosen_path: list[Point] | None, path: str | Path
) -> None:
    """Per-cycle planner snapshot: every node plus the selected root path."""
    on_path = set()
    if chosen_path:
        on_path = {(p[0], p[1]) for p in chosen_path}
    lines = ["index,x,y,parent,cost,on_chosen_path"]
    for i in range(tree.size):
        x, y = tree.position_of(i)
        flag = 1 if (x, y) in on_path else 0
        lines.append(
            f"{i},{_fmt(x)},{_fmt(y)},{tree.parents[i]},{_fmt(tree.costs[i])},{flag}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
