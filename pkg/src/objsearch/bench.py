"""Benchmark harness: scenario generation, batch execution, ablation table.

The four ablation strategies toggle the planner's semantic-evidence and
explored-region switches; scorers are only ever constructed for strategies
that use them. Episode seeds are derived from (base seed, scenario index,
episode index) so all strategies see identical rollout seeds, and aggregation
is ordered by job key, which keeps every output byte-deterministic no matter
how the worker pool schedules the episodes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .config import EpisodeSettings, episode_settings_from_dict, episode_settings_to_dict
from .episode import DetectorConfig, EpisodeResult, SimDetector, compute_metrics, run_episode
from .evidence import default_prompt_set, make_oracle_scorer
from .prior import build_igm, bundled_embedding_table
from .world import (
    Pose,
    Scenario,
    ScenarioError,
    grid_shortest_path_length,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)


class AblationStrategy(Enum):
    """Rows of the four-way ablation: which planner inputs are enabled."""

    IGM_ONLY = "igm_only"
    IGM_MASK = "igm_mask"
    IGM_VLM = "igm_vlm"
    FULL = "full"

    @property
    def enable_vlm(self) -> bool:
        return self in (AblationStrategy.IGM_VLM, AblationStrategy.FULL)

    @property
    def enable_mask(self) -> bool:
        return self in (AblationStrategy.IGM_MASK, AblationStrategy.FULL)


STRATEGY_LETTERS = {
    "a": AblationStrategy.IGM_ONLY,
    "b": AblationStrategy.IGM_MASK,
    "c": AblationStrategy.IGM_VLM,
    "d": AblationStrategy.FULL,
}


def parse_strategies(spec: str) -> tuple[AblationStrategy, ...]:
    """Accepts comma-separated names (igm_only,...) or letters (a,b,c,d)."""
    out = []
    for token in spec.split(","):
        token = token.strip().lower()
        if token in STRATEGY_LETTERS:
            out.append(STRATEGY_LETTERS[token])
        else:
            out.append(AblationStrategy(token))
    return tuple(out)


@dataclass(frozen=True)
class BenchmarkSuite:
    scenarios: tuple[str, ...]
    episodes_per_scenario: int
    base_seed: int
    strategies: tuple[AblationStrategy, ...]
    settings: EpisodeSettings

    def __post_init__(self) -> None:
        if self.episodes_per_scenario < 1:
            raise ValueError("episodes_per_scenario must be >= 1")
        if not self.scenarios:
            raise ValueError("suite lists no scenarios")


def load_suite(path: str | Path) -> BenchmarkSuite:
    """Suite JSON; scenario paths resolve relative to the suite file."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    scenarios = tuple(str((base / p).resolve()) for p in obj["scenarios"])
    return BenchmarkSuite(
        scenarios=scenarios,
        episodes_per_scenario=int(obj.get("episodes_per_scenario", 1)),
        base_seed=int(obj.get("base_seed", 0)),
        strategies=tuple(
            AblationStrategy(s)
            for s in obj.get("strategies", [s.value for s in AblationStrategy])
        ),
        settings=episode_settings_from_dict(obj.get("episode", {})),
    )


def derive_episode_seed(base_seed: int, scenario_index: int, episode_index: int) -> int:
    """Stable seed shared by all strategies for one (scenario, episode) pair."""
    ss = np.random.SeedSequence(
        [base_seed & 0xFFFFFFFF, scenario_index, episode_index]
    )
    return int(ss.generate_state(1, np.uint64)[0] & 0x7FFFFFFF)


def _displacement_offset(rng: np.random.Generator, spec: dict) -> tuple[float, float]:
    kind = spec.get("kind", "none")
    if kind == "none":
        return 0.0, 0.0
    if kind == "fixed":
        dx, dy = spec["offset"]
        return float(dx), float(dy)
    if kind == "uniform_disc":
        radius = float(spec["radius"])
        r = radius * math.sqrt(float(rng.random()))
        theta = 2.0 * math.pi * float(rng.random())
        return r * math.cos(theta), r * math.sin(theta)
    raise ValueError(f"unknown displacement kind {kind!r}")


def generate_scenarios(
    template: dict, n: int, seed: int, out_dir: str | Path, max_retries: int = 200
) -> list[Path]:
    """Write n scenario files with seeded target displacement.

    The template's target carries its snapshot position; each generated file
    places target.true_position at snapshot + a draw from the displacement
    distribution, re-drawn until it lands on a free cell reachable from the
    robot start. Identical (template, n, seed) produce byte-identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = template["base"]
    displacement = template.get("displacement", {"kind": "none"})
    prefix = template.get("name_prefix", "scn")
    start_candidates = template.get("start_candidates")
    snapshot = tuple(base["target"]["snapshot_position"])

    paths: list[Path] = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, i]))
        obj = json.loads(json.dumps(base))  # deep copy
        if start_candidates:
            sx, sy, sh = start_candidates[int(rng.integers(len(start_candidates)))]
            obj["robot_start"] = {"position": [sx, sy], "heading": sh}
        obj["seed"] = derive_episode_seed(seed, i, 0)
        start = tuple(obj["robot_start"]["position"])

        placed = None
        for _ in range(max_retries):
            dx, dy = _displacement_offset(rng, displacement)
            candidate = (snapshot[0] + dx, snapshot[1] + dy)
            obj["target"] = {
                "category": base["target"]["category"],
                "true_position": [candidate[0], candidate[1]],
            }
            try:
                scenario = scenario_from_dict(obj)
            except ScenarioError:
                continue
            if math.isfinite(
                grid_shortest_path_length(scenario.grid, start, candidate)
            ):
                placed = scenario
                break
            if displacement.get("kind", "none") in ("none", "fixed"):
                break
        if placed is None:
            raise ValueError(
                f"could not place target in free reachable space for scenario {i}"
                f" after {max_retries} retries"
            )
        path = out_dir / f"{prefix}_{i:03d}.json"
        save_scenario(placed, path)
        paths.append(path)
    return paths


@dataclass(frozen=True)
class StrategyRow:
    strategy: AblationStrategy
    sr: float
    spl: float
    episodes: int
    base_seed: int


@dataclass(frozen=True)
class BenchmarkTable:
    rows: tuple[StrategyRow, ...]
    results: dict[str, tuple[EpisodeResult, ...]]

    def to_csv(self) -> str:
        lines = ["strategy,sr,spl,episodes,base_seed"]
        for row in self.rows:
            lines.append(
                f"{row.strategy.value},{row.sr!r},{row.spl!r},{row.episodes},{row.base_seed}"
            )
        return "\n".join(lines) + "\n"


def _run_one(
    scenario_path: str,
    strategy_value: str,
    episode_seed: int,
    settings: EpisodeSettings,
) -> EpisodeResult:
    strategy = AblationStrategy(strategy_value)
    scenario = load_scenario(scenario_path)
    table = bundled_embedding_table()
    igm = build_igm(scenario, table, settings.igm)
    planner = replace(
        settings.planner,
        enable_vlm=strategy.enable_vlm,
        enable_mask=strategy.enable_mask,
        seed=episode_seed,
    )
    prompts = default_prompt_set(scenario.target_category, settings.prompt_weights)
    scorer = None
    if strategy.enable_vlm:
        scorer = make_oracle_scorer(
            scenario, episode_seed, prompts=prompts, config=settings.scorer, table=table
        )
    detector = SimDetector(replace(settings.detector, seed=episode_seed), scenario)
    return run_episode(
        scenario,
        igm,
        planner,
        scorer=scorer,
        detector=detector,
        sensor=settings.sensor,
        sim=settings.sim,
        prompts=prompts,
    )


def run_benchmark(
    suite: BenchmarkSuite,
    out_dir: str | Path | None = None,
    max_workers: int | None = None,
    scorer_factory=None,
) -> BenchmarkTable:
    """Run strategy x scenario x episode, aggregate SR/SPL per strategy.

    A custom ``scorer_factory(scenario, seed)`` forces in-process execution
    (factories do not cross the worker-pool boundary); the default oracle path
    fans episodes out to a bounded process pool. Aggregation order is fixed by
    the job key, never by completion order.
    """
    jobs = []
    for strategy in suite.strategies:
        for s_idx, path in enumerate(suite.scenarios):
            for e_idx in range(suite.episodes_per_scenario):
                seed = derive_episode_seed(suite.base_seed, s_idx, e_idx)
                jobs.append((strategy, s_idx, e_idx, path, seed))

    results: dict[tuple[str, int, int], EpisodeResult] = {}
    if scorer_factory is not None:
        for strategy, s_idx, e_idx, path, seed in jobs:
            results[(strategy.value, s_idx, e_idx)] = _run_one_with_factory(
                path, strategy, seed, suite.settings, scorer_factory
            )
    else:
        workers = max_workers or min(len(jobs), os.cpu_count() or 1)
        if workers <= 1:
            for strategy, s_idx, e_idx, path, seed in jobs:
                results[(strategy.value, s_idx, e_idx)] = _run_one(
                    path, strategy.value, seed, suite.settings
                )
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    (strategy.value, s_idx, e_idx): pool.submit(
                        _run_one, path, strategy.value, seed, suite.settings
                    )
                    for strategy, s_idx, e_idx, path, seed in jobs
                }
                for key, fut in futures.items():
                    results[key] = fut.result()

    rows = []
    per_strategy: dict[str, tuple[EpisodeResult, ...]] = {}
    for strategy in suite.strategies:
        bucket = tuple(
            results[key] for key in sorted(results) if key[0] == strategy.value
        )
        sr, spl = compute_metrics(bucket)
        per_strategy[strategy.value] = bucket
        rows.append(
            StrategyRow(
                strategy=strategy,
                sr=sr,
                spl=spl,
                episodes=len(bucket),
                base_seed=suite.base_seed,
            )
        )
    table = BenchmarkTable(rows=tuple(rows), results=per_strategy)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.csv").write_text(table.to_csv(), encoding="utf-8")
        (out_dir / "manifest.json").write_text(
            json.dumps(suite_manifest(suite), indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        record = {
            strategy: [
                {
                    "success": r.success,
                    "path_length": r.path_length,
                    "optimal_length": r.optimal_length,
                    "steps_used": r.steps_used,
                    "termination": r.termination,
                }
                for r in bucket
            ]
            for strategy, bucket in per_strategy.items()
        }
        (out_dir / "episodes.json").write_text(
            json.dumps(record, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
    return table


def _run_one_with_factory(
    path: str,
    strategy: AblationStrategy,
    seed: int,
    settings: EpisodeSettings,
    scorer_factory,
) -> EpisodeResult:
    scenario = load_scenario(path)
    table = bundled_embedding_table()
    igm = build_igm(scenario, table, settings.igm)
    planner = replace(
        settings.planner,
        enable_vlm=strategy.enable_vlm,
        enable_mask=strategy.enable_mask,
        seed=seed,
    )
    prompts = default_prompt_set(scenario.target_category, settings.prompt_weights)
    scorer = scorer_factory(scenario, seed) if strategy.enable_vlm else None
    detector = SimDetector(replace(settings.detector, seed=seed), scenario)
    return run_episode(
        scenario,
        igm,
        planner,
        scorer=scorer,
        detector=detector,
        sensor=settings.sensor,
        sim=settings.sim,
        prompts=prompts,
    )


def suite_manifest(suite: BenchmarkSuite) -> dict:
    """Reproducibility record: config hash, seeds, versions."""
    canonical = json.dumps(
        {
            "scenarios": [Path(p).name for p in suite.scenarios],
            "episodes_per_scenario": suite.episodes_per_scenario,
            "base_seed": suite.base_seed,
            "strategies": [s.value for s in suite.strategies],
            "episode": episode_settings_to_dict(suite.settings),
        },
        sort_keys=True,
    )
    return {
        "config_sha256": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "base_seed": suite.base_seed,
        "episodes_per_scenario": suite.episodes_per_scenario,
        "strategies": [s.value for s in suite.strategies],
        "scenarios": [Path(p).name for p in suite.scenarios],
        "versions": {
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "objsearch": __version__,
        },
    }
