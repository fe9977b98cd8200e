"""Command-line entry point: gen, run, ablate, export-rasters."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    AblationStrategy,
    BenchmarkSuite,
    generate_scenarios,
    load_suite,
    parse_strategies,
    run_benchmark,
)
from .config import load_episode_settings
from .episode import SimDetector, run_episode
from .evidence import default_prompt_set, make_oracle_scorer
from .exports import write_igm_raster, write_score_grid, write_trajectory_csv
from .prior import build_igm, bundled_embedding_table
from .world import load_scenario


def _cmd_gen(args) -> int:
    template = json.loads(Path(args.template).read_text(encoding="utf-8"))
    paths = generate_scenarios(template, args.n, args.seed, args.out)
    print(f"wrote {len(paths)} scenario files to {args.out}")
    return 0


def _cmd_run(args) -> int:
    suite = load_suite(args.suite)
    return _run_suite(suite, args.out, args.workers)


def _cmd_ablate(args) -> int:
    suite = load_suite(args.suite)
    if args.strategies:
        suite = replace(suite, strategies=parse_strategies(args.strategies))
    return _run_suite(suite, args.out, args.workers)


def _run_suite(suite: BenchmarkSuite, out: str, workers: int | None) -> int:
    table = run_benchmark(suite, out_dir=out, max_workers=workers)
    for row in table.rows:
        print(
            f"{row.strategy.value:10s} SR {row.sr:6.2f}%  SPL {row.spl:6.2f}%"
            f"  ({row.episodes} episodes)"
        )
    print(f"outputs in {out}")
    return 0


def _cmd_export_rasters(args) -> int:
    settings = load_episode_settings(args.episode)
    scenario_path = Path(args.episode).parent / settings.scenario
    if not scenario_path.exists():
        scenario_path = Path(settings.scenario)
    scenario = load_scenario(scenario_path)
    table = bundled_embedding_table()
    igm = build_igm(scenario, table, settings.igm)
    prompts = default_prompt_set(scenario.target_category, settings.prompt_weights)
    scorer = None
    if settings.planner.enable_vlm:
        scorer = make_oracle_scorer(
            scenario,
            scenario.seed,
            prompts=prompts,
            config=settings.scorer,
            table=table,
        )
    detector = SimDetector(settings.detector, scenario)
    result = run_episode(
        scenario,
        igm,
        settings.planner,
        scorer=scorer,
        detector=detector,
        sensor=settings.sensor,
        sim=settings.sim,
        prompts=prompts,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_igm_raster(igm, out / "igm.csv")
    write_trajectory_csv(result, out / "trajectory.csv")
    if scorer is not None:
        # replay the fused grid for export by rerunning the evidence layer
        from .evidence import ScoreGrid, aggregate_observation, fuse_frame, make_frame
        from .world import Pose, visible_cells

        sg = ScoreGrid.for_grid(scenario.grid)
        for i, (_, x, y, heading) in enumerate(result.trajectory[:-1]):
            pose = Pose(x, y, heading)
            visible = visible_cells(
                scenario.grid, pose, settings.sensor.fov, settings.sensor.range
            )
            frame = make_frame(
                scenario, pose, visible, settings.sensor.fov, settings.sensor.range
            )
            v_obs = aggregate_observation(scorer, frame, prompts)
            fuse_frame(sg, pose, v_obs, visible, settings.sensor.fov)
        write_score_grid(sg, out / "score_grid.csv")
    (out / "result.json").write_text(
        json.dumps(
            {
                "success": result.success,
                "path_length": result.path_length,
                "optimal_length": result.optimal_length,
                "steps_used": result.steps_used,
                "termination": result.termination,
                "trajectory": [list(p) for p in result.trajectory],
            },
            indent=1,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"rasters written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="objsearch",
        description="Active object-search benchmark: scenario generation, "
        "batch runs, ablations, raster exports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate displaced-target scenario files")
    gen.add_argument("--template", required=True, help="template JSON path")
    gen.add_argument("--n", type=int, required=True, help="number of scenarios")
    gen.add_argument("--seed", type=int, required=True, help="generation seed")
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="run a benchmark suite")
    run.add_argument("--suite", required=True, help="suite JSON path")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=None, help="worker processes")
    run.set_defaults(func=_cmd_run)

    ablate = sub.add_parser("ablate", help="run the four-way ablation")
    ablate.add_argument("--suite", required=True, help="suite JSON path")
    ablate.add_argument(
        "--strategies",
        default="a,b,c,d",
        help="comma-separated strategies: letters a-d or names",
    )
    ablate.add_argument("--out", required=True, help="output directory")
    ablate.add_argument("--workers", type=int, default=None, help="worker processes")
    ablate.set_defaults(func=_cmd_ablate)

    export = sub.add_parser(
        "export-rasters", help="run one configured episode and export its rasters"
    )
    export.add_argument("--episode", required=True, help="episode config JSON path")
    export.add_argument("--out", required=True, help="output directory")
    export.set_defaults(func=_cmd_export_rasters)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
