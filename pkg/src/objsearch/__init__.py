"""Active object search under temporal scene change.

A frozen Gaussian-mixture prior map built from anchor objects, an online
semantic score grid fused from simulated vision-language observations, and a
utility-guided sampling-tree planner, wrapped in a closed-loop episode runner
and a benchmark CLI with SR/SPL metrics and the four-way ablation.
"""

__version__ = "0.1.0"

from .episode import (
    DetectorConfig,
    EpisodeResult,
    SensorConfig,
    SimConfig,
    SimDetector,
    compute_metrics,
    run_episode,
)
from .evidence import (
    PromptSet,
    ScoreGrid,
    ScorerConfig,
    SemanticScorer,
    aggregate_observation,
    default_prompt_set,
    fuse_frame,
    instantaneous_confidence,
    make_oracle_scorer,
)
from .planner import (
    ExploredMask,
    GlobalGraph,
    PlannerConfig,
    PlanTree,
    UtilityWeights,
    escape_direction,
    expand_tree,
    global_fallback,
    info_gain,
    rewire_root,
    select_subgoal,
    semantic_support,
    stuck_check,
    utility,
)
from .prior import (
    EmbeddingTable,
    IGMConfig,
    IGMModel,
    association_score,
    build_igm,
    bundled_embedding_table,
    cosine_similarity,
    density_at,
    load_embedding_table,
)
from .world import (
    Anchor,
    OccupancyGrid,
    Pose,
    Scenario,
    ScenarioError,
    line_of_sight,
    load_scenario,
    save_scenario,
    visible_cells,
)
