"""Guide-robot multi-behavior planning and closed-loop visitor simulation."""

from .mdp import ActionSet, MdpParams, ValueField, default_actions, revised_q, solve, transition
from .planner import (
    CostParams,
    GuidePlanner,
    Plan,
    SearchNode,
    affordance_cost,
    distance_cost,
    expansion_samples,
    final_cost,
    node_score,
    time_cost,
)
from .prediction import (
    LEAD,
    POINT,
    BehaviorKind,
    Distribution,
    HumanContext,
    PredictionParams,
    RobotInfluence,
    SocialParams,
    action_distribution,
    behavior_pair,
    goal_distribution,
    predict_next,
    social_force,
)
from .scenes import builtin_scene, builtin_scene_names, resolve_scene
from .sim import (
    InteractiveHuman,
    Metrics,
    ModelDrivenHuman,
    ScriptedHuman,
    TrialLog,
    TrialSession,
    compute_metrics,
    lead_only_baseline,
    run_experiment,
    run_trial,
)
from .world import (
    Fan,
    GridMap,
    Pose,
    Scene,
    SceneError,
    cell_of,
    center_of,
    in_affordance,
    load_scene,
    load_scene_file,
    point_in_fan,
)

__version__ = "0.1.0"
