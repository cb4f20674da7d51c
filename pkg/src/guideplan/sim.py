"""Closed-loop guide trials: simulated visitors, the lead-only baseline and metrics.

A trial alternates one planner decision and one human response per step until
the visitor reaches the guide goal or the time limit runs out. Everything is
reproducible from (scene, seed, parameters) for non-interactive agents.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import mdp, prediction
from .planner import CostParams, GuidePlanner
from .prediction import HumanContext, PredictionParams, RobotInfluence, SocialParams
from .world import Scene, Vec2, cell_of, center_of, in_affordance

PERSONAL_DISTANCE = 1.2  # m
INTIMATE_DISTANCE = 0.45  # m


@dataclass(frozen=True)
class StepRecord:
    t: float
    human: Vec2
    robot: Vec2
    behavior: str | None
    distance: float
    in_affordance: bool

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "human": list(self.human),
            "robot": list(self.robot),
            "behavior": self.behavior,
            "distance": self.distance,
            "in_affordance": self.in_affordance,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StepRecord":
        return cls(
            t=float(doc["t"]),
            human=tuple(doc["human"]),
            robot=tuple(doc["robot"]),
            behavior=doc.get("behavior"),
            distance=float(doc["distance"]),
            in_affordance=bool(doc["in_affordance"]),
        )


@dataclass
class TrialLog:
    scene_id: str
    seed: int
    records: list[StepRecord] = field(default_factory=list)
    outcome: str = "timeout"  # "success" | "timeout" | "aborted"

    def to_jsonl(self) -> str:
        head = json.dumps({"scene": self.scene_id, "seed": self.seed, "outcome": self.outcome},
                          sort_keys=True)
        lines = [head] + [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "TrialLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trial log")
        head = json.loads(lines[0])
        log = cls(scene_id=head.get("scene", ""), seed=int(head.get("seed", 0)),
                  outcome=head.get("outcome", "timeout"))
        log.records = [StepRecord.from_json(json.loads(ln)) for ln in lines[1:]]
        return log


@dataclass(frozen=True)
class Metrics:
    success: bool
    ambiguity_ratio: float
    discomfort_ratio_p: float
    discomfort_ratio_i: float

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "ambiguity_ratio": self.ambiguity_ratio,
            "discomfort_ratio_p": self.discomfort_ratio_p,
            "discomfort_ratio_i": self.discomfort_ratio_i,
        }


def compute_metrics(log: TrialLog, d_p: float = PERSONAL_DISTANCE,
                    d_i: float = INTIMATE_DISTANCE) -> Metrics:
    """Time-ratio metrics over the per-step records; distance thresholds are strict."""
    if not log.records:
        raise ValueError("cannot compute metrics of an empty log")
    n = len(log.records)
    ambiguous = sum(1 for r in log.records if r.in_affordance)
    below_p = sum(1 for r in log.records if r.distance < d_p)
    below_i = sum(1 for r in log.records if r.distance < d_i)
    return Metrics(
        success=log.outcome == "success",
        ambiguity_ratio=ambiguous / n,
        discomfort_ratio_p=below_p / n,
        discomfort_ratio_i=below_i / n,
    )


# --------------------------------------------------------------------- agents


class ModelDrivenHuman:
    """Visitor that samples its next position from the prediction model."""

    kind = "model"

    def __init__(self, scene: Scene, fields: list[mdp.ValueField], pred: PredictionParams,
                 social: SocialParams, mdp_params: mdp.MdpParams, rng: np.random.Generator):
        self.scene = scene
        self.fields = fields
        self.pred = pred
        self.social = social
        self.mdp_params = mdp_params
        self.rng = rng
        self.last_layer: np.ndarray | None = None

    def step(self, ctx: HumanContext, influence: RobotInfluence | None) -> Vec2:
        pos, layer = prediction.predict_next(ctx, self.fields, self.scene, self.pred,
                                             self.social, self.mdp_params,
                                             influence=influence, rng=self.rng)
        self.last_layer = layer
        return pos


class ScriptedHuman:
    """Waypoint follower with optional gaussian jitter; ignores the robot."""

    kind = "scripted"

    def __init__(self, scene: Scene, waypoints: list[Vec2], speed: float,
                 noise: float = 0.0, rng: np.random.Generator | None = None,
                 t_per_step: float = 1.0):
        self.scene = scene
        self.waypoints = deque(tuple(w) for w in waypoints)
        self.speed = speed
        self.noise = noise
        self.rng = rng or np.random.default_rng(0)
        self.t_per_step = t_per_step
        self.last_layer = None

    def step(self, ctx: HumanContext, influence: RobotInfluence | None) -> Vec2:
        pos = ctx.position
        while self.waypoints and math.dist(pos, self.waypoints[0]) < 1e-9:
            self.waypoints.popleft()
        if not self.waypoints:
            return pos
        target = self.waypoints[0]
        d = math.dist(pos, target)
        reach = self.speed * self.t_per_step
        if d <= reach:
            new = target
            self.waypoints.popleft()
        else:
            new = (pos[0] + (target[0] - pos[0]) / d * reach,
                   pos[1] + (target[1] - pos[1]) / d * reach)
        if self.noise > 0.0:
            new = (new[0] + self.rng.normal(0.0, self.noise),
                   new[1] + self.rng.normal(0.0, self.noise))
        return _clamp_to_extent(new, self.scene)


class InteractiveHuman:
    """Visitor steered externally; intents are clamped to the human speed."""

    kind = "interactive"

    def __init__(self, scene: Scene, speed: float, t_per_step: float = 1.0):
        self.scene = scene
        self.speed = speed
        self.t_per_step = t_per_step
        self.intent: Vec2 = (0.0, 0.0)
        self.last_layer = None

    def push_intent(self, dx: float, dy: float) -> None:
        self.intent = (float(dx), float(dy))

    def step(self, ctx: HumanContext, influence: RobotInfluence | None) -> Vec2:
        dx, dy = self.intent
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            return ctx.position  # no input: hold position
        step = self.speed * self.t_per_step
        scale = step / norm if norm > 1.0 else step
        new = (ctx.position[0] + dx * scale, ctx.position[1] + dy * scale)
        return _clamp_to_extent(new, self.scene)


def _clamp_to_extent(p: Vec2, scene: Scene) -> Vec2:
    eps = 1e-6
    w = scene.grid.width * scene.grid.resolution
    h = scene.grid.height * scene.grid.resolution
    return (min(max(p[0], 0.0), w - eps), min(max(p[1], 0.0), h - eps))


# --------------------------------------------------------------- trial running


def sharpened(pred: PredictionParams, decisiveness: float) -> PredictionParams:
    """Scale the action sharpness for the simulated-visitor population.

    The reference action factor alone makes a very soft walker; desk-scale halls
    assume visitors who walk purposefully. Applied identically to the visitor agent
    and the planner's prediction model so the loop stays self-consistent.
    """
    if decisiveness == 1.0:
        return pred
    return dataclasses.replace(pred, beta_a=pred.beta_a * decisiveness)


def solve_fields(scene: Scene, actions: mdp.ActionSet | None = None,
                 params: mdp.MdpParams | None = None) -> list[mdp.ValueField]:
    acts = actions or mdp.default_actions()
    prm = params or mdp.MdpParams()
    return [mdp.solve(goal, scene.grid, acts, prm) for goal in scene.goals]


def check_goal_reachable(scene: Scene) -> None:
    """Free-cell BFS from the guide goal; raises if the human start cannot reach it."""
    grid = scene.grid
    start = cell_of(scene.human_start, grid)
    goal = scene.guide_goal_cell
    if start == goal:
        return
    seen = {goal}
    frontier = deque([goal])
    while frontier:
        cx, cy = frontier.popleft()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (cx + dx, cy + dy)
                if nxt in seen or not grid.in_bounds(nxt) or grid.occupied(nxt):
                    continue
                if nxt == start:
                    return
                seen.add(nxt)
                frontier.append(nxt)
    raise ValueError("guide goal enclosed: no free path from human start to goal")


class TrialSession:
    """Stepwise closed-loop execution shared by batch trials and the live service."""

    def __init__(self, scene: Scene, agent, *, fields: list[mdp.ValueField] | None = None,
                 cost: CostParams | None = None, social: SocialParams | None = None,
                 pred: PredictionParams | None = None, mdp_params: mdp.MdpParams | None = None,
                 behaviors=None, seed: int = 0, budget: int | None = None,
                 wall_clock_ms: float | None = None):
        check_goal_reachable(scene)
        self.scene = scene
        self.agent = agent
        self.social = social or SocialParams()
        self.pred = pred or PredictionParams()
        self.mdp_params = mdp_params or mdp.MdpParams()
        self.cost = cost or CostParams()
        self.fields = fields if fields is not None else solve_fields(scene, params=self.mdp_params)
        kwargs = {} if behaviors is None else {"behaviors": behaviors}
        self.planner = GuidePlanner(scene, self.fields, cost=self.cost, social=self.social,
                                    pred=self.pred, mdp_params=self.mdp_params, **kwargs)
        self.budget = budget
        self.wall_clock_ms = wall_clock_ms
        self.seed = seed
        self.plan_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
        self.t = 0.0
        self.ctx = HumanContext(scene.human_start, l=self.pred.history_l,
                                t_per_step=self.cost.t_per_step)
        self.robot: Vec2 = tuple(scene.robot_start)
        self.behavior_name: str | None = None
        if scene.time_limit is not None:
            self.time_limit = scene.time_limit
        else:
            n_g0 = self.planner.nodes_to_go(scene.human_start) if not self._at_goal() else 1
            self.time_limit = 3.0 * n_g0 * self.cost.t_per_step
        self.log = TrialLog(scene_id=scene.name, seed=seed)
        self.log.records.append(self._record())
        self.outcome: str | None = "success" if self._at_goal() else None

    def _at_goal(self) -> bool:
        return cell_of(self.ctx.position, self.scene.grid) == self.scene.guide_goal_cell

    def _record(self) -> StepRecord:
        pos = self.ctx.position
        return StepRecord(
            t=self.t,
            human=pos,
            robot=self.robot,
            behavior=self.behavior_name,
            distance=math.dist(pos, self.robot),
            in_affordance=in_affordance(pos, self.scene),
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def step(self) -> StepRecord:
        """One planner decision plus one human response."""
        if self.done:
            raise RuntimeError("trial already finished")
        plan = self.planner.plan_step(self.ctx, self.robot, rng=self.plan_rng,
                                      budget=self.budget, wall_clock_ms=self.wall_clock_ms)
        self.robot = plan.robot_target
        self.behavior_name = plan.behavior.name
        candidates = self.planner.arc(self.ctx.position, plan.behavior)
        influence = RobotInfluence.build(self.ctx.position, plan.robot_target, plan.behavior,
                                         candidates, self.pred)
        new_pos = self.agent.step(self.ctx, influence)
        self.ctx.advance(new_pos)
        self.t += self.cost.t_per_step
        rec = self._record()
        self.log.records.append(rec)
        if self._at_goal():
            self.outcome = "success"
        elif self.t >= self.time_limit:
            self.outcome = "timeout"
        return rec

    def finish(self) -> TrialLog:
        self.log.outcome = self.outcome or "timeout"
        return self.log

    def run(self) -> TrialLog:
        while not self.done:
            self.step()
        return self.finish()


def run_trial(scene: Scene, agent=None, seed: int = 0, *,
              fields: list[mdp.ValueField] | None = None,
              cost: CostParams | None = None, social: SocialParams | None = None,
              pred: PredictionParams | None = None, mdp_params: mdp.MdpParams | None = None,
              behaviors=None, budget: int | None = None,
              decisiveness: float = 4.0) -> TrialLog:
    """Run one full-planner trial; the default agent is the model-driven visitor."""
    social = social or SocialParams()
    pred = sharpened(pred or PredictionParams(), decisiveness)
    mdp_params = mdp_params or mdp.MdpParams()
    if fields is None:
        fields = solve_fields(scene, params=mdp_params)
    if agent is None:
        agent_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
        agent = ModelDrivenHuman(scene, fields, pred, social, mdp_params, agent_rng)
    session = TrialSession(scene, agent, fields=fields, cost=cost, social=social, pred=pred,
                           mdp_params=mdp_params, behaviors=behaviors, seed=seed, budget=budget)
    return session.run()


def lead_only_baseline(scene: Scene, seed: int = 0, *,
                       fields: list[mdp.ValueField] | None = None,
                       cost: CostParams | None = None, social: SocialParams | None = None,
                       pred: PredictionParams | None = None,
                       mdp_params: mdp.MdpParams | None = None,
                       behaviors=None, offset_cells: int | None = None,
                       decisiveness: float = 4.0) -> TrialLog:
    """Baseline comparator: always leads along the guide-goal greedy path, a fixed
    offset ahead of the human; no pointing and no affordance-aware detours."""
    check_goal_reachable(scene)
    social = social or SocialParams()
    pred = sharpened(pred or PredictionParams(), decisiveness)
    mdp_params = mdp_params or mdp.MdpParams()
    cost = cost or CostParams()
    lead = (behaviors or prediction.behavior_pair())[0]
    if fields is None:
        fields = solve_fields(scene, params=mdp_params)
    guide_field = fields[scene.guide_goal]
    grid = scene.grid
    if offset_cells is None:
        offset_cells = max(1, int(math.ceil(social.d_social / grid.resolution)))

    agent_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
    agent = ModelDrivenHuman(scene, fields, pred, social, mdp_params, agent_rng)

    ctx = HumanContext(scene.human_start, l=pred.history_l, t_per_step=cost.t_per_step)
    robot: Vec2 = tuple(scene.robot_start)
    log = TrialLog(scene_id=scene.name, seed=seed)
    goal_cell = scene.guide_goal_cell

    def at_goal() -> bool:
        return cell_of(ctx.position, grid) == goal_cell

    def record(t: float, behavior: str | None) -> None:
        pos = ctx.position
        log.records.append(StepRecord(t=t, human=pos, robot=robot, behavior=behavior,
                                      distance=math.dist(pos, robot),
                                      in_affordance=in_affordance(pos, scene)))

    # the one fixed guide route: greedy path from the start cell to the goal
    path0 = mdp.greedy_path(guide_field, cell_of(scene.human_start, grid))
    path_pts = [center_of(c, grid) for c in path0]
    n_g0 = max(1, len(path0) - 1)
    time_limit = scene.time_limit if scene.time_limit is not None else 3.0 * n_g0 * cost.t_per_step

    t = 0.0
    record(t, None)
    outcome = "success" if at_goal() else None
    while outcome is None:
        # robot marches the fixed route, a constant offset ahead of the human's progress
        proj = min(range(len(path_pts)), key=lambda i: math.dist(path_pts[i], ctx.position))
        idx = min(proj + offset_cells, len(path0) - 1)
        target = center_of(path0[idx], grid)
        if math.dist(target, ctx.position) < 1e-9:
            target = center_of(goal_cell, grid)
        robot = target
        influence = RobotInfluence.build(ctx.position, robot, lead, (robot,), pred) \
            if math.dist(robot, ctx.position) > 1e-9 else None
        new_pos = agent.step(ctx, influence)
        ctx.advance(new_pos)
        t += cost.t_per_step
        record(t, lead.name)
        if at_goal():
            outcome = "success"
        elif t >= time_limit:
            outcome = "timeout"
    log.outcome = outcome
    return log


# ----------------------------------------------------------------- experiments


@dataclass(frozen=True)
class TrialRow:
    scene: str
    method: str
    trial: int
    seed: int
    outcome: str
    metrics: Metrics


@dataclass
class ExperimentResult:
    rows: list[TrialRow] = field(default_factory=list)
    logs: dict[tuple[str, str, int], TrialLog] = field(default_factory=dict)

    def aggregate(self) -> dict[tuple[str, str], dict]:
        out: dict[tuple[str, str], dict] = {}
        for (scene, method) in sorted({(r.scene, r.method) for r in self.rows}):
            rows = [r for r in self.rows if r.scene == scene and r.method == method]
            out[(scene, method)] = {
                "trials": len(rows),
                "success_rate": sum(r.metrics.success for r in rows) / len(rows),
                "ambiguity_ratio": sum(r.metrics.ambiguity_ratio for r in rows) / len(rows),
                "discomfort_ratio_p": sum(r.metrics.discomfort_ratio_p for r in rows) / len(rows),
                "discomfort_ratio_i": sum(r.metrics.discomfort_ratio_i for r in rows) / len(rows),
            }
        return out


METHODS = ("full", "lead_only")


def trial_seed(seed_base: int, scene_idx: int, method_idx: int, trial: int) -> int:
    return seed_base + 100_000 * scene_idx + 10_000 * method_idx + trial


def run_experiment(scenes: list[Scene], methods=METHODS, trials: int = 1, seed_base: int = 0, *,
                   cost: CostParams | None = None, social: SocialParams | None = None,
                   pred: PredictionParams | None = None, mdp_params: mdp.MdpParams | None = None,
                   behaviors=None, actions: mdp.ActionSet | None = None,
                   budget: int | None = None,
                   decisiveness: float = 4.0, keep_logs: bool = True) -> ExperimentResult:
    """Seeded batch of trials per scene and method with per-group aggregates."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    result = ExperimentResult()
    mdp_params = mdp_params or mdp.MdpParams()
    for si, scene in enumerate(scenes):
        fields = solve_fields(scene, actions=actions, params=mdp_params)
        for mi, method in enumerate(methods):
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
            for trial in range(trials):
                seed = trial_seed(seed_base, si, mi, trial)
                if method == "full":
                    log = run_trial(scene, seed=seed, fields=fields, cost=cost, social=social,
                                    pred=pred, mdp_params=mdp_params, behaviors=behaviors,
                                    budget=budget, decisiveness=decisiveness)
                else:
                    log = lead_only_baseline(scene, seed=seed, fields=fields, cost=cost,
                                             social=social, pred=pred, mdp_params=mdp_params,
                                             behaviors=behaviors, decisiveness=decisiveness)
                row = TrialRow(scene=scene.name or f"scene{si}", method=method, trial=trial,
                               seed=seed, outcome=log.outcome, metrics=compute_metrics(log))
                result.rows.append(row)
                if keep_logs:
                    result.logs[(row.scene, method, trial)] = log
    return result


def experiment_table(result: ExperimentResult) -> str:
    """Plain-text results: one row per trial plus aggregate rows per scene and method."""
    header = f"{'scene':<10} {'method':<10} {'trial':>5} {'seed':>8} {'success':>8} " \
             f"{'ambiguity':>10} {'disc_p':>8} {'disc_i':>8}"
    lines = [header, "-" * len(header)]
    for r in result.rows:
        m = r.metrics
        lines.append(f"{r.scene:<10} {r.method:<10} {r.trial:>5} {r.seed:>8} "
                     f"{int(m.success):>8} {m.ambiguity_ratio:>10.4f} "
                     f"{m.discomfort_ratio_p:>8.4f} {m.discomfort_ratio_i:>8.4f}")
    lines.append("-" * len(header))
    for (scene, method), agg in result.aggregate().items():
        lines.append(f"{scene:<10} {method:<10} {'mean':>5} {agg['trials']:>8} "
                     f"{agg['success_rate']:>8.4f} {agg['ambiguity_ratio']:>10.4f} "
                     f"{agg['discomfort_ratio_p']:>8.4f} {agg['discomfort_ratio_i']:>8.4f}")
    return "\n".join(lines) + "\n"


def experiment_summary(result: ExperimentResult) -> dict:
    """Machine-readable summary mirroring the per-scene/per-method tables."""
    summary: dict = {"schema": 1, "scenes": {}}
    for (scene, method), agg in result.aggregate().items():
        summary["scenes"].setdefault(scene, {})[method] = agg
    return summary
