"""Monte Carlo tree search over guide behaviors and robot arc positions.

Each tree node pairs a (predicted) human state with a robot position at one time
depth. Expansion samples robot positions on a behavior-dependent fan arc around
the human; predicted human responses come from the prediction model. One final
weighted cost is evaluated per iteration over the full simulated human path and
backed up along the visited nodes.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import mdp, prediction
from .prediction import LEAD, POINT, BehaviorKind, HumanContext, Pose
from .world import Cell, Scene, Vec2, cell_of, center_of, point_in_fan


@dataclass(frozen=True)
class CostParams:
    w_d: float = 1.0
    w_t: float = 1.0
    w_aff: float = 1.0
    k_d: float = 100.0            # distance normalization
    C_0_aff: float = 10.0         # affordance constant
    t_per_step: float = 1.0       # seconds per tree step
    c: float = 1.0                # exploration constant
    theta_s: float = math.pi / 3.0
    delta_theta: float = math.pi / 10.0
    l_target: int = 2
    n_g: int | None = None        # nodes-to-go; None = recomputed each plan step
    max_depth: int | None = None  # None = n_g + 6
    trial_budget: int = 2000      # iterations per plan step
    r_lead: float | None = None   # None = d_social
    r_point: float | None = None  # None = 1.5 * d_social

    def __post_init__(self):
        if min(self.w_d, self.w_t, self.w_aff) < 0:
            raise ValueError("cost weights must be nonnegative")
        if self.k_d <= 0:
            raise ValueError("k_d must be positive")
        for label, v in (("theta_s", self.theta_s), ("delta_theta", self.delta_theta)):
            if not (0.0 <= v <= math.pi):
                raise ValueError(f"{label} must be in [0, pi]")
        if self.l_target < 1:
            raise ValueError("l_target must be >= 1")


def arc_radius(behavior: BehaviorKind, params: CostParams, social: prediction.SocialParams) -> float:
    """Sampling-arc radius per behavior; pointing works at longer range than leading."""
    if behavior.name == "point":
        return params.r_point if params.r_point is not None else 1.5 * social.d_social
    return params.r_lead if params.r_lead is not None else social.d_social


def node_score(node: "SearchNode", parent_visits: int, c: float) -> float:
    """Upper-confidence score: -mean final cost plus exploration bonus; unvisited nodes rank first."""
    if node.visits == 0:
        return math.inf
    return -node.cum_cost / node.visits + c * math.sqrt(math.log(parent_visits) / node.visits)


def expansion_samples(human_pos: Vec2, goal_pos: Vec2, behavior: BehaviorKind,
                      params: CostParams, social: prediction.SocialParams) -> list[Vec2]:
    """Candidate robot positions: an arc of radius r(behavior) around the human,
    symmetric about the human->goal axis, sampled every delta_theta."""
    dx = goal_pos[0] - human_pos[0]
    dy = goal_pos[1] - human_pos[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("human position coincides with the guide goal")
    base = math.atan2(dy, dx)
    r = arc_radius(behavior, params, social)
    if params.delta_theta > 0.0:
        count = int(math.floor(params.theta_s / params.delta_theta + 1e-9)) + 1
    else:
        count = 1
    out = []
    for i in range(count):
        ang = base - params.theta_s / 2.0 + i * params.delta_theta
        out.append((human_pos[0] + r * math.cos(ang), human_pos[1] + r * math.sin(ang)))
    return out


def distance_cost(target: list[Vec2], real: list[Vec2], n_g: int) -> float:
    """Sum of distances between real-path points and their aligned target points.

    Point i of the real path is compared against target index i + l_target - n_g
    while that index is valid, and against the final target point otherwise. The
    checkpoint count max(l_target, n_g) is clamped to the available real points.
    """
    if not target or not real:
        raise ValueError("paths must contain at least one point")
    l_t = len(target)
    n = min(max(l_t, n_g), len(real))
    total = 0.0
    for i in range(n):
        j = i + l_t - n_g
        p = target[j] if 0 <= j < l_t else target[-1]
        total += math.hypot(p[0] - real[i][0], p[1] - real[i][1])
    return total


def time_cost(l_real: int, n_g: int, t_per_step: float) -> float:
    """t_per_step for every real-path index strictly beyond the nodes-to-go count."""
    if l_real < 1:
        raise ValueError("real path must contain at least one point")
    return t_per_step * sum(1 for i in range(l_real) if i > n_g)


def affordance_cost(real: list[Vec2], scene: Scene, c0_aff: float) -> float:
    from .world import in_affordance
    return c0_aff * sum(1 for p in real if in_affordance(p, scene))


def final_cost(c_dist: float, c_time: float, c_aff: float, params: CostParams) -> float:
    return params.w_d * c_dist / params.k_d + params.w_t * c_time + params.w_aff * c_aff


@dataclass(slots=True)
class SearchNode:
    human: Vec2
    robot: Vec2
    behavior_in: BehaviorKind | None
    depth: int
    hist: tuple[Vec2, ...]               # trailing l+1 human positions ending at this node
    parent: "SearchNode | None" = None
    visits: int = 0
    cum_cost: float = 0.0
    children: list = field(default_factory=list)
    terminal: bool = False
    path_cost: float | None = None       # cached iteration cost for terminal nodes

    @property
    def mean_cost(self) -> float:
        if self.visits == 0:
            raise ValueError("mean cost undefined for unvisited node")
        return self.cum_cost / self.visits


@dataclass(frozen=True)
class Plan:
    behavior: BehaviorKind
    robot_target: Vec2
    expected_cost: float
    iterations: int
    depth_reached: int


class GuidePlanner:
    """Plans one behavior + robot position per step via MCTS against the prediction model."""

    def __init__(self, scene: Scene, fields: list[mdp.ValueField], *,
                 cost: CostParams | None = None,
                 social: prediction.SocialParams | None = None,
                 pred: prediction.PredictionParams | None = None,
                 mdp_params: mdp.MdpParams | None = None,
                 behaviors: tuple[BehaviorKind, BehaviorKind] = (LEAD, POINT)):
        self.scene = scene
        self.fields = fields
        self.cost = cost or CostParams()
        self.social = social or prediction.SocialParams()
        self.pred = pred or prediction.PredictionParams()
        self.mdp_params = mdp_params or mdp.MdpParams()
        self.behaviors = behaviors
        self.guide_field = fields[scene.guide_goal]
        self.goal_cell: Cell = scene.guide_goal_cell
        self.goal_center: Vec2 = center_of(self.goal_cell, scene.grid)
        self.last_root: SearchNode | None = None
        # per-instance caches; scene and parameters are immutable so entries never go stale
        self._arc_cache: dict = {}
        self._pred_cache: dict = {}
        self._cell_base: dict[Cell, dict] = {}
        self._fan_mask: dict = {}
        self._div_cache: dict = {}
        self._aff_centers = {center_of(c, scene.grid) for c in scene.affordance_cells
                             if scene.grid.in_bounds(c)}

    # ------------------------------------------------------------------ helpers

    def at_goal(self, pos: Vec2) -> bool:
        return cell_of(pos, self.scene.grid) == self.goal_cell

    def nodes_to_go(self, human_pos: Vec2) -> int:
        """Minimum tree depth for the human to reach the goal: greedy-path hop count."""
        if self.cost.n_g is not None:
            return self.cost.n_g
        start = cell_of(human_pos, self.scene.grid)
        path = mdp.greedy_path(self.guide_field, start)
        if path[-1] != self.goal_cell:
            return self.scene.grid.width + self.scene.grid.height  # unreachable guard
        return max(1, len(path) - 1)

    def target_path(self, human_pos: Vec2) -> list[Vec2]:
        """Next l_target points along the greedy route toward the guide goal."""
        start = cell_of(human_pos, self.scene.grid)
        cells = mdp.greedy_path(self.guide_field, start, max_steps=self.cost.l_target)
        future = cells[1:self.cost.l_target + 1]
        if not future:
            future = [self.goal_cell]
        return [center_of(c, self.scene.grid) for c in future]

    def arc(self, human_pos: Vec2, behavior: BehaviorKind) -> tuple[Vec2, ...]:
        key = (human_pos, behavior.name)
        hit = self._arc_cache.get(key)
        if hit is None:
            hit = tuple(expansion_samples(human_pos, self.goal_center, behavior, self.cost, self.social))
            self._arc_cache[key] = hit
        return hit

    def _base(self, cell: Cell) -> dict:
        """Influence-independent tables for one cell: successor centers and, per goal,
        the action exponent arguments beta_a * (revised_q - V*(s))."""
        entry = self._cell_base.get(cell)
        if entry is None:
            actions = self.fields[0].actions
            succs = [center_of(mdp.transition(cell, a, self.scene.grid), self.scene.grid)
                     for a in actions]
            per_goal = []
            for fld in self.fields:
                v_s = fld.value_at(cell)
                per_goal.append(np.array([
                    self.pred.beta_a * (mdp.revised_q(cell, a, fld, self.mdp_params) - v_s)
                    for a in actions]))
            entry = {"succs": succs, "args": per_goal}
            self._cell_base[cell] = entry
        return entry

    def _divisor(self, pl: Vec2, vel: Vec2, behavior: BehaviorKind, sample_idx: int) -> float:
        # velocity only matters through cos(phi) when lambda < 1
        vkey = vel if self.social.lam < 1.0 else None
        key = (pl, vkey, behavior.name, sample_idx)
        div = self._div_cache.get(key)
        if div is None:
            arc = self.arc(pl, behavior)
            influence = prediction.RobotInfluence.build(pl, arc[sample_idx], behavior, arc, self.pred)
            div = prediction.influence_divisor(Pose(pl, vel), influence, self.social)
            self._div_cache[key] = div
        return div

    def _in_fan_mask(self, pl: Vec2, behavior: BehaviorKind, sample_idx: int,
                     succs: list[Vec2]) -> np.ndarray:
        key = (pl, behavior.name, sample_idx)
        mask = self._fan_mask.get(key)
        if mask is None:
            arc = self.arc(pl, behavior)
            fan = prediction.RobotInfluence.build(pl, arc[sample_idx], behavior, arc,
                                                  self.pred).impact_area
            mask = np.array([point_in_fan(p, fan) for p in succs])
            self._fan_mask[key] = mask
        return mask

    def _sampler(self, hist: tuple[Vec2, ...], vel: Vec2, behavior: BehaviorKind, sample_idx: int):
        """Cached (goal cumsum, per-goal action tables) for one influence setting.

        The sampled next position follows exactly the predict_next law: the final
        draw from the K-sample layer marginalizes to the goal/action mixture, so
        drawing the mixture directly is K-invariant.
        """
        p0, pl = hist[0], hist[-1]
        vkey = vel if self.social.lam < 1.0 else None
        key = (p0, pl, vkey, behavior.name, sample_idx)
        entry = self._pred_cache.get(key)
        if entry is None:
            s_l = cell_of(pl, self.scene.grid)
            s_0 = cell_of(p0, self.scene.grid)
            args = np.empty(len(self.fields))
            for gi, fld in enumerate(self.fields):
                args[gi] = self.pred.beta_g * (fld.value_at(s_l) - fld.value_at(s_0))
            div = self._divisor(pl, vel, behavior, sample_idx)
            args[self.scene.guide_goal] /= div
            weights = np.exp(args)
            total = float(weights.sum())
            if total == 0.0 or not math.isfinite(total):
                raise ValueError("degenerate goal weights")
            goal_cum = np.cumsum(weights / total).tolist()
            entry = [goal_cum, [None] * len(self.fields), div, s_l, pl]
            self._pred_cache[key] = entry
        return entry

    def _action_table(self, entry, behavior: BehaviorKind, sample_idx: int, goal_index: int):
        tables = entry[1]
        if tables[goal_index] is None:
            _, _, div, s_l, pl = entry
            base = self._base(s_l)
            succs = base["succs"]
            mask = self._in_fan_mask(pl, behavior, sample_idx, succs)
            args = base["args"][goal_index].copy()
            args[mask] /= div
            weights = np.exp(args)
            tables[goal_index] = (np.cumsum(weights / weights.sum()).tolist(), succs)
        return tables[goal_index]

    def sample_human_next(self, hist: tuple[Vec2, ...], vel: Vec2, behavior: BehaviorKind,
                          sample_idx: int, rng: np.random.Generator) -> Vec2:
        """One draw of the human's next position under the given robot influence."""
        entry = self._sampler(hist, vel, behavior, sample_idx)
        goal_cum = entry[0]
        gi = bisect_right(goal_cum, rng.random())
        if gi >= len(self.fields):
            gi = len(self.fields) - 1
        act_cum, succs = self._action_table(entry, behavior, sample_idx, gi)
        ai = bisect_right(act_cum, rng.random())
        if ai >= len(succs):
            ai = len(succs) - 1
        return succs[ai]

    # ------------------------------------------------------------------ search

    def _velocity(self, hist: tuple[Vec2, ...]) -> Vec2:
        a, b = hist[-2], hist[-1]
        t = self.cost.t_per_step
        return ((b[0] - a[0]) / t, (b[1] - a[1]) / t)

    def _expand(self, node: SearchNode, max_depth: int, rng: np.random.Generator) -> None:
        vel = self._velocity(node.hist)
        for behavior in self.behaviors:
            arc = self.arc(node.human, behavior)
            for idx, rpos in enumerate(arc):
                h2 = self.sample_human_next(node.hist, vel, behavior, idx, rng)
                child = SearchNode(
                    human=h2,
                    robot=rpos,
                    behavior_in=behavior,
                    depth=node.depth + 1,
                    hist=node.hist[1:] + (h2,),
                    parent=node,
                )
                child.terminal = self.at_goal(h2) or child.depth >= max_depth
                node.children.append(child)

    def _rollout(self, node: SearchNode, max_depth: int, rng: np.random.Generator) -> list[Vec2]:
        """Uniform-random behavior/arc choices with predicted human responses until
        success or max depth; returns the extra simulated human positions."""
        positions: list[Vec2] = []
        hist = node.hist
        pos = node.human
        depth = node.depth
        while depth < max_depth and not self.at_goal(pos):
            behavior = self.behaviors[int(rng.integers(len(self.behaviors)))]
            arc = self.arc(pos, behavior)
            idx = int(rng.integers(len(arc)))
            pos = self.sample_human_next(hist, self._velocity(hist), behavior, idx, rng)
            hist = hist[1:] + (pos,)
            positions.append(pos)
            depth += 1
        return positions

    def _path_cost(self, positions: list[Vec2], target: list[Vec2], n_g: int) -> float:
        c_dist = distance_cost(target, positions, n_g)
        c_time = time_cost(len(positions), n_g, self.cost.t_per_step)
        c_aff = self.cost.C_0_aff * sum(1 for p in positions if p in self._aff_centers)
        return final_cost(c_dist, c_time, c_aff, self.cost)

    def plan_step(self, ctx: HumanContext, robot_pos: Vec2,
                  rng: np.random.Generator | int | None = None,
                  budget: int | None = None,
                  wall_clock_ms: float | None = None) -> Plan:
        """Run MCTS from the current human-robot state and return the best root action.

        Deterministic for a given seed when wall_clock_ms is None.
        """
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        human_pos = tuple(ctx.history[-1])
        if self.at_goal(human_pos):
            raise ValueError("human already at the guide goal")
        n_g = self.nodes_to_go(human_pos)
        max_depth = self.cost.max_depth if self.cost.max_depth is not None else n_g + 6
        target = self.target_path(human_pos)
        budget = self.cost.trial_budget if budget is None else budget

        root = SearchNode(human=human_pos, robot=tuple(robot_pos), behavior_in=None,
                          depth=0, hist=tuple(ctx.history))
        self.last_root = root
        depth_reached = 0
        deadline = None
        if wall_clock_ms is not None:
            deadline = time.monotonic() + wall_clock_ms / 1000.0

        iterations = 0
        for _ in range(max(0, budget)):
            if deadline is not None and time.monotonic() > deadline and iterations > 0:
                break
            node = root
            path = [root]
            while node.children:
                node = self._select_child(node)
                path.append(node)
            if not node.terminal and node.depth < max_depth:
                self._expand(node, max_depth, rng)
                node = node.children[0]
                path.append(node)
            depth_reached = max(depth_reached, node.depth)
            if node.terminal:
                if node.path_cost is None:
                    node.path_cost = self._path_cost([n.human for n in path[1:]], target, n_g)
                cost = node.path_cost
            else:
                tail = self._rollout(node, max_depth, rng)
                cost = self._path_cost([n.human for n in path[1:]] + tail, target, n_g)
            for n in path:
                n.visits += 1
                n.cum_cost += cost
            iterations += 1

        best = None
        for child in root.children:
            if child.visits == 0:
                continue
            if best is None or child.mean_cost < best.mean_cost:
                best = child
        if best is None:
            raise RuntimeError("no evaluated children")
        return Plan(behavior=best.behavior_in, robot_target=best.robot,
                    expected_cost=best.mean_cost, iterations=iterations,
                    depth_reached=depth_reached)

    def _select_child(self, node: SearchNode) -> SearchNode:
        log_n = math.log(node.visits) if node.visits > 0 else 0.0
        c = self.cost.c
        best = None
        best_score = -math.inf
        for child in node.children:
            if child.visits == 0:
                return child  # unvisited first, in child order
            score = -child.cum_cost / child.visits + c * math.sqrt(log_n / child.visits)
            if score > best_score:
                best = child
                best_score = score
        return best


def dump_tree(root: SearchNode) -> str:
    """Line-delimited tree dump: id parent depth behavior visits mean_cost."""
    lines = []
    stack = [(root, 0, -1)]
    next_id = 1
    while stack:
        node, nid, pid = stack.pop()
        mean = node.cum_cost / node.visits if node.visits else float("nan")
        name = node.behavior_in.name if node.behavior_in else "-"
        lines.append(f"{nid} {pid} {node.depth} {name} {node.visits} {mean:.6f}")
        for child in node.children:
            stack.append((child, next_id, nid))
            next_id += 1
    return "\n".join(lines) + "\n"
