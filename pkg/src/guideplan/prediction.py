"""Human motion prediction under robot guiding influence.

Combines per-goal MDP values with a social-force coupling: goal choice weights
exponentiate recent value progress, action choice weights exponentiate revised
action-value margins, and both are damped by the behavior's legibility gain for
the guided goal / for successor states inside the robot's impact fan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mdp
from .world import Cell, Fan, Pose, Scene, Vec2, cell_of, center_of, point_in_fan


@dataclass(frozen=True)
class SocialParams:
    d_social: float = 2.0   # m
    k_n: float = 1.0        # force normalization, m
    lam: float = 1.0        # anisotropy lambda in [0, 1]

    def __post_init__(self):
        if self.d_social <= 0 or self.k_n <= 0:
            raise ValueError("d_social and k_n must be positive")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lambda must be in [0, 1]")


@dataclass(frozen=True)
class BehaviorKind:
    """A guiding behavior with its legibility gain (xi > 1) and travel speed."""

    name: str
    legibility_gain: float
    move_speed: float  # m/s

    def __post_init__(self):
        if self.legibility_gain <= 1.0:
            raise ValueError("legibility gain must exceed 1")
        if self.move_speed <= 0:
            raise ValueError("move_speed must be positive")


def behavior_pair(xi_lead: float = 2.0, xi_point: float = 4.0,
                  lead_speed: float = 1.5, point_speed: float = 0.8) -> tuple[BehaviorKind, BehaviorKind]:
    """The two guiding behaviors. Pointing works at longer range and moves no faster than leading."""
    if point_speed > lead_speed:
        raise ValueError("point speed must not exceed lead speed")
    return BehaviorKind("lead", xi_lead, lead_speed), BehaviorKind("point", xi_point, point_speed)


LEAD, POINT = behavior_pair()


@dataclass(frozen=True)
class PredictionParams:
    beta_g: float = 0.5       # goal weight factor
    beta_a: float = 0.5       # action weight factor
    theta_m: float = math.pi / 3.0  # impact-area total angle
    impact_range: float = 5.0       # impact-area radius, m
    history_l: int = 2        # trajectory window keeps l+1 entries
    samples_k: int = 100      # layer sample count K

    def __post_init__(self):
        if not (0.0 <= self.theta_m <= math.pi):
            raise ValueError("theta_m must be in [0, pi]")
        if self.history_l < 1:
            raise ValueError("history length l must be >= 1")
        if self.samples_k < 1:
            raise ValueError("K must be >= 1")


class HumanContext:
    """Sliding trajectory window of l+1 positions plus the current pose."""

    def __init__(self, start: Vec2, l: int = 2, t_per_step: float = 1.0):
        self.window = l + 1
        self.t_per_step = t_per_step
        # warm-up: reuse the earliest observation until l+1 real ones exist
        self.history: list[Vec2] = [tuple(start)] * self.window
        self.pose = Pose(tuple(start), (0.0, 0.0))

    def advance(self, position: Vec2) -> None:
        prev = self.history[-1]
        self.history = self.history[1:] + [tuple(position)]
        vel = ((position[0] - prev[0]) / self.t_per_step, (position[1] - prev[1]) / self.t_per_step)
        self.pose = Pose(tuple(position), vel)

    @property
    def position(self) -> Vec2:
        return self.history[-1]


@dataclass(frozen=True)
class RobotInfluence:
    """The robot's chosen position/behavior plus the alternatives it was sampled from."""

    position: Vec2
    behavior: BehaviorKind
    candidate_positions: tuple[Vec2, ...]
    impact_area: Fan

    def __post_init__(self):
        if self.position not in self.candidate_positions:
            raise ValueError("influence position must be one of the candidate positions")
        if self.impact_area.total_angle > math.pi + 1e-12:
            raise ValueError("impact area total angle must be <= pi")

    @classmethod
    def build(cls, human_pos: Vec2, position: Vec2, behavior: BehaviorKind,
              candidates: tuple[Vec2, ...], params: PredictionParams) -> "RobotInfluence":
        axis = (position[0] - human_pos[0], position[1] - human_pos[1])
        fan = Fan(apex=tuple(human_pos), axis=axis, total_angle=params.theta_m,
                  r_min=0.0, r_max=params.impact_range)
        return cls(tuple(position), behavior, tuple(tuple(c) for c in candidates), fan)


@dataclass(frozen=True)
class Distribution:
    support: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if len(p) != len(self.support):
            raise ValueError("support and probs must have the same length")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probs", p)

    def sample(self, rng: np.random.Generator):
        idx = int(np.searchsorted(np.cumsum(self.probs), rng.random(), side="right"))
        return self.support[min(idx, len(self.support) - 1)]


def social_force(human: Pose, robot_pos: Vec2, params: SocialParams) -> np.ndarray:
    """Force the robot exerts on the human; points human -> robot, magnitude grows with distance.

    A still human is treated as facing the robot (cos phi = 1), the largest-influence case.
    """
    dx = robot_pos[0] - human.position[0]
    dy = robot_pos[1] - human.position[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise ValueError("social force undefined for coincident human and robot positions")
    nx, ny = dx / d, dy / d
    speed = math.hypot(*human.velocity)
    if speed == 0.0:
        cos_phi = 1.0
    else:
        cos_phi = (human.velocity[0] * nx + human.velocity[1] * ny) / speed
    mag = math.exp((d - params.d_social) / params.k_n) * (params.lam + (1.0 - params.lam) * (1.0 + cos_phi) / 2.0)
    return np.array([mag * nx, mag * ny])


def social_force_magnitude(human: Pose, robot_pos: Vec2, params: SocialParams) -> float:
    f = social_force(human, robot_pos, params)
    return float(math.hypot(f[0], f[1]))


def influence_divisor(human: Pose, influence: RobotInfluence, params: SocialParams) -> float:
    """xi * (1 + f_i / sum_k f_k): the exponent damping applied to guided goals / in-fan successors."""
    f_i = social_force_magnitude(human, influence.position, params)
    total = sum(social_force_magnitude(human, c, params) for c in influence.candidate_positions)
    return influence.behavior.legibility_gain * (1.0 + f_i / total)


def goal_distribution(ctx: HumanContext, fields: list[mdp.ValueField], scene: Scene,
                      params: PredictionParams, social: SocialParams,
                      influence: RobotInfluence | None = None) -> Distribution:
    """Probability over candidate goals from recent value progress; the guided goal's exponent
    is damped by the legibility divisor when a robot influence is present."""
    s_l = cell_of(ctx.history[-1], scene.grid)
    s_0 = cell_of(ctx.history[0], scene.grid)
    args = np.empty(len(fields))
    for gi, fld in enumerate(fields):
        args[gi] = params.beta_g * (fld.value_at(s_l) - fld.value_at(s_0))
    if influence is not None:
        args[scene.guide_goal] /= influence_divisor(ctx.pose, influence, social)
    weights = np.exp(args)
    total = float(weights.sum())
    if total == 0.0 or not np.isfinite(total):
        raise ValueError("degenerate goal weights")
    return Distribution(tuple(range(len(fields))), weights / total)


def action_distribution(s: Cell, goal_index: int, fields: list[mdp.ValueField], scene: Scene,
                        params: PredictionParams, social: SocialParams, mdp_params: mdp.MdpParams,
                        influence: RobotInfluence | None = None,
                        human: Pose | None = None) -> Distribution:
    """Probability over the field's actions at state s for a given goal.

    Exponent per action: beta_a * (revised_q(s, a) - V*(s)), the revised-value margin
    against the state's optimal value, so for w = 1 the most likely action is the
    greedy one. Actions whose successor lies inside the robot's impact fan are damped
    by the legibility divisor.
    """
    fld = fields[goal_index]
    div = None
    if influence is not None:
        pose = human if human is not None else Pose(center_of(s, scene.grid))
        div = influence_divisor(pose, influence, social)
    v_s = fld.value_at(s)
    args = np.empty(len(fld.actions))
    for ai, a in enumerate(fld.actions):
        arg = params.beta_a * (mdp.revised_q(s, a, fld, mdp_params) - v_s)
        if div is not None:
            s2 = mdp.transition(s, a, scene.grid)
            if point_in_fan(center_of(s2, scene.grid), influence.impact_area):
                arg /= div
        args[ai] = arg
    weights = np.exp(args)
    return Distribution(tuple(range(len(fld.actions))), weights / weights.sum())


def predict_next(ctx: HumanContext, fields: list[mdp.ValueField], scene: Scene,
                 params: PredictionParams, social: SocialParams, mdp_params: mdp.MdpParams,
                 influence: RobotInfluence | None = None, k: int | None = None,
                 rng: np.random.Generator | int | None = None) -> tuple[Vec2, np.ndarray]:
    """K-sample next-position prediction.

    Each sample draws a goal, then an action for that goal, and marks the successor
    cell in the shared layer; the final position is drawn from the normalized layer.
    Returns (position, layer counts of shape (height, width)).
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    k = params.samples_k if k is None else int(k)
    if k < 1:
        raise ValueError("K must be >= 1")
    s = cell_of(ctx.history[-1], scene.grid)
    gd = goal_distribution(ctx, fields, scene, params, social, influence)
    goal_cum = np.cumsum(gd.probs)
    layer = np.zeros((scene.grid.height, scene.grid.width), dtype=np.float64)

    action_cache: dict[int, tuple[np.ndarray, list[Cell]]] = {}

    def _per_goal(gi: int):
        if gi not in action_cache:
            ad = action_distribution(s, gi, fields, scene, params, social, mdp_params,
                                     influence, human=ctx.pose)
            succs = [mdp.transition(s, fields[gi].actions[ai], scene.grid) for ai in ad.support]
            action_cache[gi] = (np.cumsum(ad.probs), succs)
        return action_cache[gi]

    goal_draws = np.searchsorted(goal_cum, rng.random(k), side="right")
    goal_draws = np.minimum(goal_draws, len(fields) - 1)
    for gi in range(len(fields)):
        count = int(np.count_nonzero(goal_draws == gi))
        if count == 0:
            continue
        act_cum, succs = _per_goal(gi)
        picks = np.searchsorted(act_cum, rng.random(count), side="right")
        picks = np.minimum(picks, len(succs) - 1)
        for ai in picks:
            s2 = succs[ai]
            layer[s2[1], s2[0]] += 1.0

    flat = layer.ravel()
    cum = np.cumsum(flat / flat.sum())
    pick = int(np.searchsorted(cum, rng.random(), side="right"))
    pick = min(pick, flat.size - 1)
    cell = (pick % scene.grid.width, pick // scene.grid.width)
    return center_of(cell, scene.grid), layer
