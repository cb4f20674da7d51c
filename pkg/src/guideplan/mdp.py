"""Per-goal gridworld MDP for human active motion.

States are grid cells, actions are (speed, heading) pairs with a deterministic
transition to the nearest cell. Solved by value iteration; the solved field also
backs the revised sub-optimal action values used by the prediction layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .world import Cell, GridMap

Action = tuple[float, float]  # (speed in cells/step, heading in radians)


@dataclass(frozen=True)
class ActionSet:
    """Discrete (speed, heading) action set; always contains a single zero-speed action."""

    speeds: tuple[float, ...]
    headings: tuple[float, ...]
    v_max: float = 1.0

    def __post_init__(self):
        for v in self.speeds:
            if not (0.0 <= v <= self.v_max):
                raise ValueError(f"action speed {v} outside [0, v_max]")
        hs = [h % (2.0 * math.pi) for h in self.headings]
        if len(set(hs)) != len(hs):
            raise ValueError("headings must be distinct modulo 2*pi")

    @property
    def actions(self) -> tuple[Action, ...]:
        """Stay first, then moving actions ordered by (speed, heading) as given."""
        acts: list[Action] = [(0.0, 0.0)]
        for v in self.speeds:
            if v == 0.0:
                continue
            for h in self.headings:
                acts.append((v, h))
        return tuple(acts)


def default_actions(v_max: float = 1.0) -> ActionSet:
    """8-connected motion: stay plus one-cell steps at multiples of pi/4."""
    return ActionSet(speeds=(0.0, 1.0), headings=tuple(i * math.pi / 4.0 for i in range(8)), v_max=v_max)


@dataclass(frozen=True)
class MdpParams:
    alpha: float = 0.5            # occupation vs. effort balance, in [0, 1]
    occupation_cost: float = 10.0
    gamma: float = 0.9
    epsilon: float = 1e-6
    w: float = 1.0                # sub-optimality control factor
    # Effort floor: idling still spends one step's effort, so holding still is
    # never free at non-goal states and goal-directed value gradients exist.
    min_effort: float = 1.0
    max_sweeps: int = 10_000

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must be in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def transition(s: Cell, a: Action, grid: GridMap) -> Cell:
    """Deterministic move to the cell nearest (x + v*cos(h), y + v*sin(h)), clamped to bounds."""
    v, h = a
    x = s[0] + v * math.cos(h)
    y = s[1] + v * math.sin(h)
    # nearest cell, halves rounding up for determinism
    nx = int(math.floor(x + 0.5))
    ny = int(math.floor(y + 0.5))
    return (min(max(nx, 0), grid.width - 1), min(max(ny, 0), grid.height - 1))


def effort_cost(a: Action, params: MdpParams) -> float:
    v = abs(a[0])
    return max(v, params.min_effort)


def reward(s: Cell, a: Action, g: Cell, grid: GridMap, params: MdpParams) -> float:
    """Nonpositive reward: -alpha*occupation(s') - (1-alpha)*effort(a); zero at the goal."""
    if s == g:
        return 0.0
    s2 = transition(s, a, grid)
    occ = params.occupation_cost if grid.occupied(s2) else 0.0
    return -params.alpha * occ - (1.0 - params.alpha) * effort_cost(a, params)


@dataclass(frozen=True)
class ValueField:
    """Optimal state values and greedy policy for one goal."""

    goal: Cell
    grid: GridMap
    actions: tuple[Action, ...]
    values: np.ndarray = field(repr=False)   # float64, shape (height, width)
    greedy: np.ndarray = field(repr=False)   # int32 action index, shape (height, width)
    sweeps: int = 0

    def value_at(self, cell: Cell) -> float:
        return float(self.values[cell[1], cell[0]])

    def greedy_at(self, cell: Cell) -> Action:
        return self.actions[int(self.greedy[cell[1], cell[0]])]


class ConvergenceError(RuntimeError):
    pass


def _tables(goal: Cell, grid: GridMap, actions: tuple[Action, ...], params: MdpParams):
    """Flat successor-index and reward tables of shape (cells, actions). Goal row self-loops."""
    h, w = grid.height, grid.width
    n = h * w
    succ = np.empty((n, len(actions)), dtype=np.int64)
    rew = np.empty((n, len(actions)), dtype=np.float64)
    gi = goal[1] * w + goal[0]
    for ai, a in enumerate(actions):
        eff = effort_cost(a, params)
        for y in range(h):
            for x in range(w):
                s = y * w + x
                s2 = transition((x, y), a, grid)
                succ[s, ai] = s2[1] * w + s2[0]
                occ = params.occupation_cost if grid.occupied(s2) else 0.0
                rew[s, ai] = -params.alpha * occ - (1.0 - params.alpha) * eff
    succ[gi, :] = gi
    rew[gi, :] = 0.0
    return succ, rew


def solve(goal: Cell, grid: GridMap, actions: ActionSet | tuple[Action, ...], params: MdpParams) -> ValueField:
    """Value iteration until the max per-cell update drops below epsilon."""
    if grid.occupied(goal):
        raise ValueError(f"goal {goal} is occupied")
    acts = actions.actions if isinstance(actions, ActionSet) else tuple(actions)
    succ, rew = _tables(goal, grid, acts, params)
    n = grid.height * grid.width
    v = np.zeros(n, dtype=np.float64)
    for sweep in range(1, params.max_sweeps + 1):
        q = rew + params.gamma * v[succ]
        v_new = q.max(axis=1)
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if delta < params.epsilon:
            greedy = q.argmax(axis=1).astype(np.int32)
            return ValueField(
                goal=goal,
                grid=grid,
                actions=acts,
                values=v.reshape(grid.height, grid.width),
                greedy=greedy.reshape(grid.height, grid.width),
                sweeps=sweep,
            )
    raise ConvergenceError(f"value iteration did not converge within {params.max_sweeps} sweeps")


def q_backup(s: Cell, a: Action, fld: ValueField, params: MdpParams) -> float:
    """Standard deterministic backup R(s,a) + gamma * V*(s')."""
    s2 = transition(s, a, fld.grid)
    return reward(s, a, fld.goal, fld.grid, params) + params.gamma * fld.value_at(s2)


def revised_q(s: Cell, a: Action, fld: ValueField, params: MdpParams) -> float:
    """Sub-optimal action value w * R(s,a) + gamma * V*(s'); w=1 recovers the plain backup."""
    s2 = transition(s, a, fld.grid)
    return params.w * reward(s, a, fld.goal, fld.grid, params) + params.gamma * fld.value_at(s2)


def greedy_path(fld: ValueField, start: Cell, max_steps: int = 10_000) -> list[Cell]:
    """Follow the greedy policy from start; stops at the goal, on a stall, or at max_steps."""
    path = [start]
    cur = start
    for _ in range(max_steps):
        if cur == fld.goal:
            break
        nxt = transition(cur, fld.greedy_at(cur), fld.grid)
        if nxt == cur:
            break
        path.append(nxt)
        cur = nxt
    return path


def value_matrix_text(fld: ValueField, fmt: str = "%.6g") -> str:
    """Text dump of the value grid, one row per y (y=0 first), for golden files and heatmaps."""
    lines = []
    for y in range(fld.grid.height):
        lines.append(" ".join(fmt % fld.values[y, x] for x in range(fld.grid.width)))
    return "\n".join(lines) + "\n"
