import math

import numpy as np
import pytest

from guideplan import mdp
from guideplan.world import GridMap

from oracles import dp_finite_horizon


def test_transition_examples():
    grid = GridMap.empty(8, 8, 0.5)
    assert mdp.transition((3, 4), (1.0, 0.0), grid) == (4, 4)
    assert mdp.transition((3, 4), (1.0, math.pi / 2), grid) == (3, 5)
    assert mdp.transition((3, 4), (0.0, 1.3), grid) == (3, 4)


def test_transition_clamps_to_bounds():
    grid = GridMap.empty(4, 4, 0.5)
    assert mdp.transition((0, 0), (1.0, math.pi), grid) == (0, 0)
    assert mdp.transition((3, 3), (1.0, 0.0), grid) == (3, 3)


def test_transition_diagonal_rounds_to_neighbor():
    grid = GridMap.empty(8, 8, 0.5)
    assert mdp.transition((3, 3), (1.0, math.pi / 4), grid) == (4, 4)


def test_reward_examples():
    occ = np.zeros((4, 4), dtype=bool)
    occ[2, 3] = True  # cell (3, 2)
    grid = GridMap(4, 4, 0.5, occ)
    goal = (0, 0)
    # at the goal every action is free
    assert mdp.reward(goal, (1.0, 0.0), goal, grid, mdp.MdpParams(alpha=0.5)) == 0.0
    # alpha=1: stepping into the occupied cell costs the full occupation constant
    p1 = mdp.MdpParams(alpha=1.0, occupation_cost=10.0)
    assert mdp.reward((2, 2), (1.0, 0.0), goal, grid, p1) == -10.0
    # alpha=0: pure effort
    p0 = mdp.MdpParams(alpha=0.0)
    assert mdp.reward((1, 1), (1.0, 0.0), goal, grid, p0) == -1.0


def test_reward_effort_uses_commanded_displacement():
    grid = GridMap.empty(4, 4, 0.5)
    p0 = mdp.MdpParams(alpha=0.0)
    # clamped at the border, but the commanded unit step still costs 1
    assert mdp.reward((0, 0), (1.0, math.pi), (3, 3), grid, p0) == -1.0


def test_corridor_values_exact(corridor):
    _, _, _, field = corridor
    assert field.values[0, 2] == pytest.approx(0.0, abs=1e-12)
    assert field.values[0, 1] == pytest.approx(-1.0, abs=1e-12)
    assert field.values[0, 0] == pytest.approx(-1.9, abs=1e-12)


def test_goal_pinned_to_zero(small_scene):
    scene, fields = small_scene
    for fld in fields:
        assert fld.value_at(fld.goal) == 0.0
        assert np.all(fld.values <= 1e-12)


def test_gamma_zero_limit():
    grid = GridMap.empty(3, 3, 0.5)
    actions = mdp.default_actions()
    params = mdp.MdpParams(alpha=0.0, gamma=1e-9)
    field = mdp.solve((1, 1), grid, actions, params)
    for y in range(3):
        for x in range(3):
            if (x, y) == (1, 1):
                continue
            best = max(mdp.reward((x, y), a, (1, 1), grid, params) for a in actions.actions)
            assert field.values[y, x] == pytest.approx(best, abs=1e-6)


def test_solve_rejects_occupied_goal():
    occ = np.zeros((3, 3), dtype=bool)
    occ[1, 1] = True
    grid = GridMap(3, 3, 0.5, occ)
    with pytest.raises(ValueError, match="occupied"):
        mdp.solve((1, 1), grid, mdp.default_actions(), mdp.MdpParams())


def test_nonconvergence_guard():
    grid = GridMap.empty(3, 3, 0.5)
    params = mdp.MdpParams(max_sweeps=1, epsilon=1e-12)
    with pytest.raises(mdp.ConvergenceError):
        mdp.solve((0, 0), grid, mdp.default_actions(), params)


def _random_map(rng, w, h):
    occ = rng.random((h, w)) < 0.2
    return GridMap(w, h, 0.5, occ)


def test_value_iteration_matches_finite_horizon_dp():
    """Dual-implementation check on random maps up to 5x5."""
    rng = np.random.default_rng(42)
    actions = mdp.ActionSet(speeds=(0.0, 1.0), headings=(0.0, math.pi / 2, math.pi, 3 * math.pi / 2))
    params = mdp.MdpParams(alpha=0.4, gamma=0.85, epsilon=1e-7)
    horizon = int(math.ceil(math.log(params.epsilon / 20.0) / math.log(params.gamma)))
    for w, h in ((2, 2), (3, 3), (5, 4), (5, 5)):
        grid = _random_map(rng, w, h)
        free = [(x, y) for x in range(w) for y in range(h) if not grid.occupied((x, y))]
        goal = free[int(rng.integers(len(free)))]
        field = mdp.solve(goal, grid, actions, params)
        occupied = {(x, y) for x in range(w) for y in range(h) if grid.occupied((x, y))}
        oracle = dp_finite_horizon(goal, occupied, w, h, actions.actions,
                                   alpha=params.alpha, occupation_cost=params.occupation_cost,
                                   gamma=params.gamma, min_effort=params.min_effort,
                                   horizon=horizon)
        for (x, y), v in oracle.items():
            assert field.values[y, x] == pytest.approx(v, abs=2 * params.epsilon)


def test_bellman_residual(small_scene):
    scene, fields = small_scene
    params = mdp.MdpParams()
    for fld in fields:
        worst = 0.0
        for y in range(scene.grid.height):
            for x in range(scene.grid.width):
                if (x, y) == fld.goal:
                    continue
                backup = max(mdp.q_backup((x, y), a, fld, params) for a in fld.actions)
                worst = max(worst, abs(fld.values[y, x] - backup))
        assert worst < params.epsilon


def test_value_monotonicity_in_gamma():
    # With nonpositive rewards, every policy's discounted return shrinks as gamma
    # grows, so optimal values are nonincreasing in gamma (goal stays pinned at 0).
    grid = GridMap.empty(4, 3, 0.5)
    actions = mdp.default_actions()
    lo = mdp.solve((3, 1), grid, actions, mdp.MdpParams(gamma=0.8))
    hi = mdp.solve((3, 1), grid, actions, mdp.MdpParams(gamma=0.95))
    assert np.all(hi.values <= lo.values + 1e-9)
    assert hi.value_at((3, 1)) == 0.0 == lo.value_at((3, 1))


def test_revised_q_reductions(corridor):
    grid, actions, params, field = corridor
    east = (1.0, 0.0)
    # w=1 equals the plain deterministic backup
    assert mdp.revised_q((0, 0), east, field, params) == pytest.approx(
        mdp.q_backup((0, 0), east, field, params), abs=1e-12)
    assert mdp.revised_q((0, 0), east, field, params) == pytest.approx(-1.9, abs=1e-12)
    # w=0 drops the reward term
    p0 = mdp.MdpParams(alpha=0.0, gamma=0.9, w=0.0)
    assert mdp.revised_q((0, 0), east, field, p0) == pytest.approx(0.9 * -1.0, abs=1e-12)


def test_revised_q_argmax_matches_greedy(small_scene):
    scene, fields = small_scene
    params = mdp.MdpParams()
    fld = fields[0]
    for y in range(1, scene.grid.height - 1):
        for x in range(1, scene.grid.width - 1):
            if (x, y) == fld.goal:
                continue
            qs = [mdp.revised_q((x, y), a, fld, params) for a in fld.actions]
            assert int(np.argmax(qs)) == int(fld.greedy[y, x])


def test_greedy_path_reaches_goal(small_scene):
    scene, fields = small_scene
    path = mdp.greedy_path(fields[0], (1, 1))
    assert path[-1] == fields[0].goal
    assert len(path) >= 2


def test_value_matrix_text(corridor):
    _, _, _, field = corridor
    assert mdp.value_matrix_text(field) == "-1.9 -1 0\n"


def test_action_set_invariants():
    with pytest.raises(ValueError):
        mdp.ActionSet(speeds=(0.0, 2.0), headings=(0.0,), v_max=1.0)
    with pytest.raises(ValueError):
        mdp.ActionSet(speeds=(0.0, 1.0), headings=(0.0, 2 * math.pi))
    acts = mdp.default_actions()
    assert acts.actions[0] == (0.0, 0.0)
    assert len(acts.actions) == 9
