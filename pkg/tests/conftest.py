import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from guideplan import mdp
from guideplan.world import GridMap, Scene


@pytest.fixture(scope="session")
def corridor():
    """The 1x3 corridor with actions {stay, +-1 step}, alpha=0, gamma=0.9."""
    grid = GridMap.empty(3, 1, 0.5)
    actions = mdp.ActionSet(speeds=(0.0, 1.0), headings=(0.0, math.pi))
    params = mdp.MdpParams(alpha=0.0, gamma=0.9)
    field = mdp.solve((2, 0), grid, actions, params)
    return grid, actions, params, field


@pytest.fixture(scope="session")
def small_scene():
    """Open 6x6 hall with two goals, used for prediction and planner tests."""
    occ = np.zeros((6, 6), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    grid = GridMap(6, 6, 0.5, occ)
    scene = Scene(
        grid=grid,
        goals=((4, 2), (4, 4)),
        guide_goal=0,
        affordance_cells=frozenset({(2, 4)}),
        human_start=(0.75, 1.25),
        robot_start=(1.25, 0.75),
        time_limit=60.0,
        name="small",
    )
    fields = [mdp.solve(g, grid, mdp.default_actions(), mdp.MdpParams()) for g in scene.goals]
    return scene, fields
