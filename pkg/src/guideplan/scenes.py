"""Built-in synthetic exhibition-hall scenes.

One 7 m x 5 m hall with four exhibition boards as candidate goals (the east-middle
board is the guide destination) in three affordance topologies: an open hall (A),
a two-row affordance strip across the direct route (B), and two disjoint regions
forcing a slalom (C). Strips hug the guide route so the lead-only baseline drags
the visitor through them while the planner can herd around.
"""

from __future__ import annotations

import os

import numpy as np

from .world import GridMap, Scene, load_scene_file

WIDTH = 14
HEIGHT = 10
RESOLUTION = 0.5


def _hall_grid() -> GridMap:
    occ = np.zeros((HEIGHT, WIDTH), dtype=bool)
    occ[0, :] = True
    occ[-1, :] = True
    occ[:, 0] = True
    occ[:, -1] = True
    return GridMap(WIDTH, HEIGHT, RESOLUTION, occ)


_GOALS = ((12, 4), (12, 2), (12, 6), (7, 1))  # east-middle board is the guide goal
_HUMAN_START = (1.25, 2.25)  # cell (2, 4)
_ROBOT_START = (1.75, 1.75)  # cell (3, 3)
_TIME_LIMIT = 150.0

_STRIP_B = frozenset((x, y) for x in range(4, 9) for y in (4, 5))
_REGIONS_C = frozenset((x, y) for x in range(3, 6) for y in (4, 5)) | \
             frozenset((x, y) for x in range(8, 11) for y in (3, 4))


def _scene(name: str, affordance: frozenset) -> Scene:
    return Scene(
        grid=_hall_grid(),
        goals=_GOALS,
        guide_goal=0,
        affordance_cells=affordance,
        human_start=_HUMAN_START,
        robot_start=_ROBOT_START,
        time_limit=_TIME_LIMIT,
        name=name,
    )


def builtin_scene_names() -> tuple[str, ...]:
    return ("A", "B", "C")


def builtin_scene(name: str) -> Scene:
    key = name.upper()
    if key == "A":
        return _scene("A", frozenset())
    if key == "B":
        return _scene("B", _STRIP_B)
    if key == "C":
        return _scene("C", _REGIONS_C)
    raise ValueError(f"unknown builtin scene {name!r}; expected one of A, B, C")


def resolve_scene(name_or_path: str) -> Scene:
    """A builtin scene name (A/B/C) or a path to a scene document."""
    if name_or_path.upper() in builtin_scene_names() and not os.path.exists(name_or_path):
        return builtin_scene(name_or_path)
    return load_scene_file(name_or_path)
