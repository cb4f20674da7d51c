"""Scene geometry: occupancy grids, goals, affordance regions and fan-shaped area tests.

Everything here is immutable after construction and safe to share across
planner / predictor workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

Vec2 = tuple[float, float]
Cell = tuple[int, int]


class SceneError(ValueError):
    """A scene document is malformed or violates a scene invariant."""


@dataclass(frozen=True)
class GridMap:
    """Boolean occupancy grid. Cell (x, y) spans [x*res, (x+1)*res) x [y*res, (y+1)*res)."""

    width: int
    height: int
    resolution: float
    occupancy: np.ndarray = field(repr=False)  # bool, shape (height, width)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SceneError("map.width/map.height: must be positive")
        if self.resolution <= 0:
            raise SceneError("map.resolution: must be positive")
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.shape != (self.height, self.width):
            raise SceneError("map.occupied: occupancy shape does not match width/height")
        object.__setattr__(self, "occupancy", occ)
        self.occupancy.setflags(write=False)

    @classmethod
    def empty(cls, width: int, height: int, resolution: float = 0.5) -> "GridMap":
        return cls(width, height, resolution, np.zeros((height, width), dtype=bool))

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def contains(self, p: Vec2) -> bool:
        """Point lies within the map extent (right/top edges exclusive)."""
        return 0.0 <= p[0] < self.width * self.resolution and 0.0 <= p[1] < self.height * self.resolution

    def occupied(self, cell: Cell) -> bool:
        return bool(self.occupancy[cell[1], cell[0]])


def cell_of(p: Vec2, grid: GridMap) -> Cell:
    """Cell containing point p, by the floor rule. Raises on out-of-extent input."""
    if not grid.contains(p):
        raise SceneError(f"point {p} outside map extent")
    return (int(math.floor(p[0] / grid.resolution)), int(math.floor(p[1] / grid.resolution)))


def center_of(cell: Cell, grid: GridMap) -> Vec2:
    """Center point of a cell. center_of(cell_of(c)) == c for any cell center c."""
    if not grid.in_bounds(cell):
        raise SceneError(f"cell {cell} outside map bounds")
    return ((cell[0] + 0.5) * grid.resolution, (cell[1] + 0.5) * grid.resolution)


@dataclass(frozen=True)
class Pose:
    """Continuous position (m) and velocity (m/s)."""

    position: Vec2
    velocity: Vec2 = (0.0, 0.0)

    def __post_init__(self):
        for v in (*self.position, *self.velocity):
            if not math.isfinite(v):
                raise ValueError("pose components must be finite")


@dataclass(frozen=True)
class Fan:
    """Fan-shaped region: symmetric about `axis`, half-angle = total_angle / 2."""

    apex: Vec2
    axis: Vec2  # normalized on construction
    total_angle: float  # radians, in [0, pi]
    r_min: float
    r_max: float

    def __post_init__(self):
        if not (0.0 <= self.total_angle <= math.pi + 1e-12):
            raise ValueError("fan total_angle must be in [0, pi]")
        if not (0.0 <= self.r_min <= self.r_max):
            raise ValueError("fan radii must satisfy 0 <= r_min <= r_max")
        norm = math.hypot(*self.axis)
        if norm == 0.0:
            raise ValueError("fan axis must be nonzero")
        object.__setattr__(self, "axis", (self.axis[0] / norm, self.axis[1] / norm))


def point_in_fan(p: Vec2, fan: Fan) -> bool:
    """Inclusive membership test: radius within [r_min, r_max] and angle to axis <= total_angle/2.

    A point at the apex has undefined angle; the radius test alone governs.
    """
    dx = p[0] - fan.apex[0]
    dy = p[1] - fan.apex[1]
    r = math.hypot(dx, dy)
    if r < fan.r_min - 1e-9 or r > fan.r_max + 1e-9:
        return False
    if r == 0.0:
        return True
    cos_a = (dx * fan.axis[0] + dy * fan.axis[1]) / r
    cos_a = max(-1.0, min(1.0, cos_a))
    return math.acos(cos_a) <= fan.total_angle / 2.0 + 1e-12


@dataclass(frozen=True)
class Scene:
    """A guide scenario: map, candidate goals, affordance cells and start states."""

    grid: GridMap
    goals: tuple[Cell, ...]
    guide_goal: int
    affordance_cells: frozenset[Cell]
    human_start: Vec2
    robot_start: Vec2
    time_limit: float | None = None
    name: str = ""

    def __post_init__(self):
        goals = tuple((int(x), int(y)) for x, y in self.goals)
        object.__setattr__(self, "goals", goals)
        object.__setattr__(self, "affordance_cells", frozenset((int(x), int(y)) for x, y in self.affordance_cells))
        if not goals:
            raise SceneError("goals: at least one goal required")
        if not (0 <= self.guide_goal < len(goals)):
            raise SceneError(f"guide_goal: index {self.guide_goal} out of range for {len(goals)} goals")
        for i, g in enumerate(goals):
            if not self.grid.in_bounds(g):
                raise SceneError(f"goals[{i}]: goal out of bounds")
            if self.grid.occupied(g):
                raise SceneError(f"goals[{i}]: goal occupied")
        for c in sorted(self.affordance_cells):
            if not self.grid.in_bounds(c):
                raise SceneError(f"affordance: affordance out of bounds at {list(c)}")
        for label, p in (("human_start", self.human_start), ("robot_start", self.robot_start)):
            if not self.grid.contains(p):
                raise SceneError(f"{label}: position {list(p)} outside map extent")
        if self.time_limit is not None and self.time_limit <= 0:
            raise SceneError("time_limit_s: must be positive")

    @property
    def guide_goal_cell(self) -> Cell:
        return self.goals[self.guide_goal]

    def goal_center(self, index: int) -> Vec2:
        return center_of(self.goals[index], self.grid)


def in_affordance(p: Vec2, scene: Scene) -> bool:
    """True iff the cell containing p is an affordance cell. Points outside the extent are False."""
    if not scene.grid.contains(p):
        return False
    return cell_of(p, scene.grid) in scene.affordance_cells


SCENE_SCHEMA_VERSION = 1


def _require(doc: dict, key: str):
    if key not in doc:
        raise SceneError(f"{key}: missing field")
    return doc[key]


def _cell_list(raw, label: str) -> list[Cell]:
    cells = []
    for i, entry in enumerate(raw):
        try:
            x, y = entry
            cells.append((int(x), int(y)))
        except (TypeError, ValueError):
            raise SceneError(f"{label}[{i}]: expected a [x, y] cell pair") from None
    return cells


def load_scene(document: str, name: str = "") -> Scene:
    """Parse a scene document (YAML key-value tree, schema 1) into a validated Scene."""
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise SceneError(f"scene parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a key-value tree")
    if doc.get("schema") != SCENE_SCHEMA_VERSION:
        raise SceneError(f"schema: expected {SCENE_SCHEMA_VERSION}, got {doc.get('schema')!r}")

    map_doc = _require(doc, "map")
    if not isinstance(map_doc, dict):
        raise SceneError("map: expected a mapping")
    for key in ("width", "height", "resolution"):
        if key not in map_doc:
            raise SceneError(f"map.{key}: missing field")
    try:
        width = int(map_doc["width"])
        height = int(map_doc["height"])
        resolution = float(map_doc["resolution"])
    except (TypeError, ValueError):
        raise SceneError("map.width/map.height/map.resolution: expected numbers") from None

    occ = np.zeros((height, width), dtype=bool) if height > 0 and width > 0 else np.zeros((0, 0), dtype=bool)
    for i, c in enumerate(_cell_list(map_doc.get("occupied", []), "map.occupied")):
        if not (0 <= c[0] < width and 0 <= c[1] < height):
            raise SceneError(f"map.occupied[{i}]: cell {list(c)} out of bounds")
        occ[c[1], c[0]] = True
    grid = GridMap(width, height, resolution, occ)

    goals = _cell_list(_require(doc, "goals"), "goals")
    guide_goal = _require(doc, "guide_goal")
    if not isinstance(guide_goal, int):
        raise SceneError("guide_goal: expected an integer index")
    affordance = _cell_list(doc.get("affordance", []), "affordance")

    def _point(key: str) -> Vec2:
        raw = _require(doc, key)
        try:
            x, y = raw
            return (float(x), float(y))
        except (TypeError, ValueError):
            raise SceneError(f"{key}: expected [x, y] in meters") from None

    time_limit = doc.get("time_limit_s")
    if time_limit is not None:
        time_limit = float(time_limit)

    return Scene(
        grid=grid,
        goals=tuple(goals),
        guide_goal=guide_goal,
        affordance_cells=frozenset(affordance),
        human_start=_point("human_start"),
        robot_start=_point("robot_start"),
        time_limit=time_limit,
        name=str(doc.get("name") or name),
    )


def load_scene_file(path: str) -> Scene:
    import os

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return load_scene(text, name=os.path.splitext(os.path.basename(path))[0])


def scene_document(scene: Scene) -> str:
    """Serialize a Scene back to its schema-1 document form."""
    occupied = [[int(x), int(y)] for y, x in zip(*np.nonzero(scene.grid.occupancy))]
    doc = {
        "schema": SCENE_SCHEMA_VERSION,
        "name": scene.name,
        "map": {
            "width": scene.grid.width,
            "height": scene.grid.height,
            "resolution": scene.grid.resolution,
            "occupied": occupied,
        },
        "goals": [list(g) for g in scene.goals],
        "guide_goal": scene.guide_goal,
        "affordance": [list(c) for c in sorted(scene.affordance_cells)],
        "human_start": list(scene.human_start),
        "robot_start": list(scene.robot_start),
        "time_limit_s": scene.time_limit,
    }
    return yaml.safe_dump(doc, sort_keys=False)
