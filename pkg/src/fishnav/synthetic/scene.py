"""Declarative scene description (JSON, ``schema_version`` 1).

World frame: z up, floor at z = 0 (optionally with one sloped section
beyond ``x = slope_start``). The rig pose is the fisheye pose; the depth
camera pose follows from the depth->fisheye extrinsic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ..cameras import PinholeModel, equidistant_omni_model, model_from_dict
from ..errors import InvalidInputError
from ..geometry import RigidTransform, rot_x, rot_z, rot_y

SCHEMA_VERSION = 1

# camera axes (x right, y down, z forward) for a level camera facing world +x
_BASE = np.array([[0.0, 0.0, 1.0],
                  [-1.0, 0.0, 0.0],
                  [0.0, -1.0, 0.0]])


@dataclass
class FloorSpec:
    colour: tuple = (150, 120, 80)
    checker_colour: tuple | None = None
    checker_size: float = 0.5
    slope_start: float | None = None  # x (m) where the sloped section begins
    slope_deg: float = 0.0  # positive rises with x


@dataclass
class Wall:
    id: str
    start: tuple
    end: tuple
    height: float = 2.6
    colour: tuple = (170, 190, 210)
    base: float = 0.0

    @property
    def length(self) -> float:
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))


@dataclass
class Decal:
    """A coloured rectangle on a wall: doors, windows, posters, seams, frames."""

    wall: str
    offset: float  # along the wall from its start (m)
    width: float
    height: float
    colour: tuple
    elevation: float = 0.0
    kind: str = "door"


@dataclass
class Box:
    min: tuple
    max: tuple
    colour: tuple = (200, 60, 60)


@dataclass
class RigSpec:
    position: tuple = (0.0, 0.0, 1.2)
    yaw_deg: float = 0.0
    pitch_deg: float = -45.0
    roll_deg: float = 0.0
    fisheye: object = None
    depth: object = None
    extrinsic: object = None  # depth -> fisheye RigidTransform

    def __post_init__(self):
        if self.fisheye is None:
            self.fisheye = default_fisheye()
        if self.depth is None:
            self.depth = default_depth()
        if self.extrinsic is None:
            self.extrinsic = default_extrinsic()

    def fisheye_to_world(self) -> RigidTransform:
        R = rot_z(np.deg2rad(self.yaw_deg)) @ _BASE @ rot_x(np.deg2rad(self.pitch_deg)) \
            @ rot_z(np.deg2rad(self.roll_deg))
        return RigidTransform(R, np.asarray(self.position, dtype=float))

    def depth_to_world(self) -> RigidTransform:
        return self.fisheye_to_world() @ self.extrinsic


@dataclass
class SceneSpec:
    name: str = "scene"
    group: str = "indoor"
    illumination: float = 1.0
    background: tuple = (200, 215, 235)
    floor: FloorSpec = field(default_factory=FloorSpec)
    walls: list = field(default_factory=list)
    doors: list = field(default_factory=list)
    distractors: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)
    rig: RigSpec = field(default_factory=RigSpec)
    depth_noise: float = 0.0
    depth_max: float = 4.0
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def wall(self, wall_id) -> Wall:
        for w in self.walls:
            if w.id == wall_id:
                return w
        raise InvalidInputError(f"scene {self.name!r}: unknown wall id {wall_id!r}")

    def validate(self):
        if not 0 < self.illumination <= 1.5:
            raise InvalidInputError("illumination multiplier must be in (0, 1.5]")
        for d in self.doors:
            if d.elevation != 0.0:
                raise InvalidInputError("doors must touch the floor (elevation 0)")
        for d in list(self.doors) + list(self.distractors):
            w = self.wall(d.wall)
            if d.offset < 0 or d.offset + d.width > w.length + 1e-9:
                raise InvalidInputError(f"decal on wall {w.id!r} exceeds its length")
        for w in self.walls:
            if not np.all(np.isfinite(np.r_[w.start, w.end, w.height])) or w.length <= 0:
                raise InvalidInputError(f"wall {w.id!r} has invalid geometry")

    def to_dict(self):
        d = {
            "schema_version": self.schema_version,
            "name": self.name,
            "group": self.group,
            "illumination": self.illumination,
            "background": list(self.background),
            "floor": asdict(self.floor),
            "walls": [asdict(w) for w in self.walls],
            "doors": [asdict(x) for x in self.doors],
            "distractors": [asdict(x) for x in self.distractors],
            "obstacles": [asdict(b) for b in self.obstacles],
            "rig": {
                "position": list(self.rig.position),
                "yaw_deg": self.rig.yaw_deg,
                "pitch_deg": self.rig.pitch_deg,
                "roll_deg": self.rig.roll_deg,
                "fisheye": self.rig.fisheye.to_dict(),
                "depth": self.rig.depth.to_dict(),
                "extrinsic": {"matrix": self.rig.extrinsic.as_matrix().tolist()},
            },
            "depth_noise": self.depth_noise,
            "depth_max": self.depth_max,
            "seed": self.seed,
        }
        return _jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported scene schema_version {d.get('schema_version')!r}")
        r = d.get("rig", {})
        rig = RigSpec(
            position=tuple(r.get("position", (0.0, 0.0, 1.2))),
            yaw_deg=r.get("yaw_deg", 0.0),
            pitch_deg=r.get("pitch_deg", -45.0),
            roll_deg=r.get("roll_deg", 0.0),
            fisheye=model_from_dict(r["fisheye"]) if "fisheye" in r else None,
            depth=model_from_dict(r["depth"]) if "depth" in r else None,
            extrinsic=RigidTransform.from_matrix(r["extrinsic"]["matrix"]) if "extrinsic" in r else None,
        )
        fl = d.get("floor", {})
        return cls(
            name=d.get("name", "scene"),
            group=d.get("group", "indoor"),
            illumination=d.get("illumination", 1.0),
            background=tuple(d.get("background", (200, 215, 235))),
            floor=FloorSpec(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in fl.items()}),
            walls=[Wall(**_tuples(w)) for w in d.get("walls", [])],
            doors=[Decal(**_tuples(x)) for x in d.get("doors", [])],
            distractors=[Decal(**_tuples(x)) for x in d.get("distractors", [])],
            obstacles=[Box(**_tuples(b)) for b in d.get("obstacles", [])],
            rig=rig,
            depth_noise=d.get("depth_noise", 0.0),
            depth_max=d.get("depth_max", 4.0),
            seed=d.get("seed", 0),
        )


def _tuples(d):
    return {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def load_scene(path) -> SceneSpec:
    with open(Path(path)) as fh:
        return SceneSpec.from_dict(json.load(fh))


def save_scene(scene: SceneSpec, path):
    with open(Path(path), "w") as fh:
        json.dump(scene.to_dict(), fh, indent=2)


def default_fisheye():
    return equidistant_omni_model(1280, 960, 182.0)


def default_depth():
    # 57 x 43 degree field of view at 640 x 480
    return PinholeModel.from_fov(640, 480, 57.0, 43.0)


def default_extrinsic() -> RigidTransform:
    """Depth camera mounted next to the fisheye, nearly parallel."""
    R = rot_z(np.deg2rad(1.0)) @ rot_y(np.deg2rad(-1.5)) @ rot_x(np.deg2rad(2.0))
    return RigidTransform(R, np.array([0.05, 0.10, 0.02]))
