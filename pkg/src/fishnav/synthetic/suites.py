"""Fixed scene collections used by the evaluation harness and the tests."""
from __future__ import annotations

import numpy as np

from .scene import Box, Decal, FloorSpec, RigSpec, SceneSpec, Wall

SKY = (150, 190, 235)


def _room(x0, x1, y0, y1, colour, height=2.6):
    """Four walls, listed counter-clockwise seen from above, ids n/w/s/e."""
    return [
        Wall("n", (x1, y0), (x1, y1), height, colour),
        Wall("w", (x1, y1), (x0, y1), height, colour),
        Wall("s", (x0, y1), (x0, y0), height, colour),
        Wall("e", (x0, y0), (x1, y0), height, colour),
    ]


def floor_suite():
    """Four indoor illumination levels and two outdoor analogues."""
    scenes = [
        SceneSpec(
            name="indoor_1", group="indoor", illumination=1.0,
            floor=FloorSpec(colour=(150, 110, 70)),
            walls=_room(-1.5, 6.5, -3.0, 3.0, (175, 195, 215)),
            doors=[Decal("n", 2.0, 0.9, 2.0, (90, 60, 160))],
            obstacles=[Box((2.2, 0.8, 0.0), (2.8, 1.4, 0.7), (200, 60, 60))],
            seed=11,
        ),
        SceneSpec(
            name="indoor_2", group="indoor", illumination=0.75,
            floor=FloorSpec(colour=(190, 150, 100), checker_colour=(150, 105, 60), checker_size=0.6),
            walls=_room(-2.0, 5.5, -2.5, 3.5, (170, 210, 170)),
            doors=[Decal("w", 3.0, 0.9, 2.0, (60, 80, 170))],
            obstacles=[Box((1.8, -1.6, 0.0), (2.6, -0.9, 0.45), (60, 60, 180))],
            seed=12,
        ),
        SceneSpec(
            name="indoor_3", group="indoor", illumination=0.5,
            floor=FloorSpec(colour=(150, 60, 60)),
            walls=_room(-1.5, 8.0, -3.5, 3.5, (225, 210, 170)),
            doors=[Decal("n", 4.0, 1.0, 2.0, (60, 130, 70))],
            obstacles=[Box((3.0, -2.0, 0.0), (3.8, -1.2, 0.9), (70, 90, 170)),
                       Box((4.5, 1.5, 0.0), (5.2, 2.3, 0.5), (220, 200, 60))],
            seed=13,
        ),
        SceneSpec(
            name="indoor_4", group="indoor", illumination=0.3,
            floor=FloorSpec(colour=(70, 120, 70)),
            walls=_room(-1.5, 5.5, -2.5, 2.5, (215, 205, 230)),
            doors=[Decal("n", 1.5, 0.9, 2.0, (170, 80, 40))],
            seed=14,
        ),
        SceneSpec(
            name="outdoor_1", group="outdoor", illumination=1.0, background=SKY,
            floor=FloorSpec(colour=(185, 110, 80), checker_colour=(148, 88, 64), checker_size=0.8),
            walls=_room(-8.0, 15.0, -12.0, 12.0, (225, 225, 200), height=9.0),
            obstacles=[Box((4.0, -2.5, 0.0), (4.6, -1.9, 1.0), (70, 70, 80))],
            seed=15,
        ),
        SceneSpec(
            name="outdoor_2", group="outdoor", illumination=0.8, background=SKY,
            floor=FloorSpec(colour=(165, 140, 90), slope_start=4.0, slope_deg=2.5),
            walls=_room(-8.0, 14.0, -10.0, 10.0, (60, 110, 50), height=3.0),
            seed=16,
        ),
    ]
    return scenes


def corridor_scene(length=24.0, width=2.0):
    """Long straight corridor with the camera near one end, looking down it."""
    y = width / 2
    walls = [
        Wall("l", (-1.0, y), (length, y), 2.6, (200, 200, 175)),
        Wall("r", (length, -y), (-1.0, -y), 2.6, (200, 200, 175)),
        Wall("end", (length, y), (length, -y), 2.6, (120, 150, 200)),
        Wall("back", (-1.0, -y), (-1.0, y), 2.6, (120, 150, 200)),
    ]
    return SceneSpec(
        name="corridor", group="indoor", illumination=0.9,
        floor=FloorSpec(colour=(150, 90, 60)),
        walls=walls,
        doors=[Decal("l", 6.0, 0.9, 2.0, (80, 60, 150)), Decal("r", 10.0, 0.9, 2.0, (80, 60, 150))],
        seed=21,
    )


_DOOR_COLOURS = [(90, 60, 160), (60, 80, 170), (60, 130, 70), (170, 80, 40), (150, 40, 90),
                 (40, 120, 140), (120, 60, 30)]
_WALL_COLOURS = [(175, 195, 215), (225, 210, 170), (170, 210, 170), (215, 200, 225), (230, 220, 200)]
_FLOOR_COLOURS = [(150, 110, 70), (150, 60, 60), (70, 120, 70), (190, 150, 100), (120, 100, 150)]


def window(wall, offset, width=1.0, height=1.2, elevation=0.9):
    return Decal(wall, offset, width, height, (120, 190, 230), elevation, "window")


def poster(wall, offset, width=0.5, height=2.0, elevation=0.1):
    return Decal(wall, offset, width, height, (230, 170, 40), elevation, "poster")


def seam(wall, offset, width=0.03):
    return Decal(wall, offset, width, 2.6, (110, 110, 120), 0.0, "seam")


def door_suite():
    """Ten rooms holding 14 doors, 2 windows, 2 posters and 2 wall seams.

    The camera stands 2-3 m from the wall carrying the doors and looks at it.
    """
    specs = [
        # (room extents, doors [(wall, offset, width)], distractors)
        ((-1.0, 3.0, -3.0, 3.0), [("n", 2.0, 0.9)], []),
        ((-1.0, 2.5, -3.0, 3.0), [("n", 1.2, 0.8), ("n", 3.8, 0.9)], []),
        ((-1.0, 3.0, -3.0, 3.0), [("n", 2.6, 1.0)], [window("n", 0.7)]),
        ((-1.0, 2.8, -3.0, 3.0), [("n", 2.5, 0.9)], [poster("n", 4.3)]),
        ((-1.0, 3.0, -3.0, 3.0), [("n", 1.0, 0.9), ("n", 4.0, 0.9)], [seam("n", 3.0)]),
        ((-1.0, 2.6, -3.0, 3.0), [("n", 3.3, 1.1)], [window("n", 1.0, width=1.2)]),
        ((-1.0, 3.0, -3.0, 3.0), [("n", 1.5, 0.9)], [poster("n", 3.6)]),
        ((-1.0, 2.5, -3.0, 3.0), [("n", 2.0, 0.9), ("n", 4.4, 0.8)], []),
        ((-1.0, 3.0, -3.0, 3.0), [("n", 2.6, 0.9)], [seam("n", 1.4)]),
        ((-1.0, 2.8, -3.0, 3.0), [("n", 1.4, 1.2), ("n", 3.9, 0.9)], []),
    ]
    scenes = []
    for i, (ext, doors, distractors) in enumerate(specs):
        wall_c = _WALL_COLOURS[i % len(_WALL_COLOURS)]
        scenes.append(SceneSpec(
            name=f"doors_{i + 1:02d}", group="doors", illumination=1.0 - 0.05 * (i % 4),
            floor=FloorSpec(colour=_FLOOR_COLOURS[i % len(_FLOOR_COLOURS)]),
            walls=_room(*ext, wall_c),
            doors=[Decal(w, off, wd, 2.0, _DOOR_COLOURS[(i + k) % len(_DOOR_COLOURS)])
                   for k, (w, off, wd) in enumerate(doors)],
            distractors=distractors,
            rig=RigSpec(pitch_deg=-30.0),
            seed=100 + i,
        ))
    return scenes


def clutter_scene(seed, fraction=0.3, noise=0.005, max_boxes=40):
    """Room with random boxes added until about ``fraction`` of the depth
    pixels see an obstacle; Gaussian depth noise ``noise`` (m)."""
    from .render import BOX, cast_rays
    from ..cameras import pinhole_pixel_rays

    rng = np.random.default_rng([seed, 7])
    base = SceneSpec(name=f"clutter_{seed}", floor=FloorSpec(colour=(150, 110, 70)),
                     walls=_room(-1.5, 6.0, -3.0, 3.0, (175, 195, 215)),
                     depth_noise=noise, seed=seed)
    T = base.rig.depth_to_world()
    rays = pinhole_pixel_rays(base.rig.depth)[::8, ::8].reshape(-1, 3) @ T.rotation.T
    boxes = []
    for _ in range(max_boxes):
        cx, cy = rng.uniform(0.6, 2.8), rng.uniform(-1.3, 1.3)
        sx, sy = rng.uniform(0.15, 0.5, size=2)
        h = rng.uniform(0.1, 0.9)
        boxes.append(Box((cx - sx / 2, cy - sy / 2, 0.0), (cx + sx / 2, cy + sy / 2, h),
                         tuple(int(c) for c in rng.integers(40, 220, 3))))
        base.obstacles = boxes
        hits = cast_rays(base, T.translation, rays)
        if np.mean(hits.kind == BOX) >= fraction:
            break
    return base
