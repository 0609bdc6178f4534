"""Raycasting renderer producing depth + fisheye frames with exact ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cameras import omni_pixel_rays, omni_project_points, omni_valid_mask, pinhole_pixel_rays
from ..floor_detection import PointCloud
from ..geometry import Plane
from .metrics import MAX_RANGE, fisheye_footprints
from .scene import SceneSpec

MISS, FLOOR, WALL, BOX = 0, 1, 2, 3


@dataclass
class Hits:
    t: np.ndarray
    kind: np.ndarray
    obj: np.ndarray
    points: np.ndarray


def _floor_pieces(scene: SceneSpec):
    """World-frame floor planes with the x-interval each one covers."""
    fl = scene.floor
    if fl.slope_start is None or fl.slope_deg == 0.0:
        return [(np.array([0.0, 0.0, 1.0]), np.zeros(3), -np.inf, np.inf)]
    s = np.deg2rad(fl.slope_deg)
    p0 = np.array([fl.slope_start, 0.0, 0.0])
    return [
        (np.array([0.0, 0.0, 1.0]), np.zeros(3), -np.inf, fl.slope_start),
        (np.array([-np.sin(s), 0.0, np.cos(s)]), p0, fl.slope_start, np.inf),
    ]


def cast_rays(scene: SceneSpec, origin, dirs) -> Hits:
    """Nearest intersection of each world-frame ray with the scene."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(dirs, dtype=float)
    n = len(d)
    best = np.full(n, np.inf)
    kind = np.zeros(n, dtype=np.int8)
    obj = np.full(n, -1, dtype=np.int32)

    def take(t, k, i):
        closer = t < best
        best[closer] = t[closer]
        kind[closer] = k
        obj[closer] = i

    with np.errstate(divide="ignore", invalid="ignore"):
        for i, (nrm, p0, x_lo, x_hi) in enumerate(_floor_pieces(scene)):
            den = d @ nrm
            t = -((o - p0) @ nrm) / den
            x = o[0] + t * d[:, 0]
            t = np.where((den < -1e-12) & (t > 1e-9) & (x >= x_lo) & (x < x_hi), t, np.inf)
            take(t, FLOOR, i)

        for i, w in enumerate(scene.walls):
            s0 = np.array(w.start, dtype=float)
            s1 = np.array(w.end, dtype=float)
            u_dir = (s1 - s0) / w.length
            nrm = np.array([-u_dir[1], u_dir[0]])
            den = d[:, :2] @ nrm
            t = ((s0 - o[:2]) @ nrm) / den
            px = o[:2] + t[:, None] * d[:, :2]
            u = (px - s0) @ u_dir
            z = o[2] + t * d[:, 2]
            ok = (np.abs(den) > 1e-12) & (t > 1e-9) & (u >= 0) & (u <= w.length) & (z >= w.base) & (z <= w.height)
            take(np.where(ok, t, np.inf), WALL, i)

        for i, b in enumerate(scene.obstacles):
            lo = (np.asarray(b.min, dtype=float) - o) / d
            hi = (np.asarray(b.max, dtype=float) - o) / d
            tmin = np.nanmax(np.minimum(lo, hi), axis=1)
            tmax = np.nanmin(np.maximum(lo, hi), axis=1)
            ok = (tmax >= tmin) & (tmax > 1e-9)
            t = np.where(ok, np.where(tmin > 1e-9, tmin, tmax), np.inf)
            take(t, BOX, i)

    pts = o + d * np.where(np.isfinite(best), best, 0.0)[:, None]
    return Hits(best, kind, obj, pts)


def _decal_lookup(scene: SceneSpec, hits: Hits):
    """Per-hit door index and distractor index (-1 when none)."""
    door = np.full(len(hits.t), -1, dtype=np.int32)
    distr = np.full(len(hits.t), -1, dtype=np.int32)
    wall_ids = {w.id: i for i, w in enumerate(scene.walls)}
    on_wall = hits.kind == WALL
    for table, out in ((scene.doors, door), (scene.distractors, distr)):
        for k, dec in enumerate(table):
            wi = wall_ids[dec.wall]
            w = scene.walls[wi]
            sel = on_wall & (hits.obj == wi)
            if not sel.any():
                continue
            s0 = np.array(w.start, dtype=float)
            u_dir = (np.array(w.end, dtype=float) - s0) / w.length
            p = hits.points[sel]
            u = (p[:, :2] - s0) @ u_dir
            z = p[:, 2]
            inside = (u >= dec.offset) & (u <= dec.offset + dec.width) & \
                     (z >= dec.elevation) & (z <= dec.elevation + dec.height)
            idx = np.flatnonzero(sel)[inside]
            out[idx] = k
    return door, distr


def shade(scene: SceneSpec, hits: Hits):
    """Flat albedo times the scene illumination, quantised to 8 bits."""
    n = len(hits.t)
    col = np.tile(np.asarray(scene.background, dtype=float), (n, 1))
    fl = scene.floor
    m = hits.kind == FLOOR
    col[m] = fl.colour
    if fl.checker_colour is not None and m.any():
        p = hits.points[m]
        cell = (np.floor(p[:, 0] / fl.checker_size) + np.floor(p[:, 1] / fl.checker_size)).astype(np.int64)
        alt = (cell % 2) == 1
        sub = col[m]
        sub[alt] = fl.checker_colour
        col[m] = sub
    for i, w in enumerate(scene.walls):
        col[(hits.kind == WALL) & (hits.obj == i)] = w.colour
    for i, b in enumerate(scene.obstacles):
        col[(hits.kind == BOX) & (hits.obj == i)] = b.colour
    door, distr = _decal_lookup(scene, hits)
    for k, dec in enumerate(scene.distractors):
        col[distr == k] = dec.colour
    for k, dec in enumerate(scene.doors):
        col[door == k] = dec.colour
    lit = col * scene.illumination
    lit[hits.kind == MISS] = scene.background
    return np.clip(np.round(lit), 0, 255).astype(np.uint8), door, distr


@dataclass
class RenderedFrame:
    scene_name: str
    depth: np.ndarray  # metres, 0 = invalid
    depth_rgb: np.ndarray
    cloud: PointCloud
    fisheye: np.ndarray
    valid: np.ndarray  # fisheye pixels inside the fov
    gt_floor_mask: np.ndarray
    gt_door_regions: np.ndarray  # 0 = none, k + 1 = door k
    gt_distractor_regions: np.ndarray
    gt_depth_floor: np.ndarray  # depth pixels whose first hit is the floor
    gt_vertical_lines: list = field(default_factory=list)
    gt_visible_floor_area: float = 0.0
    plane_f: Plane | None = None  # true floor plane in the fisheye frame
    plane_d: Plane | None = None  # ... and in the depth frame
    camera_height: float = 0.0
    scene: SceneSpec | None = None


def render_depth(scene: SceneSpec):
    """Depth image (metres, 0 beyond ``depth_max``), its RGB, the cloud and the floor layer."""
    cam = scene.rig.depth
    T = scene.rig.depth_to_world()
    rays = pinhole_pixel_rays(cam).reshape(-1, 3)
    hits = cast_rays(scene, T.translation, rays @ T.rotation.T)
    # rays have unit z in the camera frame, so the ray parameter is the depth
    z = hits.t.copy()
    if scene.depth_noise > 0:
        rng = np.random.default_rng([scene.seed, 1])
        z = z + rng.normal(0.0, scene.depth_noise, size=z.shape)
    ok = np.isfinite(z) & (z > 0) & (z <= scene.depth_max)
    depth = np.where(ok, z, 0.0).reshape(cam.height, cam.width)
    rgb, _, _ = shade(scene, hits)
    idx = np.flatnonzero(ok)
    pts = rays[idx] * z[idx, None]
    cloud = PointCloud(pts, rgb[idx], idx)
    gt_floor = ((hits.kind == FLOOR) & ok).reshape(cam.height, cam.width)
    return depth, rgb.reshape(cam.height, cam.width, 3), cloud, gt_floor


def render_fisheye(scene: SceneSpec):
    cam = scene.rig.fisheye
    T = scene.rig.fisheye_to_world()
    valid = omni_valid_mask(cam)
    rays = omni_pixel_rays(cam)[valid]
    hits = cast_rays(scene, T.translation, rays @ T.rotation.T)
    rgb_v, door_v, distr_v = shade(scene, hits)
    H, W = cam.height, cam.width
    rgb = np.zeros((H, W, 3), dtype=np.uint8)
    rgb[valid] = rgb_v
    floor = np.zeros((H, W), dtype=bool)
    floor[valid] = hits.kind == FLOOR
    doors = np.zeros((H, W), dtype=np.int16)
    doors[valid] = door_v + 1
    distr = np.zeros((H, W), dtype=np.int16)
    distr[valid] = distr_v + 1
    return rgb, valid, floor, doors, distr


def true_planes(scene: SceneSpec):
    world_floor = Plane(np.array([0.0, 0.0, 1.0]), 0.0)
    Tf = scene.rig.fisheye_to_world()
    Td = scene.rig.depth_to_world()
    # a plane in world coordinates re-expressed in the camera frame: apply world->camera
    return world_floor.transformed(Tf.inverse()), world_floor.transformed(Td.inverse())


def vertical_line_segments(scene: SceneSpec):
    """3D vertical edges of decals and wall ends, in world and fisheye frames."""
    Tfw = scene.rig.fisheye_to_world().inverse()
    out = []

    def add(kind, ident, xy, z0, z1):
        p0 = np.array([xy[0], xy[1], z0])
        p1 = np.array([xy[0], xy[1], z1])
        out.append({"kind": kind, "id": ident, "world": [p0.tolist(), p1.tolist()],
                    "fisheye": [Tfw.apply(p0).tolist(), Tfw.apply(p1).tolist()]})

    for table, kind in ((scene.doors, "door"), (scene.distractors, None)):
        for k, dec in enumerate(table):
            w = scene.wall(dec.wall)
            s0 = np.array(w.start, dtype=float)
            u_dir = (np.array(w.end, dtype=float) - s0) / w.length
            for side, u in (("a", dec.offset), ("b", dec.offset + dec.width)):
                add(kind or dec.kind, f"{k}{side}", s0 + u * u_dir, dec.elevation,
                    dec.elevation + dec.height)
    for w in scene.walls:
        add("wall_edge", f"{w.id}s", w.start, w.base, w.height)
        add("wall_edge", f"{w.id}e", w.end, w.base, w.height)
    return out


def render_scene(scene: SceneSpec) -> RenderedFrame:
    depth, depth_rgb, cloud, gt_depth_floor = render_depth(scene)
    rgb, valid, floor, doors, distr = render_fisheye(scene)
    plane_f, plane_d = true_planes(scene)
    area = float(fisheye_footprints(scene.rig.fisheye, plane_f, MAX_RANGE)[floor].sum())
    return RenderedFrame(
        scene_name=scene.name, depth=depth, depth_rgb=depth_rgb, cloud=cloud, fisheye=rgb,
        valid=valid, gt_floor_mask=floor, gt_door_regions=doors, gt_distractor_regions=distr,
        gt_depth_floor=gt_depth_floor, gt_vertical_lines=vertical_line_segments(scene),
        gt_visible_floor_area=area, plane_f=plane_f, plane_d=plane_d,
        camera_height=plane_f.offset, scene=scene,
    )


def project_world_points(scene: SceneSpec, points_world):
    """Fisheye pixels of world points (for overlays and tests)."""
    Tfw = scene.rig.fisheye_to_world().inverse()
    return omni_project_points(scene.rig.fisheye, Tfw.apply(points_world))
