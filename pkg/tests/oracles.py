"""Independent oracles shared by the unit and acceptance tests."""
import math

import numpy as np

from fishnav.calibration import (rotation_jacobian, rotation_residuals, synthetic_correspondences,
                                 translation_jacobian, translation_residuals)
from fishnav.geometry import exp_map
from fishnav.navigation import BLOCKED, FREE

from fishnav.cameras import omni_project_points, pinhole_project_points


def _floor_grid(scene, cell, max_range):
    """World floor points (z = 0) on a ``cell`` grid covering the walls' extent."""
    xy = np.array([p for w in scene.walls for p in (w.start, w.end)], dtype=float)
    c = np.asarray(scene.rig.position[:2], dtype=float)
    lo = np.maximum(xy.min(axis=0), c - max_range)
    hi = np.minimum(xy.max(axis=0), c + max_range)
    gx = np.arange(lo[0] + cell / 2, hi[0], cell)
    gy = np.arange(lo[1] + cell / 2, hi[1], cell)
    X, Y = np.meshgrid(gx, gy)
    keep = np.hypot(X - c[0], Y - c[1]) <= max_range
    return np.column_stack([X[keep], Y[keep], np.zeros(keep.sum())])


def _plane_disc(scene, max_range, near=6.0, fine=0.02, coarse=0.05):
    """Samples of the whole z = 0 plane within ``max_range`` of the camera foot,
    with their cell areas; cells are finer where pixels are small."""
    c = np.asarray(scene.rig.position[:2], dtype=float)
    out, area = [], []
    for cell, lo, hi in ((fine, 0.0, near), (coarse, near, max_range)):
        g = np.arange(-hi + cell / 2, hi, cell)
        X, Y = np.meshgrid(g, g)
        r = np.hypot(X, Y)
        keep = (r >= lo) & (r <= hi) if lo else r <= hi
        out.append(np.column_stack([X[keep] + c[0], Y[keep] + c[1], np.zeros(keep.sum())]))
        area.append(np.full(keep.sum(), cell * cell))
    return np.concatenate(out), np.concatenate(area)


def _lookup(mask, uv, ok):
    H, W = mask.shape
    u = np.round(uv[:, 0]).astype(np.int64)
    v = np.round(uv[:, 1]).astype(np.int64)
    ok = ok & (u >= 0) & (u < W) & (v >= 0) & (v < H)
    hit = np.zeros(len(uv), bool)
    hit[ok] = mask[v[ok], u[ok]]
    return hit


def fisheye_mask_area(scene, mask, cell=0.02, max_range=30.0):
    """m^2 of floor whose fisheye pixel lies in ``mask``."""
    pts = _floor_grid(scene, cell, max_range)
    cam = scene.rig.fisheye_to_world().inverse().apply(pts)
    uv, ok = omni_project_points(scene.rig.fisheye, cam)
    return float(_lookup(mask, uv, ok).sum()) * cell * cell


def raycast_mask_area(scene, mask, camera="fisheye", max_range=30.0):
    """m^2 of the floor plane whose pixel lies in ``mask``, ignoring what the
    scene puts in front of the plane: every mask pixel counts as seeing floor."""
    pts, area = _plane_disc(scene, max_range)
    if camera == "fisheye":
        cam = scene.rig.fisheye_to_world().inverse().apply(pts)
        uv, ok = omni_project_points(scene.rig.fisheye, cam)
    else:
        cam = scene.rig.depth_to_world().inverse().apply(pts)
        uv, ok = pinhole_project_points(scene.rig.depth, cam)
    return float(area[_lookup(mask, uv, ok)].sum())


def depth_mask_area(scene, mask, cell=0.02, max_range=30.0):
    """m^2 of floor whose depth pixel lies in ``mask``."""
    pts = _floor_grid(scene, cell, max_range)
    cam = scene.rig.depth_to_world().inverse().apply(pts)
    uv, ok = pinhole_project_points(scene.rig.depth, cam)
    return float(_lookup(mask, uv, ok).sum()) * cell * cell


def _central(f, x, step=1e-6):
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        cols.append((f(x + e) - f(x - e)) / (2 * step))
    return np.stack(cols, axis=1)


def _rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-12)


def gradient_check_errors(n_configs=100, seed=0):
    """Worst relative error of the analytic Jacobians against central differences."""
    rng = np.random.default_rng(seed)
    worst_r = worst_t = 0.0
    for _ in range(n_configs):
        R = exp_map(rng.normal(size=3))
        t = rng.normal(scale=0.2, size=3)
        cs = synthetic_correspondences(exp_map(rng.normal(size=3)), rng.normal(scale=0.2, size=3), 8, rng)
        Jr = rotation_jacobian(R, cs)
        num_r = _central(lambda mu: rotation_residuals(exp_map(mu) @ R, cs), np.zeros(3))
        Jt = translation_jacobian(R, t, cs)
        num_t = _central(lambda tt: translation_residuals(R, tt, cs), t)
        worst_r = max(worst_r, _rel(Jr, num_r))
        worst_t = max(worst_t, _rel(Jt, num_t))
    return worst_r, worst_t


def random_map(seed, extent=16.0, cell=0.5):
    """Map with random cell states drawn with random state proportions."""
    from fishnav.navigation import FreeSpaceMap

    rng = np.random.default_rng(seed)
    fs = FreeSpaceMap.empty(extent, cell)
    fs.states[:] = rng.choice(3, size=fs.states.shape, p=rng.dirichlet([1, 1, 1])).astype(np.uint8)
    return fs


def oracle_grid(fs, edges=(1.0, 2.0, 3.0, np.inf)):
    """Per-cell polar scan written without the vectorised binning."""
    nearest = [math.inf] * 5
    not_free_before = [[False] * len(edges) for _ in range(5)]
    ny, nx = fs.states.shape
    for i in range(ny):
        for j in range(nx):
            x = fs.x0 + (j + 0.5) * fs.cell
            y = fs.y0 + (i + 0.5) * fs.cell
            a = math.degrees(math.atan2(y, x))
            if not -90.0 <= a <= 90.0:
                continue
            sec = 4
            for k in range(5):
                if 90.0 - 36.0 * (k + 1) < a <= 90.0 - 36.0 * k:
                    sec = k
            r = math.hypot(x, y)
            s = fs.states[i, j]
            if s == BLOCKED:
                nearest[sec] = min(nearest[sec], r)
            if s != FREE:
                for b, e in enumerate(edges):
                    if r < e:
                        not_free_before[sec][b] = True
    bands = np.array([[not v for v in row] for row in not_free_before])
    return np.array(nearest), bands
