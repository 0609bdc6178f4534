"""Depth-stage floor extraction: voxel grid, RANSAC dominant plane, floor labels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .geometry import Plane

FLOOR_SIDE, HORIZON, SKY_SIDE = -1, 0, 1
HORIZON_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    colors: np.ndarray | None = None
    pixel_index: np.ndarray | None = None  # flat index of the source depth pixel

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> "PointCloud":
        return PointCloud(
            self.points[mask],
            None if self.colors is None else self.colors[mask],
            None if self.pixel_index is None else self.pixel_index[mask],
        )


@dataclass(frozen=True, eq=False)
class FloorModel:
    plane: Plane
    inlier_mask: np.ndarray
    dist_thresh: float = 0.02

    @property
    def camera_height(self) -> float:
        return self.plane.offset


@dataclass(frozen=True)
class FloorParams:
    voxel: float = 0.05
    dist_thresh: float = 0.02
    iterations: int = 200
    height_range: tuple | None = (0.5, 2.0)


def voxel_downsample(cloud: PointCloud, voxel: float) -> PointCloud:
    """One centroid per occupied voxel, in lexicographic voxel-key order."""
    if not voxel > 0:
        raise InvalidInputError(f"voxel size must be positive, got {voxel}")
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud.points / voxel).astype(np.int64)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    cent = np.stack([np.bincount(inv, weights=cloud.points[:, k]) for k in range(3)], axis=1)
    cent /= counts[:, None]
    colors = None
    if cloud.colors is not None:
        c = np.stack([np.bincount(inv, weights=cloud.colors[:, k].astype(float)) for k in range(3)], axis=1)
        colors = np.round(c / counts[:, None]).astype(np.uint8)
    return PointCloud(cent, colors)


def _fit_plane_lsq(points) -> Plane:
    c = points.mean(axis=0)
    _, _, Vt = np.linalg.svd(points - c, full_matrices=False)
    n = Vt[-1]
    return Plane(n, -float(n @ c))


def ransac_plane(cloud: PointCloud, dist_thresh=0.02, iterations=200, seed=0,
                 height_range=None, chunk=2_000_000):
    """Dominant plane by seeded 3-point RANSAC and a least-squares refit.

    Iteration ``i`` draws its sample from ``default_rng([seed, i])`` so the
    result does not depend on evaluation order. Candidates are ranked by
    inlier count (ties: lower iteration index); the first whose refit plane
    passes ``height_range`` (bounds on the plane offset) wins.
    Returns ``(plane, inlier_mask)``.
    """
    P = cloud.points
    n_pts = len(P)
    if n_pts < 3:
        raise DegenerateGeometryError(f"RANSAC needs >= 3 points, got {n_pts}")
    s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    if s[1] <= 1e-9 * max(s[0], 1e-12):
        raise DegenerateGeometryError("all points are collinear")

    samples = np.empty((iterations, 3), dtype=np.int64)
    for i in range(iterations):
        samples[i] = np.random.default_rng([seed, i]).choice(n_pts, 3, replace=False)
    a, b, c = P[samples[:, 0]], P[samples[:, 1]], P[samples[:, 2]]
    normals = np.cross(b - a, c - a)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 1e-12
    normals[ok] /= norms[ok, None]
    offsets = -np.einsum("ij,ij->i", normals, a)

    counts = np.full(iterations, -1, dtype=np.int64)
    step = max(1, chunk // max(n_pts, 1))
    for k0 in range(0, iterations, step):
        sl = slice(k0, min(iterations, k0 + step))
        d = np.abs(P @ normals[sl].T + offsets[sl])
        counts[sl] = np.where(ok[sl], (d <= dist_thresh).sum(axis=0), -1)

    for k in np.argsort(-counts, kind="stable"):
        if counts[k] < 3:
            break
        mask = np.abs(P @ normals[k] + offsets[k]) <= dist_thresh
        plane = _fit_plane_lsq(P[mask])
        mask = np.abs(plane.distance(P)) <= dist_thresh
        if mask.sum() < 3:
            continue
        if height_range is not None and not height_range[0] <= plane.offset <= height_range[1]:
            continue
        return plane, mask
    raise DegenerateGeometryError("no RANSAC candidate produced an admissible plane")


def classify_floor(cloud: PointCloud, plane: Plane, dist_thresh: float) -> np.ndarray:
    """True for floor points (boundary inclusive), False for obstacles."""
    return np.abs(plane.distance(cloud.points)) <= dist_thresh


def camera_height(plane: Plane) -> float:
    # unit normal by construction, so n0 / |n| == n0
    return float(plane.offset)


class HorizonPredicate:
    """Classifies rays against the floor plane: n.v < -eps floor-side,
    |n.v| <= eps horizon, n.v > eps sky-side."""

    def __init__(self, plane_f: Plane, eps=HORIZON_EPS):
        self.plane = plane_f
        self.normal = plane_f.normal
        self.eps = eps

    def __call__(self, directions):
        d = getattr(directions, "direction", directions)
        dot = np.asarray(d, dtype=float) @ self.normal
        out = np.where(dot < -self.eps, FLOOR_SIDE, np.where(dot > self.eps, SKY_SIDE, HORIZON))
        return int(out) if np.ndim(out) == 0 else out

    def floor_side(self, directions):
        return np.asarray(directions, dtype=float) @ self.normal < -self.eps


def horizon_predicate(plane_f: Plane) -> HorizonPredicate:
    return HorizonPredicate(plane_f)


def detect_floor(cloud: PointCloud, params: FloorParams = FloorParams(), seed=0) -> FloorModel:
    down = voxel_downsample(cloud, params.voxel)
    plane, _ = ransac_plane(down, params.dist_thresh, params.iterations, seed, params.height_range)
    return FloorModel(plane, classify_floor(cloud, plane, params.dist_thresh), params.dist_thresh)
