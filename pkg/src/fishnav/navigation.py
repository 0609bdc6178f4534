"""Egocentric free space, overhang removal, the 5x5 sector grid and spoken commands.

The user frame has its origin at the foot of the camera on the floor,
+x forward (horizontal part of the optical axis), +y to the left and +z up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cameras import OmniCameraModel, omni_pixel_rays, omni_project_points, omni_valid_mask
from .errors import DegenerateGeometryError, InvalidInputError
from .geometry import Plane, RigidTransform, normalize

UNKNOWN, FREE, BLOCKED = 0, 1, 2
MAX_RANGE = 30.0
BAND_EDGES = (1.0, 3.0, 7.0, 15.0, np.inf)
N_SECTORS = 5
SECTOR_WIDTH_DEG = 36.0
DIRECTIONS = ("Left", "Front-left", "Front", "Front-right", "Right")
TOKENS = ("1", "3", "7", "15")


def user_frame(plane_f: Plane) -> RigidTransform:
    """Camera frame -> user frame for a camera standing over ``plane_f``."""
    up = plane_f.normal
    axis = np.array([0.0, 0.0, 1.0])
    fwd = axis - (axis @ up) * up
    if np.linalg.norm(fwd) < 1e-9:
        raise DegenerateGeometryError("optical axis is vertical; forward is undefined")
    fwd = normalize(fwd)
    left = np.cross(up, fwd)
    R = np.stack([fwd, left, up])
    foot = -plane_f.offset * up
    return RigidTransform(R, -R @ foot)


@dataclass(eq=False)
class FreeSpaceMap:
    """Floor points in the user frame plus an occupancy grid.

    ``states[i, j]`` describes the cell with centre
    ``(x0 + (j + 0.5) * cell, y0 + (i + 0.5) * cell)``.
    """

    points: np.ndarray  # (N, 2)
    states: np.ndarray  # (ny, nx) uint8 of UNKNOWN / FREE / BLOCKED
    cell: float = 0.05
    x0: float = -MAX_RANGE
    y0: float = -MAX_RANGE
    transform: RigidTransform | None = None  # source camera frame -> user frame

    @classmethod
    def empty(cls, extent=MAX_RANGE, cell=0.05, transform=None) -> "FreeSpaceMap":
        n = int(np.ceil(2 * extent / cell))
        return cls(np.zeros((0, 2)), np.zeros((n, n), dtype=np.uint8), cell, -n * cell / 2, -n * cell / 2,
                   transform)

    def copy(self) -> "FreeSpaceMap":
        return FreeSpaceMap(self.points.copy(), self.states.copy(), self.cell, self.x0, self.y0,
                            self.transform)

    def cell_centres(self):
        ny, nx = self.states.shape
        x = self.x0 + (np.arange(nx) + 0.5) * self.cell
        y = self.y0 + (np.arange(ny) + 0.5) * self.cell
        return np.meshgrid(x, y)

    def cell_index(self, xy):
        """(row, col, inside) of the cells containing points ``xy``."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        col = np.floor((xy[:, 0] - self.x0) / self.cell).astype(np.int64)
        row = np.floor((xy[:, 1] - self.y0) / self.cell).astype(np.int64)
        ny, nx = self.states.shape
        inside = (row >= 0) & (row < ny) & (col >= 0) & (col < nx)
        return row, col, inside

    def points_3d(self) -> np.ndarray:
        """Free points back in the source camera frame."""
        if self.transform is None:
            raise InvalidInputError("map has no camera transform")
        p = np.column_stack([self.points, np.zeros(len(self.points))])
        return self.transform.inverse().apply(p)

    def area(self, state=FREE) -> float:
        return float((self.states == state).sum()) * self.cell ** 2


def reproject_free_space(mask, omni: OmniCameraModel, plane_f: Plane,
                         user_transform: RigidTransform | None = None, cell=0.05,
                         max_range=MAX_RANGE, fill=True) -> FreeSpaceMap:
    """Intersect every floor pixel's ray with ``plane_f`` and bin it into cells.

    Intersections further than ``max_range`` horizontally are pulled back to
    that range along their bearing. Far from the camera one pixel covers
    more than one cell, so with ``fill`` a cell is also marked free when its
    centre projects onto a floor pixel.
    """
    m = np.asarray(getattr(mask, "mask", mask), dtype=bool)
    if m.shape != (omni.height, omni.width):
        raise InvalidInputError(f"mask is {m.shape[::-1]}, model expects {omni.width}x{omni.height}")
    T = user_transform or user_frame(plane_f)
    rays = omni_pixel_rays(omni)[m & omni_valid_mask(omni)]
    cosn = -(rays @ plane_f.normal)
    rays = rays[cosn > 1e-9]
    s = plane_f.offset / cosn[cosn > 1e-9]
    xy = T.apply(rays * s[:, None])[:, :2]
    r = np.hypot(xy[:, 0], xy[:, 1])
    far = r > max_range
    xy[far] *= (max_range / r[far])[:, None]

    fs = FreeSpaceMap.empty(max_range + cell, cell, T)
    fs.points = xy
    row, col, inside = fs.cell_index(xy)
    fs.states[row[inside], col[inside]] = FREE
    if fill and len(xy):
        gx, gy = fs.cell_centres()
        # far pixels are sparse: pad the search box by a share of the range
        pad = cell + 0.1 * float(np.hypot(xy[:, 0], xy[:, 1]).max())
        lo = xy.min(axis=0) - pad
        hi = xy.max(axis=0) + pad
        near = ((np.hypot(gx, gy) <= max_range) & (gx >= lo[0]) & (gx <= hi[0])
                & (gy >= lo[1]) & (gy <= hi[1]))
        pts = np.column_stack([gx[near], gy[near], np.zeros(near.sum())])
        uv, ok = omni_project_points(omni, T.inverse().apply(pts))
        ok &= np.isfinite(uv).all(axis=1)
        u = np.round(uv[:, 0]).astype(np.int64)
        v = np.round(uv[:, 1]).astype(np.int64)
        ok &= (u >= 0) & (u < omni.width) & (v >= 0) & (v < omni.height)
        hit = np.zeros(len(pts), dtype=bool)
        hit[ok] = m[v[ok], u[ok]]
        rows, cols = np.nonzero(near)
        fs.states[rows[hit], cols[hit]] = FREE
    return fs


def mark_frontier(fs: FreeSpaceMap, max_range=MAX_RANGE) -> FreeSpaceMap:
    """Block unknown cells 4-adjacent to free ones, except at the range limit.

    The floor mask stops where something stands on the floor, so the edge
    of the free area is the best available obstacle estimate.
    """
    out = fs.copy()
    free = fs.states == FREE
    grown = np.zeros_like(free)
    grown[1:, :] |= free[:-1, :]
    grown[:-1, :] |= free[1:, :]
    grown[:, 1:] |= free[:, :-1]
    grown[:, :-1] |= free[:, 1:]
    gx, gy = fs.cell_centres()
    edge = grown & (fs.states == UNKNOWN) & (np.hypot(gx, gy) < max_range - fs.cell)
    out.states[edge] = BLOCKED
    return out


def remove_overhangs(fs: FreeSpaceMap, cloud, plane: Plane, clearance=2.0, radius=0.1,
                     min_height=0.03) -> FreeSpaceMap:
    """Block the cells under any point standing between ``min_height`` and
    ``clearance`` above ``plane``.

    ``cloud`` (a PointCloud or an (N, 3) array) and ``plane`` must be in the
    camera frame the map was built from. Cells whose centre lies within
    ``radius`` of a projected point become blocked; no cell is ever freed.
    """
    pts = np.asarray(getattr(cloud, "points", cloud), dtype=float).reshape(-1, 3)
    out = fs.copy()
    if len(pts) == 0:
        return out
    if fs.transform is None:
        raise InvalidInputError("map has no camera transform")
    h = plane.distance(pts)
    sel = (h > min_height) & (h <= clearance)
    if not sel.any():
        return out
    xy = fs.transform.apply(plane.project(pts[sel]))[:, :2]
    ny, nx = fs.states.shape
    fc = (xy[:, 0] - fs.x0) / fs.cell - 0.5  # fractional cell coordinates of the point
    fr = (xy[:, 1] - fs.y0) / fs.cell - 0.5
    k = int(np.ceil(radius / fs.cell)) + 1
    base_c = np.round(fc).astype(np.int64)
    base_r = np.round(fr).astype(np.int64)
    for di in range(-k, k + 1):
        for dj in range(-k, k + 1):
            r, c = base_r + di, base_c + dj
            d = np.hypot(r - fr, c - fc) * fs.cell
            ok = (d <= radius) & (r >= 0) & (r < ny) & (c >= 0) & (c < nx)
            out.states[r[ok], c[ok]] = BLOCKED
    return out


@dataclass(frozen=True, eq=False)
class SectorGrid:
    nearest: np.ndarray  # (5,) metres to the nearest blocked cell, inf if none
    bands: np.ndarray  # (5, 5) bool, True = free
    half_nearest: np.ndarray  # (5, 2) per half-sector, left half first
    band_edges: tuple = BAND_EDGES

    def to_dict(self):
        return {
            "band_edges": [None if np.isinf(e) else e for e in self.band_edges],
            "nearest": [None if np.isinf(d) else round(float(d), 6) for d in self.nearest],
            "bands": self.bands.astype(int).tolist(),
        }


def sector_of(angle_deg) -> np.ndarray:
    """1-based sector of bearings in degrees (0 = forward, +90 = left); 0 outside."""
    a = np.asarray(angle_deg, dtype=float)
    k = np.floor((90.0 - a) / SECTOR_WIDTH_DEG).astype(np.int64) + 1
    k = np.where(a == -90.0, N_SECTORS, k)
    return np.where((a >= -90.0) & (a <= 90.0), k, 0)


def build_sector_grid(fs: FreeSpaceMap, band_edges=BAND_EDGES) -> SectorGrid:
    """Nearest blocked range and free bands in five 36-degree wedges.

    Each wedge is split in two halves that are scanned separately and
    combined conservatively (minimum distance, both halves free). A band is
    free when every cell of it, and of every nearer band, is free.
    """
    edges = np.asarray(band_edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise InvalidInputError("band edges must be strictly increasing")
    gx, gy = fs.cell_centres()
    ang = np.degrees(np.arctan2(gy, gx)).ravel()
    rng = np.hypot(gx, gy).ravel()
    st = fs.states.ravel()
    # half-sector index 0..9 from the left
    half = np.floor((90.0 - ang) / (SECTOR_WIDTH_DEG / 2)).astype(np.int64)
    half = np.where(ang == -90.0, 2 * N_SECTORS - 1, half)
    inside = (ang >= -90.0) & (ang <= 90.0)
    band = np.searchsorted(edges, rng, side="right")
    nb = len(edges)

    half_near = np.full(2 * N_SECTORS, np.inf)
    blocked = inside & (st == BLOCKED)
    np.minimum.at(half_near, half[blocked], rng[blocked])
    not_free = np.zeros((2 * N_SECTORS, nb), dtype=bool)
    bad = inside & (st != FREE) & (band < nb)
    not_free[half[bad], band[bad]] = True
    half_free = np.logical_and.accumulate(~not_free, axis=1)

    nearest = half_near.reshape(N_SECTORS, 2).min(axis=1)
    bands = half_free.reshape(N_SECTORS, 2, nb).all(axis=1)
    return SectorGrid(nearest, bands, half_near.reshape(N_SECTORS, 2), tuple(float(e) for e in edges))


@dataclass(frozen=True)
class GuidanceCommand:
    sector: int
    direction: str
    token: str

    @property
    def text(self) -> str:
        return f"{self.direction} {self.token}"


def distance_token(distance, band_edges=BAND_EDGES):
    """Largest finite band edge not beyond ``distance``; "max" if unbounded, None under 1 m."""
    if np.isinf(distance):
        return "max"
    finite = [e for e in band_edges if np.isfinite(e) and e <= distance]
    return f"{finite[-1]:g}" if finite else None


def emit_commands(grid: SectorGrid) -> list:
    """One command per sector with at least a metre of verified free range."""
    cmds = []
    for k, d in enumerate(grid.nearest):
        tok = distance_token(float(d), grid.band_edges)
        if tok is not None:
            cmds.append(GuidanceCommand(k + 1, DIRECTIONS[k], tok))
    return cmds


def format_commands(frame_id, commands) -> str:
    """``frame_id: "Left 3"; "Front max"`` from commands or their texts."""
    return f"{frame_id}: " + "; ".join(f'"{getattr(c, "text", c)}"' for c in commands)
