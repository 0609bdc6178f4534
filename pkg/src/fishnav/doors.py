"""Door hypotheses from vertical lines in the fisheye image and their metric checks.

Heights along a vertical line are read through ``tan(elevation)`` of the
pixel ray, elevation being measured from the floor plane. For every point of
one vertical 3D line that coordinate equals ``(z - h) / d`` (``h`` camera
height, ``d`` horizontal distance to the line), an affine function of the
metric height ``z``; the vertical vanishing point sits at infinity in it and
the ratio AC/BC is the metric one.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError
from skimage import measure

from .cameras import OmniCameraModel, omni_pixel_rays, omni_project_points, omni_unproject_pixels, \
    omni_valid_mask
from .errors import DegenerateGeometryError
from .geometry import Plane, normalize, rays_plane_intersection
from .superpixels import SuperpixelMap

TWO_LINE, ONE_LINE_LEFT, ONE_LINE_RIGHT = "two_line", "one_line_left", "one_line_right"
_KIND_ORDER = {TWO_LINE: 0, ONE_LINE_LEFT: 1, ONE_LINE_RIGHT: 2}


@dataclass(frozen=True)
class DoorParams:
    width_range: tuple = (0.6, 1.4)
    door_height: float = 2.0
    cr_tol: float = 0.15
    max_floor_gap: float = 0.2
    aspect_range: tuple = (1.3, 3.4)
    sim_thresh: float = 0.7
    one_line_offset: float = 0.45  # half of a nominal 0.9 m door
    edge_thresh: float = 40.0  # Sobel magnitude; a step of 10 grey levels gives 40
    orient_tol_deg: float = 20.0
    min_chain: int = 40
    max_rms: float = 1.5
    near_line_deg: float = 2.0
    border_margin: int = 4
    max_on_floor: float = 0.5  # chains mostly on the floor are floor markings


@dataclass(frozen=True, eq=False)
class VerticalLine:
    id: int
    curve: np.ndarray  # (N, 2) pixels ordered bottom to top
    floor_point: np.ndarray  # A in the fisheye frame, on the floor plane
    floor_pixel: tuple
    horizon_point: tuple | None  # B
    plane_normal: np.ndarray  # unit normal of the vertical plane through the camera
    rms: float = 0.0

    @property
    def horizontal_direction(self) -> np.ndarray:
        return self.floor_point / np.linalg.norm(self.floor_point)


@dataclass(frozen=True)
class DoorHypothesis:
    kind: str
    lines: tuple
    region: tuple = ()
    measured_width: float | None = None
    cross_ratios: tuple = ()
    floor_gap: float | None = None
    obb_aspect: float | None = None
    verdict: str = "pending"
    reason: str | None = None

    def to_dict(self):
        return {
            "kind": self.kind, "lines": list(self.lines), "n_regions": len(self.region),
            "measured_width": self.measured_width, "cross_ratios": list(self.cross_ratios),
            "floor_gap": self.floor_gap, "obb_aspect": self.obb_aspect,
            "verdict": self.verdict, "reason": self.reason,
        }


# ---------------------------------------------------------------- line geometry

def up_vector(plane_f: Plane) -> np.ndarray:
    """Unit vertical in the camera frame (floor normal, pointing at the camera side)."""
    return plane_f.normal


def elevation_coordinate(directions, plane_f: Plane) -> np.ndarray:
    """tan(elevation above the horizon) of each ray."""
    s = np.clip(np.asarray(directions, dtype=float) @ plane_f.normal, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        return s / np.sqrt(1.0 - s * s)


def pixel_elevation_coordinate(pixels, omni: OmniCameraModel, plane_f: Plane) -> np.ndarray:
    p = np.asarray(pixels, dtype=float).reshape(-1, 2)
    return elevation_coordinate(omni_unproject_pixels(omni, p[:, 0], p[:, 1]), plane_f)


def cross_ratio(a, b, c) -> float:
    """AC/BC for three points of a line given by a 1-D coordinate, with the
    fourth point at infinity."""
    bc = c - b
    if abs(bc) < 1e-9:
        raise DegenerateGeometryError("cross ratio undefined: B and C coincide")
    return float((c - a) / bc)


def image_cross_ratio(A, B, C, omni: OmniCameraModel, plane_f: Plane) -> float:
    t = pixel_elevation_coordinate([A, B, C], omni, plane_f)
    return cross_ratio(t[0], t[1], t[2])


def expected_cross_ratio(door_height, camera_height) -> float:
    return door_height / (door_height - camera_height)


def vertical_plane_fit(rays, up):
    """Unit normal ``m`` (orthogonal to ``up``) minimising sum (m . d)^2."""
    e1 = normalize(np.cross(up, [1.0, 0.0, 0.0] if abs(up[0]) < 0.9 else [0.0, 1.0, 0.0]))
    e2 = np.cross(up, e1)
    P = np.stack([rays @ e1, rays @ e2], axis=1)
    w, V = np.linalg.eigh(P.T @ P)
    a, b = V[:, 0]
    return normalize(a * e1 + b * e2)


def _plane_directions(m, up, toward, elevations):
    """Unit rays at ``elevations`` (rad) inside the vertical plane with normal ``m``,
    on the side of ``toward``."""
    h = normalize(np.cross(m, up))
    if h @ toward < 0:
        h = -h
    el = np.asarray(elevations, dtype=float)
    return np.cos(el)[:, None] * h + np.sin(el)[:, None] * up, h


def _project_rays_onto_plane(rays, m):
    q = rays - np.outer(rays @ m, m)
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def line_from_segment(line_id, p_bottom, p_top, omni: OmniCameraModel, plane_f: Plane, samples=200):
    """VerticalLine for a known 3D vertical segment in the fisheye frame (injection path).

    The floor point is the foot of the segment's supporting line.
    """
    up = up_vector(plane_f)
    p0 = np.asarray(p_bottom, dtype=float)
    foot = p0 - plane_f.distance(p0) * up
    pts = np.linspace(p0, np.asarray(p_top, dtype=float), samples)
    uv, ok = omni_project_points(omni, pts)
    m = normalize(np.cross(up, foot))
    fp, fok = omni_project_points(omni, foot[None])
    hp, hok = omni_project_points(omni, (foot + plane_f.offset * up)[None])
    return VerticalLine(
        id=line_id, curve=uv[ok], floor_point=foot,
        floor_pixel=tuple(fp[0]) if fok[0] else None,
        horizon_point=tuple(hp[0]) if hok[0] else None,
        plane_normal=m,
    )


# ---------------------------------------------------------------- extraction

def colour_gradients(image):
    """Per pixel, the Sobel gradient of the RGB channel with the largest response."""
    img = np.asarray(image, dtype=float)
    gx = np.stack([ndimage.sobel(img[..., k], axis=1) for k in range(3)], axis=-1)
    gy = np.stack([ndimage.sobel(img[..., k], axis=0) for k in range(3)], axis=-1)
    mag2 = gx * gx + gy * gy
    best = np.argmax(mag2, axis=-1)[..., None]
    gx = np.take_along_axis(gx, best, -1)[..., 0]
    gy = np.take_along_axis(gy, best, -1)[..., 0]
    return gx, gy, np.hypot(gx, gy)


def non_maximum_suppression(gx, gy, mag):
    """Keep pixels that are maxima along their (4-way quantised) gradient direction."""
    ang = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    q = (np.round(ang / 45.0).astype(int)) % 4
    pad = np.pad(mag, 1)
    H, W = mag.shape
    c = pad[1:-1, 1:-1]
    offs = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)), 2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    keep = np.zeros_like(mag, dtype=bool)
    for k, ((dy1, dx1), (dy2, dx2)) in offs.items():
        n1 = pad[1 + dy1:1 + dy1 + H, 1 + dx1:1 + dx1 + W]
        n2 = pad[1 + dy2:1 + dy2 + H, 1 + dx2:1 + dx2 + W]
        keep |= (q == k) & (c >= n1) & (c > n2)
    return keep


def vertical_tangents(pixels, omni: OmniCameraModel, plane_f: Plane, eps=1e-3):
    """Image direction of the projected vertical through each pixel (unit 2-vectors)."""
    p = np.asarray(pixels, dtype=float)
    d = omni_unproject_pixels(omni, p[:, 0], p[:, 1])
    up = up_vector(plane_f)
    a, _ = omni_project_points(omni, d + eps * up)
    b, _ = omni_project_points(omni, d - eps * up)
    t = a - b
    n = np.linalg.norm(t, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return t / n


def _walk_to_floor(m, up, toward, el_start, floor_mask, omni, step_deg=0.1, min_deg=-85.0):
    """First floor-mask pixel met walking down the projected vertical from ``el_start``."""
    els = np.deg2rad(np.arange(np.degrees(el_start), min_deg, -step_deg))
    if len(els) == 0:
        return None
    dirs, _ = _plane_directions(m, up, toward, els)
    uv, ok = omni_project_points(omni, dirs)
    H, W = floor_mask.shape
    for (u, v), good in zip(uv, ok):
        if not good:
            continue
        c, r = int(round(u)), int(round(v))
        if floor_mask[max(r - 1, 0):min(r + 2, H), max(c - 1, 0):min(c + 2, W)].any():
            return (float(u), float(v))
    return None


def extract_vertical_lines(image, omni: OmniCameraModel, plane_f: Plane, floor_mask=None,
                           params: DoorParams = DoorParams(), injected=None):
    """Curves in the fisheye image that are projections of 3D verticals.

    Colour Sobel edges are thinned by non-maximum suppression, kept where
    the gradient is orthogonal to the local projected vertical, linked into
    8-connected chains, and each chain is fitted with a vertical plane
    through the camera. A chain is accepted when the reprojection RMS is
    below ``params.max_rms`` pixels and it has at least ``params.min_chain``
    pixels. Its floor point A comes from walking down the fitted curve to
    the first ``floor_mask`` pixel (chain bottom when no mask is given);
    chains that never meet the floor are dropped, and so are chains lying
    mostly on the floor: a floor edge pointing at the camera foot sits in a
    vertical plane through the camera too. ``injected`` lines are returned
    unchanged.
    """
    if injected is not None:
        return list(injected)
    up = up_vector(plane_f)
    gx, gy, mag = colour_gradients(image)
    edges = non_maximum_suppression(gx, gy, mag) & (mag >= params.edge_thresh)
    valid = ndimage.binary_erosion(omni_valid_mask(omni), iterations=params.border_margin)
    edges &= valid
    rr, cc = np.nonzero(edges)
    if len(rr) == 0:
        return []
    tang = vertical_tangents(np.stack([cc, rr], axis=1).astype(float), omni, plane_f)
    g = np.stack([gx[rr, cc], gy[rr, cc]], axis=1) / mag[rr, cc, None]
    # gradient orthogonal to the vertical tangent <=> edge runs along it
    vertical = np.abs(np.einsum("ij,ij->i", g, np.nan_to_num(tang))) <= np.sin(np.deg2rad(params.orient_tol_deg))
    vmask = np.zeros_like(edges)
    vmask[rr[vertical], cc[vertical]] = True
    # staircase steps of a slanted edge have diagonal gradients; bridge them
    vmask |= edges & ndimage.binary_dilation(vmask, structure=np.ones((3, 3), bool))
    chains = measure.label(vmask, connectivity=2)
    n_chain = int(chains.max())
    if n_chain == 0:
        return []
    objs = ndimage.find_objects(chains)
    near_floor = None if floor_mask is None else ndimage.binary_dilation(floor_mask, iterations=1)
    lines = []
    for k in range(n_chain):
        sl = objs[k]
        sub = chains[sl] == k + 1
        r, c = np.nonzero(sub)
        if len(r) < params.min_chain:
            continue
        r = r + sl[0].start
        c = c + sl[1].start
        if near_floor is not None and near_floor[r, c].mean() > params.max_on_floor:
            continue
        px = np.stack([c, r], axis=1).astype(float)
        rays = omni_unproject_pixels(omni, px[:, 0], px[:, 1])
        m = vertical_plane_fit(rays, up)
        for _ in range(2):
            proj, ok = omni_project_points(omni, _project_rays_onto_plane(rays, m))
            res = np.where(ok, np.linalg.norm(proj - px, axis=1), np.inf)
            inl = res <= 3.0
            if inl.sum() < params.min_chain:
                break
            m = vertical_plane_fit(rays[inl], up)
        proj, ok = omni_project_points(omni, _project_rays_onto_plane(rays, m))
        res = np.where(ok, np.linalg.norm(proj - px, axis=1), np.inf)
        rms = float(np.sqrt(np.mean(res ** 2)))
        if not np.isfinite(rms) or rms >= params.max_rms:
            continue
        t = elevation_coordinate(rays, plane_f)
        order = np.argsort(t)
        toward = normalize(rays.mean(axis=0))
        el_bottom = float(np.arctan(t[order[0]]))
        if floor_mask is not None:
            A = _walk_to_floor(m, up, toward, el_bottom, floor_mask, omni)
            if A is None:
                continue
        else:
            A = tuple(px[order[0]])
        dA = omni_unproject_pixels(omni, A[0], A[1])
        foot, _, okA = rays_plane_intersection(dA[None], plane_f)
        if not okA[0]:
            continue
        foot = foot[0]
        # snap the foot into the fitted vertical plane
        foot = foot - (foot @ m) * m
        foot = foot - plane_f.distance(foot) * up
        hb, hok = omni_project_points(omni, (foot + plane_f.offset * up)[None])
        lines.append(dict(curve=px[order], floor_point=foot, floor_pixel=(float(A[0]), float(A[1])),
                          horizon_point=tuple(float(x) for x in hb[0]) if hok[0] else None,
                          plane_normal=m, rms=rms))
    # ids follow the horizontal bearing of the floor point, left to right in the image
    lines.sort(key=lambda d: (d["floor_pixel"][0], d["floor_pixel"][1]))
    return [VerticalLine(id=i, **d) for i, d in enumerate(lines)]


def line_pair_width(a: VerticalLine, b: VerticalLine, plane_f: Plane | None = None) -> float:
    """Distance between the floor points, measured in the floor plane."""
    d = np.asarray(a.floor_point, dtype=float) - np.asarray(b.floor_point, dtype=float)
    if plane_f is not None:
        d = d - (d @ plane_f.normal) * plane_f.normal
    return float(np.linalg.norm(d))


# ---------------------------------------------------------------- hypotheses

def generate_hypotheses(lines, width_range=(0.6, 1.4), plane_f: Plane | None = None):
    """Two-line hypotheses for every pair at a door-like width; one-line
    hypotheses (both sides) for each line left unpaired."""
    lines = sorted(lines, key=lambda ln: ln.id)
    lo, hi = width_range
    out, paired = [], set()
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            w = line_pair_width(lines[i], lines[j], plane_f)
            if lo <= w <= hi:
                out.append(DoorHypothesis(TWO_LINE, (lines[i].id, lines[j].id), measured_width=w))
                paired.update((lines[i].id, lines[j].id))
    for ln in lines:
        if ln.id not in paired:
            out.append(DoorHypothesis(ONE_LINE_LEFT, (ln.id,)))
            out.append(DoorHypothesis(ONE_LINE_RIGHT, (ln.id,)))
    out.sort(key=lambda h: (_KIND_ORDER[h.kind], h.lines))
    return out


def _image_left_probe(line: VerticalLine, up, omni):
    """Horizontal unit vector perpendicular to the line's bearing that moves its
    horizon point towards smaller u."""
    base = line.floor_point
    probe = normalize(np.cross(up, line.horizontal_direction))
    uv, ok = omni_project_points(omni, np.stack([base + 0.05 * probe, base - 0.05 * probe]))
    if ok.all() and uv[0, 0] > uv[1, 0]:
        probe = -probe
    return probe


def seed_direction(hyp: DoorHypothesis, lines: dict, plane_f: Plane, omni, offset=0.45):
    """Ray towards the seed point of a hypothesis, at camera height (on the horizon)."""
    up = up_vector(plane_f)
    h = plane_f.offset
    if hyp.kind == TWO_LINE:
        a, b = (lines[i] for i in hyp.lines)
        p = 0.5 * (a.floor_point + b.floor_point) + h * up
    else:
        ln = lines[hyp.lines[0]]
        probe = _image_left_probe(ln, up, omni)
        sign = 1.0 if hyp.kind == ONE_LINE_LEFT else -1.0
        p = ln.floor_point + h * up + sign * offset * probe
    return normalize(p)


def _hypothesis_side_ok(rays, hyp, lines, plane_f, omni):
    """Boolean per ray: inside the lateral bounds set by the hypothesis lines."""
    up = up_vector(plane_f)
    if hyp.kind == TWO_LINE:
        a, b = (lines[i] for i in hyp.lines)
        mid = normalize(0.5 * (a.floor_point + b.floor_point))
        sa = np.sign(mid @ a.plane_normal)
        sb = np.sign(mid @ b.plane_normal)
        return (sa * (rays @ a.plane_normal) >= 0) & (sb * (rays @ b.plane_normal) >= 0)
    ln = lines[hyp.lines[0]]
    probe = _image_left_probe(ln, up, omni)
    sign = 1.0 if hyp.kind == ONE_LINE_LEFT else -1.0
    s = np.sign((sign * probe) @ ln.plane_normal)
    fwd = rays @ ln.horizontal_direction > 0
    return (s * (rays @ ln.plane_normal) >= 0) & fwd


def grow_door_region(hyp: DoorHypothesis, lines, spx: SuperpixelMap, plane_f: Plane, omni,
                     region_hists, floor_regions=(), sim_thresh=0.7, offset=0.45):
    """Colour region of a hypothesis: seeded on the horizon between (or beside)
    its lines and grown by histogram similarity within the lines' lateral bounds.

    Returns ``(region ids, hypothesis)``; the hypothesis comes back rejected
    when the seed is unusable.
    """
    lines = {ln.id: ln for ln in lines} if not isinstance(lines, dict) else lines
    d = seed_direction(hyp, lines, plane_f, omni, offset)
    uv, ok = omni_project_points(omni, d[None])
    if not ok[0] or not omni_valid_mask(omni)[int(round(uv[0, 1])), int(round(uv[0, 0]))]:
        return (), replace(hyp, verdict="rejected", reason="seed-outside")
    seed = int(spx.labels[int(round(uv[0, 1])), int(round(uv[0, 0]))])
    if seed in set(floor_regions):
        return (), replace(hyp, verdict="rejected", reason="floor-seed")
    c = spx.centroids
    crays = omni_unproject_pixels(omni, c[:, 0], c[:, 1])
    inside = _hypothesis_side_ok(crays, hyp, lines, plane_f, omni)
    floor_set = np.zeros(spx.n_regions, dtype=bool)
    floor_set[list(floor_regions)] = True
    ref = region_hists[seed]
    adj = spx.adjacency()
    accepted = {seed}
    visited = np.zeros(spx.n_regions, dtype=bool)
    visited[seed] = True
    queue = deque([seed])
    while queue:
        r = queue.popleft()
        for nb in adj[r]:
            if visited[nb]:
                continue
            visited[nb] = True
            if not inside[nb] or floor_set[nb]:
                continue
            if np.minimum(ref, region_hists[nb]).sum() >= sim_thresh:
                accepted.add(nb)
                queue.append(nb)
    return tuple(sorted(accepted)), hyp


# ---------------------------------------------------------------- verification

def _wall_plane(hyp, lines, plane_f):
    """Vertical plane carrying the hypothesised door: through both floor points,
    or fronto-parallel through the single line's floor point."""
    up = up_vector(plane_f)
    if hyp.kind == TWO_LINE:
        a, b = (lines[i] for i in hyp.lines)
        along = normalize(b.floor_point - a.floor_point)
        along = normalize(along - (along @ up) * up)
        p0 = a.floor_point
    else:
        ln = lines[hyp.lines[0]]
        along = normalize(np.cross(up, ln.horizontal_direction))
        p0 = ln.floor_point
    normal = normalize(np.cross(along, up))
    return Plane(normal, -float(normal @ p0)), along, p0


def region_wall_coordinates(pixels_rc, hyp, lines, plane_f, omni):
    """(s along the wall, z above the floor) of region pixels on the hypothesis wall plane."""
    wall, along, p0 = _wall_plane(hyp, lines, plane_f)
    rays = omni_pixel_rays(omni)[pixels_rc[0], pixels_rc[1]]
    pts, _, ok = rays_plane_intersection(rays, wall)
    pts = pts[ok]
    s = (pts - p0) @ along
    z = plane_f.distance(pts)
    return np.stack([s, z], axis=1)


def min_area_rectangle(points):
    """Sides (a, b) of the minimum-area enclosing rectangle and the unit
    direction of side ``a``."""
    P = np.asarray(points, dtype=float)
    try:
        hull = P[ConvexHull(P).vertices]
    except (QhullError, ValueError):
        hull = P
    if len(hull) < 2:
        return 0.0, 0.0, np.array([1.0, 0.0])
    edges = np.diff(np.vstack([hull, hull[:1]]), axis=0)
    ang = np.unique(np.mod(np.arctan2(edges[:, 1], edges[:, 0]), np.pi / 2))
    best = None
    for a in ang:
        u = np.array([np.cos(a), np.sin(a)])
        v = np.array([-u[1], u[0]])
        pu, pv = hull @ u, hull @ v
        w, h = pu.max() - pu.min(), pv.max() - pv.min()
        if best is None or w * h < best[0]:
            best = (w * h, w, h, u)
    return best[1], best[2], best[3]


def obb_aspect(wall_coords) -> float:
    """Height over width of the oriented bounding box, height being the side
    closer to the vertical."""
    a, b, u = min_area_rectangle(wall_coords)
    if abs(u[1]) >= abs(u[0]):
        height, width = a, b
    else:
        height, width = b, a
    return float(height / width) if width > 0 else float("inf")


def _top_near_line(region_rays, line: VerticalLine, plane_f: Plane, near_deg):
    """tan(elevation) of the highest region pixel within ``near_deg`` of the line's bearing."""
    up = up_vector(plane_f)
    horiz = region_rays - np.outer(region_rays @ up, up)
    nh = np.linalg.norm(horiz, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lateral = np.abs(horiz @ line.plane_normal) / nh
        fwd = (horiz @ line.horizontal_direction) > 0
    near = (lateral <= np.sin(np.deg2rad(near_deg))) & fwd
    if not near.any():
        return None
    return float(elevation_coordinate(region_rays[near], plane_f).max())


def verify_hypothesis(hyp: DoorHypothesis, region_mask, lines, plane_f: Plane, omni,
                      params: DoorParams = DoorParams()) -> DoorHypothesis:
    """Cross-ratio height check, floor-gap check, then (one-line only) the
    OBB aspect check; the first failure sets the rejection reason."""
    if hyp.verdict == "rejected":
        return hyp
    lines = {ln.id: ln for ln in lines} if not isinstance(lines, dict) else lines
    rc = np.nonzero(region_mask)
    if len(rc[0]) == 0:
        return replace(hyp, verdict="rejected", reason="empty-region")
    rays = omni_pixel_rays(omni)[rc[0], rc[1]]
    h = plane_f.offset
    expected = expected_cross_ratio(params.door_height, h)
    crs = []
    for lid in hyp.lines:
        ln = lines[lid]
        tA = float(elevation_coordinate(normalize(ln.floor_point)[None], plane_f)[0])
        tC = _top_near_line(rays, ln, plane_f, params.near_line_deg)
        if tC is None or abs(tC) < 1e-9:
            return replace(hyp, cross_ratios=tuple(crs), verdict="rejected", reason="cr")
        crs.append(cross_ratio(tA, 0.0, tC))
    hyp = replace(hyp, cross_ratios=tuple(crs))
    if any(abs(cr / expected - 1.0) > params.cr_tol for cr in crs):
        return replace(hyp, verdict="rejected", reason="cr")
    sz = region_wall_coordinates(rc, hyp, lines, plane_f, omni)
    if len(sz) == 0:
        return replace(hyp, verdict="rejected", reason="floor-gap")
    gap = max(0.0, float(sz[:, 1].min()))
    hyp = replace(hyp, floor_gap=gap)
    if gap > params.max_floor_gap:
        return replace(hyp, verdict="rejected", reason="floor-gap")
    if hyp.kind != TWO_LINE:
        aspect = obb_aspect(sz)
        hyp = replace(hyp, obb_aspect=aspect)
        if not params.aspect_range[0] <= aspect <= params.aspect_range[1]:
            return replace(hyp, verdict="rejected", reason="obb-aspect")
    return replace(hyp, verdict="verified", reason=None)


@dataclass
class DoorDetection:
    lines: list
    hypotheses: list
    masks: list  # per hypothesis boolean image (empty regions give all-False)
    timings: dict = field(default_factory=dict)

    @property
    def verified(self):
        return [h for h in self.hypotheses if h.verdict == "verified"]

    def summary(self):
        out = {}
        for kind in (TWO_LINE, "one_line"):
            hs = [h for h in self.hypotheses if h.kind.startswith(kind)]
            out[kind] = {"hypotheses": len(hs), "verified": sum(h.verdict == "verified" for h in hs)}
        return out


def detect_doors(image, spx: SuperpixelMap, region_hists, floor_mask, plane_f: Plane, omni,
                 params: DoorParams = DoorParams(), injected_lines=None) -> DoorDetection:
    """Vertical lines, hypotheses, region growth and verification for one frame.

    ``floor_mask`` is the expanded FloorMask; timings are wall-clock seconds
    for line extraction and for each hypothesis kind.
    """
    t0 = time.perf_counter()
    fmask = np.asarray(getattr(floor_mask, "mask", floor_mask), dtype=bool)
    lines = extract_vertical_lines(image, omni, plane_f, fmask, params, injected_lines)
    t_lines = time.perf_counter() - t0
    hyps = generate_hypotheses(lines, params.width_range, plane_f)
    floor_regions = tuple(getattr(floor_mask, "regions", ()))
    by_id = {ln.id: ln for ln in lines}
    out, masks = [], []
    timings = {"lines": t_lines, TWO_LINE: 0.0, "one_line": 0.0}
    for hyp in hyps:
        t1 = time.perf_counter()
        region, hyp = grow_door_region(hyp, by_id, spx, plane_f, omni, region_hists, floor_regions,
                                       params.sim_thresh, params.one_line_offset)
        mask = spx.region_mask(region) if region else np.zeros(spx.labels.shape, dtype=bool)
        hyp = verify_hypothesis(replace(hyp, region=region), mask, by_id, plane_f, omni, params)
        timings[TWO_LINE if hyp.kind == TWO_LINE else "one_line"] += time.perf_counter() - t1
        out.append(hyp)
        masks.append(mask)
    return DoorDetection(lines, out, masks, timings)
