"""Floor and door metrics measured against rendered ground truth."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..cameras import PinholeModel, omni_pixel_rays, omni_solid_angles, pinhole_pixel_rays, \
    pinhole_solid_angles
from ..geometry import Plane

MAX_RANGE = 30.0


def ray_footprints(rays, omega, plane: Plane, max_range=MAX_RANGE):
    """Floor area (m^2) subtended by each pixel: omega * s^2 / cos(incidence).

    ``rays`` are unit directions from the camera centre. Pixels whose ray
    misses the plane, or meets it more than ``max_range`` metres away
    horizontally, contribute nothing.
    """
    cosn = -(np.asarray(rays) @ plane.normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = plane.offset / cosn
        area = omega * s * s / cosn
    horiz = s * np.sqrt(np.clip(1.0 - cosn * cosn, 0.0, None))
    return np.where((cosn > 1e-9) & (horiz <= max_range), area, 0.0)


def fisheye_footprints(model, plane: Plane, max_range=MAX_RANGE):
    return ray_footprints(omni_pixel_rays(model), omni_solid_angles(model), plane, max_range)


def pinhole_footprints(model: PinholeModel, plane: Plane, max_range=MAX_RANGE):
    r = pinhole_pixel_rays(model)
    unit = r / np.linalg.norm(r, axis=-1, keepdims=True)
    return ray_footprints(unit, pinhole_solid_angles(model), plane, max_range)


@dataclass(frozen=True)
class FloorMetrics:
    precision: float
    recall: float
    a1: float  # m^2 seen as floor by the depth camera
    a2: float  # m^2 of the expanded fisheye mask

    @property
    def ar(self) -> float:
        return self.a2 / self.a1 if self.a1 > 0 else float("inf")

    def to_dict(self):
        d = asdict(self)
        d["ar"] = self.ar
        return d


def mask_area(mask, model, plane: Plane, max_range=MAX_RANGE) -> float:
    fp = fisheye_footprints(model, plane, max_range)
    return float(fp[np.asarray(mask, dtype=bool)].sum())


def depth_floor_area(depth_mask, model: PinholeModel, plane_d: Plane, max_range=MAX_RANGE) -> float:
    fp = pinhole_footprints(model, plane_d, max_range)
    return float(fp[np.asarray(depth_mask, dtype=bool)].sum())


def evaluate_floor(pred, frame, plane: Plane | None = None, omni=None, depth_mask=None,
                   plane_d: Plane | None = None) -> FloorMetrics:
    """Precision/recall and areas on the floor plane, in m^2.

    ``pred`` is a FloorMask or a boolean image. ``depth_mask`` marks the
    depth pixels labelled floor by the depth stage (defaults to the
    rendered depth-floor layer); A1 integrates their footprints.
    """
    mask = np.asarray(getattr(pred, "mask", pred), dtype=bool)
    plane = plane or frame.plane_f
    omni = omni or frame.scene.rig.fisheye
    fp = fisheye_footprints(omni, plane)
    gt = frame.gt_floor_mask
    a2 = float(fp[mask].sum())
    tp = float(fp[mask & gt].sum())
    a_gt = float(fp[gt].sum())
    dm = frame.gt_depth_floor if depth_mask is None else depth_mask
    a1 = depth_floor_area(dm, frame.scene.rig.depth, plane_d or frame.plane_d)
    return FloorMetrics(
        precision=tp / a2 if a2 > 0 else 0.0,
        recall=tp / a_gt if a_gt > 0 else 0.0,
        a1=a1, a2=a2,
    )


@dataclass(frozen=True)
class DoorMetrics:
    n_doors: int
    covered: int  # doors overlapped >= 50% by some hypothesis region
    detected: int  # covered doors also overlapped >= 50% by a verified region
    false_positives: int
    timings: dict | None = None

    @property
    def hd(self) -> float:
        return 100.0 * self.covered / self.n_doors if self.n_doors else 0.0

    @property
    def dd(self) -> float | None:
        """Undefined (None) when no door was covered."""
        return 100.0 * self.detected / self.covered if self.covered else None

    def to_dict(self):
        d = asdict(self)
        d.pop("timings")
        d["hd"] = self.hd
        d["dd"] = self.dd
        return d


def door_coverage(region_mask, door_map, k) -> float:
    """Fraction of ground-truth door ``k`` (0-based) covered by ``region_mask``."""
    door = door_map == k + 1
    n = door.sum()
    return float((region_mask & door).sum() / n) if n else 0.0


def evaluate_doors(hypotheses, frame, region_masks, overlap=0.5) -> DoorMetrics:
    """Hd/Dd/false positives from hypotheses and their pixel masks.

    ``region_masks[i]`` is the boolean image of hypothesis ``i``'s region.
    A door counts as covered when some hypothesis region contains at least
    ``overlap`` of its visible pixels; a verified hypothesis is a false
    positive when fewer than ``overlap`` of its own pixels lie on doors.
    Doors with no visible pixels are not counted.
    """
    door_map = frame.gt_door_regions
    ids = [k for k in range(int(door_map.max())) if (door_map == k + 1).any()]
    covered = detected = fp = 0
    verified = [m for h, m in zip(hypotheses, region_masks) if h.verdict == "verified"]
    for k in ids:
        if any(door_coverage(m, door_map, k) >= overlap for m in region_masks):
            covered += 1
            if any(door_coverage(m, door_map, k) >= overlap for m in verified):
                detected += 1
    on_door = door_map > 0
    for m in verified:
        n = m.sum()
        if n == 0 or (m & on_door).sum() < overlap * n:
            fp += 1
    return DoorMetrics(len(ids), covered, detected, fp)


def evaluate_doors_by_kind(detection, frame, overlap=0.5) -> dict:
    """Separate metrics for two-line and one-line hypotheses plus their union.

    A kind's time is the line extraction plus that kind's growth and
    verification, since both kinds need the lines.
    """
    t = detection.timings
    out = {}
    for kind in ("two_line", "one_line"):
        sel = [i for i, h in enumerate(detection.hypotheses) if h.kind.startswith(kind)]
        m = evaluate_doors([detection.hypotheses[i] for i in sel], frame,
                           [detection.masks[i] for i in sel], overlap)
        out[kind] = DoorMetrics(m.n_doors, m.covered, m.detected, m.false_positives,
                                {"seconds": t.get("lines", 0.0) + t.get(kind, 0.0)})
    m = evaluate_doors(detection.hypotheses, frame, detection.masks, overlap)
    out["all"] = DoorMetrics(m.n_doors, m.covered, m.detected, m.false_positives,
                             {"seconds": float(sum(t.values()))})
    return out
