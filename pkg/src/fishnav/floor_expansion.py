"""Colour-based floor growth in the fisheye image, seeded by the depth floor."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from skimage.color import rgb2hsv

from .cameras import OmniCameraModel, omni_pixel_rays, omni_project_points, omni_unproject_pixels, \
    omni_valid_mask
from .errors import EmptySeedError, InvalidInputError
from .geometry import RigidTransform
from .superpixels import SuperpixelMap

ACHROMATIC_S = 0.05
NOT_FLOOR, COLOUR_GROWN, DEPTH_SEEDED = 0, 1, 2


@dataclass(frozen=True, eq=False)
class HSHistogram:
    """Hue-saturation histogram; the extra last hue row holds achromatic pixels."""

    bins: np.ndarray  # (h_bins + 1, s_bins), L1-normalised

    @property
    def shape(self):
        return (self.bins.shape[0] - 1, self.bins.shape[1])


@dataclass(frozen=True, eq=False)
class FloorMask:
    mask: np.ndarray
    provenance: np.ndarray  # NOT_FLOOR / COLOUR_GROWN / DEPTH_SEEDED per pixel
    seed_regions: tuple = ()
    regions: tuple = ()

    @property
    def depth_seeded(self) -> np.ndarray:
        return self.provenance == DEPTH_SEEDED

    def provenance_image(self) -> np.ndarray:
        """0 = not floor, 128 = colour-grown, 255 = depth-seeded."""
        return np.array([0, 128, 255], dtype=np.uint8)[self.provenance]


@dataclass(frozen=True)
class ExpansionParams:
    target_regions: int = 2000
    compactness: float = 10.0
    slic_iterations: int = 10
    h_bins: int = 16
    s_bins: int = 16
    sim_thresh: float = 0.7
    min_hits: int = 5
    min_floor_fraction: float = 0.8
    min_coverage: float = 0.3


def hs_bin_index(rgb, bins=(16, 16)) -> np.ndarray:
    """Flat (hue row, saturation column) bin of each RGB pixel."""
    h_bins, s_bins = bins
    hsv = rgb2hsv(np.asarray(rgb, dtype=np.uint8).reshape(-1, 1, 3)).reshape(-1, 3)
    h = np.minimum((hsv[:, 0] * h_bins).astype(np.int64), h_bins - 1)
    s = np.minimum((hsv[:, 1] * s_bins).astype(np.int64), s_bins - 1)
    h = np.where(hsv[:, 1] < ACHROMATIC_S, h_bins, h)
    return h * s_bins + s


def hs_histogram(image, pixels, bins=(16, 16)) -> HSHistogram:
    """Histogram of the pixels with flat indices ``pixels`` (or a boolean mask)."""
    img = np.asarray(image).reshape(-1, 3)
    pix = np.asarray(pixels)
    if pix.dtype == bool:
        pix = np.flatnonzero(pix)
    if pix.size == 0:
        raise InvalidInputError("cannot build a histogram of an empty region")
    idx = hs_bin_index(img[pix], bins)
    nb = (bins[0] + 1) * bins[1]
    counts = np.bincount(idx, minlength=nb).astype(float)
    return HSHistogram((counts / counts.sum()).reshape(bins[0] + 1, bins[1]))


def region_histograms(image, spx: SuperpixelMap, bins=(16, 16)) -> np.ndarray:
    """(n_regions, n_bins) matrix of L1-normalised histograms, all regions at once."""
    idx = hs_bin_index(np.asarray(image).reshape(-1, 3), bins)
    nb = (bins[0] + 1) * bins[1]
    flat = spx.labels.ravel().astype(np.int64) * nb + idx
    counts = np.bincount(flat, minlength=spx.n_regions * nb).reshape(spx.n_regions, nb).astype(float)
    return counts / counts.sum(axis=1, keepdims=True)


def histogram_similarity(a: HSHistogram, b: HSHistogram) -> float:
    """Histogram intersection: 1 for identical, 0 for disjoint support."""
    if a.bins.shape != b.bins.shape:
        raise InvalidInputError(f"histogram shapes differ: {a.bins.shape} vs {b.bins.shape}")
    return float(np.minimum(a.bins, b.bins).sum())


def _project_to_labels(points, T: RigidTransform, omni: OmniCameraModel, labels):
    uv, ok = omni_project_points(omni, T.apply(np.asarray(points, dtype=float).reshape(-1, 3)))
    # a point exactly at the camera centre has no direction
    ok &= np.isfinite(uv).all(axis=1)
    col = np.clip(np.round(uv[ok, 0]).astype(np.int64), 0, omni.width - 1)
    row = np.clip(np.round(uv[ok, 1]).astype(np.int64), 0, omni.height - 1)
    return labels[row, col], row * omni.width + col


def reproject_floor_seed(floor_points, T: RigidTransform, omni: OmniCameraModel, spx: SuperpixelMap,
                         min_hits=5, observed_points=None, min_floor_fraction=0.8, min_coverage=0.0):
    """Regions of the fisheye image receiving at least ``min_hits`` depth-floor points.

    ``T`` maps depth-camera coordinates to fisheye coordinates. Two optional
    guards keep mixed regions out of the seed: with ``observed_points``
    (every valid depth point) a region needs ``min_floor_fraction`` of its
    projected points on the floor, and ``min_coverage`` is the fraction of
    the region's pixels that must receive a floor point (regions only
    grazed by the depth field of view, e.g. a wall base inside the inlier
    band, fail it). Returns a sorted tuple of region ids.
    """
    pts = np.asarray(floor_points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptySeedError("no depth floor points to reproject")
    ids, pix = _project_to_labels(pts, T, omni, spx.labels)
    hits = np.bincount(ids, minlength=spx.n_regions)
    keep = hits >= min_hits
    if min_coverage > 0:
        hit_pix = np.unique(pix)
        covered = np.bincount(spx.labels.ravel()[hit_pix], minlength=spx.n_regions)
        keep &= covered >= min_coverage * spx.counts
    if observed_points is not None and len(observed_points):
        all_ids, _ = _project_to_labels(observed_points, T, omni, spx.labels)
        seen = np.bincount(all_ids, minlength=spx.n_regions)
        keep &= hits >= min_floor_fraction * np.maximum(seen, 1)
    seeds = tuple(int(i) for i in np.flatnonzero(keep))
    if not seeds:
        raise EmptySeedError("no superpixel received enough reprojected floor points")
    return seeds


def centroid_rays(spx: SuperpixelMap, omni: OmniCameraModel):
    """Unit ray through each region centroid; NaN rows for centroids outside the fov."""
    c = spx.centroids
    rays = omni_unproject_pixels(omni, c[:, 0], c[:, 1])
    th = np.arctan2(np.hypot(rays[:, 0], rays[:, 1]), rays[:, 2])
    rays[th > omni.theta_limit] = np.nan
    return rays


def grow_floor(spx: SuperpixelMap, seeds, reference, horizon, omni: OmniCameraModel,
               sim_thresh=0.7, region_hists=None, image=None, bins=(16, 16)) -> FloorMask:
    """Breadth-first growth over superpixel adjacency from ``seeds``.

    A neighbouring region joins iff its best histogram-intersection score
    against the frozen ``reference`` set reaches ``sim_thresh`` and its
    centroid ray lies floor-side of the horizon. Pixels of accepted regions
    whose own ray is not floor-side, or that fall outside the fov, are
    dropped from the final mask.
    """
    seeds = sorted(set(int(s) for s in seeds))
    if not seeds:
        raise EmptySeedError("grow_floor needs at least one seed region")
    if region_hists is None:
        if image is None:
            raise InvalidInputError("pass either region_hists or image")
        region_hists = region_histograms(image, spx, bins)
    refs = np.stack([r.bins.ravel() if isinstance(r, HSHistogram) else np.ravel(r) for r in reference])
    if refs.shape[1] != region_hists.shape[1]:
        raise InvalidInputError("reference and region histograms have different bin counts")

    rays = centroid_rays(spx, omni)
    with np.errstate(invalid="ignore"):
        below = np.asarray(horizon.floor_side(np.nan_to_num(rays, nan=0.0))) & ~np.isnan(rays[:, 0])
    adj = spx.adjacency()

    accepted = np.zeros(spx.n_regions, dtype=bool)
    visited = np.zeros(spx.n_regions, dtype=bool)
    accepted[seeds] = True
    visited[seeds] = True
    queue = deque(seeds)
    while queue:
        r = queue.popleft()
        for nb in adj[r]:
            if visited[nb]:
                continue
            visited[nb] = True
            if not below[nb]:
                continue
            sim = np.minimum(refs, region_hists[nb]).sum(axis=1).max()
            if sim >= sim_thresh:
                accepted[nb] = True
                queue.append(nb)

    pix_ok = horizon.floor_side(omni_pixel_rays(omni)) & omni_valid_mask(omni)
    seeded = np.zeros(spx.n_regions, dtype=bool)
    seeded[seeds] = True
    prov = np.where(accepted[spx.labels] & pix_ok, COLOUR_GROWN, NOT_FLOOR).astype(np.uint8)
    prov[seeded[spx.labels] & pix_ok] = DEPTH_SEEDED
    return FloorMask(prov > 0, prov, tuple(seeds), tuple(int(i) for i in np.flatnonzero(accepted)))


def expand_floor(image, floor_points, T: RigidTransform, omni: OmniCameraModel, horizon,
                 params: ExpansionParams = ExpansionParams(), seed=0, observed_points=None,
                 spx: SuperpixelMap | None = None):
    """Superpixels, depth seeding and colour growth for one frame.

    Returns ``(FloorMask, SuperpixelMap, region_histograms)``.
    """
    from .superpixels import superpixel_segment

    image = np.asarray(image)
    if image.shape[:2] != (omni.height, omni.width):
        raise InvalidInputError(
            f"fisheye image is {image.shape[1]}x{image.shape[0]}, model expects {omni.width}x{omni.height}")
    if spx is None:
        spx = superpixel_segment(image, params.target_regions, seed, params.compactness,
                                 params.slic_iterations)
    bins = (params.h_bins, params.s_bins)
    hists = region_histograms(image, spx, bins)
    seeds = reproject_floor_seed(floor_points, T, omni, spx, params.min_hits, observed_points,
                                 params.min_floor_fraction, params.min_coverage)
    refs = [HSHistogram(hists[s].reshape(bins[0] + 1, bins[1])) for s in seeds]
    mask = grow_floor(spx, seeds, refs, horizon, omni, params.sim_thresh, region_hists=hists)
    return mask, spx, hists
