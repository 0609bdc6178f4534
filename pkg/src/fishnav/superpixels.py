"""Grid-seeded local k-means superpixels (SLIC-style) with 4-connected regions."""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from skimage import measure
from skimage.color import rgb2lab

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class SuperpixelMap:
    labels: np.ndarray  # (H, W) int32, ids 0..n-1
    counts: np.ndarray  # (n,)
    centroids: np.ndarray  # (n, 2) as (u, v)
    mean_colours: np.ndarray  # (n, 3) RGB

    @property
    def n_regions(self) -> int:
        return len(self.counts)

    def adjacency(self):
        """Sorted neighbour lists under 4-connectivity."""
        return region_adjacency(self.labels, self.n_regions)

    def region_mask(self, ids) -> np.ndarray:
        sel = np.zeros(self.n_regions, dtype=bool)
        sel[np.asarray(list(ids), dtype=np.int64)] = True
        return sel[self.labels]

    def pixels(self, rid) -> np.ndarray:
        return np.flatnonzero(self.labels.ravel() == rid)


@numba.njit(cache=True)
def _slic_iterate(lab, centers, step_y, step_x, compactness, n_iter):
    H, W = lab.shape[0], lab.shape[1]
    K = centers.shape[0]
    labels = np.full((H, W), -1, dtype=np.int32)
    dist = np.empty((H, W), dtype=np.float64)
    S = max(step_y, step_x)
    wxy = (compactness / S) ** 2
    for _ in range(n_iter):
        dist[:, :] = np.inf
        for k in range(K):
            cy, cx = centers[k, 0], centers[k, 1]
            y0 = max(0, int(cy - S))
            y1 = min(H, int(cy + S) + 1)
            x0 = max(0, int(cx - S))
            x1 = min(W, int(cx + S) + 1)
            cl, ca, cb = centers[k, 2], centers[k, 3], centers[k, 4]
            for y in range(y0, y1):
                dy = y - cy
                for x in range(x0, x1):
                    dx = x - cx
                    dl = lab[y, x, 0] - cl
                    da = lab[y, x, 1] - ca
                    db = lab[y, x, 2] - cb
                    d = dl * dl + da * da + db * db + wxy * (dx * dx + dy * dy)
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = k
        acc = np.zeros((K, 6))
        for y in range(H):
            for x in range(W):
                k = labels[y, x]
                if k < 0:
                    continue
                acc[k, 0] += y
                acc[k, 1] += x
                acc[k, 2] += lab[y, x, 0]
                acc[k, 3] += lab[y, x, 1]
                acc[k, 4] += lab[y, x, 2]
                acc[k, 5] += 1.0
        for k in range(K):
            if acc[k, 5] > 0:
                for j in range(5):
                    centers[k, j] = acc[k, j] / acc[k, 5]
    # pixels outside every window (only possible on degenerate grids)
    for y in range(H):
        for x in range(W):
            if labels[y, x] < 0:
                best = 0
                bd = np.inf
                for k in range(K):
                    d = (y - centers[k, 0]) ** 2 + (x - centers[k, 1]) ** 2
                    if d < bd:
                        bd = d
                        best = k
                labels[y, x] = best
    return labels


def _enforce_connectivity(labels, lab, min_size, max_size):
    """Split every label into 4-connected components, then fold components of
    at most ``min_size`` pixels into the neighbour closest in mean colour.

    Small components are handled smallest first; a merge is skipped when it
    would push the receiving region past ``max_size`` (stops merges chaining
    on noisy images). Returns ``(labels, n_regions)`` with consecutive ids
    in raster order of first appearance.
    """
    comp = measure.label(labels + 1, connectivity=1, background=0) - 1
    n = int(comp.max()) + 1
    flat = comp.ravel()
    size = np.bincount(flat, minlength=n).astype(np.int64)
    sums = np.stack([np.bincount(flat, weights=lab[..., k].ravel(), minlength=n) for k in range(3)], axis=1)
    small = np.flatnonzero(size <= min_size)
    if len(small) == 0 or n == 1:
        return comp.astype(np.int32), n

    nbrs = [set(v) for v in region_adjacency(comp, n)]
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for c in small[np.lexsort((small, size[small]))]:
        r = find(c)
        if size[r] > min_size:
            continue
        mean = sums[r] / size[r]
        best, best_d = -1, np.inf
        for o in sorted({find(o) for o in nbrs[r]} - {r}):
            if size[o] + size[r] > max_size:
                continue
            d = float(((sums[o] / size[o] - mean) ** 2).sum())
            if d < best_d:
                best, best_d = o, d
        if best < 0:
            continue
        # fold the smaller neighbour set into the larger one
        keep, drop = (best, r) if len(nbrs[best]) >= len(nbrs[r]) else (r, best)
        parent[drop] = keep
        size[keep] += size[drop]
        sums[keep] += sums[drop]
        nbrs[keep] |= nbrs[drop]
        nbrs[drop] = set()
    roots = np.array([find(i) for i in range(n)])
    merged = roots[comp]
    _, first = np.unique(merged.ravel(), return_index=True)
    order = np.argsort(first)
    remap = np.empty(n, dtype=np.int32)
    uniq = merged.ravel()[first]
    remap[uniq[order]] = np.arange(len(order), dtype=np.int32)
    return remap[merged], len(order)


def region_adjacency(labels, n_regions):
    a = labels[:, :-1].ravel()
    b = labels[:, 1:].ravel()
    c = labels[:-1, :].ravel()
    d = labels[1:, :].ravel()
    x = np.concatenate([a, c])
    y = np.concatenate([b, d])
    diff = x != y
    pairs = np.stack([np.minimum(x[diff], y[diff]), np.maximum(x[diff], y[diff])], axis=1)
    pairs = np.unique(pairs.astype(np.int64), axis=0) if len(pairs) else pairs
    adj = [[] for _ in range(n_regions)]
    for i, j in pairs:
        adj[i].append(int(j))
        adj[j].append(int(i))
    return [sorted(v) for v in adj]


def region_stats(labels, n, image):
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.int64)
    H, W = labels.shape
    v, u = np.divmod(np.arange(H * W), W)
    cu = np.bincount(flat, weights=u, minlength=n) / counts
    cv = np.bincount(flat, weights=v, minlength=n) / counts
    img = image.reshape(-1, 3).astype(float)
    cols = np.stack([np.bincount(flat, weights=img[:, k], minlength=n) for k in range(3)], axis=1)
    return counts, np.stack([cu, cv], axis=1), cols / counts[:, None]


def superpixel_segment(image, target_regions=2000, seed=0, compactness=10.0, n_iter=10) -> SuperpixelMap:
    """Partition an RGB image into about ``target_regions`` 4-connected regions.

    Centres start on a regular grid whose phase is shifted by up to a
    quarter cell, drawn from ``seed``; each is nudged to the lowest-gradient
    pixel of its 3x3 neighbourhood before clustering in (L*a*b*, x, y).
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise InvalidInputError("expected an RGB image of shape (H, W, 3)")
    H, W = image.shape[:2]
    if H < 2 or W < 2:
        raise InvalidInputError(f"image of size {W}x{H} is too small to segment")
    if not 1 <= target_regions <= H * W:
        raise InvalidInputError(f"target_regions must be in [1, {H * W}]")
    lab = rgb2lab(image.astype(np.uint8)).astype(np.float64)

    S = np.sqrt(H * W / target_regions)
    ny = max(1, int(round(H / S)))
    nx = max(1, int(round(W / S)))
    step_y, step_x = H / ny, W / nx
    rng = np.random.default_rng(seed)
    phase = rng.uniform(-0.25, 0.25, size=2)
    gy = np.clip((np.arange(ny) + 0.5 + phase[0]) * step_y, 0, H - 1)
    gx = np.clip((np.arange(nx) + 0.5 + phase[1]) * step_x, 0, W - 1)
    cy, cx = np.meshgrid(gy, gx, indexing="ij")
    cy = np.round(cy.ravel()).astype(int)
    cx = np.round(cx.ravel()).astype(int)

    grad = np.zeros((H, W))
    grad[1:-1, 1:-1] = (((lab[2:, 1:-1] - lab[:-2, 1:-1]) ** 2).sum(-1)
                        + ((lab[1:-1, 2:] - lab[1:-1, :-2]) ** 2).sum(-1))
    if min(step_y, step_x) >= 3:
        best_y, best_x = cy.copy(), cx.copy()
        best_g = grad[cy, cx].copy()
        for oy in (-1, 0, 1):
            for ox in (-1, 0, 1):
                yy = np.clip(cy + oy, 0, H - 1)
                xx = np.clip(cx + ox, 0, W - 1)
                g = grad[yy, xx]
                better = g < best_g
                best_g = np.where(better, g, best_g)
                best_y = np.where(better, yy, best_y)
                best_x = np.where(better, xx, best_x)
        cy, cx = best_y, best_x
    centers = np.column_stack([cy, cx, lab[cy, cx]]).astype(np.float64)

    raw = _slic_iterate(lab, centers, step_y, step_x, float(compactness), int(n_iter))
    min_size = max(1, int(step_y * step_x / 4))
    labels, n = _enforce_connectivity(raw, lab, min_size, int(3 * step_y * step_x))
    counts, centroids, colours = region_stats(labels, n, image)
    return SuperpixelMap(labels, counts, centroids, colours)
