"""Plain-text result tables and overlay images."""
from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw

from .errors import InvalidInputError
from .navigation import N_SECTORS, SECTOR_WIDTH_DEG

FLOOR_COLUMNS = ("P", "R", "A1(m2)", "A2(m2)", "AR")
KINDS = (("two_line", "Two-line"), ("one_line", "One-line"))


def _get(m, key):
    return m[key] if isinstance(m, dict) else getattr(m, key)


def _ratio_check(name, m):
    a1, a2 = float(_get(m, "a1")), float(_get(m, "a2"))
    ar = a2 / a1 if a1 > 0 else math.inf
    stored = m.get("ar") if isinstance(m, dict) else m.ar
    if stored is not None and math.isfinite(ar) and abs(float(stored) - ar) > 1e-3:
        raise InvalidInputError(f"{name}: stored AR {stored} disagrees with A2/A1 = {ar}")
    return ar


def format_floor_table(cases) -> str:
    """``cases`` is a list of ``(name, group, metrics)``; rows are grouped by
    group in order of first appearance. All numbers use three decimals and
    AR is recomputed from A1 and A2."""
    if not cases:
        raise InvalidInputError("floor table needs at least one case")
    name_w = max(8, max(len(c[0]) for c in cases))
    head = f"{'Case':<{name_w}} " + " ".join(f"{c:>9}" for c in FLOOR_COLUMNS)
    lines = [head, "-" * len(head)]
    groups = list(dict.fromkeys(c[1] for c in cases))
    for g in groups:
        lines.append(f"[{g}]")
        for name, group, m in cases:
            if group != g:
                continue
            ar = _ratio_check(name, m)
            vals = (_get(m, "precision"), _get(m, "recall"), _get(m, "a1"), _get(m, "a2"), ar)
            lines.append(f"{name:<{name_w}} " + " ".join(f"{float(v):>9.3f}" for v in vals))
    return "\n".join(lines) + "\n"


def sigma(values):
    """Arithmetic mean of the defined values, or None."""
    vals = [float(v) for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _fmt(v, width=7):
    return f"{'-':>{width}}" if v is None else f"{v:>{width}.2f}"


def _door_fields(m):
    if isinstance(m, dict):
        return m.get("seconds"), m.get("hd"), m.get("dd")
    return (m.timings or {}).get("seconds"), m.hd, m.dd


def format_door_table(cases) -> str:
    """``cases`` is a list of ``(name, {"two_line": m, "one_line": m})`` where
    ``m`` is a DoorMetrics or a dict with ``seconds``, ``hd`` and ``dd``.
    The closing row holds the mean of every column (two decimals)."""
    if not cases:
        raise InvalidInputError("door table needs at least one case")
    name_w = max(8, max(len(c[0]) for c in cases))
    top = f"{'':<{name_w}} " + " ".join(f"{label:^23}" for _, label in KINDS)
    head = f"{'Case':<{name_w}} " + " ".join(f"{'time(s)':>7} {'Hd':>7} {'Dd':>7}" for _ in KINDS)
    lines = [top, head, "-" * len(head)]
    cols = {k: ([], [], []) for k, _ in KINDS}
    for name, per_kind in cases:
        cells = []
        for k, _ in KINDS:
            f = _door_fields(per_kind[k]) if k in per_kind else (None, None, None)
            for store, v in zip(cols[k], f):
                store.append(v)
            cells.append(" ".join(_fmt(v) for v in f))
        lines.append(f"{name:<{name_w}} " + " ".join(cells))
    lines.append("-" * len(head))
    lines.append(f"{'Σ':<{name_w}} " + " ".join(" ".join(_fmt(sigma(c)) for c in cols[k]) for k, _ in KINDS))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- overlays

def floor_overlay(image, floor_mask, alpha=0.5) -> np.ndarray:
    """Depth-seeded pixels tinted blue, colour-grown pixels tinted green."""
    img = np.asarray(image, dtype=float).copy()
    prov = getattr(floor_mask, "provenance", None)
    if prov is None:
        prov = np.asarray(floor_mask, dtype=np.uint8)
    for level, colour in ((1, (40, 220, 60)), (2, (40, 90, 255))):
        sel = prov == level
        img[sel] = (1 - alpha) * img[sel] + alpha * np.array(colour)
    return img.round().astype(np.uint8)


def door_overlay(image, detection) -> np.ndarray:
    """Verified regions green, rejected ones red, vertical lines yellow."""
    img = np.asarray(image, dtype=float).copy()
    for hyp, mask in zip(detection.hypotheses, detection.masks):
        colour = np.array((40, 220, 60) if hyp.verdict == "verified" else (230, 50, 50))
        img[mask] = 0.6 * img[mask] + 0.4 * colour
    pil = Image.fromarray(img.round().astype(np.uint8))
    draw = ImageDraw.Draw(pil)
    for ln in detection.lines:
        draw.line([tuple(map(float, p)) for p in ln.curve], fill=(255, 220, 0), width=3)
    return np.asarray(pil)


def grid_image(fs, grid=None, extent=16.0, px_per_m=25) -> np.ndarray:
    """Top-down view of the forward half plane: free white, blocked black,
    unknown grey; sector boundaries and band arcs drawn in blue."""
    size = int(2 * extent * px_per_m)
    # rows run left (+y) to right, columns run forward
    xs = (np.arange(size // 2) + 0.5) / px_per_m
    ys = extent - (np.arange(size) + 0.5) / px_per_m
    gx, gy = np.meshgrid(xs, ys)
    row, col, inside = fs.cell_index(np.column_stack([gx.ravel(), gy.ravel()]))
    st = np.zeros(gx.size, dtype=np.uint8)
    st[inside] = fs.states[row[inside], col[inside]]
    palette = np.array([[128, 128, 128], [255, 255, 255], [0, 0, 0]], dtype=np.uint8)
    img = palette[np.minimum(st, 2)].reshape(size, size // 2, 3)
    # rotate so forward points up
    img = np.ascontiguousarray(np.rot90(img, 1))
    pil = Image.fromarray(img)
    draw = ImageDraw.Draw(pil)
    cx, cy = size / 2, size // 2  # user at the bottom centre
    for k in range(N_SECTORS + 1):
        a = math.radians(90.0 - k * SECTOR_WIDTH_DEG)
        draw.line([(cx, cy), (cx - extent * px_per_m * math.sin(a), cy - extent * px_per_m * math.cos(a))],
                  fill=(40, 90, 255), width=1)
    edges = grid.band_edges if grid is not None else (1.0, 3.0, 7.0, 15.0)
    for e in edges:
        if math.isfinite(e) and e <= extent:
            r = e * px_per_m
            draw.arc([cx - r, cy - r, cx + r, cy + r], 180, 360, fill=(40, 90, 255))
    return np.asarray(pil)
