"""File formats: PLY point clouds, 16-bit depth PNGs, 8-bit colour/mask PNGs."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError

_PLY_TYPES = {
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
    "uchar": "u1", "uint8": "u1", "char": "i1", "int8": "i1",
    "ushort": "u2", "uint16": "u2", "short": "i2", "int16": "i2",
    "uint": "u4", "uint32": "u4", "int": "i4", "int32": "i4",
}


def write_ply(path, points, colors=None, binary=True):
    points = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    fields = [("x", "f4"), ("y", "f4"), ("z", "f4")]
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {len(points)}"]
    header += [f"property {'float' if t == 'f4' else 'uchar'} {n}" for n, t in fields]
    header.append("end_header")
    data = np.empty(len(points), dtype=[(n, "<" + t) for n, t in fields])
    data["x"], data["y"], data["z"] = points.T
    if colors is not None:
        data["red"], data["green"], data["blue"] = colors.T
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(data.tobytes())
        else:
            for row in data:
                fh.write((" ".join(repr(float(x)) if i < 3 else str(int(x))
                                   for i, x in enumerate(row)) + "\n").encode("ascii"))


def read_ply(path):
    """Returns ``(points (N,3) float64, colors (N,3) uint8 or None)``."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise InvalidInputError(f"{path}: not a PLY file")
        fmt, count, props, in_vertex = None, 0, [], False
        while True:
            line = fh.readline()
            if not line:
                raise InvalidInputError(f"{path}: truncated header")
            tok = line.decode("ascii").split()
            if not tok or tok[0] in ("comment", "obj_info"):
                continue
            if tok[0] == "end_header":
                break
            if tok[0] == "format":
                fmt = tok[1]
            elif tok[0] == "element":
                in_vertex = tok[1] == "vertex"
                if in_vertex:
                    count = int(tok[2])
                elif count == 0:
                    raise InvalidInputError(f"{path}: vertex element must come first")
            elif tok[0] == "property" and in_vertex:
                if tok[1] == "list":
                    raise InvalidInputError(f"{path}: list properties on vertices unsupported")
                if tok[1] not in _PLY_TYPES:
                    raise InvalidInputError(f"{path}: unknown property type {tok[1]}")
                props.append((tok[2], _PLY_TYPES[tok[1]]))
        if fmt == "binary_little_endian":
            dtype = np.dtype([(n, "<" + t) for n, t in props])
            data = np.frombuffer(fh.read(dtype.itemsize * count), dtype=dtype, count=count)
        elif fmt == "ascii":
            rows = np.loadtxt(fh, max_rows=count, ndmin=2)
            data = {n: rows[:, i] for i, (n, _) in enumerate(props)}
        else:
            raise InvalidInputError(f"{path}: unsupported PLY format {fmt}")
    names = [n for n, _ in props]
    if not {"x", "y", "z"} <= set(names):
        raise InvalidInputError(f"{path}: missing x/y/z properties")
    pts = np.stack([np.asarray(data[k], dtype=float) for k in "xyz"], axis=1)
    colors = None
    if {"red", "green", "blue"} <= set(names):
        colors = np.stack([np.asarray(data[k]) for k in ("red", "green", "blue")], axis=1).astype(np.uint8)
    return pts, colors


def write_depth_png(path, depth_m):
    """Metric depth to 16-bit millimetres; invalid pixels become 0."""
    d = np.asarray(depth_m, dtype=float)
    mm = np.where(np.isfinite(d) & (d > 0), np.round(d * 1000.0), 0)
    Image.fromarray(np.clip(mm, 0, 65535).astype(np.uint16)).save(path)


def read_depth_png(path):
    arr = np.asarray(Image.open(path))
    if arr.ndim != 2:
        raise InvalidInputError(f"{path}: depth PNG must be single-channel")
    return arr.astype(float) / 1000.0


def write_rgb_png(path, rgb):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path)


def read_rgb_png(path):
    img = Image.open(path)
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.uint8).copy()


def write_mask_png(path, mask):
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)).save(path)


def read_mask_png(path):
    arr = np.asarray(Image.open(path).convert("L"))
    return arr > 127


def write_gray_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)


def write_json(path, data):
    """Stable JSON (sorted keys, fixed separators) so identical data gives identical bytes."""
    with open(Path(path), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(Path(path)) as fh:
        return json.load(fh)
