"""Perspective (depth) and polynomial omnidirectional (fisheye) camera models.

Pixel coordinates: ``u`` along image columns, ``v`` along rows, pixel
centres at integer coordinates. Camera frames: x right, y down, z forward.

Fisheye convention: with ``rho = |(u - u0, v - v0)|`` and
``f(rho) = a0 + a2 rho^2 + a3 rho^3 + a4 rho^4`` the back-projected ray is
``normalize(u - u0, v - v0, -f(rho))``. ``a0`` must be negative so that the
image centre maps to +z; rays beyond 90 degrees have ``f(rho) > 0``.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .geometry import Ray

_TABLE_SIZE = 4096


@dataclass(frozen=True)
class PinholeModel:
    focal_x: float
    focal_y: float
    center_x: float
    center_y: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal_x <= 0 or self.focal_y <= 0:
            raise InvalidInputError("focal lengths must be positive")
        if not (0 <= self.center_x <= self.width and 0 <= self.center_y <= self.height):
            raise InvalidInputError("principal point outside the image")

    @classmethod
    def from_fov(cls, width, height, hfov_deg, vfov_deg) -> "PinholeModel":
        fx = (width / 2) / np.tan(np.deg2rad(hfov_deg) / 2)
        fy = (height / 2) / np.tan(np.deg2rad(vfov_deg) / 2)
        return cls(float(fx), float(fy), width / 2, height / 2, int(width), int(height))

    def in_bounds(self, u, v):
        return (u >= -0.5) & (u <= self.width - 0.5) & (v >= -0.5) & (v <= self.height - 0.5)

    def to_dict(self):
        return {
            "type": "pinhole",
            "width": self.width,
            "height": self.height,
            "focal": [self.focal_x, self.focal_y],
            "center": [self.center_x, self.center_y],
        }


def pinhole_project(model: PinholeModel, p):
    X, Y, Z = (float(c) for c in p)
    if Z <= 0:
        return None
    u = model.focal_x * X / Z + model.center_x
    v = model.focal_y * Y / Z + model.center_y
    if not model.in_bounds(u, v):
        return None
    return (u, v)


def pinhole_project_points(model: PinholeModel, points):
    """Vectorised projection; returns ``(uv, valid)``."""
    p = np.asarray(points, dtype=float)
    Z = p[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = model.focal_x * p[..., 0] / Z + model.center_x
        v = model.focal_y * p[..., 1] / Z + model.center_y
    valid = (Z > 0) & model.in_bounds(u, v)
    return np.stack([u, v], axis=-1), valid


def pinhole_unproject(model: PinholeModel, u, v, depth) -> np.ndarray:
    if depth <= 0:
        raise InvalidInputError(f"depth must be positive, got {depth}")
    return np.array([
        (u - model.center_x) * depth / model.focal_x,
        (v - model.center_y) * depth / model.focal_y,
        float(depth),
    ])


def depth_to_points(model: PinholeModel, depth: np.ndarray):
    """Back-project a metric depth image; returns ``(points, pixel_index)``.

    Pixels with non-positive or non-finite depth are skipped. ``pixel_index``
    is the flat (row-major) index of each point's source pixel.
    """
    depth = np.asarray(depth, dtype=float)
    if depth.shape != (model.height, model.width):
        raise InvalidInputError(
            f"depth image is {depth.shape[1]}x{depth.shape[0]}, model expects "
            f"{model.width}x{model.height}")
    idx = np.flatnonzero(np.isfinite(depth) & (depth > 0))
    v, u = np.divmod(idx, model.width)
    z = depth.ravel()[idx]
    pts = np.stack([
        (u - model.center_x) * z / model.focal_x,
        (v - model.center_y) * z / model.focal_y,
        z,
    ], axis=1)
    return pts, idx


@functools.lru_cache(maxsize=8)
def pinhole_pixel_rays(model: PinholeModel) -> np.ndarray:
    """Unnormalised rays ``(x, y, 1)`` for every pixel, shape (H, W, 3)."""
    v, u = np.mgrid[0:model.height, 0:model.width].astype(float)
    rays = np.stack([(u - model.center_x) / model.focal_x,
                     (v - model.center_y) / model.focal_y,
                     np.ones_like(u)], axis=-1)
    rays.setflags(write=False)
    return rays


@functools.lru_cache(maxsize=8)
def pinhole_solid_angles(model: PinholeModel) -> np.ndarray:
    r = pinhole_pixel_rays(model)
    q = 1.0 + r[..., 0] ** 2 + r[..., 1] ** 2
    out = 1.0 / (model.focal_x * model.focal_y) / q ** 1.5
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class OmniCameraModel:
    poly_coeffs: tuple  # (a0, a2, a3, a4)
    image_center: tuple  # (u0, v0)
    width: int
    height: int
    fov: float = 182.0  # degrees, full cone angle

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.poly_coeffs)
        if len(coeffs) != 4:
            raise InvalidInputError("poly_coeffs must be (a0, a2, a3, a4)")
        if coeffs[0] >= 0:
            raise InvalidInputError("a0 must be negative (optical axis along +z)")
        object.__setattr__(self, "poly_coeffs", coeffs)
        object.__setattr__(self, "image_center", tuple(float(c) for c in self.image_center))
        if not 0 < self.fov < 360:
            raise InvalidInputError("fov must lie in (0, 360) degrees")

    def f(self, rho):
        a0, a2, a3, a4 = self.poly_coeffs
        rho = np.asarray(rho, dtype=float)
        r2 = rho * rho
        return a0 + r2 * (a2 + rho * (a3 + rho * a4))

    def theta(self, rho):
        """Angle from the optical axis of the ray at pixel radius ``rho``."""
        return np.arctan2(rho, -self.f(rho))

    @property
    def half_fov(self) -> float:
        return np.deg2rad(self.fov) / 2.0

    @functools.cached_property
    def rho_max(self) -> float:
        u0, v0 = self.image_center
        corners = [(-0.5, -0.5), (self.width - 0.5, -0.5), (-0.5, self.height - 0.5),
                   (self.width - 0.5, self.height - 0.5)]
        return float(max(np.hypot(cu - u0, cv - v0) for cu, cv in corners))

    @functools.cached_property
    def _table(self):
        rho = np.linspace(0.0, self.rho_max, _TABLE_SIZE)
        th = self.theta(rho)
        dec = np.flatnonzero(np.diff(th) <= 0)
        end = int(dec[0]) + 1 if dec.size else rho.size
        return rho[:end], th[:end]

    @functools.cached_property
    def theta_limit(self) -> float:
        """Largest projectable off-axis angle (fov and monotonicity bound)."""
        return float(min(self.half_fov, self._table[1][-1]))

    def in_bounds(self, u, v):
        return (u >= -0.5) & (u <= self.width - 0.5) & (v >= -0.5) & (v <= self.height - 0.5)

    def to_dict(self):
        return {
            "type": "omni",
            "width": self.width,
            "height": self.height,
            "poly_coeffs": list(self.poly_coeffs),
            "center": list(self.image_center),
            "fov_deg": self.fov,
        }


def equidistant_omni_model(width=1280, height=960, fov=182.0, rim_radius=None) -> OmniCameraModel:
    """Fit the polynomial to an equidistant lens whose fov edge sits at ``rim_radius``."""
    if rim_radius is None:
        rim_radius = min(width, height) / 2 - 2
    k = rim_radius / np.deg2rad(fov / 2)
    rho = np.linspace(1e-6, 1.3 * rim_radius, 2000)
    target = rho / np.tan(rho / k)
    A = np.stack([np.ones_like(rho), rho ** 2, rho ** 3, rho ** 4], axis=1)
    coeffs, *_ = np.linalg.lstsq(A, -target, rcond=None)
    return OmniCameraModel(tuple(float(c) for c in coeffs), (width / 2, height / 2),
                           int(width), int(height), float(fov))


def omni_unproject_pixels(model: OmniCameraModel, u, v) -> np.ndarray:
    """Vectorised back-projection to unit rays (no bounds check)."""
    u0, v0 = model.image_center
    x = np.asarray(u, dtype=float) - u0
    y = np.asarray(v, dtype=float) - v0
    z = -model.f(np.hypot(x, y))
    d = np.stack([x, y, z], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def omni_unproject(model: OmniCameraModel, u, v) -> Ray:
    if not model.in_bounds(u, v):
        raise InvalidInputError(f"pixel ({u}, {v}) outside the {model.width}x{model.height} image")
    return Ray(omni_unproject_pixels(model, u, v))


def omni_project_points(model: OmniCameraModel, directions, tol=1e-4):
    """Vectorised projection of ray directions; returns ``(uv, valid)``.

    The radius is found by bracketing ``theta(rho)`` in a monotone lookup
    table and refining by bisection to ``tol`` pixels.
    """
    d = np.asarray(directions, dtype=float)
    shape = d.shape[:-1]
    d = d.reshape(-1, 3)
    nxy = np.hypot(d[:, 0], d[:, 1])
    th = np.arctan2(nxy, d[:, 2])
    valid = np.isfinite(th) & (th <= model.theta_limit + 1e-12)
    rho_t, th_t = model._table
    i = np.clip(np.searchsorted(th_t, th), 1, len(th_t) - 1)
    lo = rho_t[i - 1].copy()
    hi = rho_t[i].copy()
    n_iter = int(np.ceil(np.log2(max(rho_t[1] - rho_t[0], tol) / (tol * 1e-2)))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = model.theta(mid) < th
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    rho = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(nxy > 0, rho / nxy, 0.0)
    u0, v0 = model.image_center
    u = u0 + d[:, 0] * scale
    v = v0 + d[:, 1] * scale
    valid &= model.in_bounds(u, v)
    uv = np.stack([u, v], axis=-1)
    return uv.reshape(shape + (2,)), valid.reshape(shape)


def omni_project(model: OmniCameraModel, ray):
    d = ray.direction if isinstance(ray, Ray) else np.asarray(ray, dtype=float)
    uv, ok = omni_project_points(model, d[None, :])
    if not ok[0]:
        return None
    return (float(uv[0, 0]), float(uv[0, 1]))


@functools.lru_cache(maxsize=8)
def omni_pixel_rays(model: OmniCameraModel) -> np.ndarray:
    v, u = np.mgrid[0:model.height, 0:model.width].astype(float)
    rays = omni_unproject_pixels(model, u, v)
    rays.setflags(write=False)
    return rays


@functools.lru_cache(maxsize=8)
def omni_valid_mask(model: OmniCameraModel) -> np.ndarray:
    """Pixels whose ray lies inside the field of view."""
    r = omni_pixel_rays(model)
    th = np.arctan2(np.hypot(r[..., 0], r[..., 1]), r[..., 2])
    m = th <= model.theta_limit
    m.setflags(write=False)
    return m


@functools.lru_cache(maxsize=8)
def omni_solid_angles(model: OmniCameraModel) -> np.ndarray:
    """Per-pixel solid angle (sr) from the Jacobian of the unit-ray field."""
    v, u = np.mgrid[0:model.height, 0:model.width].astype(float)
    du = omni_unproject_pixels(model, u + 0.5, v) - omni_unproject_pixels(model, u - 0.5, v)
    dv = omni_unproject_pixels(model, u, v + 0.5) - omni_unproject_pixels(model, u, v - 0.5)
    d = omni_pixel_rays(model)
    out = np.abs(np.einsum("hwk,hwk->hw", np.cross(du, dv), d))
    out.setflags(write=False)
    return out


def model_from_dict(data: dict):
    kind = data.get("type")
    try:
        if kind == "pinhole":
            fx, fy = data["focal"]
            cx, cy = data["center"]
            return PinholeModel(float(fx), float(fy), float(cx), float(cy),
                                int(data["width"]), int(data["height"]))
        if kind == "omni":
            return OmniCameraModel(tuple(data["poly_coeffs"]), tuple(data["center"]),
                                   int(data["width"]), int(data["height"]),
                                   float(data.get("fov_deg", 182.0)))
    except KeyError as e:
        raise InvalidInputError(f"intrinsics of type {kind!r} missing field {e}") from None
    raise InvalidInputError(f"unknown camera type {kind!r} (expected 'pinhole' or 'omni')")


def load_intrinsics(path):
    with open(Path(path)) as fh:
        return model_from_dict(json.load(fh))


def save_intrinsics(model, path):
    with open(Path(path), "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
