"""3D primitives: rotations, rigid transforms, planes and rays.

Conventions: angles are radians, lengths are meters. A plane is stored as a
unit normal ``n`` and offset ``n0`` with ``n . p + n0 = 0`` and ``n0 >= 0``,
so the origin of the frame the plane is expressed in lies on the
non-negative side and ``n0`` is its distance to the plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError

PARALLEL_EPS = 1e-9


def hat(w) -> np.ndarray:
    """Skew-symmetric matrix with ``hat(w) @ x == cross(w, x)``."""
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(mu) -> np.ndarray:
    """Rodrigues formula: rotation by angle |mu| about mu/|mu|."""
    mu = np.asarray(mu, dtype=float)
    th = float(np.linalg.norm(mu))
    K = hat(mu)
    if th < 1e-8:
        # second-order Taylor; error O(th^3)
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(th) / th
    b = (1.0 - np.cos(th)) / (th * th)
    return np.eye(3) + a * K + b * (K @ K)


def log_map(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    c = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    th = float(np.arccos(c))
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if th < 1e-8:
        return 0.5 * w
    if np.pi - th < 1e-6:
        # near pi the antisymmetric part vanishes; recover the axis from R + I
        M = (R + np.eye(3)) * 0.5
        k = int(np.argmax(np.diag(M)))
        axis = M[:, k] / np.sqrt(max(M[k, k], 1e-300))
        return axis / np.linalg.norm(axis) * th
    return w * (th / (2.0 * np.sin(th)))


def geodesic_distance(Ra, Rb) -> float:
    """Angle (rad) of the relative rotation Ra^T Rb."""
    return float(np.linalg.norm(log_map(np.asarray(Ra).T @ np.asarray(Rb))))


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def normalize(v, axis=-1) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    return v / n


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``p' = rotation @ p + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-6 or np.linalg.det(R) < 0:
            raise InvalidInputError("rotation is not a proper orthonormal matrix")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, M) -> "RigidTransform":
        M = np.asarray(M, dtype=float)
        if M.shape == (16,):
            M = M.reshape(4, 4)
        if M.shape != (4, 4):
            raise InvalidInputError(f"expected a 4x4 matrix, got shape {M.shape}")
        return cls(M[:3, :3], M[:3, 3])

    def as_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self * other``: apply ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    __matmul__ = compose

    def apply(self, points) -> np.ndarray:
        """Transform one point (3,) or a stack of points (N, 3)."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_direction(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def __repr__(self):
        return f"RigidTransform(R={self.rotation.tolist()}, t={self.translation.tolist()})"


def transform_point(T: RigidTransform, p) -> np.ndarray:
    """Homogeneous ``[R t; 0 1] [p; 1]``, returned in Cartesian form."""
    ph = np.append(np.asarray(p, dtype=float), 1.0)
    return (T.as_matrix() @ ph)[:3]


@dataclass(frozen=True, eq=False)
class Plane:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.array(self.normal, dtype=float).reshape(3)
        d = float(self.offset)
        norm = float(np.linalg.norm(n))
        if not np.isfinite(norm) or norm < 1e-12 or not np.isfinite(d):
            raise DegenerateGeometryError("plane normal must be finite and non-zero")
        n, d = n / norm, d / norm
        if d < 0.0:
            n, d = -n, -d
        elif d == 0.0:
            # origin on the plane: fix the sign by the first non-zero component
            k = int(np.argmax(np.abs(n) > 1e-12))
            if n[k] < 0:
                n = -n
            d = 0.0
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", d)

    @classmethod
    def from_coefficients(cls, a, b, c, d) -> "Plane":
        return cls(np.array([a, b, c], dtype=float), d)

    @classmethod
    def from_points(cls, p0, p1, p2) -> "Plane":
        p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
        n = np.cross(p1 - p0, p2 - p0)
        if np.linalg.norm(n) < 1e-12:
            raise DegenerateGeometryError("collinear points do not define a plane")
        return cls(n, -float(n @ p0))

    def coefficients(self) -> np.ndarray:
        return np.append(self.normal, self.offset)

    def distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal + self.offset

    def transformed(self, T: RigidTransform) -> "Plane":
        """The same physical plane expressed in the frame ``T`` maps into."""
        n = T.rotation @ self.normal
        return Plane(n, self.offset - float(n @ T.translation))

    def project(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p - np.multiply.outer(self.distance(p), self.normal)

    def basis(self):
        """Two unit vectors spanning the plane, orthogonal to the normal."""
        n = self.normal
        a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = normalize(np.cross(n, a))
        return e1, np.cross(n, e1)

    def __repr__(self):
        return f"Plane(n={self.normal.tolist()}, n0={self.offset:.6g})"


@dataclass(frozen=True, eq=False)
class Ray:
    direction: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        d = np.array(self.direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if n < 1e-15:
            raise InvalidInputError("ray direction must be non-zero")
        d = d / n
        o = np.array(self.origin, dtype=float).reshape(3)
        d.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "origin", o)

    def at(self, s: float) -> np.ndarray:
        return self.origin + s * self.direction


def point_plane_distance(p, plane: Plane) -> float:
    return float(np.asarray(p, dtype=float) @ plane.normal + plane.offset)


def ray_plane_intersection(ray: Ray, plane: Plane):
    """First intersection in front of the ray origin, or ``None``."""
    denom = float(plane.normal @ ray.direction)
    if abs(denom) < PARALLEL_EPS:
        return None
    s = -(float(plane.normal @ ray.origin) + plane.offset) / denom
    if s <= 0.0:
        return None
    return ray.at(s)


def rays_plane_intersection(directions, plane: Plane, origin=None):
    """Vectorised ray/plane intersection.

    Returns ``(points, s, valid)`` where ``s`` is the ray parameter; invalid
    entries (parallel or behind) have ``s = inf`` and NaN points.
    """
    d = np.asarray(directions, dtype=float)
    o = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    denom = d @ plane.normal
    num = -(float(plane.normal @ o) + plane.offset)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = num / denom
    valid = (np.abs(denom) >= PARALLEL_EPS) & (s > 0.0)
    s = np.where(valid, s, np.inf)
    pts = np.where(valid[..., None], o + d * np.where(valid, s, 0.0)[..., None], np.nan)
    return pts, s, valid
