"""Depth-to-fisheye extrinsic calibration from 3D line / interpretation-plane pairs.

Each correspondence pairs a 3D line in the depth frame (point ``p``, unit
direction ``v``) with the unit normal ``n`` of the plane through the fisheye
centre that contains the image of the same line. At the true transform
``n . R v = 0`` and ``n . (R p + t) = 0``. Rotation is solved first by
Gauss-Newton on left increments ``R <- exp(mu) R``; translation second, on
the normalised residual ``n . q / |q|`` with ``q = R p + t``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateGeometryError, InvalidInputError, StageError
from .geometry import RigidTransform, exp_map, normalize, rot_x

log = logging.getLogger(__name__)

NOMINAL_PITCH_DEG = -45.0


@dataclass(frozen=True, eq=False)
class LineCorrespondence:
    point_d: np.ndarray
    dir_d: np.ndarray
    normal_f: np.ndarray

    def __post_init__(self):
        p = np.array(self.point_d, dtype=float).reshape(3)
        v = np.array(self.dir_d, dtype=float).reshape(3)
        n = np.array(self.normal_f, dtype=float).reshape(3)
        for name, vec in (("dir_d", v), ("normal_f", n)):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
                raise InvalidInputError(f"{name} must be a unit vector (norm {np.linalg.norm(vec):.3g})")
        object.__setattr__(self, "point_d", p)
        object.__setattr__(self, "dir_d", v)
        object.__setattr__(self, "normal_f", n)

    def to_dict(self):
        return {"point_d": self.point_d.tolist(), "dir_d": self.dir_d.tolist(),
                "normal_f": self.normal_f.tolist()}


@dataclass(frozen=True)
class CalibrationResult:
    transform: RigidTransform
    rotation_rms: float
    translation_rms: float
    iterations_r: int
    iterations_t: int

    def to_dict(self):
        return {
            "matrix": self.transform.as_matrix().tolist(),
            "rotation_rms": self.rotation_rms,
            "translation_rms": self.translation_rms,
            "iterations_r": self.iterations_r,
            "iterations_t": self.iterations_t,
        }


def _stack(corrs):
    if len(corrs) == 0:
        raise InvalidInputError("at least one correspondence is required")
    P = np.array([c.point_d for c in corrs])
    V = np.array([c.dir_d for c in corrs])
    N = np.array([c.normal_f for c in corrs])
    return P, V, N


def rotation_residuals(R, corrs) -> np.ndarray:
    _, V, N = _stack(corrs)
    return np.einsum("ij,ij->i", N, V @ np.asarray(R).T)


def rotation_jacobian(R, corrs) -> np.ndarray:
    """d r_i / d mu at mu = 0 for the update ``exp(mu) R``: ``(R v_i) x n_i``."""
    _, V, N = _stack(corrs)
    return np.cross(V @ np.asarray(R).T, N)


def translation_residuals(R, t, corrs) -> np.ndarray:
    P, _, N = _stack(corrs)
    Q = P @ np.asarray(R).T + np.asarray(t)
    return np.einsum("ij,ij->i", N, Q) / np.linalg.norm(Q, axis=1)


def translation_jacobian(R, t, corrs) -> np.ndarray:
    P, _, N = _stack(corrs)
    Q = P @ np.asarray(R).T + np.asarray(t)
    q = np.linalg.norm(Q, axis=1)
    r = np.einsum("ij,ij->i", N, Q) / q
    return (N - r[:, None] * Q / q[:, None]) / q[:, None]


def _rank(M, rel=1e-9):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rel * max(s[0], 1e-300)))


def _levenberg_marquardt(residual_fn, jacobian_fn, retract, x0, step_tol, max_iter,
                         stage, guard=None):
    """Shared damped Gauss-Newton loop.

    Plain Gauss-Newton steps are taken while they decrease the cost; a
    failed step raises the damping ``lam`` by 10x (starting at 1e-6) and a
    successful one relaxes it again.
    """
    x = x0
    r = residual_fn(x)
    cost = float(r @ r)
    lam = 0.0
    it = 0
    step_norm = np.inf
    while it < max_iter:
        it += 1
        J = jacobian_fn(x)
        JtJ = J.T @ J
        g = J.T @ r
        accepted = False
        guard_failures = 0
        while True:
            A = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-12))
            try:
                delta = -np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                delta = -np.linalg.lstsq(A, g, rcond=None)[0]
            step_norm = float(np.linalg.norm(delta))
            if step_norm < step_tol:
                return x, it, cost
            x_new = retract(x, delta)
            if guard is not None and not guard(x_new):
                guard_failures += 1
                if guard_failures >= 5:
                    raise ConvergenceError(
                        f"{stage}: 5 consecutive steps hit the |R p + t| guard",
                        {"iteration": it, "cost": cost, "lambda": lam})
                lam = max(lam * 10.0, 1e-6)
                continue
            r_new = residual_fn(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                x, r, cost = x_new, r_new, cost_new
                lam = lam * 0.1 if lam > 1e-6 else 0.0
                accepted = True
                break
            lam = max(lam * 10.0, 1e-6)
            if lam > 1e12:
                break
        if not accepted:
            # no descent direction left at machine precision
            return x, it, cost
        if step_norm < step_tol or cost == 0.0:
            return x, it, cost
    raise ConvergenceError(
        f"{stage}: no convergence after {max_iter} iterations",
        {"iteration": it, "cost": cost, "step_norm": step_norm, "lambda": lam})


def _check_rotation_geometry(corrs):
    _, V, _ = _stack(corrs)
    if len(corrs) < 3 or _rank(V.T @ V) < 3:
        raise DegenerateGeometryError(
            "rotation needs >= 3 correspondences whose directions span 3D")


def _check_translation_geometry(corrs):
    P, _, N = _stack(corrs)
    if len(corrs) < 3:
        raise DegenerateGeometryError("translation needs >= 3 correspondences")
    centred = P - P.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    if s[0] < 1e-9 or s[1] < 1e-9 * max(s[0], 1.0):
        raise DegenerateGeometryError("line points are collinear")
    if _rank(N.T @ N) < 3:
        raise DegenerateGeometryError("interpretation-plane normals do not span 3D")


def estimate_rotation(corrs, R0, step_tol=1e-10, max_iter=100, _return_iters=False):
    _check_rotation_geometry(corrs)
    R0 = np.asarray(R0, dtype=float)
    _, V, N = _stack(corrs)
    R, it, _ = _levenberg_marquardt(
        lambda R: np.einsum("ij,ij->i", N, V @ R.T),
        lambda R: np.cross(V @ R.T, N),
        lambda R, mu: exp_map(mu) @ R,
        R0, step_tol, max_iter, "rotation")
    # re-orthonormalise accumulated products
    U, _, Wt = np.linalg.svd(R)
    R = U @ Wt
    return (R, it) if _return_iters else R


def estimate_translation(corrs, R, t0, step_tol=1e-10, max_iter=100, _return_iters=False):
    _check_translation_geometry(corrs)
    P, _, N = _stack(corrs)
    R = np.asarray(R, dtype=float)
    RP = P @ R.T

    def residuals(t):
        Q = RP + t
        return np.einsum("ij,ij->i", N, Q) / np.linalg.norm(Q, axis=1)

    def jacobian(t):
        Q = RP + t
        q = np.linalg.norm(Q, axis=1)
        r = np.einsum("ij,ij->i", N, Q) / q
        return (N - r[:, None] * Q / q[:, None]) / q[:, None]

    def guard(t):
        return bool(np.all(np.linalg.norm(RP + t, axis=1) >= 1e-9))

    t0 = np.asarray(t0, dtype=float)
    if not guard(t0):
        raise DegenerateGeometryError("initial translation places a line point on the camera centre")
    t, it, _ = _levenberg_marquardt(
        residuals,
        jacobian,
        lambda t, d: t + d,
        t0, step_tol, max_iter, "translation", guard=guard)
    return (t, it) if _return_iters else t


def default_initial_transform() -> RigidTransform:
    return RigidTransform(rot_x(np.deg2rad(NOMINAL_PITCH_DEG)), np.zeros(3))


def calibrate(corrs, T0: RigidTransform | None = None) -> CalibrationResult:
    T0 = default_initial_transform() if T0 is None else T0
    try:
        R, it_r = estimate_rotation(corrs, T0.rotation, _return_iters=True)
    except Exception as e:
        raise StageError("rotation", e) from e
    try:
        t, it_t = estimate_translation(corrs, R, T0.translation, _return_iters=True)
    except Exception as e:
        raise StageError("translation", e) from e
    rr = rotation_residuals(R, corrs)
    rt = translation_residuals(R, t, corrs)
    res = CalibrationResult(RigidTransform(R, t), float(np.sqrt(np.mean(rr ** 2))),
                            float(np.sqrt(np.mean(rt ** 2))), it_r, it_t)
    log.info("calibrated: rotation rms %.3g (%d it), translation rms %.3g (%d it)",
             res.rotation_rms, it_r, res.translation_rms, it_t)
    return res


def synthetic_correspondences(R, t, n_lines, rng, normal_noise_deg=0.0, depth_range=(1.0, 4.0),
                              spread=1.5):
    """Random 3D lines in front of the depth camera and their fisheye plane normals."""
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    out = []
    while len(out) < n_lines:
        p = np.array([rng.uniform(-spread, spread), rng.uniform(-spread, spread),
                      rng.uniform(*depth_range)])
        v = normalize(rng.normal(size=3))
        q = R @ p + t
        m = np.cross(q, R @ v)
        if np.linalg.norm(m) < 1e-3:
            continue
        n = normalize(m)
        if normal_noise_deg > 0:
            axis = normalize(np.cross(n, rng.normal(size=3)))
            n = exp_map(axis * np.deg2rad(rng.normal(0.0, normal_noise_deg))) @ n
            n = normalize(n)
        out.append(LineCorrespondence(p, v, n))
    return out


def load_correspondences(path):
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("correspondences", [])
    try:
        return [LineCorrespondence(d["point_d"], normalize(d["dir_d"]), normalize(d["normal_f"]))
                for d in data]
    except KeyError as e:
        raise InvalidInputError(f"correspondence missing field {e}") from None


def save_correspondences(corrs, path):
    with open(path, "w") as fh:
        json.dump([c.to_dict() for c in corrs], fh, indent=2)


def load_transform(path) -> RigidTransform:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        if "matrix" in data:
            return RigidTransform.from_matrix(data["matrix"])
        if "rotation" in data:
            return RigidTransform(data["rotation"], data.get("translation", [0, 0, 0]))
        raise InvalidInputError("transform file needs 'matrix' or 'rotation'")
    return RigidTransform.from_matrix(data)


def save_transform(T: RigidTransform, path, **extra):
    with open(path, "w") as fh:
        json.dump({"matrix": T.as_matrix().tolist(), **extra}, fh, indent=2)
