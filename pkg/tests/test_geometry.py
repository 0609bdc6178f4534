import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fishnav.errors import DegenerateGeometryError, InvalidInputError
from fishnav.geometry import (Plane, Ray, RigidTransform, exp_map, geodesic_distance, hat, log_map,
                              point_plane_distance, ray_plane_intersection, rays_plane_intersection,
                              rot_z, transform_point)

finite = st.floats(-10, 10, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)
small_rot = arrays(np.float64, 3, elements=st.floats(-3.0, 3.0))


def rigid(mu, t):
    return RigidTransform(exp_map(mu), t)


def test_exp_map_zero_is_identity():
    assert np.array_equal(exp_map(np.zeros(3)), np.eye(3))


def test_exp_map_quarter_turn_about_z():
    R = exp_map([0, 0, np.pi / 2])
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-12)


@given(small_rot)
def test_exp_map_inverse(mu):
    assert np.abs(exp_map(mu) @ exp_map(-mu) - np.eye(3)).max() < 1e-9


@given(small_rot)
def test_exp_map_is_a_rotation(mu):
    R = exp_map(mu)
    assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)


@given(arrays(np.float64, 3, elements=st.floats(-1e-6, 1e-6)))
def test_exp_map_small_angle(mu):
    assert np.abs(exp_map(mu) - (np.eye(3) + hat(mu))).max() < 1e-10


@given(arrays(np.float64, 3, elements=st.floats(-3.0, 3.0)))
def test_log_inverts_exp_below_pi(mu):
    if np.linalg.norm(mu) >= np.pi - 1e-3:
        return
    assert np.allclose(log_map(exp_map(mu)), mu, atol=1e-9)


def test_geodesic_distance_of_known_angle():
    assert geodesic_distance(np.eye(3), rot_z(0.3)) == pytest.approx(0.3, abs=1e-12)


def test_transform_point_examples():
    assert np.allclose(transform_point(RigidTransform(), [1, 2, 3]), [1, 2, 3])
    assert np.allclose(transform_point(RigidTransform(np.eye(3), [0, 0, 1]), [0, 0, 0]), [0, 0, 1])
    assert np.allclose(transform_point(RigidTransform(rot_z(np.pi / 2)), [1, 0, 0]), [0, 1, 0], atol=1e-12)


@given(small_rot, vec3, vec3)
def test_transform_inverse_round_trip(mu, t, p):
    T = rigid(mu, t)
    assert np.abs(transform_point(T.inverse(), transform_point(T, p)) - p).max() < 1e-9
    I = (T @ T.inverse()).as_matrix()
    assert np.abs(I - np.eye(4)).max() < 1e-9


@given(small_rot, vec3, small_rot, vec3, vec3)
def test_compose_applies_right_first(m1, t1, m2, t2, p):
    A, B = rigid(m1, t1), rigid(m2, t2)
    assert np.allclose((A @ B).apply(p), A.apply(B.apply(p)), atol=1e-9)


def test_rejects_reflection():
    with pytest.raises(InvalidInputError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]))


def test_plane_is_canonical():
    p = Plane.from_coefficients(0, 0, -2, -2.4)
    assert np.allclose(p.normal, [0, 0, 1])
    assert p.offset == pytest.approx(1.2)
    assert np.linalg.norm(p.normal) == pytest.approx(1.0, abs=1e-12)


def test_degenerate_plane():
    with pytest.raises(DegenerateGeometryError):
        Plane([0, 0, 0], 1.0)
    with pytest.raises(DegenerateGeometryError):
        Plane.from_points([0, 0, 0], [1, 0, 0], [2, 0, 0])


def test_point_plane_distance_examples():
    plane = Plane([0, 0, 1], 1.2)
    assert point_plane_distance([0, 0, 0], plane) == pytest.approx(1.2)
    assert point_plane_distance([3, -1, -1.2], plane) == pytest.approx(0.0)
    q = np.array([0.4, 2.0, -1.2])
    assert point_plane_distance(q + 0.05 * plane.normal, plane) == pytest.approx(0.05)


def test_ray_plane_examples():
    plane = Plane([0, 0, 1], 1.5)
    assert np.allclose(ray_plane_intersection(Ray([0, 0, -1]), plane), [0, 0, -1.5])
    assert ray_plane_intersection(Ray([1, 0, 0]), plane) is None
    assert ray_plane_intersection(Ray([0, 0, 1]), plane) is None


@given(arrays(np.float64, 3, elements=st.floats(-1, 1)), arrays(np.float64, 3, elements=st.floats(-1, 1)),
       st.floats(0.1, 5.0))
def test_intersection_lies_on_plane(d, n, n0):
    if np.linalg.norm(d) < 1e-3 or np.linalg.norm(n) < 1e-3:
        return
    plane = Plane(n, n0)
    q = ray_plane_intersection(Ray(d), plane)
    if q is not None:
        assert abs(point_plane_distance(q, plane)) < 1e-9 * max(1.0, np.linalg.norm(q))


def test_vectorised_intersection_matches_scalar():
    rng = np.random.default_rng(3)
    plane = Plane([0.1, -0.9, 0.2], 1.3)
    dirs = rng.normal(size=(200, 3))
    pts, s, ok = rays_plane_intersection(dirs, plane)
    for d, p, good in zip(dirs, pts, ok):
        q = ray_plane_intersection(Ray(d), plane)
        assert (q is not None) == good
        if good:
            assert np.allclose(p, q)


@given(small_rot, vec3)
def test_plane_transform_keeps_points_on_plane(mu, t):
    plane = Plane([0.2, -1.0, 0.1], 1.1)
    T = rigid(mu, t)
    e1, e2 = plane.basis()
    pts = -plane.offset * plane.normal + np.outer([0.5, -1.0, 2.0], e1) + np.outer([1.0, 0.3, -0.7], e2)
    moved = plane.transformed(T)
    assert np.abs(moved.distance(T.apply(pts))).max() < 1e-9
