import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fishnav.cameras import (OmniCameraModel, PinholeModel, depth_to_points, equidistant_omni_model,
                             load_intrinsics, omni_project, omni_project_points, omni_solid_angles,
                             omni_unproject, omni_unproject_pixels, omni_valid_mask, pinhole_project,
                             pinhole_unproject, save_intrinsics)
from fishnav.errors import InvalidInputError


@pytest.fixture
def pin():
    return PinholeModel(500.0, 500.0, 320.0, 240.0, 640, 480)


def test_pinhole_examples(pin):
    assert pinhole_project(pin, [0, 0, 1]) == (320.0, 240.0)
    assert pinhole_project(pin, [0, 0, -1]) is None
    assert pinhole_project(pin, [0.1, 0, 1])[0] == pytest.approx(370.0)
    assert np.allclose(pinhole_unproject(pin, 320, 240, 2.0), [0, 0, 2.0])
    assert np.allclose(pinhole_unproject(pin, 370, 240, 1.0), [0.1, 0, 1.0])


@given(st.floats(0, 639), st.floats(0, 479), st.floats(0.2, 10))
def test_pinhole_round_trip(u, v, d):
    pin = PinholeModel(500.0, 510.0, 320.0, 240.0, 640, 480)
    uu, vv = pinhole_project(pin, pinhole_unproject(pin, u, v, d))
    assert abs(uu - u) < 1e-9 and abs(vv - v) < 1e-9


def test_depth_to_points_skips_invalid(pin):
    depth = np.full((480, 640), 2.0)
    depth[0, 0] = 0.0
    depth[1, 1] = np.nan
    pts, idx = depth_to_points(pin, depth)
    assert len(pts) == 640 * 480 - 2
    assert 0 not in idx and 641 not in idx
    with pytest.raises(InvalidInputError):
        depth_to_points(pin, np.ones((10, 10)))


def test_omni_centre_is_optical_axis(omni):
    assert np.allclose(omni_unproject(omni, *omni.image_center).direction, [0, 0, 1])
    u, v = omni_project(omni, np.array([0.0, 0.0, 1.0]))
    assert abs(u - omni.image_center[0]) < 1e-6 and abs(v - omni.image_center[1]) < 1e-6


def test_omni_rejects_positive_a0():
    with pytest.raises(InvalidInputError):
        OmniCameraModel((10.0, 0.0, 0.0, 0.0), (640, 480), 1280, 960)


def test_omni_symmetry_and_closed_form(omni):
    u0, v0 = omni.image_center
    a = omni_unproject_pixels(omni, u0 + 150, v0)
    b = omni_unproject_pixels(omni, u0 - 150, v0)
    assert a[2] == pytest.approx(b[2], abs=1e-15)
    for rho in (10.0, 200.0, 470.0):
        r = omni_unproject_pixels(omni, u0 + rho, v0)
        assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-12)
        polar = np.arctan2(np.hypot(r[0], r[1]), r[2])
        assert polar == pytest.approx(np.arctan2(rho, -omni.f(rho)), abs=1e-12)


@given(st.floats(0, 2 * np.pi), st.floats(0, 460), st.floats(0, 2 * np.pi))
def test_omni_rotational_equivariance(phi, rho, rot):
    omni = equidistant_omni_model()
    u0, v0 = omni.image_center
    p = np.array([rho * np.cos(phi), rho * np.sin(phi)])
    c, s = np.cos(rot), np.sin(rot)
    q = np.array([[c, -s], [s, c]]) @ p
    r1 = omni_unproject_pixels(omni, u0 + p[0], v0 + p[1])
    r2 = omni_unproject_pixels(omni, u0 + q[0], v0 + q[1])
    Rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert np.abs(Rz @ r1 - r2).max() < 1e-9


def test_omni_round_trip_grid(omni):
    u, v = np.meshgrid(np.linspace(0, omni.width - 1, 10), np.linspace(0, omni.height - 1, 10))
    u, v = u.ravel(), v.ravel()
    rays = omni_unproject_pixels(omni, u, v)
    th = np.arctan2(np.hypot(rays[:, 0], rays[:, 1]), rays[:, 2])
    inside = th <= omni.theta_limit
    uv, ok = omni_project_points(omni, rays[inside])
    assert ok.all()
    assert np.abs(uv - np.stack([u[inside], v[inside]], axis=1)).max() < 0.01


def test_omni_round_trip_angular(omni):
    rng = np.random.default_rng(0)
    d = rng.normal(size=(500, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    uv, ok = omni_project_points(omni, d)
    back = omni_unproject_pixels(omni, uv[ok, 0], uv[ok, 1])
    ang = np.arccos(np.clip(np.einsum("ij,ij->i", back, d[ok]), -1, 1))
    assert ang.max() < 1e-6


def test_ray_beyond_ninety_degrees_projects_near_rim(omni):
    th = np.deg2rad(90.5)
    uv = omni_project(omni, np.array([np.sin(th), 0.0, np.cos(th)]))
    assert uv is not None
    rho = uv[0] - omni.image_center[0]
    assert rho > 0.98 * (omni.height / 2 - 2)
    assert omni_project(omni, np.array([np.sin(2.0), 0.0, np.cos(2.0)])) is None


def test_valid_mask_and_solid_angles(omni):
    mask = omni_valid_mask(omni)
    sa = omni_solid_angles(omni)
    # a 182 degree cone subtends 2 pi (1 - cos 91 deg) sr
    expected = 2 * np.pi * (1 - np.cos(np.deg2rad(91.0)))
    assert sa[mask].sum() == pytest.approx(expected, rel=2e-3)


def test_intrinsics_json_round_trip(tmp_path, omni, pin):
    for model in (omni, pin):
        save_intrinsics(model, tmp_path / "m.json")
        assert load_intrinsics(tmp_path / "m.json") == model
    (tmp_path / "bad.json").write_text(json.dumps({"type": "kannala"}))
    with pytest.raises(InvalidInputError):
        load_intrinsics(tmp_path / "bad.json")
