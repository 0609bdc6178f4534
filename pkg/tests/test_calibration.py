import numpy as np
import pytest
from hypothesis import given, strategies as st

from fishnav.calibration import (LineCorrespondence, calibrate, estimate_rotation, estimate_translation,
                                 load_correspondences, rotation_residuals, save_correspondences,
                                 synthetic_correspondences, translation_residuals)
from fishnav.errors import DegenerateGeometryError, InvalidInputError, StageError
from fishnav.geometry import exp_map, geodesic_distance, rot_x, rot_y

from oracles import gradient_check_errors

R_TRUE = rot_x(np.deg2rad(-45.0)) @ rot_y(np.deg2rad(3.0))
T_TRUE = np.array([0.05, 0.10, 0.02])


def corrs(n, seed=0, noise=0.0, R=R_TRUE, t=T_TRUE):
    return synthetic_correspondences(R, t, n, np.random.default_rng(seed), noise)


def test_residual_examples():
    c = [LineCorrespondence([0, 0, 2], [1, 0, 0], [0, 0, 1]), LineCorrespondence([0, 0, 2], [0, 0, 1], [0, 0, 1])]
    assert np.allclose(rotation_residuals(np.eye(3), c), [0.0, 1.0])
    assert np.abs(rotation_residuals(R_TRUE, corrs(20))).max() < 1e-12
    assert np.abs(translation_residuals(R_TRUE, T_TRUE, corrs(20))).max() < 1e-12
    with pytest.raises(InvalidInputError):
        rotation_residuals(np.eye(3), [])


def test_non_unit_vectors_rejected():
    with pytest.raises(InvalidInputError):
        LineCorrespondence([0, 0, 1], [2, 0, 0], [0, 1, 0])


def test_jacobians_match_finite_differences():
    wr, wt = gradient_check_errors(20, seed=1)
    assert wr < 1e-5 and wt < 1e-5


def test_rotation_recovery_from_perturbed_start():
    R0 = exp_map(np.deg2rad(20.0) * np.array([0.6, 0.0, 0.8])) @ R_TRUE
    R = estimate_rotation(corrs(20), R0)
    assert geodesic_distance(R, R_TRUE) < 1e-8


def test_rotation_fixed_point():
    c = corrs(10)
    assert np.allclose(estimate_rotation(c, R_TRUE), R_TRUE, atol=1e-12)


def test_translation_recovery_and_fixed_point():
    c = corrs(20)
    t = estimate_translation(c, R_TRUE, T_TRUE + np.array([0.2, -0.15, 0.1]))
    assert np.linalg.norm(t - T_TRUE) < 1e-7
    c0 = corrs(10, t=np.zeros(3))
    assert np.allclose(estimate_translation(c0, R_TRUE, np.zeros(3)), 0.0, atol=1e-12)


def test_minimal_three_lines():
    for seed in range(5):
        c = corrs(3, seed=seed)
        try:
            res = calibrate(c)
        except StageError as e:
            assert isinstance(e.__cause__, DegenerateGeometryError)
            continue
        assert geodesic_distance(res.transform.rotation, R_TRUE) < 1e-7


def test_degenerate_inputs():
    v = [1.0, 0.0, 0.0]
    same_dir = [LineCorrespondence([0, 0, z], v, [0, 1, 0]) for z in (1.0, 2.0, 3.0, 4.0)]
    with pytest.raises(DegenerateGeometryError):
        estimate_rotation(same_dir, np.eye(3))
    good = corrs(6)
    collinear = [LineCorrespondence([0, 0, z], c.dir_d, c.normal_f) for z, c in zip((1.0, 2.0, 3.0), good)]
    with pytest.raises(DegenerateGeometryError):
        estimate_translation(collinear, R_TRUE, np.zeros(3))
    with pytest.raises(StageError) as err:
        calibrate(same_dir)
    assert err.value.stage == "rotation"


def test_calibrate_recovers_rig():
    res = calibrate(corrs(30))
    assert geodesic_distance(res.transform.rotation, R_TRUE) < 1e-7
    assert np.linalg.norm(res.transform.translation - T_TRUE) < 1e-7
    assert res.rotation_rms < 1e-10


@given(st.integers(0, 10_000))
def test_noisy_rotation_stays_close(seed):
    res = calibrate(corrs(50, seed=seed, noise=0.5))
    assert np.rad2deg(geodesic_distance(res.transform.rotation, R_TRUE)) < 2.0


def test_correspondence_file_round_trip(tmp_path):
    c = corrs(5)
    save_correspondences(c, tmp_path / "c.json")
    back = load_correspondences(tmp_path / "c.json")
    for a, b in zip(c, back):
        assert np.allclose(a.point_d, b.point_d) and np.allclose(a.normal_f, b.normal_f)
