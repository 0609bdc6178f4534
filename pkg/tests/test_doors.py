import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fishnav.cameras import omni_project_points
from fishnav.doors import (ONE_LINE_LEFT, ONE_LINE_RIGHT, TWO_LINE, DoorHypothesis, VerticalLine, cross_ratio,
                           detect_doors, expected_cross_ratio, extract_vertical_lines, generate_hypotheses,
                           image_cross_ratio, line_pair_width, min_area_rectangle, obb_aspect,
                           verify_hypothesis)
from fishnav.errors import DegenerateGeometryError
from fishnav.geometry import Plane
from fishnav.synthetic.metrics import door_coverage
from fishnav.synthetic.render import render_scene
from fishnav.synthetic.suites import door_suite

from conftest import expanded, rendered

FLOOR = Plane([0, 0, 1], 1.2)


def fake_line(i, x, y):
    return VerticalLine(i, np.zeros((0, 2)), np.array([x, y, -1.2]), None, None, np.array([1.0, 0, 0]))


def test_cross_ratio_examples():
    assert expected_cross_ratio(2.0, 1.2) == pytest.approx(2.5)
    # metric heights along the jamb: A=0, B=h, C=H
    assert cross_ratio(0.0, 1.2, 2.0) == pytest.approx(2.5)
    with pytest.raises(DegenerateGeometryError):
        cross_ratio(0.0, 1.0, 1.0)


@given(st.floats(-5, 5), st.floats(0.1, 10), st.floats(0.5, 3.0), st.floats(0.1, 0.9))
def test_cross_ratio_affine_invariance(shift, scale, H, frac):
    h = frac * H
    a, b, c = (shift + scale * z for z in (0.0, h, H))
    assert cross_ratio(a, b, c) == pytest.approx(H / (H - h), rel=1e-9)


def test_line_pair_width_examples():
    assert line_pair_width(fake_line(0, 1, 0), fake_line(1, 1, 0.9)) == pytest.approx(0.9)
    assert line_pair_width(fake_line(0, 1, 0), fake_line(1, 1, 0)) == 0.0


def test_hypotheses_examples():
    two = generate_hypotheses([fake_line(0, 2, 0), fake_line(1, 2, 0.9)])
    assert [h.kind for h in two] == [TWO_LINE]
    far = generate_hypotheses([fake_line(0, 2, 0), fake_line(1, 2, 2.0)])
    assert [h.kind for h in far] == [ONE_LINE_LEFT, ONE_LINE_LEFT, ONE_LINE_RIGHT, ONE_LINE_RIGHT]
    three = generate_hypotheses([fake_line(i, 2, 0.9 * i) for i in range(3)])
    assert [(h.kind, h.lines) for h in three] == [(TWO_LINE, (0, 1)), (TWO_LINE, (1, 2))]


@given(st.lists(st.floats(-4, 4), min_size=0, max_size=7), st.randoms())
def test_hypotheses_permutation_invariant(ys, rnd):
    lines = [fake_line(i, 2.0, y) for i, y in enumerate(ys)]
    shuffled = list(lines)
    rnd.shuffle(shuffled)
    assert generate_hypotheses(lines) == generate_hypotheses(shuffled)
    # every unpaired line gets both one-line hypotheses
    hyps = generate_hypotheses(lines)
    paired = {i for h in hyps if h.kind == TWO_LINE for i in h.lines}
    for ln in lines:
        n_one = sum(h.kind != TWO_LINE and h.lines == (ln.id,) for h in hyps)
        assert n_one == (0 if ln.id in paired else 2)


def test_min_area_rectangle_of_rotated_box():
    rng = np.random.default_rng(0)
    pts = rng.uniform([0, 0], [0.9, 2.0], size=(400, 2))
    pts = np.vstack([pts, [[0, 0], [0.9, 0], [0, 2], [0.9, 2]]])
    assert obb_aspect(pts) == pytest.approx(2.0 / 0.9, rel=1e-6)
    c, s = np.cos(0.3), np.sin(0.3)
    a, b, _ = min_area_rectangle(pts @ np.array([[c, -s], [s, c]]).T)
    assert sorted([a, b]) == pytest.approx([0.9, 2.0], rel=1e-6)


def _scene_at_height(h, idx=0):
    s = door_suite()[idx]
    return dataclasses.replace(s, rig=dataclasses.replace(s.rig, position=(0.0, 0.0, h)))


def _jamb_pixels(fr, g, h, H=2.0):
    p0, p1 = np.array(g["fisheye"])
    B = p0 + (p1 - p0) * h / H
    uv, ok = omni_project_points(fr.scene.rig.fisheye, np.array([p0, B, p1]))
    assert ok.all()
    return np.round(uv)


def _arc_length_cr(fr, g, h, H=2.0, n=2001):
    p0, p1 = np.array(g["fisheye"])
    uv, _ = omni_project_points(fr.scene.rig.fisheye, np.linspace(p0, p1, n))
    arc = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(uv, axis=0), axis=1))]
    return cross_ratio(arc[0], arc[int(round((n - 1) * h / H))], arc[-1])


def test_image_arc_length_is_not_projective():
    """Arc length along the image curve is not an affine function of height, so
    its cross ratio drifts; the elevation coordinate stays exact."""
    fr = render_scene(_scene_at_height(1.5))
    g = next(g for g in fr.gt_vertical_lines if g["kind"] == "door")
    exp = expected_cross_ratio(2.0, 1.5)
    assert abs(_arc_length_cr(fr, g, 1.5) / exp - 1) > 0.01
    A, B, C = _jamb_pixels(fr, g, 1.5)
    assert abs(image_cross_ratio(A, B, C, fr.scene.rig.fisheye, fr.plane_f) / exp - 1) < 0.01


def test_extracted_jambs_match_ground_truth():
    fr = rendered("doors_01")
    lines = extract_vertical_lines(fr.fisheye, fr.scene.rig.fisheye, fr.plane_f, fr.gt_floor_mask)
    feet = [np.array(g["fisheye"][0]) for g in fr.gt_vertical_lines if g["kind"] == "door"]
    for foot in feet:
        err = min(np.linalg.norm(ln.floor_point - foot) for ln in lines)
        assert err < 0.05
    w = line_pair_width(*sorted(lines, key=lambda ln: ln.floor_point[0])[:2], fr.plane_f)
    assert w == pytest.approx(0.9, abs=0.05)


def test_injected_lines_returned_unchanged():
    fr = rendered("doors_01")
    inj = [fake_line(7, 1, 1)]
    assert extract_vertical_lines(fr.fisheye, fr.scene.rig.fisheye, fr.plane_f, injected=inj) == inj


def test_plain_image_has_no_lines():
    fr = rendered("doors_01")
    img = np.full_like(fr.fisheye, 128)
    assert extract_vertical_lines(img, fr.scene.rig.fisheye, fr.plane_f, fr.gt_floor_mask) == []


def test_rejected_hypothesis_passes_through():
    h = DoorHypothesis(TWO_LINE, (0, 1), verdict="rejected", reason="floor-seed")
    assert verify_hypothesis(h, np.zeros((2, 2), bool), {}, FLOOR, None) is h


@pytest.mark.parametrize("name,kind", [("doors_03", "window"), ("doors_04", "poster")])
def test_distractors_are_rejected(name, kind):
    fr, _, plane_f, mask, spx, hists = expanded(name)
    det = detect_doors(fr.fisheye, spx, hists, mask, plane_f, fr.scene.rig.fisheye)
    distr = fr.gt_distractor_regions > 0
    for hyp, m in zip(det.hypotheses, det.masks):
        if hyp.verdict == "verified":
            assert (m & distr).sum() < 0.5 * max(m.sum(), 1)
    assert len(det.verified) >= 1
    assert set(det.timings) == {"lines", "two_line", "one_line"}


@pytest.mark.parametrize("jamb", [0, 1])
def test_single_jamb_found_by_one_line_hypothesis(jamb):
    fr, _, plane_f, mask, spx, hists = expanded("doors_01")
    omni = fr.scene.rig.fisheye
    lines = extract_vertical_lines(fr.fisheye, omni, plane_f, mask.mask)
    assert len(lines) == 2
    det = detect_doors(fr.fisheye, spx, hists, mask, plane_f, omni, injected_lines=[lines[jamb]])
    assert {h.kind for h in det.hypotheses} == {ONE_LINE_LEFT, ONE_LINE_RIGHT}
    verified = [m for h, m in zip(det.hypotheses, det.masks) if h.verdict == "verified"]
    assert len(verified) == 1
    assert door_coverage(verified[0], fr.gt_door_regions, 0) >= 0.5
