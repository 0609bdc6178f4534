import functools

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def rendered(name):
    """Rendered harness frame by scene name, shared across test modules."""
    from fishnav.synthetic.render import render_scene
    from fishnav.synthetic.suites import corridor_scene, door_suite, floor_suite

    scenes = {s.name: s for s in floor_suite() + door_suite() + [corridor_scene()]}
    return render_scene(scenes[name])


@functools.lru_cache(maxsize=None)
def expanded(name):
    """(frame, FloorModel, plane_f, FloorMask, spx, hists) for a harness scene."""
    from fishnav.floor_detection import detect_floor, horizon_predicate
    from fishnav.floor_expansion import expand_floor

    fr = rendered(name)
    rig = fr.scene.rig
    fm = detect_floor(fr.cloud, seed=0)
    plane_f = fm.plane.transformed(rig.extrinsic)
    mask, spx, hists = expand_floor(fr.fisheye, fr.cloud.points[fm.inlier_mask], rig.extrinsic, rig.fisheye,
                                    horizon_predicate(plane_f), observed_points=fr.cloud.points)
    return fr, fm, plane_f, mask, spx, hists


@pytest.fixture(scope="session")
def omni():
    from fishnav.cameras import equidistant_omni_model

    return equidistant_omni_model()


ACCEPTANCE_LINES = []


def acceptance(label, ok, detail):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
