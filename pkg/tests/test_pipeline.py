import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from fishnav import io, pipeline
from fishnav.cameras import save_intrinsics, equidistant_omni_model
from fishnav.errors import ConfigError, FishnavError, InvalidInputError, StageError
from fishnav.pipeline import (STAGES, FrameInput, PipelineConfig, load_manifest, resolve_rig, run_frame,
                              run_sequence)

from conftest import rendered

SCENES = Path(__file__).resolve().parents[1] / "scenes"


def frame_input(name):
    fr = rendered(name)
    return FrameInput(name, fr.depth, fr.fisheye, fr.scene, fr)


@pytest.fixture(scope="module")
def doors_result():
    return run_frame(PipelineConfig(), frame_input("doors_01"))


@pytest.mark.parametrize("data,field", [
    ({"seed": -1}, "seed"),
    ({"workers": 0}, "workers"),
    ({"floor": {"dist_thresh": 0.0}}, "floor.dist_thresh"),
    ({"expansion": {"sim_thresh": 1.5}}, "expansion.sim_thresh"),
    ({"doors": {"width_range": [1.4, 0.6]}}, "doors.width_range"),
    ({"navigation": {"band_edges": [3, 1, None]}}, "navigation.band_edges"),
    ({"fisheye_intrinsics": "/nonexistent.json"}, "fisheye_intrinsics"),
    ({"colour": 1}, "unknown config key"),
    ({"floor": {"voxels": 1}}, "section 'floor'"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        PipelineConfig.from_dict(data)


def test_config_round_trip(tmp_path):
    cfg = PipelineConfig.from_dict({"seed": 7, "navigation": {"band_edges": [1, 3, None]}})
    io.write_json(tmp_path / "c.json", cfg.to_dict())
    back = PipelineConfig.load(tmp_path / "c.json")
    assert back == cfg
    assert PipelineConfig.load(tmp_path / "c.json", seed=9).seed == 9
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "missing.json")


def test_stream_seeds_are_named_and_stable():
    a, b = PipelineConfig(seed=1), PipelineConfig(seed=1)
    assert a.stream_seed("ransac") == b.stream_seed("ransac")
    assert a.stream_seed("ransac") != a.stream_seed("superpixels")
    assert a.stream_seed("ransac") != PipelineConfig(seed=2).stream_seed("ransac")


def test_rig_precedence(tmp_path):
    small = equidistant_omni_model(640, 480)
    save_intrinsics(small, tmp_path / "fish.json")
    scene = rendered("doors_01").scene
    assert resolve_rig(PipelineConfig(), scene).fisheye == scene.rig.fisheye
    cfg = PipelineConfig(fisheye_intrinsics=str(tmp_path / "fish.json"))
    assert resolve_rig(cfg, scene).fisheye == small


def test_resolution_mismatch_fails_before_compute():
    fr = rendered("doors_01")
    bad = FrameInput("x", fr.depth[:100], fr.fisheye)
    with pytest.raises(ConfigError, match="depth input"):
        run_frame(PipelineConfig(), bad)


def test_end_to_end_frame(doors_result):
    res = doors_result
    assert res.floor_mask.mask.any()
    assert len(res.doors.verified) >= 1
    assert res.metrics["floor"]["precision"] > 0.95
    assert res.commands and all(c.text.split()[0] in ("Left", "Front-left", "Front", "Front-right", "Right")
                                for c in res.commands)
    assert list(res.timings)[:len(STAGES)] == list(STAGES)


def test_stage_timings_add_up(doors_result):
    t = doors_result.timings
    assert all(v >= 0 for v in t.values())
    assert sum(t[s] for s in STAGES) == pytest.approx(t["total"], rel=0.05)


def test_frame_is_deterministic(doors_result):
    again = run_frame(PipelineConfig(), frame_input("doors_01"))
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(doors_result.to_dict(), sort_keys=True)


def test_stage_errors_name_the_stage(monkeypatch):
    fr = rendered("doors_01")
    with pytest.raises(StageError) as err:
        run_frame(PipelineConfig(), FrameInput("z", np.zeros_like(fr.depth), fr.fisheye))
    assert err.value.stage == "floor_detection"

    def boom(*a, **k):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(pipeline, "detect_doors", boom)
    with pytest.raises(StageError) as err:
        run_frame(PipelineConfig(), frame_input("doors_01"))
    assert err.value.stage == "door_detection"


def test_manifest_validation(tmp_path):
    (tmp_path / "empty.json").write_text('{"frames": []}')
    with pytest.raises(InvalidInputError):
        load_manifest(tmp_path / "empty.json")
    with pytest.raises(InvalidInputError):
        run_sequence(PipelineConfig(), [])
    (tmp_path / "dup.json").write_text('[{"id": "a", "scene": "x.json"}, {"id": "a", "scene": "y.json"}]')
    with pytest.raises(InvalidInputError):
        load_manifest(tmp_path / "dup.json")
    entries = load_manifest(SCENES / "corridor.manifest.json")
    assert Path(entries[0]["scene"]).is_file()


def test_sequence_survives_a_corrupt_frame(tmp_path):
    shutil.copy(SCENES / "doors_01.json", tmp_path / "doors_01.json")
    (tmp_path / "junk.png").write_bytes(b"not an image")
    manifest = {"frames": [{"id": "good", "scene": "doors_01.json"},
                           {"id": "broken", "depth": "junk.png", "fisheye": "junk.png"}]}
    io.write_json(tmp_path / "m.json", manifest)
    out = tmp_path / "out"
    rep = run_sequence(PipelineConfig(), tmp_path / "m.json", out)
    assert [r["frame_id"] for r in rep.frames] == ["good"]
    assert rep.failures == [{"frame_id": "broken", "stage": "input", "error": rep.failures[0]["error"]}]
    assert rep.status == 1
    for name in ("report.json", "timings.json", "commands.txt", "doors_table.txt",
                 "frames/good/floor_mask.png", "frames/good/sector_grid.png"):
        assert (out / name).is_file(), name
    assert "door_seconds" in io.read_json(out / "timings.json")["good"]
    assert "Σ" in (out / "doors_table.txt").read_text()


def test_sequence_with_only_failures_raises(tmp_path):
    (tmp_path / "junk.png").write_bytes(b"x")
    with pytest.raises(FishnavError):
        run_sequence(PipelineConfig(), [{"id": "a", "depth": str(tmp_path / "junk.png"),
                                         "fisheye": str(tmp_path / "junk.png")}])
