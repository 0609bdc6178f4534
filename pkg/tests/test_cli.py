from pathlib import Path

import numpy as np
import pytest

from fishnav import io
from fishnav.cli import main

SCENES = Path(__file__).resolve().parents[1] / "scenes"


def test_calibrate_synthetic(tmp_path, capsys):
    assert main(["calibrate", "--synthetic", "30", "--out", str(tmp_path)]) == 0
    m = np.array(io.read_json(tmp_path / "extrinsic.json")["matrix"])
    assert np.allclose(m[:3, 3], [0.05, 0.10, 0.02], atol=1e-6)
    assert main(["calibrate", "--correspondences", str(tmp_path / "correspondences.json"),
                 "--out", str(tmp_path / "again")]) == 0
    assert "rotation rms" in capsys.readouterr().out


def test_run_one_scene(tmp_path, capsys):
    assert main(["run", "--scene", str(SCENES / "doors_01.json"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("doors_01: ")
    assert (tmp_path / "result.json").is_file() and (tmp_path / "floor_mask.png").is_file()
    assert "stages_ms" in io.read_json(tmp_path / "timings.json")


def test_bad_config_exits_2(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text('{"floor": {"dist_thresh": -1}}')
    code = main(["sequence", str(SCENES / "corridor.manifest.json"), "--config", str(tmp_path / "cfg.json"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "floor.dist_thresh" in capsys.readouterr().err


def test_failed_sequence_exits_1(tmp_path):
    (tmp_path / "junk.png").write_bytes(b"x")
    io.write_json(tmp_path / "m.json", [{"id": "a", "depth": "junk.png", "fisheye": "junk.png"}])
    assert main(["sequence", str(tmp_path / "m.json"), "--out", str(tmp_path / "o")]) == 1
    (tmp_path / "empty.json").write_text("[]")
    assert main(["sequence", str(tmp_path / "empty.json")]) == 1


def test_render_and_evaluate(tmp_path, capsys):
    assert main(["render", "--scene", str(SCENES / "indoor_1.json"), "--out", str(tmp_path)]) == 0
    d = tmp_path / "indoor_1"
    assert io.read_json(tmp_path / "manifest.json")["frames"][0]["id"] == "indoor_1"
    assert main(["evaluate", "--scene", str(d / "scene.json"), "--mask", str(d / "gt_floor.png")]) == 0
    assert "precision=1.000 recall=1.000" in capsys.readouterr().out
    io.write_mask_png(tmp_path / "small.png", np.ones((4, 4), bool))
    assert main(["evaluate", "--scene", str(d / "scene.json"), "--mask", str(tmp_path / "small.png")]) == 1


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
