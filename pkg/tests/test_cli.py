import csv
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from garmentwarp import __version__
from garmentwarp.cli import OUTPUT_FILES, main
from garmentwarp.config import RunConfig, WarpSettings, read_config_file
from garmentwarp.exceptions import ConfigError
from garmentwarp.imaging import read_image, write_image, write_mask
from garmentwarp.metrics import mean_abs_error, ssim
from garmentwarp.pose import PoseKeypoints, read_keypoints

SNAPSHOTS = Path(__file__).parent / "golden" / "tryon"
ALL_OUTPUTS = sorted(OUTPUT_FILES.values()) + ["stats.json"]


@pytest.fixture(scope="module")
def bent_scene(tmp_path_factory):
    d = tmp_path_factory.mktemp("bent") / "scene"
    assert main(["gen-scene", str(d), "--preset", "bent", "--size", "128"]) == 0
    return d


def files_equal(a, b, names=ALL_OUTPUTS):
    return all((Path(a) / n).read_bytes() == (Path(b) / n).read_bytes() for n in names)


# --- tryon -----------------------------------------------------------------


def test_tryon_writes_all_outputs(bent_scene, tmp_path):
    assert main(["tryon", "--scene-dir", str(bent_scene), "--out", str(tmp_path / "o"), "--debug"]) == 0
    for name in ALL_OUTPUTS + ["debug_person_landmarks.png", "debug_model_landmarks.png"]:
        assert (tmp_path / "o" / name).is_file()
    stats = json.loads((tmp_path / "o" / "stats.json").read_text())
    assert stats["target_area"] == stats["covered_area"] + stats["hole_area"]


@pytest.mark.parametrize("case", ["bent", "crossed"])
def test_tryon_matches_snapshot(case, tmp_path):
    scene = SNAPSHOTS / case / "scene"
    assert main(["tryon", "--scene-dir", str(scene), "--out", str(tmp_path)]) == 0
    assert files_equal(tmp_path, SNAPSHOTS / case / "out")


def test_tryon_deterministic_across_jobs(bent_scene, tmp_path):
    outs = []
    for jobs in (1, 2, 4):
        out = tmp_path / f"j{jobs}"
        assert main(["tryon", "--scene-dir", str(bent_scene), "--out", str(out), "--jobs", str(jobs)]) == 0
        outs.append(out)
    assert files_equal(outs[0], outs[1]) and files_equal(outs[0], outs[2])


def test_identity_scene_reproduces_person(tmp_path):
    scene = tmp_path / "id"
    assert main(["gen-scene", str(scene), "--preset", "identity", "--size", "128"]) == 0
    assert main(["tryon", "--scene-dir", str(scene), "--out", str(tmp_path / "o")]) == 0
    from garmentwarp.imaging import read_label_map

    person = read_image(scene / "person.png")
    comp = read_image(tmp_path / "o" / "composite.png")
    region = np.isin(read_label_map(scene / "person_parse.png"), [1, 2, 3])
    assert mean_abs_error(person, comp, region) <= 1.0


def test_missing_wrist_names_landmark(bent_scene, tmp_path, capsys):
    scene = tmp_path / "scene"
    shutil.copytree(bent_scene, scene)
    kp = read_keypoints(scene / "person_keypoints.json")
    marks = dict(kp.landmarks)
    marks.pop("right_wrist")
    (scene / "person_keypoints.json").write_text(PoseKeypoints(marks).to_json())
    code = main(["tryon", "--scene-dir", str(scene), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code != 0
    assert "right_wrist" in err and "stage 'mask'" in err


def test_missing_input_file(tmp_path, capsys):
    code = main(["tryon", "--scene-dir", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "stage 'config'" in capsys.readouterr().err


def test_target_mask_override(bent_scene, tmp_path):
    S = np.zeros((128, 128), bool)
    S[50:70, 50:80] = True
    write_mask(tmp_path / "S.png", S)
    assert main(["tryon", "--scene-dir", str(bent_scene), "--target-mask", str(tmp_path / "S.png"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "target_mask.png").read_bytes() == (tmp_path / "S.png").read_bytes()


def test_config_file_and_flag_override(bent_scene, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nsteepness_a = 30\nsampling = nearest\nz_order = left_sleeve, right_sleeve, torso\n")
    assert main(["tryon", "--scene-dir", str(bent_scene), "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(
        ["tryon", "--scene-dir", str(bent_scene), "--config", str(cfg), "--sampling", "bilinear", "--out", str(tmp_path / "b")]
    ) == 0
    assert not files_equal(tmp_path / "a", tmp_path / "b", ["warped.png"])


def test_bad_config_value(bent_scene, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("inner_mode = squishy\n")
    assert main(["tryon", "--scene-dir", str(bent_scene), "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "inner_mode" in capsys.readouterr().err


def test_generated_scenes_round_trip(tmp_path):
    for name in ("identity", "bent", "straight", "scale2", "crossed"):
        d = tmp_path / name
        assert main(["gen-scene", str(d), "--preset", name, "--size", "96"]) == 0
        assert main(["tryon", "--scene-dir", str(d), "--out", str(d / "out")]) == 0


# --- gen-scene -------------------------------------------------------------


def test_gen_scene_flexion_flags(tmp_path):
    d = tmp_path / "s"
    assert main(["gen-scene", str(d), "--preset", "straight", "--person-flexion", "90,0", "--size", "128"]) == 0
    from garmentwarp.pose import arm_chain

    kp = read_keypoints(d / "person_keypoints.json")
    assert np.degrees(arm_chain(kp, "right").interior_angle) == pytest.approx(90.0, abs=1e-9)
    assert np.degrees(arm_chain(kp, "left").interior_angle) == pytest.approx(180.0, abs=1e-9)


def test_gen_scene_rejects_bad_angle(tmp_path, capsys):
    assert main(["gen-scene", str(tmp_path / "s"), "--person-flexion", "150"]) == 2
    assert "flexion" in capsys.readouterr().err


def test_gen_scene_from_spec_file(tmp_path):
    from garmentwarp.scene import preset

    spec = preset("bent", 64)
    (tmp_path / "spec.json").write_text(spec.to_json())
    assert main(["gen-scene", str(tmp_path / "s"), "--spec", str(tmp_path / "spec.json"), "--texture", "stripes"]) == 0
    assert json.loads((tmp_path / "s" / "scene.json").read_text())["texture"] == "stripes"


# --- eval ------------------------------------------------------------------


def write_pairs(tmp_path):
    rng = np.random.default_rng(0)
    imgs = []
    for i in range(4):
        img = rng.integers(0, 256, (24, 24, 4), dtype=np.uint8)
        img[..., 3] = 255
        write_image(tmp_path / f"i{i}.png", img)
        imgs.append(img)
    return imgs


def test_eval_three_pairs(tmp_path):
    imgs = write_pairs(tmp_path)
    region = np.zeros((24, 24), bool)
    region[5:15, 5:15] = True
    write_mask(tmp_path / "r.png", region)
    (tmp_path / "m.csv").write_text("reference,candidate,region\ni0.png,i0.png\ni0.png,i1.png\ni2.png,i3.png,r.png\n")
    assert main(["eval", str(tmp_path / "m.csv"), "--out", str(tmp_path / "scores.csv")]) == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "scores.csv").read_text())))
    assert len(rows) == 3
    assert [Path(r["candidate"]).name for r in rows] == ["i0.png", "i1.png", "i3.png"]
    assert float(rows[0]["ssim"]) == 1.0 and float(rows[0]["mae"]) == 0.0
    assert float(rows[1]["ssim"]) == ssim(imgs[0], imgs[1])
    assert float(rows[1]["mae"]) == mean_abs_error(imgs[0], imgs[1])
    assert float(rows[2]["mae"]) == mean_abs_error(imgs[2], imgs[3], region)
    assert all(r["status"] == "ok" for r in rows)


def test_eval_empty_manifest(tmp_path, capsys):
    (tmp_path / "m.csv").write_text("")
    assert main(["eval", str(tmp_path / "m.csv"), "--out", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.csv").read_text() == "reference,candidate,ssim,mae,status\n"
    assert "warning" in capsys.readouterr().err


def test_eval_row_errors(tmp_path):
    write_pairs(tmp_path)
    (tmp_path / "m.csv").write_text("i0.png,missing.png\ni0.png,i1.png\n")
    assert main(["eval", str(tmp_path / "m.csv"), "--out", str(tmp_path / "s.csv")]) == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "s.csv").read_text())))
    assert rows[0]["status"].startswith("error") and rows[1]["status"] == "ok"
    (tmp_path / "bad.csv").write_text("i0.png,missing.png\nnope.png,i1.png\n")
    assert main(["eval", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "s2.csv")]) == 1


def test_eval_stdout(tmp_path, capsys):
    write_pairs(tmp_path)
    (tmp_path / "m.csv").write_text("i0.png,i0.png\n")
    assert main(["eval", str(tmp_path / "m.csv")]) == 0
    assert capsys.readouterr().out.splitlines()[1].endswith(",1.0,0.0,ok")


# --- warp-grid / misc ------------------------------------------------------


def test_warp_grid(bent_scene, tmp_path):
    assert main(["warp-grid", "--scene-dir", str(bent_scene), "--out", str(tmp_path / "g.png"), "--source-out", str(tmp_path / "b.png")]) == 0
    warped = read_image(tmp_path / "g.png")
    board = read_image(tmp_path / "b.png")
    assert warped.shape == board.shape == (128, 128, 4)
    assert (warped[..., 3] > 0).sum() > 0.5 * (board[..., 3] > 0).sum()


def test_warp_grid_needs_inputs(tmp_path):
    assert main(["warp-grid", "--out", str(tmp_path / "g.png")]) == 2


def test_version_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "garmentwarp", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


# --- config ----------------------------------------------------------------


def test_settings_update_and_validate():
    s = WarpSettings().update({"steepness-a": "20", "torso_midpoints": "yes", "z_order": "left_sleeve,torso", "n_jobs": None})
    assert s.steepness_a == 20.0 and s.torso_midpoints is True
    assert s.z_order == ("left_sleeve", "torso")
    assert s.estimator_params()["steepness_a"] == 20.0
    for bad in ({"nope": 1}, {"steepness_a": "x"}, {"tie_rule": "sideways"}, {"min_conf": "2"},
                {"torso_landmarks": "neck,tail"}, {"close_radius": "-1"}, {"n_jobs": "0"}, {"inpaint_fill": "maybe"}):  # fmt: skip
        with pytest.raises(ConfigError):
            WarpSettings().update(bad)


def test_read_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("steepness_a = 5  # steep\ninner_mode=smooth\n")
    assert read_config_file(p) == {"steepness_a": "5", "inner_mode": "smooth"}
    p.write_text("this is not a setting\n")
    with pytest.raises(ConfigError):
        read_config_file(p)


def test_run_config_paths(tmp_path):
    cfg = RunConfig(*(tmp_path / f"{i}" for i in range(6)), out_dir=tmp_path)
    with pytest.raises(ConfigError):
        cfg.check_paths()
