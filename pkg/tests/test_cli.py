import json
import math

import pytest

from artifit.cli import main
from artifit.records import read_jsonl


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def synth(capsys, out_dir, frames=6, preset="door", seed=0):
    cfg = out_dir / "scene.json"
    cfg.write_text(json.dumps({"frames": frames}))
    code, _, _ = run(
        capsys, "synth", "--preset", preset, "--seed", str(seed),
        "--config", str(cfg), "--out", str(out_dir),
    )
    assert code == 0
    return out_dir / "gt.jsonl", out_dir / "detections.jsonl"


class TestDumpConfig:
    def test_exact_defaults(self, capsys):
        code, out, _ = run(capsys, "--dump-config")
        assert code == 0
        cfg = json.loads(out)
        assert cfg["camera"] is None
        assert cfg["tracking"] == {
            "iou": 0.5, "metric": "mask", "min_track_length": 5,
        }
        assert cfg["grids"]["rotation"] == {
            "lo": -2.618, "hi": 2.618, "step": math.pi / 180.0,
        }
        assert cfg["grids"]["translation"] == {
            "lo": -1.0, "hi": 1.0, "step": 0.01,
        }
        assert cfg["classify"] == {
            "r_squared": 0.4, "slope": 0.1, "score_floor": 0.5,
        }
        assert cfg["eval"] == {
            "bbox_iou": 0.5, "ea_score": 0.5, "normal_deg": 30.0,
        }
        assert cfg["out_dir"] is None

    def test_byte_identical_across_calls(self, capsys):
        _, out1, _ = run(capsys, "--dump-config")
        _, out2, _ = run(capsys, "--dump-config")
        assert out1 == out2


class TestSynthCommand:
    def test_writes_both_files(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=6)
        assert len(read_jsonl(gt_path)) == 6
        assert len(read_jsonl(det_path)) == 6

    def test_seeded_determinism(self, capsys, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        synth(capsys, a, seed=7)
        synth(capsys, b, seed=7)
        assert (a / "gt.jsonl").read_bytes() == (b / "gt.jsonl").read_bytes()
        assert (a / "detections.jsonl").read_bytes() == (
            b / "detections.jsonl"
        ).read_bytes()

    def test_env_out_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("ARTIFIT_OUT", str(tmp_path))
        code, _, _ = run(capsys, "synth", "--preset", "drawer", "--seed", "1")
        assert code == 0
        assert (tmp_path / "gt.jsonl").exists()

    def test_flag_beats_env(self, capsys, tmp_path, monkeypatch):
        env_dir = tmp_path / "env"
        flag_dir = tmp_path / "flag"
        env_dir.mkdir()
        flag_dir.mkdir()
        monkeypatch.setenv("ARTIFIT_OUT", str(env_dir))
        synth(capsys, flag_dir)
        assert not (env_dir / "gt.jsonl").exists()
        assert (flag_dir / "gt.jsonl").exists()


class TestTrackCommand:
    def test_single_track(self, capsys, tmp_path):
        _, det_path = synth(capsys, tmp_path, frames=6)
        code, out, _ = run(
            capsys, "track", "--detections", str(det_path),
            "--out", str(tmp_path),
        )
        assert code == 0
        rows = [item for _, item in read_jsonl(tmp_path / "tracks.jsonl")]
        assert len(rows) == 6
        assert {r["track_id"] for r in rows} == {0}
        assert all(r["clip_id"] == "door" for r in rows)
        assert "1 tracks" in out

    def test_lenient_vs_strict_on_bad_line(self, capsys, tmp_path):
        _, det_path = synth(capsys, tmp_path, frames=6)
        with open(det_path, "a") as fh:
            fh.write("garbage\n")
        code, _, err = run(
            capsys, "track", "--detections", str(det_path),
            "--out", str(tmp_path),
        )
        assert code == 0
        assert "warning:" in err
        code, _, err = run(
            capsys, "track", "--detections", str(det_path), "--strict",
            "--out", str(tmp_path),
        )
        assert code == 2
        assert "error:" in err


class TestFitEvalPipeline:
    def test_door_end_to_end(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=8)
        code, out, _ = run(
            capsys, "fit", "--detections", str(det_path), "--out", str(tmp_path),
        )
        assert code == 0
        assert "1 articulating" in out
        rows = [item for _, item in read_jsonl(tmp_path / "fits.jsonl")]
        assert len(rows) == 1
        rec = rows[0]
        assert rec["articulating"] is True
        assert rec["category"] == "rotation"
        assert rec["axis3d"]["kind"] == "rotation"
        assert rec["motion"]["r_squared"] > 0.9
        assert len(rec["frames"]) == 8
        assert all(fr["alpha"] is not None for fr in rec["frames"])

        code, out, _ = run(
            capsys, "eval", "--gt", str(gt_path),
            "--fits", str(tmp_path / "fits.jsonl"), "--out", str(tmp_path),
        )
        assert code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["auroc"] is None  # positives only in this clip
        assert metrics["ap"]["rotation"]["bbox"] == 1.0
        assert metrics["ap"]["rotation"]["num_gt"] == 8
        assert metrics["ap"]["translation"]["num_gt"] == 0
        assert "AUROC undefined" in out

    def test_eval_on_raw_detections(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=6)
        code, _, _ = run(
            capsys, "eval", "--gt", str(gt_path),
            "--detections", str(det_path), "--out", str(tmp_path),
        )
        assert code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        # zero-noise detections reproduce the ground truth exactly
        assert metrics["ap"]["rotation"]["bbox"] == 1.0
        assert metrics["ap"]["rotation"]["bbox+axis"] == 1.0

    def test_too_short_track_reported(self, capsys, tmp_path):
        _, det_path = synth(capsys, tmp_path, frames=3)
        code, out, _ = run(
            capsys, "fit", "--detections", str(det_path), "--out", str(tmp_path),
        )
        assert code == 0
        assert "0 articulating" in out
        (rec,) = [item for _, item in read_jsonl(tmp_path / "fits.jsonl")]
        assert rec["articulating"] is None
        assert rec["reason"] == "too_short"
        assert rec["motion"] is None

    def test_empty_detections_give_empty_outputs(self, capsys, tmp_path):
        empty = tmp_path / "detections.jsonl"
        empty.write_text("")
        code, out, _ = run(
            capsys, "track", "--detections", str(empty), "--out", str(tmp_path),
        )
        assert code == 0
        assert (tmp_path / "tracks.jsonl").read_bytes() == b""
        code, out, _ = run(
            capsys, "fit", "--detections", str(empty), "--out", str(tmp_path),
        )
        assert code == 0
        assert (tmp_path / "fits.jsonl").read_bytes() == b""
        assert "0 articulating" in out

    def test_negatives_only_auroc_undefined(self, capsys, tmp_path):
        cfg = tmp_path / "scene.json"
        cfg.write_text(json.dumps({"frames": 6, "slope": 0.0}))
        code, _, _ = run(
            capsys, "synth", "--config", str(cfg), "--out", str(tmp_path),
        )
        assert code == 0
        code, out, _ = run(
            capsys, "eval", "--gt", str(tmp_path / "gt.jsonl"),
            "--detections", str(tmp_path / "detections.jsonl"),
            "--out", str(tmp_path),
        )
        assert code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["auroc"] is None
        assert metrics["num_frames"] == {"positive": 0, "negative": 6}
        assert metrics["ap"]["rotation"]["bbox"] == 1.0  # AP still computed

    def test_thresholds_echoed_from_config(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=6)
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(
            {"eval": {"bbox_iou": 0.25, "ea_score": 0.6, "normal_deg": 15.0}}
        ))
        code, _, _ = run(
            capsys, "eval", "--gt", str(gt_path), "--detections", str(det_path),
            "--config", str(cfg), "--out", str(tmp_path),
        )
        assert code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["thresholds"] == {
            "bbox_iou": 0.25, "ea_score": 0.6, "normal_deg": 15.0,
        }

    def test_eval_needs_exactly_one_source(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=6)
        code, _, err = run(capsys, "eval", "--gt", str(gt_path))
        assert code == 2
        code, _, err = run(
            capsys, "eval", "--gt", str(gt_path),
            "--detections", str(det_path),
            "--fits", str(det_path),
        )
        assert code == 2
        assert "exactly one" in err


class TestRenderCommand:
    def test_writes_pngs(self, capsys, tmp_path):
        gt_path, det_path = synth(capsys, tmp_path, frames=4)
        out_dir = tmp_path / "imgs"
        out_dir.mkdir()
        code, out, _ = run(
            capsys, "render", "--gt", str(gt_path),
            "--detections", str(det_path),
            "--frames", "0:2", "--out", str(out_dir),
        )
        assert code == 0
        files = sorted(p.name for p in out_dir.iterdir())
        assert files == ["door_0000.png", "door_0001.png"]
        for p in out_dir.iterdir():
            assert p.read_bytes()[:4] == b"\x89PNG"

    def test_single_frame_spec(self, capsys, tmp_path):
        gt_path, _ = synth(capsys, tmp_path, frames=4)
        out_dir = tmp_path / "one"
        out_dir.mkdir()
        code, _, _ = run(
            capsys, "render", "--gt", str(gt_path), "--frames", "2",
            "--out", str(out_dir),
        )
        assert code == 0
        assert [p.name for p in out_dir.iterdir()] == ["door_0002.png"]

    def test_no_matching_frames_exit_2(self, capsys, tmp_path):
        gt_path, _ = synth(capsys, tmp_path, frames=4)
        code, _, err = run(
            capsys, "render", "--gt", str(gt_path), "--frames", "99",
            "--out", str(tmp_path),
        )
        assert code == 2
        assert "no frames" in err

    def test_no_inputs_exit_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "render", "--out", str(tmp_path))
        assert code == 2


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 1

    def test_missing_required_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["track"])
        assert exc.value.code == 1

    def test_bad_frames_spec(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["render", "--gt", "x.jsonl", "--frames", "a:b"])
        assert exc.value.code == 1

    def test_missing_input_file_exit_2(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "track", "--detections", str(tmp_path / "absent.jsonl"),
        )
        assert code == 2
        assert "error:" in err

    def test_invalid_run_config_exit_2(self, capsys, tmp_path):
        _, det_path = synth(capsys, tmp_path, frames=6)
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"tracking": {"iou": 5.0}}))
        code, _, err = run(
            capsys, "track", "--detections", str(det_path),
            "--config", str(bad), "--out", str(tmp_path),
        )
        assert code == 2

    def test_invalid_scene_config_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "scene.json"
        bad.write_text(json.dumps({"noise": {"nope": 1}}))
        code, _, _ = run(
            capsys, "synth", "--config", str(bad), "--out", str(tmp_path),
        )
        assert code == 2
