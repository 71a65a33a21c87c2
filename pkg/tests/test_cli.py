import csv
import json
import os

import numpy as np
import pytest

from vgagent import cli
from vgagent.errors import Diverged
from vgagent.world import Landmark, TriMesh, box_mesh, quad_mesh, save_landmarks, save_obj


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def files_bytes(d):
    return {n: open(os.path.join(d, n), "rb").read() for n in sorted(os.listdir(d)) if os.path.isfile(os.path.join(d, n))}


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("w") / "world"
    code = cli.main(["prepare", "--demo", "--out", str(out), "--levels", "simnav,obstnav",
                     "--n-landmarks", "3", "--per-landmark", "2"])
    assert code == 0
    return out


# ------------------------------------------------------------------ prepare


def test_prepare_demo_grid_matches_bbox(bundle):
    meta = json.loads((bundle / "world.json").read_text())
    assert meta["grid"]["shape"] == [64 / 0.5, 48 / 0.5]
    assert np.load(bundle / "grid.npy").shape == (128, 96)
    assert len(json.loads((bundle / "scenarios_simnav.json").read_text())) == 6


def test_prepare_is_idempotent(bundle, capsys):
    before = files_bytes(bundle)
    code, out, _ = run(capsys, "prepare", "--demo", "--out", bundle, "--levels", "simnav,obstnav",
                       "--n-landmarks", 3, "--per-landmark", 2)
    assert code == 0 and "128 x 96" in out
    assert files_bytes(bundle) == before


def test_prepare_from_mesh(tmp_path, capsys):
    mesh = TriMesh.concatenate([quad_mesh((0, 0), (10, 6)), box_mesh((4.25, 2.25, 0), (5.75, 3.75, 1))])
    save_obj(mesh, tmp_path / "scene.obj")
    save_landmarks([Landmark("a", "crate", "a crate", (4.25, 2.25, 0), (5.75, 3.75, 1))], tmp_path / "lm.json")
    code, out, _ = run(capsys, "prepare", "--mesh", tmp_path / "scene.obj", "--landmarks", tmp_path / "lm.json",
                       "--no-align", "--levels", "", "--out", tmp_path / "b")
    assert code == 0
    assert "20 x 12 cells" in out and "16 occupied" in out  # 1.5 m box a quarter cell off the grid lines spans 4 x 4 cells


def test_prepare_missing_landmarks_exits_2(tmp_path, capsys):
    save_obj(quad_mesh((0, 0), (4, 4)), tmp_path / "scene.obj")
    code, _, err = run(capsys, "prepare", "--mesh", tmp_path / "scene.obj", "--landmarks", tmp_path / "nope.json",
                       "--out", tmp_path / "b")
    assert code == 2
    assert "landmarks file not found" in err


def test_prepare_bad_obj_reports_line(tmp_path, capsys):
    (tmp_path / "bad.obj").write_text("v 0 0 0\nv 1 0 0\nv x 1 0\n")
    save_landmarks([], tmp_path / "lm.json")
    code, _, err = run(capsys, "prepare", "--mesh", tmp_path / "bad.obj", "--landmarks", tmp_path / "lm.json",
                       "--out", tmp_path / "b")
    assert code == 2
    assert "bad.obj:3" in err


def test_prepare_unknown_level(tmp_path, capsys):
    code, _, err = run(capsys, "prepare", "--demo", "--levels", "moonnav", "--out", tmp_path / "b")
    assert code == 2 and "moonnav" in err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bench", "--planner", "telepathy"])
    assert exc.value.code == 2


# ------------------------------------------------------------------ bench


def bench_dir(out):
    (d,) = os.listdir(out)
    return os.path.join(out, d)


def test_bench_from_config(bundle, tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'world = "{bundle}"\nlevels = ["simnav", "obstnav"]\nlimit = 2\nplanner = "greedy"\n'
                   'out = "runs"\n[episode]\nmax_decisions = 30\n')
    code, out, _ = run(capsys, "bench", "--config", cfg)
    assert code == 0
    d = bench_dir(tmp_path / "runs")
    assert sorted(os.listdir(d)) == ["config.json", "results.jsonl", "summary.csv", "table.md"]
    saved = json.load(open(os.path.join(d, "config.json")))
    assert saved["episode"]["max_decisions"] == 30 and saved["planner"] == "greedy"
    rows = list(csv.DictReader(open(os.path.join(d, "summary.csv"))))
    assert [r["level"] for r in rows] == ["all", "obstnav", "simnav"]
    assert "| greedy |" in out


def test_bench_flags_override_config(bundle, tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'world = "{bundle}"\nlimit = 1\nruns = 1\n')
    code, out, _ = run(capsys, "bench", "--config", cfg, "--runs", 3, "--out", tmp_path / "o")
    assert code == 0
    assert "averaged over 3 run(s)" in out
    assert len(open(os.path.join(bench_dir(tmp_path / "o"), "results.jsonl")).readlines()) == 3


def test_bench_byte_identical(bundle, tmp_path, capsys):
    args = ["bench", "--world", bundle, "--limit", 2, "--seed", 7, "--jobs", 2]
    assert run(capsys, *args, "--out", tmp_path / "a")[0] == 0
    assert run(capsys, *args, "--out", tmp_path / "b")[0] == 0
    a, b = bench_dir(tmp_path / "a"), bench_dir(tmp_path / "b")
    assert os.path.basename(a) == os.path.basename(b)
    fa, fb = files_bytes(a), files_bytes(b)
    assert fa.pop("config.json") != fb.pop("config.json")  # only the output location differs
    assert fa == fb


def test_bench_vlm_mock_repeatable(bundle, tmp_path, capsys):
    args = ["bench", "--world", bundle, "--limit", 1, "--planner", "vlm", "--endpoint", "mock",
            "--max-decisions", 3]
    for name in "ab":
        assert run(capsys, *args, "--out", tmp_path / name)[0] == 0
    a, b = bench_dir(tmp_path / "a"), bench_dir(tmp_path / "b")
    assert files_bytes(a)["results.jsonl"] == files_bytes(b)["results.jsonl"]
    assert files_bytes(a)["summary.csv"] == files_bytes(b)["summary.csv"]
    logs = os.listdir(os.path.join(a, "transcripts", "vlm"))
    assert len(logs) == 1
    lines = open(os.path.join(a, "transcripts", "vlm", logs[0])).readlines()
    assert len(lines) == 3


@pytest.mark.parametrize("extra, needle", [
    (["--world", "/nonexistent"], "world bundle not found"),
    (["--planner", "vlm"], "needs --endpoint"),
    (["--scenarios", "/nonexistent.json"], "scenario file not found"),
])
def test_bench_input_errors(bundle, tmp_path, capsys, extra, needle):
    argv = ["bench", "--world", bundle, "--out", tmp_path] + extra
    code, _, err = run(capsys, *argv)
    assert code == 2 and needle in err


def test_bench_bad_toml(tmp_path, capsys):
    (tmp_path / "c.toml").write_text("world = [unclosed\n")
    assert run(capsys, "bench", "--config", tmp_path / "c.toml")[0] == 2
    (tmp_path / "d.toml").write_text('wrold = "x"\n')
    code, _, err = run(capsys, "bench", "--config", tmp_path / "d.toml")
    assert code == 2 and "wrold" in err


def test_bench_crash_exits_3(bundle, tmp_path, capsys, monkeypatch):
    import vgagent.benchmark as bm

    def boom(*a, **k):
        raise RuntimeError("worker died")

    monkeypatch.setattr(bm, "run_batch", boom)
    code, _, err = run(capsys, "bench", "--world", bundle, "--limit", 1, "--out", tmp_path)
    assert code == 3 and "worker died" in err


# ------------------------------------------------------------------ semfield


def test_semfield_fixture_and_ablation(tmp_path, capsys):
    assert run(capsys, "semfield", "--export-fixture", tmp_path / "scene.json")[0] == 0
    code, out, _ = run(capsys, "semfield", "--scene", tmp_path / "scene.json", "--out", tmp_path / "full")
    assert code == 0 and "mIoU" in out
    full = json.load(open(tmp_path / "full" / "report.json"))
    assert full["mIoU"] >= 0.9 and full["mAcc"] >= 0.9
    assert sorted(os.listdir(tmp_path / "full")) == ["codebook.json", "features.npy", "labels.npy", "masks.npz",
                                                     "report.json"]
    masks = np.load(tmp_path / "full" / "masks.npz")
    assert len(masks.files) == 20 and masks["view000"].shape == (48, 64)
    assert run(capsys, "semfield", "--out", tmp_path / "base", "--no-occlusion-masks")[0] == 0
    base = json.load(open(tmp_path / "base" / "report.json"))
    assert base["mIoU"] < full["mIoU"]
    assert base["config"]["use_occlusion"] is False


@pytest.mark.parametrize("content", ["{bad", '{"views": []}', '{"splats": [], "views": 3}'])
def test_semfield_bad_scene_exits_2(tmp_path, capsys, content):
    (tmp_path / "s.json").write_text(content)
    code, _, err = run(capsys, "semfield", "--scene", tmp_path / "s.json", "--out", tmp_path / "o")
    assert code == 2 and "s.json" in err


def test_semfield_divergence_exits_3(tmp_path, capsys, monkeypatch):
    import vgagent.semantic_field as sf

    def diverge(*a, **k):
        raise Diverged("lifting loss is not finite", 17)

    monkeypatch.setattr(sf, "run_pipeline", diverge)
    code, _, err = run(capsys, "semfield", "--out", tmp_path)
    assert code == 3 and "iteration 17" in err


# ------------------------------------------------------------------ report


def test_report_merges_planners(bundle, tmp_path, capsys):
    for planner in ("oracle", "greedy"):
        run(capsys, "bench", "--world", bundle, "--limit", 1, "--planner", planner, "--out", tmp_path / planner)
    files = [os.path.join(bench_dir(tmp_path / p), "results.jsonl") for p in ("oracle", "greedy")]
    code, out, _ = run(capsys, "report", *files, "--out", tmp_path / "rep")
    assert code == 0
    assert "| oracle |" in out and "| greedy |" in out
    rows = list(csv.DictReader(open(tmp_path / "rep" / "summary.csv")))
    assert {(r["planner"], r["level"]) for r in rows} == {(p, lv) for p in ("oracle", "greedy")
                                                          for lv in ("all", "simnav")}


def test_report_errors(tmp_path, capsys):
    assert run(capsys, "report", tmp_path / "none.jsonl")[0] == 2
    (tmp_path / "empty.jsonl").write_text("")
    assert run(capsys, "report", tmp_path / "empty.jsonl")[0] == 2
