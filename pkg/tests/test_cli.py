import json
from dataclasses import replace

import pytest

from casinject import batch, report, synthetic as syn
from casinject import trajectory as tj
from casinject.cli import main
from casinject.config import ExperimentConfig, HeatmapSpec

from conftest import CENTER, EXPECTED_CORPUS

FAST_OPT = {"restarts": 2, "max_iterations": 6}


def write_config(tmp_path, **extra):
    cfg = {"airport": "TEST", "center": list(CENTER), "optimizer": FAST_OPT, **extra}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read_tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_clean_corpus(tmp_path, corpus_dir):
    out = tmp_path / "out"
    assert main(["clean", str(corpus_dir), "--config", write_config(tmp_path), "--out", str(out)]) == 0
    manifest = tj.read_manifest(out / "manifest.jsonl")
    assert [e["id"] for e in manifest] == sorted(EXPECTED_CORPUS)
    for e in manifest:
        status, a, b = EXPECTED_CORPUS[e["id"]]
        if status == "rejected":
            assert e["rejected"] and (e["stage"], e["reason"]) == (a, b)
        else:
            assert not e["rejected"] and (e["trend"], e["containment"]) == (a, b)
    kept = sorted(p.stem for p in (out / "trajectories").glob("*.csv"))
    assert kept == sorted(k for k, v in EXPECTED_CORPUS.items() if v[0] == "kept")
    dup = {e["id"]: e["duplicates"] for e in manifest}
    assert dup["a00009-000"] == 5 and dup["a00001-000"] == 0


def test_clean_deterministic(tmp_path, corpus_dir):
    files = sorted(str(p) for p in corpus_dir.glob("*.csv"))
    cfg = write_config(tmp_path)
    for name in ("a", "b"):
        assert main(["clean", *files, "--config", cfg, "--out", str(tmp_path / name)]) == 0
    assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")


def test_clean_empty_input(tmp_path):
    out = tmp_path / "out"
    assert main(["clean", "--out", str(out)]) == 0
    assert (out / "manifest.jsonl").read_text() == ""


def test_clean_bad_file_continues(tmp_path, corpus_dir):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,icao24\n1,abc123\n")
    files = [str(corpus_dir), str(bad), str(tmp_path / "missing.csv")]
    out = tmp_path / "out"
    assert main(["clean", *files, "--config", write_config(tmp_path), "--out", str(out)]) == 0
    manifest = tj.read_manifest(out / "manifest.jsonl")
    errors = [e for e in manifest if e["stage"] == "read"]
    assert [e["source"] for e in errors] == ["bad.csv", "missing.csv"]
    assert len(manifest) == len(EXPECTED_CORPUS) + 2


def _traj_dir(tmp_path, trajs):
    d = tmp_path / "trajs"
    d.mkdir()
    for t in trajs:
        tj.write_trajectory_csv(t, d / f"{t.traj_id}.csv")
    return d


def test_optimize_single_and_report(tmp_path):
    d = _traj_dir(tmp_path, [syn.head_on_descent("abc123-000", 10000, 4000, 150)])
    out = tmp_path / "out"
    cfg = write_config(tmp_path)
    assert main(["optimize", str(d), "--config", cfg, "--out", str(out)]) == 0
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["runs"] == 1 and agg["table"][0]["n"] == 1
    table = (out / "table.csv").read_text().splitlines()
    assert table[1].startswith("all,all,1,")
    rec = json.loads((out / "results" / "abc123-000.json").read_text())
    assert rec["airport"] == "TEST" and rec["trend"] == "descending"

    rep_out = tmp_path / "rep"
    assert main(["report", str(out / "results"), "--out", str(rep_out)]) == 0
    assert json.loads((rep_out / "report.json").read_text()) == agg
    assert (rep_out / "table.csv").read_bytes() == (out / "table.csv").read_bytes()


def test_optimize_deterministic_across_workers(tmp_path):
    trajs = [
        syn.head_on_descent("aaaaaa-000", 10000, 4000, 120),
        syn.climb_out("bbbbbb-000", 4000, 9000, 120, heading_deg=90),
        syn.overflight("cccccc-000", 7000, 120, heading_deg=200),
    ]
    d = _traj_dir(tmp_path, trajs)
    cfg = write_config(tmp_path)
    for name, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        assert main(["optimize", str(d), "--config", cfg, "--workers", workers, "--out", str(tmp_path / name)]) == 0
    a = read_tree(tmp_path / "a")
    assert a == read_tree(tmp_path / "b") == read_tree(tmp_path / "c")
    assert main(["optimize", str(d), "--config", cfg, "--seed", "9", "--out", str(tmp_path / "d")]) == 0
    assert read_tree(tmp_path / "d") != a


def test_optimize_failure_counted(tmp_path, monkeypatch):
    trajs = [syn.head_on_descent("aaaaaa-000", 10000, 4000, 120), syn.overflight("bbbbbb-000", 7000, 120)]
    real = batch.optimize

    def flaky(traj, *a, **k):
        if traj.traj_id.startswith("bbbbbb"):
            raise RuntimeError("boom")
        return real(traj, *a, **k)

    monkeypatch.setattr(batch, "optimize", flaky)
    records = batch.optimize_all(trajs, ExperimentConfig(optimizer=replace(ExperimentConfig().optimizer, **FAST_OPT)))
    ok, failed = batch.split_failures(records)
    assert failed == 1 and len(ok) == 1
    assert report.aggregate(ok, failed).to_dict()["failed"] == 1


def test_report_empty(tmp_path):
    empty = tmp_path / "results"
    empty.mkdir()
    assert main(["report", str(empty), "--out", str(tmp_path / "rep")]) == 0
    assert json.loads((tmp_path / "rep" / "report.json").read_text())["runs"] == 0


def test_heatmap_cells(tmp_path):
    trajs = [syn.head_on_descent("aaaaaa-000", 10000, 4000, 120), syn.overflight("bbbbbb-000", 7000, 120)]
    d = _traj_dir(tmp_path, trajs)
    cfg = write_config(tmp_path, heatmap={"nx": 2, "ny": 3})
    out = tmp_path / "out"
    assert main(["heatmap", str(d), "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "heatmap.csv").read_text().splitlines()
    assert lines[0] == "row,col,x,y,mean_cost,n"
    assert len(lines) == 7
    assert all(line.endswith(",2") for line in lines[1:])


def test_heatmap_far_grid_all_zero():
    trajs = [syn.head_on_descent("aaaaaa-000", 10000, 4000, 120)]
    cfg = ExperimentConfig(heatmap=HeatmapSpec(3, 3, (5e6, 5e6, 5.1e6, 5.1e6)))
    cells = batch.heatmap(trajs, cfg)
    assert len(cells) == 9
    assert all(c.mean_cost == 0.0 and c.n == 1 for c in cells)


def test_heatmap_no_eligible_trajectories():
    trajs = [syn.head_on_descent("aaaaaa-000", 20000, 15000, 120)]
    cells = batch.heatmap(trajs, ExperimentConfig(heatmap=HeatmapSpec(2, 2, (0, 0, 1, 1))))
    assert all(c.mean_cost is None and c.n == 0 for c in cells)
    assert batch.heatmap_csv(cells).splitlines()[1].endswith(",,0")


def test_heatmap_order_invariant():
    trajs = [
        syn.head_on_descent("aaaaaa-000", 10000, 4000, 100),
        syn.climb_out("bbbbbb-000", 4000, 9000, 100, heading_deg=90),
        syn.overflight("cccccc-000", 7000, 100, heading_deg=200),
    ]
    cfg = ExperimentConfig(heatmap=HeatmapSpec(2, 2), optimizer=replace(ExperimentConfig().optimizer, **FAST_OPT))
    assert batch.heatmap(trajs, cfg) == batch.heatmap(trajs[::-1], cfg)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["optimize", "/nonexistent/dir"], 1),
        (["report", "/nonexistent/dir"], 1),
        (["clean", "--workers", "0"], 2),
    ],
)
def test_exit_codes(tmp_path, argv, code):
    assert main(argv + ["--out", str(tmp_path / "o")]) == code


def test_bad_config_exit_code(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"optimiser": {}}')
    assert main(["clean", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    path.write_text("{not json")
    assert main(["clean", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert main(["clean", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2
