import csv
import json

import numpy as np
import pytest

from dwfmm.cli import counts_rows, main


def _csv(text):
    return list(csv.DictReader(text.strip().splitlines()))


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "data.csv"
    assert main(["gen", "--n", "500", "--d", "3", "--seed", "4", "-o", str(path)]) == 0
    return str(path)


def test_counts_table_values():
    rows = {(r["d"], r["q"]): r for r in counts_rows(20, 10, [2.0])}
    assert rows[(2, 2)]["tdi"] == 6
    assert rows[(20, 10)]["tpi"] == 11**20
    assert rows[(20, 10)]["wtdi_normalized"] == 250
    assert rows[(20, 10)]["wtdi_raw"] == 130


def test_counts_non_increasing_in_r():
    by_r = [{(r["d"], r["q"]): r["wtdi_normalized"] for r in counts_rows(8, 6, [rr])} for rr in (2, 3, 4)]
    for key in by_r[0]:
        assert by_r[0][key] >= by_r[1][key] >= by_r[2][key]


def test_counts_cli(capsys):
    assert main(["counts", "--d-max", "2", "--q-max", "2", "--decay", "2", "3"]) == 0
    rows = _csv(capsys.readouterr().out)
    assert len(rows) == 2 * 2 * 3
    assert list(rows[0]) == ["d", "q", "r", "tpi", "tdi", "wtdi_normalized", "wtdi_raw"]


def test_gen_is_deterministic(tmp_path, data_file):
    other = tmp_path / "again.csv"
    main(["gen", "--n", "500", "--d", "3", "--seed", "4", "-o", str(other)])
    assert open(data_file).read() == other.read_text()


def test_gen_needs_output():
    assert main(["gen", "--n", "5"]) == 2


def test_stats_subcommands(data_file, capsys):
    assert main(["tree", "--input", data_file, "--leaf-size", "16"]) == 0
    tree = json.loads(capsys.readouterr().out)
    assert tree["n_points"] == 500 and tree["max_leaf_size"] <= 16
    assert main(["partition", "--input", data_file, "--q", "3"]) == 0
    part = json.loads(capsys.readouterr().out)
    assert {"n_blocks_far", "n_blocks_near", "compression_ratio_forecast"} <= set(part)
    assert main(["build", "--input", data_file, "--q", "3", "--threads", "1"]) == 0
    build = json.loads(capsys.readouterr().out)
    assert {"n_blocks_far", "n_blocks_near", "n_lambda", "mem_bytes", "assembly_ms"} <= set(build)


def test_fekete_cli(tmp_path, capsys):
    nodes = tmp_path / "nodes.csv"
    cache = tmp_path / "cache"
    args = ["fekete", "--d", "4", "--q", "3", "-o", str(nodes), "--cache-dir", str(cache)]
    assert main(args) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["condition_estimate"] < 1e8
    assert len(np.loadtxt(nodes, delimiter=",", skiprows=1, ndmin=2)) == report["n_lambda"]
    assert any(cache.iterdir())


def test_bench_deterministic(data_file, capsys):
    args = ["bench", "--input", data_file, "--q-sweep", "2", "6", "--sigma", "0.3"]
    assert main(args) == 0
    a = json.loads(capsys.readouterr().out)
    assert main(args) == 0
    b = json.loads(capsys.readouterr().out)
    assert [r["rel_error"] for r in a] == [r["rel_error"] for r in b]
    assert a[1]["rel_error"] < a[0]["rel_error"]


def test_bench_skips_oracle_when_large(capsys):
    with pytest.warns(UserWarning, match="dense oracle skipped"):
        assert main(["bench", "--n", "5001", "--d", "2", "--q", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["rel_error"] is None


def test_compress_error_cli(data_file, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"sigmas": [0.01, 0.1], "ncols": 10, "repetitions": 2}}))
    out = tmp_path / "ce.csv"
    assert main(["compress-error", "--input", data_file, "--q", "3", "--config", str(cfg), "-o", str(out)]) == 0
    rows = _csv(out.read_text())
    assert [float(r["sigma"]) for r in rows] == [0.01, 0.1]


def test_fit_predict_round_trip(data_file, tmp_path, capsys):
    model = tmp_path / "m.npz"
    assert main(["fit", "--input", data_file, "--q", "3", "--sigma", "0.1", "--ridge", "1e-2", "-o", str(model)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["converged"] and report["n_test"] == 50 and report["pe"] < 0.5
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--input", data_file, "-o", str(out)]) == 0
    preds = np.array([float(r["prediction"]) for r in _csv(out.read_text())])
    assert preds.shape == (500,)
    assert "pe" in json.loads(capsys.readouterr().err)


def test_fit_non_convergence_exit_code(data_file):
    assert main(["fit", "--input", data_file, "--q", "3", "--ridge", "1e-6", "--max-iter", "1"]) == 1


def test_grid_cli(data_file, tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"grid": {"sigmas": [0.05, 0.2], "lambdas": [1e-3, 1e-1], "ncols": 10, "repetitions": 2}}))
    out = tmp_path / "grid.csv"
    assert main(["grid", "--input", data_file, "--q", "3", "--config", str(cfg), "-o", str(out)]) == 0
    rows = _csv(out.read_text())
    assert len(rows) == 4
    assert list(rows[0]) == ["sigma", "lambda", "pe_mean", "pe_std", "ce_mean", "ce_std", "cg_iters", "wall_ms"]
    # nine significant digits
    assert all(len(r["pe_mean"].replace(".", "").lstrip("0").split("e")[0]) <= 9 for r in rows)


def test_grid_with_test_file(data_file, tmp_path):
    test = tmp_path / "test.csv"
    main(["gen", "--n", "40", "--d", "3", "--seed", "99", "-o", str(test)])
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"grid": {"sigmas": [0.1], "lambdas": [1e-2], "ncols": 5, "repetitions": 1}}))
    args = ["grid", "--input", data_file, "--test-file", str(test), "--q", "2", "--config", str(cfg)]
    assert main(args) == 0


def test_usage_errors(data_file, tmp_path):
    assert main(["fit", "--input", str(tmp_path / "missing.csv")]) == 2
    assert main(["predict", "--input", data_file]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert main(["build", "--config", str(bad)]) == 2
    weights = tmp_path / "w.txt"
    weights.write_text("1,2")
    assert main(["build", "--input", data_file, "--weights", str(weights)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_auto_weights_need_sorted_extent(tmp_path):
    path = tmp_path / "wide.csv"
    x = np.random.default_rng(0).random((50, 2)) * [0.1, 1.0]
    np.savetxt(path, x, delimiter=",", header="x1,x2", comments="")
    assert main(["tree", "--input", str(path)]) == 2
    weights = tmp_path / "w.txt"
    weights.write_text("2.0,1.0")
    assert main(["tree", "--input", str(path), "--weights", str(weights)]) == 0
