import csv
import json

import numpy as np
import pytest

from mtuda.cli import main
from mtuda.data import LabeledDataset, save_csv

GAMMA_M_GRID = "0.01,0.02,0.05,0.1,0.2,0.5,1,2,5,10,100"


def read_tsv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    assert len({len(r) for r in rows}) == 1, "ragged TSV"
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def synth_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), "--seed", "0", "--resolution", "20", "--json"]) == 0
    return out


def test_synth_table_shape(synth_out):
    header, rows = read_tsv(synth_out / "accuracy.tsv")
    assert header[:3] == ["method", "kernel", "accuracy"]
    assert len(rows) == 8
    assert {(r[0], r[1]) for r in rows} == {
        (m, k) for m in ("mtuda-rls", "mtuda-svm", "shared", "nn") for k in ("linear", "gaussian")
    }
    assert all(0.0 <= float(r[2]) <= 1.0 for r in rows)
    assert json.loads((synth_out / "accuracy.json").read_text())[0]["method"] == "mtuda-rls"


def test_synth_grids(synth_out):
    grids = sorted(p.name for p in synth_out.glob("grid_*.tsv"))
    assert grids == ["grid_mtuda-rls_gaussian.tsv", "grid_mtuda-rls_linear.tsv",
                     "grid_shared_gaussian.tsv", "grid_shared_linear.tsv"]
    header, rows = read_tsv(synth_out / grids[0])
    assert header == ["x", "y", "class"] and len(rows) == 400


def test_synth_rls_not_below_shared(synth_out):
    _, rows = read_tsv(synth_out / "accuracy.tsv")
    acc = {(r[0], r[1]): float(r[2]) for r in rows}
    assert acc["mtuda-rls", "gaussian"] >= acc["shared", "gaussian"]
    assert acc["mtuda-rls", "linear"] > acc["shared", "linear"]


def test_synth_deterministic(synth_out, tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--seed", "0", "--resolution", "20", "--json"]) == 0
    for f in synth_out.iterdir():
        assert (tmp_path / f.name).read_bytes() == f.read_bytes(), f.name


def write_config(tmp_path, body):
    p = tmp_path / "exp.toml"
    p.write_text(body)
    return p


@pytest.fixture
def separable_csvs(tmp_path, rng):
    X = np.hstack([rng.normal(size=(3, 40)) * 0.4, rng.normal(size=(3, 40)) * 0.4 + 2.5])
    ds = LabeledDataset(X, np.repeat([0, 1], 40), 2, label_names=("neg", "pos"))
    save_csv(tmp_path / "src.csv", ds)
    save_csv(tmp_path / "tgt.csv", ds)
    save_csv(tmp_path / "tgt_unlabeled.csv", ds, with_labels=False)
    return tmp_path


def test_run_no_shift_csv(separable_csvs):
    d = separable_csvs
    cfg = write_config(d, f"""
out = "{d / 'out'}"
[data]
source = "src.csv"
target = "tgt.csv"
source_label_column = -1
target_label_column = -1
""")
    assert main(["run", str(cfg)]) == 0
    _, rows = read_tsv(d / "out" / "report.tsv")
    report = dict(rows)
    assert float(report["final_accuracy"]) >= 0.95
    assert (report["gamma_m_hat"], report["gamma_a_hat"], report["gamma_i_hat"]) == ("1.0", "0.1", "1.0")
    assert report["iterations"] == "10" and report["p"] == "5"
    assert float(report["bandwidth"]) > 0
    header, iters = read_tsv(d / "out" / "iterations.tsv")
    assert header[0] == "iteration" and len(iters) == 10
    _, preds = read_tsv(d / "out" / "predictions.tsv")
    assert {p[1] for p in preds} <= {"neg", "pos"}


def test_run_flag_overrides(separable_csvs):
    d = separable_csvs
    cfg = write_config(d, f"""
out = "{d / 'o2'}"
[data]
source = "src.csv"
target = "tgt_unlabeled.csv"
[kernel]
kind = "gaussian"
""")
    assert main(["run", str(cfg), "--kernel", "linear", "--gamma-d", "10", "--iters", "2", "--solver", "svm"]) == 0
    report = dict(read_tsv(d / "o2" / "report.tsv")[1])
    assert report["kernel"] == "linear" and report["bandwidth"] == "none"
    assert report["gamma_d_hat"] == "10.0" and report["solver"] == "svm" and report["iterations"] == "2"
    assert report["final_accuracy"] == "nan"


def test_run_errors(tmp_path, separable_csvs, capsys):
    assert main(["run", str(tmp_path / "missing.toml")]) != 0
    bad = write_config(tmp_path, "[kernel]\nshape = 1\n")
    assert main(["run", str(bad)]) != 0
    assert "unknown" in capsys.readouterr().err
    missing = write_config(tmp_path, '[data]\nsource = "nope.csv"\ntarget = "tgt.csv"\n')
    assert main(["run", str(missing)]) != 0
    (separable_csvs / "wide.csv").write_text("1,2,3,4,0\n5,6,7,8,1\n")
    mismatch = write_config(separable_csvs, '[data]\nsource = "src.csv"\ntarget = "wide.csv"\n')
    assert main(["run", str(mismatch)]) != 0
    assert "dimension" in capsys.readouterr().err


@pytest.fixture
def synth_config(tmp_path):
    return write_config(tmp_path, f"""
seed = 0
out = "{tmp_path / 'sw'}"
[synthetic]
per_class_count = 30
""")


def test_sweep_gamma_m_grid(synth_config, tmp_path):
    assert main(["sweep", str(synth_config), "--param", "gamma_m_hat", "--values", GAMMA_M_GRID, "--jobs", "3"]) == 0
    header, rows = read_tsv(tmp_path / "sw" / "sweep_gamma_m_hat.tsv")
    assert header == ["gamma_m_hat", "accuracy", "status"]
    assert [float(r[0]) for r in rows] == [float(v) for v in GAMMA_M_GRID.split(",")]
    assert all(r[2] == "ok" for r in rows)
    first = (tmp_path / "sw" / "sweep_gamma_m_hat.tsv").read_bytes()
    assert main(["sweep", str(synth_config), "--param", "gamma_m_hat", "--values", GAMMA_M_GRID]) == 0
    assert (tmp_path / "sw" / "sweep_gamma_m_hat.tsv").read_bytes() == first


def test_sweep_partial_failure(synth_config, tmp_path):
    assert main(["sweep", str(synth_config), "--param", "p", "--values", "3,60,80"]) == 0
    _, rows = read_tsv(tmp_path / "sw" / "sweep_p.tsv")
    assert [r[2] == "ok" for r in rows] == [True, False, False]
    assert rows[1][1] == "nan"
    assert main(["sweep", str(synth_config), "--param", "p", "--values", "3,60", "--strict"]) == 1


def test_sweep_bandwidth_and_unknown(synth_config, tmp_path):
    assert main(["sweep", str(synth_config), "--param", "bandwidth", "--values", "auto,0.5"]) == 0
    _, rows = read_tsv(tmp_path / "sw" / "sweep_bandwidth.tsv")
    assert [r[0] for r in rows] == ["auto", "0.5"]
    assert main(["sweep", str(synth_config), "--param", "gamma_q", "--values", "1"]) != 0
