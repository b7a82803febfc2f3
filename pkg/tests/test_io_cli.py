import json

import numpy as np
import pytest

from cvclust.cli import main
from cvclust.errors import InputError, ParseError
from cvclust.grassmann import build_ensemble
from cvclust.io import (BasisCache, format_report, load_dataset, load_labels, load_matrix,
                        save_labels, save_matrix)
from cvclust.synth import generate_gallery


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_load_matrix_example(tmp_path):
    M = load_matrix(_write(tmp_path / "m.csv", "1,2\n3,4\n5,6\n"))
    np.testing.assert_array_equal(M, [[1, 2], [3, 4], [5, 6]])


def test_load_matrix_header(tmp_path):
    M = load_matrix(_write(tmp_path / "m.csv", "a,b\n1,2\n"), header=True)
    assert M.shape == (1, 2)


@pytest.mark.parametrize("text,line,msg", [
    ("1,2\n3\n", 2, "ragged"),
    ("1,2\n3,x\n", 2, "non-numeric"),
    ("1,2\n3,4\nnan,1\n", 3, "non-finite"),
    ("inf\n", 1, "non-finite"),
])
def test_load_matrix_errors_carry_line(tmp_path, text, line, msg):
    with pytest.raises(ParseError, match=msg) as info:
        load_matrix(_write(tmp_path / "m.csv", text))
    assert info.value.line == line
    assert f":{line}" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="input not found"):
        load_matrix(tmp_path / "nope.csv")


def test_load_dataset_labels(tmp_path):
    d = _write(tmp_path / "d.csv", "0,0\n1,1\n2,2\n")
    ds = load_dataset(d, _write(tmp_path / "l.csv", "1\n2\n2\n"))
    assert ds.n_classes == 2 and ds.data.shape == (2, 3)
    with pytest.raises(ParseError, match="non-contiguous labels"):
        load_dataset(d, _write(tmp_path / "l2.csv", "1\n3\n3\n"))
    with pytest.raises(ParseError, match="3 data rows"):
        load_dataset(d, _write(tmp_path / "l3.csv", "1\n2\n"))


@pytest.mark.parametrize("text", ["1\nx\n", "1\n0\n"])
def test_bad_labels(tmp_path, text):
    with pytest.raises(ParseError) as info:
        load_labels(_write(tmp_path / "l.csv", text))
    assert info.value.line == 2


def test_matrix_round_trip(tmp_path):
    M = np.random.default_rng(0).normal(size=(4, 3))
    save_matrix(tmp_path / "m.csv", M)
    assert np.array_equal(load_matrix(tmp_path / "m.csv"), M)
    save_labels(tmp_path / "l.csv", [3, 1, 2])
    assert list(load_labels(tmp_path / "l.csv")) == [3, 1, 2]


def test_report_formats():
    rep = {"command": "x", "result": {"value": 1 / 3, "flag": True, "none": None},
           "rows": [{"a": 1, "b": np.inf}]}
    text = format_report(rep)
    assert "[result]" in text and "value = 0.333333333333" in text and "flag = true" in text
    assert "[rows]\na\tb\n1\tinf" in text
    j = json.loads(format_report(rep, "json"))
    assert j["result"]["value"] == 0.333333333333
    with pytest.raises(InputError):
        format_report(rep, "xml")


def test_basis_cache_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    sets = [rng.normal(size=(5, 8)) for _ in range(2)]
    cache = BasisCache(tmp_path / "cache")
    a = build_ensemble(sets, nu=2, seed=3, cache=cache)
    assert len(list((tmp_path / "cache").iterdir())) == 4
    b = build_ensemble(sets, nu=2, seed=3, cache=cache)
    for key in a.bases:
        assert np.array_equal(a.bases[key].basis, b.bases[key].basis)
    key = BasisCache.key(sets[0], 1, 3, 1.0, 50)
    assert key != BasisCache.key(sets[0], 1, 4, 1.0, 50)


def test_basis_cache_needs_directory(monkeypatch):
    monkeypatch.delenv("CVCLUST_CACHE_DIR", raising=False)
    with pytest.raises(InputError):
        BasisCache()


# command line

def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _gallery_files(tmp_path, probe_class=2, seed=0, n=20, probe_size=20):
    g, gl, p = generate_gallery(3, n, probe_size, probe_class, seed=seed)
    save_matrix(tmp_path / "g.csv", g.T)
    save_labels(tmp_path / "gl.csv", gl)
    save_matrix(tmp_path / "p.csv", p.T)
    return g, gl, p


def test_missing_probe_exit_2(tmp_path, capsys):
    _gallery_files(tmp_path)
    code, out, err = _run(capsys, "classify", "--gallery", str(tmp_path / "g.csv"),
                          "--gallery-labels", str(tmp_path / "gl.csv"),
                          "--probe", str(tmp_path / "missing.csv"))
    assert code == 2 and out == "" and "input not found" in err


def test_parse_error_exit_2(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,1\n1,x\n")
    code, _, err = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"))
    assert code == 2 and ":2" in err


def test_disconnected_affinity_exit_1(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,0,0\n0,0,1\n0,1,0\n")
    code, _, err = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"),
                        "--format", "json")
    assert code == 1
    assert json.loads(err)["error"]["exit_code"] == 1


def test_fiedler_two_nodes(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,1\n1,0\n")
    code, out, _ = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"),
                        "--format", "json")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["fiedler_value"] == pytest.approx(2.0, abs=1e-9)
    v = res["fiedler_vector"]
    assert v[0] * v[1] < 0


def test_cluster_single_class(tmp_path, capsys):
    X = np.random.default_rng(2).normal(size=(10, 3))
    save_matrix(tmp_path / "d.csv", X)
    save_labels(tmp_path / "l.csv", [1] * 10)
    code, out, _ = _run(capsys, "cluster", "--data", str(tmp_path / "d.csv"),
                        "--labels", str(tmp_path / "l.csv"), "--format", "json")
    assert code == 0
    assert json.loads(out)["result"]["n_clusters"] == 1


def test_classify_duplicate_of_class_two(tmp_path, capsys):
    g, gl, _ = _gallery_files(tmp_path)
    save_matrix(tmp_path / "dup.csv", g[:, gl == 2].T)
    code, out, _ = _run(capsys, "classify", "--gallery", str(tmp_path / "g.csv"),
                        "--gallery-labels", str(tmp_path / "gl.csv"),
                        "--probe", str(tmp_path / "dup.csv"), "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["predicted_label"] == 2
    assert rep["distances"][1]["distance"] == 0.0


def test_classify_text_report(tmp_path, capsys):
    _gallery_files(tmp_path, probe_class=3, seed=1)
    code, out, _ = _run(capsys, "classify", "--gallery", str(tmp_path / "g.csv"),
                        "--gallery-labels", str(tmp_path / "gl.csv"),
                        "--probe", str(tmp_path / "p.csv"))
    assert code == 0
    assert "predicted_label = 3" in out and "[distances]" in out


@pytest.mark.parametrize("fusion", ["sum", "mode"])
def test_classify_ensemble_cli(tmp_path, capsys, fusion):
    _gallery_files(tmp_path, probe_class=1, seed=3, n=24)
    save_labels(tmp_path / "sets.csv", np.repeat(np.arange(1, 7), 12))
    code, out, _ = _run(capsys, "classify", "--gallery", str(tmp_path / "g.csv"),
                        "--gallery-labels", str(tmp_path / "gl.csv"),
                        "--gallery-sets", str(tmp_path / "sets.csv"),
                        "--probe", str(tmp_path / "p.csv"), "--fusion", fusion,
                        "--nu", "2", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["fusion"] == fusion
    assert len(rep["result"]["per_dimension_labels"]) == 2
    assert rep["result"]["predicted_label"] == 1


def test_mixed_gallery_set_rejected(tmp_path, capsys):
    _gallery_files(tmp_path)
    save_labels(tmp_path / "sets.csv", [1] * 60)
    code, _, err = _run(capsys, "classify", "--gallery", str(tmp_path / "g.csv"),
                        "--gallery-labels", str(tmp_path / "gl.csv"),
                        "--gallery-sets", str(tmp_path / "sets.csv"),
                        "--probe", str(tmp_path / "p.csv"), "--fusion", "sum")
    assert code == 2 and "mixes classes" in err


def test_reports_identical_across_runs(tmp_path, capsys):
    _gallery_files(tmp_path, probe_class=2, seed=4)
    argv = ["classify", "--gallery", str(tmp_path / "g.csv"),
            "--gallery-labels", str(tmp_path / "gl.csv"), "--probe", str(tmp_path / "p.csv")]
    first = _run(capsys, *argv)[1]
    second = _run(capsys, *argv)[1]
    assert first == second


def test_out_file(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,1,1\n1,0,1\n1,1,0\n")
    code, out, _ = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"),
                        "--out", str(tmp_path / "r.txt"))
    assert code == 0 and out == ""
    assert "fiedler_value" in (tmp_path / "r.txt").read_text()


def test_config_precedence(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,1\n1,0\n")
    _write(tmp_path / "c.json", json.dumps({"max_iterations": 7, "patience": 3, "format": "json"}))
    code, out, _ = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"),
                        "--config", str(tmp_path / "c.json"), "--patience", "5")
    assert code == 0
    cfg = json.loads(out)["config"]
    assert cfg["max_iterations"] == 7 and cfg["patience"] == 5


def test_bad_config(tmp_path, capsys):
    _write(tmp_path / "a.csv", "0,1\n1,0\n")
    _write(tmp_path / "c.json", "{not json")
    code, _, err = _run(capsys, "fiedler", "--affinity", str(tmp_path / "a.csv"),
                        "--config", str(tmp_path / "c.json"))
    assert code == 2 and "invalid JSON" in err


def test_experiment_command(tmp_path, capsys):
    argv = ["experiment", "--d-values", "2", "7", "--sizes", "40", "--seeds", "2",
            "--format", "json"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    rep = json.loads(out)
    assert len(rep["cells"]) == 4 and "connectivity" in rep["trends"]
    rep2 = json.loads(_run(capsys, *argv)[1])
    rep.pop("timings"), rep2.pop("timings")
    assert rep == rep2


@pytest.mark.parametrize("kind,files", [("two-gaussians", ["data.csv", "labels.csv"]),
                                        ("gallery", ["gallery.csv", "gallery_labels.csv",
                                                     "probe.csv"])])
def test_synth_command(tmp_path, capsys, kind, files):
    code, _, _ = _run(capsys, "synth", kind, "--out-dir", str(tmp_path / "s"), "--n", "10")
    assert code == 0
    for f in files:
        assert (tmp_path / "s" / f).exists()
    if kind == "two-gaussians":
        ds = load_dataset(tmp_path / "s" / "data.csv", tmp_path / "s" / "labels.csv")
        assert ds.data.shape == (3, 20) and ds.n_classes == 2


def test_synth_then_cluster(tmp_path, capsys):
    _run(capsys, "synth", "two-gaussians", "--out-dir", str(tmp_path), "--n", "15", "--d", "8")
    code, out, _ = _run(capsys, "cluster", "--data", str(tmp_path / "data.csv"),
                        "--labels", str(tmp_path / "labels.csv"), "--proximity", "gaussian",
                        "--format", "json")
    assert code == 0
    # no probe points, so nothing is divisible
    assert json.loads(out)["result"]["n_clusters"] == 1
