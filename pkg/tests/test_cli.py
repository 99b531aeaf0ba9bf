import json
import os

import pytest

from varlib.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, main, run


def invoke(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def write_pool(root, top):
    d = root / "pool"
    d.mkdir()
    for n in range(1, top + 1):
        (d / f"r{n:02d}.json").write_text(json.dumps({"kind": "rademacher", "n": n}))
    return d


def test_rademacher_to_varnorm_pipeline(tmp_path, capsys):
    model = tmp_path / "r3.json"
    code, _ = invoke(capsys, "rademacher", "--indices", "3", "--out", str(model))
    assert code == EXIT_OK
    code, out = invoke(capsys, "varnorm", "--model-json", str(model))
    assert code == EXIT_OK
    assert json.loads(out.out)["outputs"]["value"] == pytest.approx(1.0, abs=1e-12)


def test_reports_are_byte_identical(tmp_path, capsys):
    model = tmp_path / "m.json"
    invoke(capsys, "rademacher", "--indices", "2,6", "--out", str(model))
    outs = []
    for k in range(2):
        rep = tmp_path / f"rep{k}.json"
        code, _ = invoke(capsys, "measure-est", "--model-json", str(model), "--ladder", "2^-3..2^-6",
                         "--xs", "dyadic:2", "--report", str(rep))
        assert code == EXIT_OK
        outs.append(rep.read_bytes())
    assert outs[0] == outs[1]
    assert b"timings" not in outs[0]


def test_seeded_estimator_is_deterministic(tmp_path, capsys):
    bundle = tmp_path / "b"
    invoke(capsys, "system", "example", "--out", str(bundle), "--depth", "1", "--level", "10")
    reps = []
    for k in range(2):
        rep = tmp_path / f"e{k}.json"
        invoke(capsys, "equiv-const", "--target", "s2", "--bundle", str(bundle), "--samples", "20",
               "--seed", "3", "--report", str(rep))
        reps.append(rep.read_bytes())
    assert reps[0] == reps[1]


def test_malformed_measure_json_leaves_no_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"atoms": [[0.5')
    out = tmp_path / "out.json"
    rep = tmp_path / "rep.json"
    code, err = invoke(capsys, "synthesize", "--measure-json", str(bad), "--levels", "2",
                       "--out", str(out), "--report", str(rep))
    assert code == EXIT_INPUT
    assert "not valid JSON" in err.err
    assert not out.exists() and not rep.exists()


def test_unknown_subcommand(capsys):
    assert run(["no-such-command"]) == (EXIT_INPUT, None)
    capsys.readouterr()


def test_missing_file_is_input_error(tmp_path, capsys):
    code, err = invoke(capsys, "tree-norm", "--vector-json", str(tmp_path / "absent.json"))
    assert code == EXIT_INPUT and "cannot read" in err.err


def test_failed_check_exit_code(tmp_path, capsys):
    pool = write_pool(tmp_path, 6)
    code, out = invoke(capsys, "biortho", "select", "--candidates", str(pool), "--len", "4")
    assert code == EXIT_CHECK
    assert json.loads(out.out)["checks"]["complete"] is False


def test_select_then_check(tmp_path, capsys):
    pool = write_pool(tmp_path, 20)
    cert = tmp_path / "cert.json"
    code, _ = invoke(capsys, "biortho", "select", "--candidates", str(pool), "--len", "2", "--cert", str(cert))
    assert code == EXIT_OK
    code, out = invoke(capsys, "biortho", "check", "--cert", str(cert))
    rep = json.loads(out.out)
    assert code == EXIT_OK and rep["outputs"]["labels"] == ["r01", "r10"]


def test_tree_norm_and_lus2(tmp_path, capsys):
    x = tmp_path / "x.json"
    x.write_text(json.dumps({"0": 3, "1": 4}))
    code, out = invoke(capsys, "tree-norm", "--vector-json", str(x))
    assert code == EXIT_OK and json.loads(out.out)["outputs"]["value"] == pytest.approx(5.0)
    a, lam = tmp_path / "a.json", tmp_path / "l.json"
    a.write_text(json.dumps({"": 1, "0": 1, "1": 2}))
    lam.write_text(json.dumps({"": 1, "0": 1, "1": 1}))
    code, out = invoke(capsys, "lus2", "--alpha", str(a), "--lambda", str(lam), "--depth", "1")
    assert code == EXIT_OK


def test_depth_cap_from_environment(tmp_path, capsys, monkeypatch):
    x = tmp_path / "x.json"
    x.write_text(json.dumps({"0101": 1}))
    monkeypatch.setenv("VARLIB_MAX_DEPTH", "2")
    code, _ = invoke(capsys, "tree-norm", "--vector-json", str(x))
    assert code == EXIT_INPUT


def test_system_pipeline(tmp_path, capsys):
    b, b2 = tmp_path / "b", tmp_path / "b2"
    assert invoke(capsys, "system", "example", "--out", str(b))[0] == EXIT_OK
    assert invoke(capsys, "system", "validate", "--bundle", str(b), "--kind", "generating")[0] == EXIT_OK
    assert invoke(capsys, "system", "transform", "--bundle", str(b), "--out", str(b2))[0] == EXIT_OK
    assert os.path.isdir(b2)
    code, out = invoke(capsys, "equiv-const", "--target", "s2", "--bundle", str(b2), "--samples", "30")
    assert code == EXIT_OK
    assert json.loads(out.out)["outputs"]["constants"]["eps"] == pytest.approx(1 / 32)


def test_plot_csv(tmp_path, capsys):
    model = tmp_path / "m.json"
    invoke(capsys, "rademacher", "--indices", "2", "--out", str(model))
    plot = tmp_path / "plot.csv"
    code, _ = invoke(capsys, "measure-est", "--model-json", str(model), "--ladder", "0.25,0.125",
                     "--xs", "0,0.5,1", "--plot-data", str(plot))
    assert code == EXIT_OK
    lines = plot.read_text().splitlines()
    assert lines[0] == "x,delta,value" and len(lines) == 7


def test_selftest(capsys):
    code, out = invoke(capsys, "selftest")
    assert code == EXIT_OK and json.loads(out.out)["passed"]
