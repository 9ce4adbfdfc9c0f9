"""End-to-end CLI flows on temporary files."""
import json

import numpy as np
import pytest

from rorrlab import boolfn, dtree, ortho, rorrelation
from rorrlab.cli import main


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_sample_matrix_round_trip(tmp_path, capsys):
    out = tmp_path / "u.mat"
    csv = tmp_path / "u.csv"
    code, stdout, _ = run(["sample-matrix", "--n", "32", "--seed", "5",
                           "--out", str(out), "--csv", str(csv)], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["n"] == 32
    u = ortho.load_matrix(out)
    assert u.orthogonality_error() <= 1e-10
    assert csv.exists()

    # Hash is stable across repeated sampling with the same seed.
    out2 = tmp_path / "u2.mat"
    code, stdout2, _ = run(["sample-matrix", "--n", "32", "--seed", "5",
                            "--out", str(out2)], capsys)
    assert json.loads(stdout2)["sha256"] == doc["sha256"]


def test_check_good_cli(tmp_path, capsys):
    out = tmp_path / "u.mat"
    run(["sample-matrix", "--n", "64", "--seed", "1", "--out", str(out)], capsys)
    report_path = tmp_path / "good.json"
    code, stdout, _ = run(["check-good", "--matrix", str(out), "--pairs", "200",
                           "--max-block", "4", "--seed", "2",
                           "--out", str(report_path)], capsys)
    assert code == 0
    doc = json.loads(report_path.read_text())
    assert doc["violation_count"] == 0
    assert doc["good_so_far"] is True


def test_sample_classify_qsim_flow(tmp_path, capsys):
    matrix = tmp_path / "u.mat"
    run(["sample-matrix", "--n", "16", "--seed", "3", "--out", str(matrix)], capsys)

    inst = tmp_path / "duk.inst"
    code, stdout, _ = run(["sample-dist", "--dist", "duk", "--matrix", str(matrix),
                           "--k", "2", "--count", "5", "--seed", "4",
                           "--out", str(inst)], capsys)
    assert code == 0
    loaded, mpath, mhash = rorrelation.load_instances(inst)
    assert len(loaded) == 5 and mpath == str(matrix) and len(mhash) == 64

    code, stdout, _ = run(["rorrelate", "--matrix", str(matrix),
                           "--instances", str(inst)], capsys)
    assert code == 0
    phis = [json.loads(line)["phi"] for line in stdout.strip().splitlines()]
    assert len(phis) == 5

    code, stdout, _ = run(["classify", "--matrix", str(matrix),
                           "--instances", str(inst)], capsys)
    labels = [json.loads(line) for line in stdout.strip().splitlines()]
    assert all(row["label"] in ("YES", "NO", "AMBIGUOUS") for row in labels)

    code, stdout, _ = run(["qsim", "--matrix", str(matrix),
                           "--instances", str(inst), "--repetitions", "50",
                           "--seed", "6"], capsys)
    assert code == 0
    for line, expected_phi in zip(stdout.strip().splitlines(), phis):
        row = json.loads(line)
        assert row["p_accept"] == pytest.approx((1 + row["phi"]) / 2, abs=1e-10)
        assert row["phi"] == pytest.approx(expected_phi, abs=1e-10)
        assert row["queries"] == 1
        assert row["verdict"] in ("accept", "reject")


def test_sample_dist_uniform(tmp_path, capsys):
    inst = tmp_path / "unif.inst"
    code, _, _ = run(["sample-dist", "--dist", "uniform", "--n", "8", "--k", "3",
                      "--count", "4", "--seed", "0", "--out", str(inst)], capsys)
    assert code == 0
    loaded, _, _ = rorrelation.load_instances(inst)
    assert loaded[0].vectors.shape == (3, 8)


def test_sample_dist_validation(tmp_path, capsys):
    code, _, err = run(["sample-dist", "--dist", "duk", "--k", "2",
                        "--count", "1", "--out", str(tmp_path / "x.inst")], capsys)
    assert code == 2
    assert "matrix" in err


def test_moments_cli(tmp_path, capsys):
    matrix = tmp_path / "u.mat"
    run(["sample-matrix", "--n", "16", "--seed", "9", "--out", str(matrix)], capsys)
    code, stdout, _ = run(["moments", "--matrix", str(matrix), "--k", "2",
                           "--set", "1;2", "--seed", "1"], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["exact"] is True
    u = ortho.load_matrix(matrix)
    assert doc["estimate"] == pytest.approx(
        rorrelation.sign_correlation(u.entries[0, 1])
    )

    code, stdout, _ = run(["moments", "--matrix", str(matrix), "--k", "2",
                           "--audit", "--trials", "10", "--max-size", "4",
                           "--mc-samples", "2000", "--seed", "3"], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert len(doc["rows"]) == 10 and not doc["violations"]


def test_fourier_cli_table_and_tree(tmp_path, capsys):
    table = tmp_path / "f.csv"
    boolfn.write_truth_table_csv(table, [1, -1, -1, 1])
    code, stdout, _ = run(["fourier", "--table", str(table)], capsys)
    assert code == 0
    spec = boolfn.spectrum_from_json(stdout)
    assert spec.coefficient((1, 2)) == pytest.approx(1.0)

    tree_path = tmp_path / "tree.json"
    tree_path.write_text(dtree.tree_to_json(dtree.make_dictator(2, 1)))
    code, stdout, _ = run(["fourier", "--tree", str(tree_path),
                           "--convention", "01"], capsys)
    spec = boolfn.spectrum_from_json(stdout)
    assert spec.coefficient(()) == pytest.approx(0.5)
    assert spec.coefficient((1,)) == pytest.approx(0.5)


def test_tree_corpus_cli(tmp_path, capsys):
    out_dir = tmp_path / "corpus"
    code, stdout, _ = run(["tree-corpus", "--n", "6", "--d", "3", "--count", "4",
                           "--seed", "0", "--out-dir", str(out_dir)], capsys)
    assert code == 0
    manifest = (out_dir / "corpus.jsonl").read_text().strip().splitlines()
    assert len(manifest) == 4
    first = json.loads(manifest[0])
    tree = dtree.tree_from_json((out_dir / first["file"]).read_text())
    assert tree.n == 6 and tree.depth == 3

    code, _, err = run(["tree-corpus", "--n", "2", "--d", "3", "--count", "1",
                        "--seed", "0", "--out-dir", str(out_dir)], capsys)
    assert code == 2


def test_advantage_cli(tmp_path, capsys):
    matrix = tmp_path / "u.mat"
    run(["sample-matrix", "--n", "16", "--seed", "2", "--out", str(matrix)], capsys)
    code, stdout, _ = run(["advantage", "--matrix", str(matrix), "--k", "2",
                           "--samples", "500", "--seed", "1"], capsys)
    assert code == 0
    rows = [json.loads(line) for line in stdout.strip().splitlines()]
    assert {"tree", "estimate", "stderr", "theory_bound"} <= set(rows[0])


def test_verify_paper_reduced_and_determinism(tmp_path, capsys):
    args = ["verify-paper", "--reduced",
            "--checks", "quantum_identity,address_exactness,determinism"]
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    code1, out1, _ = run(args + ["--out", str(m1)], capsys)
    code2, out2, _ = run(args + ["--out", str(m2)], capsys)
    assert code1 == 0 and code2 == 0
    assert "[PASS]" in out1
    doc1 = json.loads(m1.read_text())
    doc2 = json.loads(m2.read_text())
    doc1.pop("timing")
    doc2.pop("timing")
    assert json.dumps(doc1, sort_keys=True) == json.dumps(doc2, sort_keys=True)


def test_verify_paper_config_file(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"quantum_triples": 8, "seed": 7}))
    out = tmp_path / "m.json"
    code, stdout, _ = run(["verify-paper", "--reduced", "--config", str(config),
                           "--checks", "quantum_identity", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["quantum_triples"] == 8
    assert doc["config"]["seed"] == 7

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus_key": 1}))
    code, _, err = run(["verify-paper", "--config", str(bad)], capsys)
    assert code == 2 and "bogus_key" in err


def test_verify_paper_unknown_check(tmp_path, capsys):
    code, _, err = run(["verify-paper", "--reduced", "--checks", "nope"], capsys)
    assert code == 2


def test_report_cli(tmp_path, capsys):
    manifest = tmp_path / "m.json"
    code, _, _ = run(["verify-paper", "--reduced",
                      "--checks", "address_exactness,uniform_variance",
                      "--out", str(manifest)], capsys)
    assert code == 0
    out_dir = tmp_path / "report"
    code, stdout, _ = run(["report", str(manifest), "--out-dir", str(out_dir)], capsys)
    assert code == 0
    assert (out_dir / "report.csv").exists()
    assert (out_dir / "report.md").exists()
    assert (out_dir / "advantage_vs_bound.csv").exists()
    header = (out_dir / "report.csv").read_text().splitlines()[0]
    assert header == "manifest,check,quantity,measured,reference,passed"

    code, _, err = run(["report", str(tmp_path / "missing.json"),
                        "--out-dir", str(out_dir)], capsys)
    assert code == 2


def test_missing_matrix_file_is_clean_error(tmp_path, capsys):
    code, _, err = run(["check-good", "--matrix", str(tmp_path / "no.mat")], capsys)
    assert code == 2
    assert "error" in err
