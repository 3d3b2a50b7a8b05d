import csv
import json

import jsonschema
import pytest

from conftest import run


def validate(doc, schema):
    jsonschema.Draft202012Validator.check_schema(schema)
    jsonschema.validate(doc, schema, cls=jsonschema.Draft202012Validator)


def test_generate_csv(trial_csv):
    with open(trial_csv, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 300
    assert {"y", "a"} <= set(rows[0])
    assert sum(int(r["a"]) for r in rows) == 150


@pytest.mark.parametrize("classifier,extra", [
    ("naive", []),
    ("logit", ["--calibrate", "platt"]),
    ("forest", ["--trees", "20", "--k", "3"]),
    ("gnb", []),
    ("knn", ["--calibrate", "isotonic"]),
])
def test_estimate_schema(trial_csv, schema, classifier, extra):
    out = run("estimate", "--input", trial_csv, "--classifier", classifier, "--ci-draws", 300,
              "--threads", 2, *extra)
    doc = json.loads(out.stdout)
    validate(doc, schema("estimate"))
    assert doc["lower"] <= doc["upper"]


def test_estimate_without_ci(trial_csv, schema):
    doc = json.loads(run("estimate", "--input", trial_csv, "--ci-draws", 0, "--trees", 10).stdout)
    validate(doc, schema("estimate"))
    assert doc["extended_ci"] is None


def test_simulate_schema_and_csv(tmp_path, schema):
    csv_path = tmp_path / "m.csv"
    out = run("simulate", "--n", 200, "--reps", 3, "--theta-draws", 20000, "--ci-draws", 200,
              "--methods", "naive,oracle,logit", "--csv", csv_path)
    doc = json.loads(out.stdout)
    validate(doc, schema("simulate"))
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == len(doc["rows"])
    assert [r["method"] for r in rows] == [r["method"] for r in doc["rows"]]


def test_sweep_schema(tmp_path, schema):
    out = run("simulate", "--scenario", 2, "--n", 200, "--reps", 2, "--theta-draws", 20000,
              "--sweep-sigma", "0.5:1.5:3", "--classifier", "logit")
    doc = json.loads(out.stdout)
    validate(doc, schema("sweep"))
    assert [p["sigma"] for p in doc["sweep"]] == pytest.approx([0.5, 1.0, 1.5])


def test_output_file(tmp_path, trial_csv):
    path = tmp_path / "est.json"
    out = run("estimate", "--input", trial_csv, "--classifier", "naive", "--output", path)
    assert out.stdout == ""
    assert json.loads(path.read_text())["n"] == 300


def test_config_file(tmp_path, trial_csv):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'[estimate]\ninput = "{trial_csv}"\nclassifier = "naive"\nalpha = 0.25\n')
    doc = json.loads(run("--config", cfg, "estimate").stdout)
    assert doc["options"]["classifier"] == "naive"
    assert doc["options"]["alpha"] == 0.25


@pytest.mark.parametrize("args,code,kind", [
    (["estimate", "--input", "/nonexistent.csv"], 64, "usage"),
    (["estimate", "--bogus"], 64, "usage"),
    (["simulate", "--scenario", "3"], 64, "usage"),
    (["simulate", "--reps", "1", "--theta-draws", "1000", "--alpha", "1.5", "--ci-draws", "10"], 2, "parameter"),
    (["simulate", "--sweep-sigma", "1-2", "--reps", "1"], 2, "parameter"),
    (["generate", "--n", "1"], 2, None),
])
def test_error_exit_codes(args, code, kind, schema):
    out = run(*args, check=False)
    assert out.returncode == code
    err = json.loads(out.stderr)
    validate(err, schema("error"))
    if kind:
        assert err["error"]["kind"] == kind


def test_estimate_bad_column(trial_csv, schema):
    out = run("estimate", "--input", trial_csv, "--outcome-col", "nope", check=False)
    assert out.returncode == 2
    validate(json.loads(out.stderr), schema("error"))


def test_estimate_bad_outcome_values(tmp_path, schema):
    p = tmp_path / "bad.csv"
    p.write_text("y,a,x1\n3,0,0.1\n1,1,0.2\n0,0,0.3\n")
    out = run("estimate", "--input", p, "--classifier", "naive", check=False)
    assert out.returncode == 2
    validate(json.loads(out.stderr), schema("error"))
