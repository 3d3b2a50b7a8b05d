import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("THRBOUNDS_CLI", "thrbounds")
SCHEMA_DIR = Path(os.environ.get("THR_SCHEMA_DIR", Path(__file__).resolve().parents[2] / "schemas"))


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def schema():
    def load(name):
        return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())
    return load


@pytest.fixture(scope="session")
def trial_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "trial.csv"
    run("generate", "--scenario", 2, "--n", 300, "--seed", 4, "--output", path)
    return path
