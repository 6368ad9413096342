"""Rewrite the golden CSVs from scenarios.yaml: ``python3 tests/golden/regenerate.py``."""

from pathlib import Path

import yaml

from qdbell.cli import main

HERE = Path(__file__).parent


def argv_for(name, spec, out):
    argv = [spec["command"], "--out", str(out), "--no-figure", "--threads", "1"]
    for key, value in spec["set"].items():
        argv += ["--set", f"{key}={value}"]
    for g in spec["grid"]:
        argv += ["--grid", g]
    return argv


def scenarios():
    return yaml.safe_load((HERE / "scenarios.yaml").read_text())


if __name__ == "__main__":
    for name, spec in scenarios().items():
        rc = main(argv_for(name, spec, HERE / f"{name}.csv"))
        print(name, rc)
