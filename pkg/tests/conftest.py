"""Shared fixtures: CLI runner, schema validation, repo paths."""

import json
import os
import pathlib
import subprocess
import sys

import pytest
from jsonschema import Draft202012Validator

REPO = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO / "scenarios"
SCHEMA_DIR = REPO / "schemas" / "v1"


@pytest.fixture(scope="session")
def scenario_path():
    def lookup(name: str) -> str:
        return str(SCENARIO_DIR / f"{name}.dag")

    return lookup


@pytest.fixture(scope="session")
def run_cli():
    def run(*args, stdin: str = "", color: str = "never"):
        env = dict(os.environ, SWIGCHECK_COLOR=color)
        return subprocess.run(
            [sys.executable, "-m", "swigcheck", *args],
            input=stdin,
            capture_output=True,
            text=True,
            env=env,
            cwd=str(REPO),
        )

    return run


@pytest.fixture(scope="session")
def validate_schema():
    cache = {}

    def validate(name: str, payload: dict) -> None:
        if name not in cache:
            with open(SCHEMA_DIR / f"{name}.json", "r", encoding="utf-8") as fh:
                schema = json.load(fh)
            Draft202012Validator.check_schema(schema)
            cache[name] = Draft202012Validator(schema)
        errors = sorted(cache[name].iter_errors(payload), key=str)
        if errors:
            first = errors[0]
            where = ".".join(str(p) for p in first.absolute_path) or "<root>"
            raise AssertionError(f"{name}: {first.message} at {where}")

    return validate
