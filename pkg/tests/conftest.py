import copy
import json
import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from problems.loader import problem_from_dict

FIXTURES_DIR = PROJECT_ROOT / "fixtures" / "problems"


def fixture_payload(name: str) -> dict:
    with open(FIXTURES_DIR / f"{name}.json", "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def payload():
    """Deep copy of a bundled problem file, free to mutate."""

    def _payload(name):
        return copy.deepcopy(fixture_payload(name))

    return _payload


@pytest.fixture
def build_problem():
    """ProblemSpec from a bundled fixture (or an edited payload) with optional overrides."""

    def _build(name_or_payload, grid=None, steps=None, theta=None, horizon=None):
        data = (
            copy.deepcopy(fixture_payload(name_or_payload))
            if isinstance(name_or_payload, str)
            else copy.deepcopy(name_or_payload)
        )
        if horizon is not None:
            data["time"]["horizon"] = horizon
        return problem_from_dict(data, grid=grid, steps=steps, theta=theta)

    return _build


@pytest.fixture
def linear_problem(build_problem):
    return build_problem("linear_source_1d", grid=(41,), steps=200)


@pytest.fixture
def problem_file(tmp_path):
    """Write a payload to tmp_path and return its path."""

    def _write(data, name="problem.json"):
        path = Path(tmp_path) / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
