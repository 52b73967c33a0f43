# FracPot/tests/conftest.py

import json

import pytest

from kernels import BallSpec, StableParams


@pytest.fixture
def cauchy_plane():
    """alpha = 1 in the plane: the case with the most closed forms."""
    return StableParams(2, 1.0)


@pytest.fixture
def unit_disc():
    return BallSpec((0.0, 0.0), 1.0)


@pytest.fixture
def write_doc(tmp_path):
    """Write a run document to tmp_path and return its path as a string."""
    def _write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def disc_document():
    return {
        "params": {"d": 2, "alpha": 1.0},
        "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
        "seed": 7,
        "walks": 400,
        "points": [[0.3, 0.0]],
    }
