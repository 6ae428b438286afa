"""Shared fixtures: repo paths and the optional external-dataset directory."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
DEMO_CSV = REPO_ROOT / "data" / "demo.csv"
DEMO_SCHEMA = REPO_ROOT / "schemas" / "demo.schema.json"

# User-supplied datasets (NSL-KDD etc.) live outside the repo; tests that
# need them skip with an explicit marker when the directory is absent.
DATA_DIR_ENV = "CPAD_DATA_DIR"


def external_data_dir() -> Path | None:
    value = os.environ.get(DATA_DIR_ENV)
    if not value:
        return None
    path = Path(value)
    return path if path.is_dir() else None


def nsl_kdd_files() -> tuple[Path, Path] | None:
    root = external_data_dir()
    if root is None:
        return None
    train = root / "KDDTrain+.txt"
    test = root / "KDDTest+.txt"
    if train.is_file() and test.is_file():
        return train, test
    return None


@pytest.fixture(scope="session")
def demo_paths() -> tuple[Path, Path]:
    assert DEMO_CSV.is_file() and DEMO_SCHEMA.is_file()
    return DEMO_CSV, DEMO_SCHEMA
