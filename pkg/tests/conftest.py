from pathlib import Path

import numpy as np
import pytest

from glmdisc.data import Dataset, FeatureKind, Schema, load_csv, load_schema

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def german():
    return load_csv(DATA_DIR / "german" / "german.csv", load_schema(DATA_DIR / "german" / "schema.json"))


@pytest.fixture
def mixed_ds():
    """Two continuous and one categorical feature, 8 rows."""
    schema = Schema(("a", "c", "b"),
                    (FeatureKind.CONTINUOUS, FeatureKind.CATEGORICAL, FeatureKind.CONTINUOUS),
                    "y", {"c": ("u", "v", "w")})
    cont = np.array([[0.1, 5.0], [0.4, 4.0], [0.5, 3.0], [0.9, 2.0],
                     [0.2, 1.0], [0.6, 0.5], [0.3, 0.2], [0.8, 0.1]])
    cat = np.array([[0], [1], [2], [0], [1], [2], [0], [1]])
    y = np.array([0, 1, 0, 1, 1, 0, 0, 1])
    return Dataset(schema, cont, cat, y)


def one_feature(x, y=None, name="x"):
    schema = Schema((name,), (FeatureKind.CONTINUOUS,), "y")
    x = np.asarray(x, float).reshape(-1, 1)
    return Dataset(schema, x, np.zeros((x.shape[0], 0), dtype=np.int64), y)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
