"""Regression checks against stored outputs (see ``golden/generate.py``)."""

import csv
import sys
from pathlib import Path

import numpy as np
import pytest

GOLDEN = Path(__file__).parent / "golden"
sys.path.insert(0, str(GOLDEN))
import generate  # noqa: E402


def _read(name):
    with open(GOLDEN / name) as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        return header, list(reader)


@pytest.mark.parametrize("name", sorted(generate.GOLDENS))
def test_matches_golden(name):
    header, rows = generate.GOLDENS[name]()
    want_header, want_rows = _read(name)
    assert header == want_header
    assert len(rows) == len(want_rows)
    assert [str(r[0]) for r in rows] == [r[0] for r in want_rows]
    got = np.array([[float(v) for v in r[1:]] for r in rows])
    want = np.array([[float(v) for v in r[1:]] for r in want_rows])
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-13)
