"""Shared fixtures for the mirs test suite."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from mirs.data import CONV, PROB, DataMatrix
from mirs.rng import StreamKey
from mirs.simgen import DgpConfig, generate_dataset


@pytest.fixture(scope="session")
def dgp_dataset():
    """One masked sample from the default simulation design."""
    _, data = generate_dataset(DgpConfig(), StreamKey(4242, (0, 0)))
    return data


@pytest.fixture(scope="session")
def complete_dataset(dgp_dataset):
    """The same sample with every outcome observed."""
    return DataMatrix(
        x1=dgp_dataset.x1, x2=dgp_dataset.x2, y=dgp_dataset.y, y_observed=np.ones(dgp_dataset.n, dtype=bool),
        source=dgp_dataset.source, p_s=dgp_dataset.p_s,
    )


def make_data(x1, x2, y, observed=None, source=None, p_s=0.02) -> DataMatrix:
    """Small helper for hand-built datasets."""
    n = len(x1)
    observed = np.ones(n, dtype=bool) if observed is None else np.asarray(observed, dtype=bool)
    if source is None:
        source = np.where(np.arange(n) % 2 == 0, PROB, CONV)
    return DataMatrix(x1=x1, x2=x2, y=y, y_observed=observed, source=source, p_s=np.full(n, p_s))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line):
    tag = line.split("criterion", 1)[1].split(":", 1)[0].strip()
    return int(tag.rstrip("ab")), tag
