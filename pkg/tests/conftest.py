from __future__ import annotations

import io

import numpy as np
import pytest

from alertcast.ingest import StudyWindow, normalize_events, write_events_csv
from alertcast.synth import SynthSpec, generate_synthetic
from alertcast.timegrid import rasterize

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def lead_lag_spec():
    return SynthSpec(n_regions=6, days=180, lag_minutes=10, follow_prob=0.9, jitter=2)


@pytest.fixture(scope="session")
def lead_lag_fixture(lead_lag_spec):
    records = generate_synthetic(2024, lead_lag_spec)
    window = StudyWindow.days(lead_lag_spec.days)
    registry, events = normalize_events(records, window)
    grid = rasterize(events, registry, window)
    return records, registry, events, grid


@pytest.fixture(scope="session")
def lead_lag_csv(lead_lag_fixture, tmp_path_factory):
    records = lead_lag_fixture[0]
    path = tmp_path_factory.mktemp("fixture") / "events.csv"
    buf = io.StringIO()
    write_events_csv(records, buf)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path
