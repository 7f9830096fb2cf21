"""The frontend's rate fixtures must stay in lockstep with analytics."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from polis.analytics import compute_counts, compute_rates, event_from_dict

VECTORS = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" / "rates_vectors.json"


@pytest.fixture(scope="module")
def vectors():
    return json.loads(VECTORS.read_text())


def test_total_counts_and_rates_match(vectors):
    events = [event_from_dict(e) for e in vectors["events"]]
    counts = compute_counts(events)
    for key, value in vectors["total_counts"].items():
        assert getattr(counts, key) == value
    rates = compute_rates(counts)
    for key, value in vectors["total_rates"].items():
        assert getattr(rates, key) == pytest.approx(value, abs=1e-12)


def test_cumulative_series_matches(vectors):
    events = [event_from_dict(e) for e in vectors["events"]]
    for row in vectors["cumulative_by_day"]:
        upto = [e for e in events if e.day <= row["day"]]
        counts = compute_counts(upto)
        assert counts.activity == row["counts"]["activity"]
        rates = compute_rates(counts)
        for key, value in row["rates"].items():
            assert getattr(rates, key) == pytest.approx(value, abs=1e-12)
