from __future__ import annotations

import numpy as np
import pytest

from frustra.sessions import Session


def make_session(symbols, timestamps=None, urls=None, session_id="s1") -> Session:
    """Session with wide default gaps and distinct urls so no rule fires by accident."""
    n = len(symbols)
    if timestamps is None:
        timestamps = [1_544_400_000_000 + i * 10_000 for i in range(n)]
    if urls is None:
        urls = [f"u{i}" for i in range(n)]
    return Session(session_id, tuple(symbols), tuple(timestamps), tuple(urls))


@pytest.fixture
def rng():
    return np.random.default_rng(20181208)
