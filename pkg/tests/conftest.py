"""Shared fixtures: exhaustive enumerations are cached per session."""

from __future__ import annotations

import pytest

from squareperm import enumerate_square


@pytest.fixture(scope="session")
def squares_by_n() -> dict[int, list[tuple[int, ...]]]:
    # Sq(7) has 2088 members; building the table once keeps the suite fast.
    return {n: enumerate_square(n) for n in range(1, 8)}
