from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from digraphical.fuzz import random_diagram, random_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def graphs(draw, max_nodes=4, max_arity=2, **kw):
    return random_graph(random.Random(draw(seeds)), max_nodes, max_arity, **kw)


@st.composite
def diagrams(draw, max_nodes=4, max_edges=6):
    return random_diagram(random.Random(draw(seeds)), max_nodes, max_edges)


@pytest.fixture
def data_dir() -> Path:
    return DATA


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
