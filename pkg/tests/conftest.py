import json
from pathlib import Path

import pytest
from hypothesis import settings

# One deterministic profile for the whole suite: reruns must not depend on
# hypothesis' global RNG state.
settings.register_profile("lab", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("lab")

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"
GOLDEN = REPO / "golden"

FIGURE_CONFIGS = ("fig4", "fig5", "fig6_fast", "fig6_slow")
ALL_GOLDEN = FIGURE_CONFIGS + ("mixed_walk", "feedback")


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def default_pid_block() -> dict:
    return json.loads((CONFIGS / "default_pid.json").read_text())
