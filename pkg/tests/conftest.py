import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "toxchains" / "data" / "fixture"


@pytest.fixture
def fixture_dir():
    return FIXTURE


@pytest.fixture
def lexicon():
    return {"idiot": 0.8, "moron": 0.75, "stupid": 0.6, "dumb": 0.4, "scum": 0.85, "hate": 0.35}
