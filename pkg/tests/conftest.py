import sys
from pathlib import Path

import pytest

# make the sibling oracles module importable regardless of rootdir
sys.path.insert(0, str(Path(__file__).parent))

from confsieve.store import VersionStore


@pytest.fixture
def store(tmp_path) -> VersionStore:
    return VersionStore(tmp_path / "store")
