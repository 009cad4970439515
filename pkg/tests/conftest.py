import sys
from pathlib import Path

# Make the oracle helpers importable from every test module.
sys.path.insert(0, str(Path(__file__).parent))

import pytest

KITTI_FIXTURE = Path(__file__).parent / "data" / "kitti_drive"


@pytest.fixture
def kitti_drive():
    return KITTI_FIXTURE
