import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stablematch import Allocation, Matching
from stablematch import instances as lab


@pytest.fixture
def housing():
    return lab.housing()


@pytest.fixture
def housing_suboptimal(housing):
    """The sub-optimal allocation used throughout: Alice-Dori and Bob-Edward
    at prices (7, 11)."""
    return Allocation(Matching.from_pairs([(0, 0), (1, 1)]), np.array([7.0, 11.0]))
