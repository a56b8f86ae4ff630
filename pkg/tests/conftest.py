import numpy as np
import pytest

from graspsim.gripper import GripperParams


@pytest.fixture
def gripper():
    return GripperParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
