import os

import numpy as np
import pytest

from ikdamp.kinematics import axis_angle_to_rotation


def seed() -> int:
    return int(os.environ.get("IKD_SEED", "0"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(seed())


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    return axis_angle_to_rotation(axis, rng.uniform(-np.pi, np.pi))
