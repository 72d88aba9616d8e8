import numpy as np
import pytest
from skimage import data


@pytest.fixture(scope="session")
def camera_crop():
    return np.asarray(data.camera(), dtype=np.float64)[120:248, 180:308]


@pytest.fixture(scope="session")
def moon_crop():
    return np.asarray(data.moon(), dtype=np.float64)[150:278, 150:278]


@pytest.fixture(scope="session")
def coins_crop():
    return np.asarray(data.coins(), dtype=np.float64)[60:188, 100:228]


@pytest.fixture
def small_clean(camera_crop):
    """32x32 crop for fast pipeline runs."""
    return camera_crop[48:80, 48:80].copy()
