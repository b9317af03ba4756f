import numpy as np
import pytest

from bscp.config import ExperimentConfig
from bscp.mask import BinaryMask, from_array
from bscp.synthetic import write_dataset


def disc_mask(radius: int = 30, size: int | None = None) -> BinaryMask:
    size = size or (2 * radius + 20)
    yy, xx = np.mgrid[:size, :size]
    c = size / 2
    return from_array((xx - c) ** 2 + (yy - c) ** 2 <= radius ** 2)


def rect_mask(width: int = 140, height: int = 31) -> BinaryMask:
    bits = np.zeros((height + 20, width + 20), dtype=bool)
    bits[10:10 + height, 10:10 + width] = True
    return from_array(bits)


def blob_mask(seed: int = 0, size: int = 64) -> BinaryMask:
    """Random smooth blob: thresholded sum of a few sinusoids in polar form."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size]
    c = size / 2
    r = np.hypot(xx - c, yy - c)
    phi = np.arctan2(yy - c, xx - c)
    radius = size * 0.32 * (1.0 + 0.22 * np.sin(2 * phi + rng.uniform(0, 6))
                            + 0.13 * np.cos(3 * phi + rng.uniform(0, 6)))
    return from_array(r <= radius)


@pytest.fixture(scope="session")
def tiny_config():
    return ExperimentConfig(codebook_size=16, codebook_cap=12, svm_epochs=40,
                            seeds=(0, 1), kmeans_max_iter=40)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinydata")
    write_dataset(root, variant="four-class", per_class=4, seed=0)
    return root
