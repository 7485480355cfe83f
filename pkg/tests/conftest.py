import numpy as np
import pytest

from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.manifest import save_image_set, write_manifest


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def random_image(np_rng):
    def make(width: int = 16, height: int = 16) -> Image:
        return Image.from_array(np_rng.integers(0, 256, size=(height, width), dtype=np.uint8))
    return make


@pytest.fixture
def constant_image():
    def make(value: int, width: int = 16, height: int = 16) -> Image:
        return Image.from_array(np.full((height, width), value, dtype=np.uint8))
    return make


@pytest.fixture
def manifest_of(tmp_path):
    """Write images (optionally labelled) to a temp folder and return the manifest path."""
    counter = {"n": 0}

    def make(images, label=None, labels=None):
        counter["n"] += 1
        folder = tmp_path / f"set{counter['n']}"
        if labels is None:
            entries = save_image_set(images, folder, "img", label=label)
        else:
            entries = []
            for index, (img, lab) in enumerate(zip(images, labels)):
                entries += save_image_set([img], folder, f"img{index:04d}", label=lab)
        return write_manifest(entries, folder / "manifest.csv")
    return make
