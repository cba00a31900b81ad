import numpy as np
import pytest


def random_image(rng, width, height):
    """Uniform-random RGB uint8 image."""
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def solid_image(width, height, color):
    img = np.zeros((height, width, 3), dtype=np.uint8)
    img[:, :] = color
    return img


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """30 synthetic infographic-like images plus planted triplet labels."""
    from corpusgen import make_corpus, make_planted_triplets

    root = tmp_path_factory.mktemp("fixture_corpus")
    corpus_dir = str(root / "images")
    ids = make_corpus(corpus_dir)
    csv_path = make_planted_triplets(corpus_dir, str(root / "triplets.csv"))
    return {"dir": corpus_dir, "ids": ids, "triplets_csv": csv_path}
