import numpy as np
import pytest

import oracles
from conftest import random_image

from infostyle.errors import (
    DimensionMismatch,
    FingerprintMismatch,
    InvalidParam,
    MissingFeature,
)
from infostyle.features import FeatureVector
from infostyle.metric import MetricModel
from infostyle.reduction import parse_config
from infostyle.retrieval import (
    SearchIndex,
    build_index,
    embed_image,
    load_index,
    query,
    save_index,
)


def unit_model(dim, rng=None, weights=None):
    if weights is None:
        weights = np.ones(dim) if rng is None else rng.uniform(0, 2, dim)
    return MetricModel(weights=weights, feature_config=parse_config("color_hist"))


def random_index(model, rng, n, dim):
    entries = {f"img{i:03d}": rng.normal(size=dim) for i in range(n)}
    return SearchIndex(model.fingerprint(), dim, entries)


class TestBuildIndex:
    def test_empty_corpus(self):
        model = unit_model(30)
        index = build_index(model, {})
        assert len(index) == 0
        assert query(index, model, np.zeros(30), k=3) == []

    def test_single_image(self, rng):
        model = unit_model(30)
        feats = {"only": {"color_hist": FeatureVector("color_hist", rng.random(30))}}
        index = build_index(model, feats)
        assert len(index) == 1
        assert "only" in index

    def test_missing_feature_names_image(self, rng):
        model = unit_model(30)
        feats = {"x": {"lum_hist": FeatureVector("lum_hist", rng.random(10))}}
        with pytest.raises(MissingFeature) as exc:
            build_index(model, feats)
        assert exc.value.image_id == "x"
        assert exc.value.feature_name == "color_hist"

    def test_rebuild_is_identical(self, rng, tmp_path):
        model = unit_model(30)
        feats = {
            f"im{i}": {"color_hist": FeatureVector("color_hist", rng.random(30))}
            for i in range(5)
        }
        p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        save_index(build_index(model, feats), p1)
        save_index(build_index(model, dict(reversed(list(feats.items())))), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()


class TestQuery:
    def test_self_retrieval_rank_one(self, rng):
        model = unit_model(8, rng)
        index = random_index(model, rng, 20, 8)
        for image_id, vec in list(index.entries.items())[:5]:
            results = query(index, model, vec, k=3)
            assert results[0][0] == image_id
            assert results[0][1] == 0.0

    def test_k_larger_than_index(self, rng):
        model = unit_model(4, rng)
        index = random_index(model, rng, 3, 4)
        results = query(index, model, rng.normal(size=4), k=10)
        assert len(results) == 3
        dists = [d for _, d in results]
        assert dists == sorted(dists)

    def test_matches_bruteforce_topk(self, rng):
        for trial in range(25):
            dim = int(rng.integers(2, 12))
            n = int(rng.integers(1, 60))
            k = int(rng.integers(1, 10))
            model = unit_model(dim, rng)
            index = random_index(model, rng, n, dim)
            q = rng.normal(size=dim)
            got = query(index, model, q, k=k)
            want = oracles.top_k(index.entries, model.weights, q, k)
            assert [i for i, _ in got] == [i for i, _ in want]
            np.testing.assert_allclose(
                [d for _, d in got], [d for _, d in want], rtol=1e-9
            )

    def test_tie_breaks_lexicographic(self):
        model = unit_model(2)
        v = np.array([1.0, 1.0])
        index = SearchIndex(
            model.fingerprint(), 2, {"zz": v.copy(), "aa": v.copy(), "mm": v.copy()}
        )
        results = query(index, model, np.zeros(2), k=3)
        assert [i for i, _ in results] == ["aa", "mm", "zz"]

    def test_exclude_self(self, rng):
        model = unit_model(5, rng)
        index = random_index(model, rng, 6, 5)
        target = "img002"
        results = query(index, model, index.entries[target], k=6, exclude_id=target)
        assert target not in [i for i, _ in results]
        assert len(results) == 5

    def test_insertion_order_irrelevant(self, rng):
        model = unit_model(6, rng)
        entries = {f"i{i}": rng.normal(size=6) for i in range(30)}
        shuffled = dict(sorted(entries.items(), key=lambda kv: hash(kv[0])))
        a = SearchIndex(model.fingerprint(), 6, entries)
        b = SearchIndex(model.fingerprint(), 6, shuffled)
        q = rng.normal(size=6)
        assert query(a, model, q, k=7) == query(b, model, q, k=7)

    def test_fingerprint_mismatch(self, rng):
        model = unit_model(4, rng)
        index = SearchIndex("deadbeef", 4, {"a": np.zeros(4)})
        with pytest.raises(FingerprintMismatch):
            query(index, model, np.zeros(4), k=1)

    def test_bad_inputs(self, rng):
        model = unit_model(4, rng)
        index = random_index(model, rng, 3, 4)
        with pytest.raises(InvalidParam):
            query(index, model, np.zeros(4), k=0)
        with pytest.raises(DimensionMismatch):
            query(index, model, np.zeros(5), k=1)


class TestPersistence:
    def test_roundtrip(self, rng, tmp_path):
        model = unit_model(7, rng)
        index = random_index(model, rng, 12, 7)
        path = str(tmp_path / "index.jsonl")
        save_index(index, path)
        again = load_index(path)
        assert again.fingerprint == index.fingerprint
        assert again.dim == index.dim
        assert set(again.entries) == set(index.entries)
        for image_id in index.entries:
            np.testing.assert_array_equal(again.entries[image_id], index.entries[image_id])

    def test_saved_twice_identical(self, rng, tmp_path):
        model = unit_model(5, rng)
        index = random_index(model, rng, 4, 5)
        p1, p2 = str(tmp_path / "1.jsonl"), str(tmp_path / "2.jsonl")
        save_index(index, p1)
        save_index(index, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()


def test_embed_image_runs_full_pipeline(rng):
    model = unit_model(30)
    img = random_image(rng, 200, 300)
    vec = embed_image(model, img)
    assert vec.shape == (30,)
    # embedding the already-normalized window gives the same vector
    from infostyle.imaging import normalize_window

    np.testing.assert_array_equal(vec, embed_image(model, normalize_window(img)))
