"""End-to-end search-by-example on a tiny generated corpus.

Builds 12 synthetic designs in three style families (warm, cool, mono),
trains a metric from triplets labeled by family membership, and shows that
nearest neighbors under the learned distance stay within a family.

Run with:  python demos/04_search_by_example.py
"""

import numpy as np

from infostyle.features import color_histogram
from infostyle.imaging import normalize_window
from infostyle.metric import EmbeddedTriplet, MetricModel, train
from infostyle.reduction import parse_config
from infostyle.retrieval import build_index, query
from infostyle.features import FeatureVector

rng = np.random.default_rng(3)

PALETTES = {
    "warm": [(220, 60, 40), (240, 150, 50), (200, 90, 90)],
    "cool": [(40, 90, 210), (60, 170, 200), (90, 110, 230)],
    "mono": [(30, 30, 30), (120, 120, 120), (200, 200, 200)],
}


def make_design(family):
    img = np.full((300, 240, 3), 245, dtype=np.uint8)
    for _ in range(4):
        color = PALETTES[family][rng.integers(0, 3)]
        x0, y0 = int(rng.integers(0, 180)), int(rng.integers(0, 220))
        img[y0 : y0 + int(rng.integers(30, 80)), x0 : x0 + int(rng.integers(30, 60))] = color
    return img


corpus = {}
families = {}
for family in PALETTES:
    for i in range(4):
        image_id = f"{family}{i}"
        corpus[image_id] = {"color_hist": color_histogram(normalize_window(make_design(family)))}
        families[image_id] = family

ids = sorted(corpus)
vectors = {i: corpus[i]["color_hist"].values for i in ids}

# Triplets: the option from the reference's own family is the winner.
triplets = []
for _ in range(300):
    ref, same, other = rng.choice(ids, 3, replace=False)
    if families[same] == families[other]:
        continue
    if families[same] != families[ref]:
        same, other = other, same
    if families[same] != families[ref]:
        continue
    triplets.append(EmbeddedTriplet(vectors[ref], vectors[same], vectors[other]))
print(f"{len(triplets)} family-labeled triplets")

weights = train(triplets, lam=0.1)
model = MetricModel(weights=weights, feature_config=parse_config("color_hist"), lam=0.1)
index = build_index(model, corpus)

for probe in ("warm0", "cool2", "mono1"):
    results = query(index, model, index.entries[probe], k=3, exclude_id=probe)
    shown = ", ".join(f"{i} ({d:.3f})" for i, d in results)
    hits = sum(families[i] == families[probe] for i, _ in results)
    print(f"query {probe}: {shown}   [{hits}/3 same family]")
