"""Aggregate crowdsourced triplet votes and read off the agreement tables.

Run with:  python demos/03_triplet_analysis.py
"""

import numpy as np

from infostyle.triplets import (
    TripletResponses,
    agreement_table,
    label_all,
    oracle_consistency,
)

rng = np.random.default_rng(7)

# Simulate 500 triplets: raters have some per-triplet reliability, so vote
# splits range from coin flips to unanimity.
responses = []
for n in range(500):
    total = int(rng.integers(9, 13))
    reliability = rng.uniform(0.5, 1.0)
    votes_b = int(rng.binomial(total, reliability))
    responses.append(
        TripletResponses(f"t{n}", f"ref{n}", f"opt{n}a", f"opt{n}b", votes_b, total - votes_b)
    )

labeled, ties = label_all(responses)
print(f"{len(responses)} triplets: {len(labeled)} labeled, {len(ties)} ties")

thresholds = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
print("\ncumulative: raters agreeing with the majority, by agreement floor")
for row in agreement_table(responses, thresholds, "cumulative"):
    print(
        f"  agreement >= {row.threshold:.0%}: {row.triplets:3d} triplets, "
        f"{row.responses:5d} responses, accuracy {row.accuracy:6.2f}%"
    )

print("\nbanded: the same data split into disjoint agreement bands")
for row in agreement_table(responses, thresholds, "banded"):
    label = f"[{row.threshold:.0%}, {row.upper:.0%})" if row.upper else f"= {row.threshold:.0%}"
    acc = "-" if row.accuracy is None else f"{row.accuracy:6.2f}%"
    print(f"  {label:>12}: {row.triplets:3d} triplets, {row.responses:5d} responses, accuracy {acc}")

oracle = oracle_consistency(responses)
print(f"\noracle consistency (majority-vote predictor): {100 * oracle:.2f}%")
print("this is the ceiling a learned model is measured against")
