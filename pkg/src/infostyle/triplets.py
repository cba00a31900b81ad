"""Crowdsourced triplet judgments: ingestion, majority vote, agreement analysis.

A triplet shows raters a reference image and two options; each rater picks
the option that looks stylistically closer to the reference.  Aggregated
vote counts come in over CSV; the majority choice becomes ground truth for
training, and agreement-threshold tables plus the oracle-consistency
statistic summarize how reliable the raters were.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidParam, ParseError


@dataclass(frozen=True)
class TripletResponses:
    """One comparison with aggregated rater counts for the two options."""

    triplet_id: str
    ref_id: str
    option_b_id: str
    option_c_id: str
    votes_b: int
    votes_c: int

    def __post_init__(self):
        if self.votes_b < 0 or self.votes_c < 0:
            raise InvalidParam(f"{self.triplet_id}: negative vote count")
        if self.votes_b + self.votes_c < 1:
            raise InvalidParam(f"{self.triplet_id}: no votes")
        if len({self.ref_id, self.option_b_id, self.option_c_id}) != 3:
            raise InvalidParam(f"{self.triplet_id}: ref and options must be distinct")

    @property
    def total_votes(self) -> int:
        return self.votes_b + self.votes_c

    @property
    def majority_votes(self) -> int:
        return max(self.votes_b, self.votes_c)

    @property
    def agreement(self) -> float:
        """Majority share of the votes; exactly 0.5 for a tie."""
        return self.majority_votes / self.total_votes


@dataclass(frozen=True)
class LabeledTriplet:
    """A triplet with its majority-vote ground truth."""

    triplet_id: str
    ref_id: str
    winner_id: str
    loser_id: str
    agreement: float


@dataclass(frozen=True)
class Tie:
    """Marker for a triplet whose votes split evenly; carries no label."""

    triplet_id: str


def majority_label(t: TripletResponses) -> LabeledTriplet | Tie:
    """The majority's choice as ground truth, or Tie on an even split."""
    if t.votes_b == t.votes_c:
        return Tie(t.triplet_id)
    if t.votes_b > t.votes_c:
        winner, loser = t.option_b_id, t.option_c_id
    else:
        winner, loser = t.option_c_id, t.option_b_id
    return LabeledTriplet(t.triplet_id, t.ref_id, winner, loser, t.agreement)


def label_all(ts: list[TripletResponses]) -> tuple[list[LabeledTriplet], list[Tie]]:
    """Split a response set into labeled triplets and ties."""
    labeled, ties = [], []
    for t in ts:
        result = majority_label(t)
        (labeled if isinstance(result, LabeledTriplet) else ties).append(result)
    return labeled, ties


@dataclass(frozen=True)
class AgreementRow:
    """One row of an agreement table.

    ``threshold`` is the lower agreement bound; ``upper`` is the exclusive
    upper bound for banded rows and None for cumulative rows (and for the
    final band, which is closed above).  ``accuracy`` is the majority-vote
    share of responses in the subset, as a percentage, or None when the
    subset is empty.
    """

    threshold: float
    upper: float | None
    responses: int
    triplets: int
    accuracy: float | None


def _row(threshold: float, upper: float | None, subset: list[TripletResponses]) -> AgreementRow:
    responses = sum(t.total_votes for t in subset)
    majority = sum(t.majority_votes for t in subset)
    accuracy = 100.0 * majority / responses if responses else None
    return AgreementRow(threshold, upper, responses, len(subset), accuracy)


def agreement_table(
    ts: list[TripletResponses],
    thresholds: list[float],
    mode: str = "cumulative",
) -> list[AgreementRow]:
    """Accuracy of raters on agreement-filtered subsets of the triplets.

    Cumulative mode reports, for each threshold, the triplets whose
    agreement is at least that value.  Banded mode reports half-open bands
    between consecutive thresholds, the last band closed at the top, so
    the bands partition the lowest cumulative row.  Tie triplets count
    with agreement 0.5, their majority votes taken as the larger (equal)
    side.
    """
    if mode not in ("cumulative", "banded"):
        raise InvalidParam(f"mode must be 'cumulative' or 'banded', got {mode!r}")
    if not thresholds:
        raise InvalidParam("no thresholds given")
    if sorted(thresholds) != list(thresholds):
        raise InvalidParam("thresholds must be sorted ascending")
    rows = []
    if mode == "cumulative":
        for theta in thresholds:
            rows.append(_row(theta, None, [t for t in ts if t.agreement >= theta]))
    else:
        for i, theta in enumerate(thresholds):
            if i + 1 < len(thresholds):
                upper = thresholds[i + 1]
                subset = [t for t in ts if theta <= t.agreement < upper]
                rows.append(_row(theta, upper, subset))
            else:
                rows.append(_row(theta, None, [t for t in ts if t.agreement >= theta]))
    return rows


def oracle_consistency(ts: list[TripletResponses]) -> float:
    """Fraction of all responses that match their triplet's majority choice.

    Equals the cumulative 50%-threshold accuracy: the performance of the
    predictor that always answers with the majority's option.
    """
    if not ts:
        raise EmptyInput("no triplets")
    total = sum(t.total_votes for t in ts)
    majority = sum(t.majority_votes for t in ts)
    return majority / total


def split_train_test(
    ts: list[LabeledTriplet], n_train: int, seed: int
) -> tuple[list[LabeledTriplet], list[LabeledTriplet]]:
    """Deterministic seeded shuffle, first ``n_train`` to train, rest to test."""
    if n_train < 0:
        raise InvalidParam(f"n_train must be >= 0, got {n_train}")
    if n_train >= len(ts):
        raise InvalidParam(f"n_train={n_train} must be < triplet count {len(ts)}")
    order = np.random.default_rng(seed).permutation(len(ts))
    shuffled = [ts[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:]


# --------------------------------------------------------------------------
# CSV interchange

CSV_HEADER = ["triplet_id", "ref_id", "option_b_id", "option_c_id", "votes_b", "votes_c"]


def read_triplets_csv(path: str) -> list[TripletResponses]:
    """Read the aggregated-responses CSV (header required)."""
    out: list[TripletResponses] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header", line=1) from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(
                f"bad header {header!r}, expected {','.join(CSV_HEADER)}", line=1
            )
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}", line=lineno)
            try:
                votes_b, votes_c = int(rec[4]), int(rec[5])
            except ValueError as exc:
                raise ParseError(f"bad vote count: {exc}", line=lineno) from exc
            try:
                t = TripletResponses(rec[0], rec[1], rec[2], rec[3], votes_b, votes_c)
            except InvalidParam as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if t.triplet_id in seen:
                raise ParseError(f"duplicate triplet_id {t.triplet_id!r}", line=lineno)
            seen.add(t.triplet_id)
            out.append(t)
    return out


def write_triplets_csv(path: str, ts: list[TripletResponses]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for t in ts:
            writer.writerow(
                [t.triplet_id, t.ref_id, t.option_b_id, t.option_c_id, t.votes_b, t.votes_c]
            )
