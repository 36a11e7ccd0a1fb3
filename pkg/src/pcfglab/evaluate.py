"""Unlabeled bracketing scores and labeled scores over span-matched constituents.

All scores are micro-pooled over the corpus. Labeled scores treat gold
labels as classes and predicted labels as clusters: predicted labels are
opaque and never mapped onto gold categories.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .treebank import (
    PunctPredicate,
    Tree,
    char_punct,
    collapse_unaries,
    gold_constituents,
    punct_positions,
    remove_positions,
)


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class BracketScores:
    matched: int
    gold_total: int
    pred_total: int

    @property
    def precision(self) -> float:
        return self.matched / self.pred_total if self.pred_total else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: BracketScores) -> BracketScores:
        return BracketScores(
            self.matched + other.matched,
            self.gold_total + other.gold_total,
            self.pred_total + other.pred_total,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(precision=self.precision, recall=self.recall, f1=self.f1)
        return d


def _check_aligned(gold: Sequence[Tree], pred: Sequence[Tree]) -> None:
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold trees but {len(pred)} predicted trees")
    for idx, (g, p) in enumerate(zip(gold, pred)):
        if g.leaves() != p.leaves():
            raise AlignmentError(f"sentence {idx}: gold and predicted yields differ")


def _match(gold: Tree, pred: Tree) -> tuple[list[tuple[str, str]], int, int]:
    """Label pairs of matched spans plus the gold and predicted span totals.

    Duplicate spans pair up in sorted label order, one predicted instance per
    gold instance.
    """
    g_spans: dict[tuple[int, int], list[str]] = {}
    p_spans: dict[tuple[int, int], list[str]] = {}
    for (span, label), n in gold_constituents(gold).items():
        g_spans.setdefault(span, []).extend([label] * n)
    for (span, label), n in gold_constituents(pred).items():
        p_spans.setdefault(span, []).extend([label] * n)
    pairs = []
    for span, g_labels in g_spans.items():
        p_labels = p_spans.get(span)
        if p_labels:
            pairs.extend(zip(sorted(g_labels), sorted(p_labels)))
    n_gold = sum(len(v) for v in g_spans.values())
    n_pred = sum(len(v) for v in p_spans.values())
    return pairs, n_gold, n_pred


def sentence_scores(gold: Sequence[Tree], pred: Sequence[Tree]) -> list[BracketScores]:
    """Per-sentence bracket counts, e.g. for permutation tests."""
    _check_aligned(gold, pred)
    out = []
    for g, p in zip(gold, pred):
        pairs, ng, np_ = _match(g, p)
        out.append(BracketScores(len(pairs), ng, np_))
    return out


def bracket_prf(gold: Sequence[Tree], pred: Sequence[Tree]) -> BracketScores:
    return sum(sentence_scores(gold, pred), BracketScores(0, 0, 0))


def matched_label_pairs(gold: Sequence[Tree], pred: Sequence[Tree]) -> list[tuple[str, str]]:
    _check_aligned(gold, pred)
    pairs: list[tuple[str, str]] = []
    for g, p in zip(gold, pred):
        pairs.extend(_match(g, p)[0])
    return pairs


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def homogeneity_completeness_v(pairs: Sequence[tuple[str, str]]) -> dict:
    """Homogeneity, completeness and V-measure of (gold, predicted) label pairs.

    >>> r = homogeneity_completeness_v([("A", "X"), ("A", "X"), ("B", "X"), ("B", "Y")])
    >>> round(r["h"], 4)
    0.3113
    """
    if not pairs:
        return {"h": 0.0, "c": 0.0, "v": 0.0}
    classes = {lab: i for i, lab in enumerate(sorted({g for g, _ in pairs}))}
    clusters = {lab: i for i, lab in enumerate(sorted({p for _, p in pairs}))}
    table = np.zeros((len(classes), len(clusters)))
    for (g, p), n in Counter(pairs).items():
        table[classes[g], clusters[p]] = n
    h_class = _entropy(table.sum(axis=1))
    h_cluster = _entropy(table.sum(axis=0))
    h_joint = _entropy(table.ravel())
    # H(C|K) = H(C,K) - H(K)
    h = 1.0 if h_class == 0 else 1.0 - (h_joint - h_cluster) / h_class
    c = 1.0 if h_cluster == 0 else 1.0 - (h_joint - h_class) / h_cluster
    h = min(max(h, 0.0), 1.0)
    c = min(max(c, 0.0), 1.0)
    v = 2 * h * c / (h + c) if h + c else 0.0
    return {"h": h, "c": c, "v": v}


def rh(gold: Sequence[Tree], pred: Sequence[Tree]) -> float:
    """Unlabeled recall times homogeneity of the matched labels."""
    return bracket_prf(gold, pred).recall * homogeneity_completeness_v(
        matched_label_pairs(gold, pred)
    )["h"]


def rvm(gold: Sequence[Tree], pred: Sequence[Tree]) -> float:
    """Unlabeled recall times V-measure of the matched labels."""
    return bracket_prf(gold, pred).recall * homogeneity_completeness_v(
        matched_label_pairs(gold, pred)
    )["v"]


def evaluate(gold: Sequence[Tree], pred: Sequence[Tree]) -> dict:
    """Every score from a single matching pass."""
    _check_aligned(gold, pred)
    pairs: list[tuple[str, str]] = []
    total = BracketScores(0, 0, 0)
    for g, p in zip(gold, pred):
        sp, ng, np_ = _match(g, p)
        pairs.extend(sp)
        total += BracketScores(len(sp), ng, np_)
    hcv = homogeneity_completeness_v(pairs)
    out = total.as_dict()
    out.update(hcv)
    out["rh"] = total.recall * hcv["h"]
    out["rvm"] = total.recall * hcv["v"]
    out["sentences"] = len(gold)
    return out


def normalize_pair(gold: Tree, pred: Tree,
                   is_punct: PunctPredicate | None = char_punct) -> tuple[Tree | None, Tree | None]:
    """Collapse unaries and drop the gold tree's punctuation positions from both trees.

    Punctuation is decided on the gold side, so tag-based predicates work even
    though predicted preterminals carry induced labels.
    """
    if gold.leaves() != pred.leaves():
        raise AlignmentError("gold and predicted yields differ")
    if is_punct is None:
        return collapse_unaries(gold), collapse_unaries(pred)
    drop = punct_positions(gold, is_punct)
    return remove_positions(gold, drop), remove_positions(pred, drop)


def normalize_corpus(gold: Sequence[Tree], pred: Sequence[Tree],
                     is_punct: PunctPredicate | None = char_punct) -> tuple[list[Tree], list[Tree]]:
    """Normalize aligned corpora; all-punctuation sentences are dropped from both."""
    _check_aligned(gold, pred)
    out_g, out_p = [], []
    for g, p in zip(gold, pred):
        ng, np_ = normalize_pair(g, p, is_punct)
        if ng is not None:
            out_g.append(ng)
            out_p.append(np_)
    return out_g, out_p


def micro_f1(matched: np.ndarray, gold_total: np.ndarray, pred_total: np.ndarray) -> np.ndarray:
    """Pooled F1 along the last axis; ``2m / (g + p)`` equals the harmonic mean."""
    m = matched.sum(axis=-1)
    denom = gold_total.sum(axis=-1) + pred_total.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, 2.0 * m / np.where(denom > 0, denom, 1), 0.0)


def _records(stats) -> np.ndarray:
    if isinstance(stats, np.ndarray):
        arr = stats.astype(np.int64)
    else:
        arr = np.array(
            [(s.matched, s.gold_total, s.pred_total) if isinstance(s, BracketScores) else s
             for s in stats],
            dtype=np.int64,
        ).reshape(-1, 3)
    return arr


def permutation_test(stats_a, stats_b, iterations: int = 10_000,
                     rng: np.random.Generator | int | None = 0,
                     batch: int = 1000) -> dict:
    """Paired permutation test on the absolute difference in pooled F1.

    ``stats_a`` and ``stats_b`` hold per-sentence ``(matched, gold_total,
    pred_total)`` records (or ``BracketScores``) for the same sentences. Each
    resample swaps the two systems' records of a sentence with probability
    1/2. The p-value is ``(1 + #{stat >= observed}) / (1 + iterations)``.
    """
    a, b = _records(stats_a), _records(stats_b)
    if a.shape != b.shape:
        raise ValueError(f"{len(a)} records for system A but {len(b)} for system B")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    observed = abs(float(micro_f1(*a.T) - micro_f1(*b.T)))
    # comparisons at full float precision would miss exact ties after swapping
    tol = 1e-12
    hits = 0
    done = 0
    while done < iterations:
        m = min(batch, iterations - done)
        swap = rng.random((m, a.shape[0])) < 0.5
        sa = np.where(swap[..., None], b, a)
        sb = np.where(swap[..., None], a, b)
        stat = np.abs(
            micro_f1(sa[..., 0], sa[..., 1], sa[..., 2]) - micro_f1(sb[..., 0], sb[..., 1], sb[..., 2])
        )
        hits += int(np.count_nonzero(stat >= observed - tol))
        done += m
    return {"p_value": (1 + hits) / (1 + iterations), "observed": observed, "iterations": iterations}
