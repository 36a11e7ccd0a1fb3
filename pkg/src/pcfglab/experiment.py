"""Seeded multi-run induction experiments, parameter sweeps and synthetic corpora.

Run ``k`` of an experiment uses seed ``seed + k``. Output layout::

    out/run0.grammar  run0.trees  run0.log   (one triple per run)
    out/summary.csv                          (run, seed, status, iterations, logjoint, error)
    out/scores.json   out/scores.csv         (only with gold trees)

``scores`` hold each run's scores plus ``all``: the Viterbi trees of every
successful run concatenated, with the gold trees repeated once per run.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .grammar import Grammar, sample_prior, save_grammar
from .evaluate import evaluate, normalize_corpus
from .inducer import GibbsConfig, gibbs_run
from .treebank import (
    Corpus,
    PunctPredicate,
    Tree,
    char_punct,
    read_sentences,
    read_trees,
    tag_punct,
    write_trees,
)

log = logging.getLogger(__name__)

METRICS = ("f1", "precision", "recall", "h", "c", "v", "rh", "rvm")
UNBOUNDED = ("unbounded", "none", "inf", "0")


@dataclass
class ExperimentConfig:
    corpus: str | None = None
    gold: str | None = None
    C: int = 30
    beta: float = 1.0
    depth_bound: int | None = None
    iterations: int = 700
    runs: int = 10
    seed: int = 0
    output: str = "out"
    punct: str = "chars"
    jobs: int = 1

    def __post_init__(self) -> None:
        self.C = int(self.C)
        self.beta = float(self.beta)
        self.iterations = int(self.iterations)
        self.runs = int(self.runs)
        self.seed = int(self.seed)
        self.jobs = int(self.jobs)
        self.depth_bound = parse_depth(self.depth_bound)
        if self.C < 1:
            raise ValueError("C must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.corpus is None and self.gold is None:
            raise ValueError("need a corpus or a gold treebank")
        punct_predicate(self.punct)

    @classmethod
    def from_file(cls, path, **overrides) -> ExperimentConfig:
        """Read ``key = value`` lines; non-None ``overrides`` take precedence."""
        values = read_config(path)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def read_config(path, extra: Sequence[str] = ()) -> dict:
    """``key = value`` lines, ``#`` comments. Keys must be config fields or in ``extra``."""
    known = {f.name for f in fields(ExperimentConfig)} | set(extra)
    values: dict = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip().replace("-", "_"), value.strip()
            if not sep or key not in known:
                raise ValueError(f"{path}:{lineno}: bad config line {line!r}")
            values[key] = value
    return values


def parse_depth(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in UNBOUNDED:
            return None
        value = int(value)
    if value == 0:
        return None
    if int(value) != value or value < 1:
        raise ValueError(f"depth bound must be a positive integer or 'unbounded', got {value!r}")
    return int(value)


def punct_predicate(policy: str) -> PunctPredicate | None:
    """``chars`` | ``none`` | ``tags:<file>`` (whitespace-separated tag list)."""
    if policy == "chars":
        return char_punct
    if policy == "none":
        return None
    if policy.startswith("tags:"):
        with open(policy[5:], encoding="utf-8") as f:
            return tag_punct(f.read().split())
    raise ValueError(f"unknown punctuation policy {policy!r}")


def load_corpus(config: ExperimentConfig) -> Corpus:
    gold = read_trees(config.gold) if config.gold else None
    if config.corpus:
        sentences = read_sentences(config.corpus)
    else:
        sentences = [t.leaves() for t in gold]
    return Corpus(sentences, gold=gold)


def score_runs(gold: Sequence[Tree], preds: dict[int, list[Tree]], punct: str) -> dict:
    is_punct = punct_predicate(punct)
    scores = {}
    for run, pred in preds.items():
        scores[str(run)] = evaluate(*normalize_corpus(gold, pred, is_punct))
    if preds:
        all_gold = [t for _ in preds for t in gold]
        all_pred = [t for run in preds for t in preds[run]]
        scores["all"] = evaluate(*normalize_corpus(all_gold, all_pred, is_punct))
    return scores


def _one_run(config: ExperimentConfig, corpus: Corpus, run: int) -> dict:
    out = Path(config.output)
    seed = config.seed + run
    gcfg = GibbsConfig(config.C, config.beta, config.depth_bound, config.iterations, seed)
    try:
        with open(out / f"run{run}.log", "w", encoding="utf-8") as logf:
            state = gibbs_run(corpus, gcfg, log_file=logf)
        trees = state.viterbi_trees()
    except Exception as err:  # recorded per run, the other runs go on
        log.warning("run %d failed: %s", run, err)
        return {"run": run, "seed": seed, "status": "failed", "iterations": 0,
                "logjoint": "", "error": f"{type(err).__name__}: {err}",
                "trace": traceback.format_exc()}
    save_grammar(out / f"run{run}.grammar", state.grammar)
    write_trees(out / f"run{run}.trees", trees)
    return {"run": run, "seed": seed, "status": "ok", "iterations": state.iteration,
            "logjoint": state.trace[-1], "error": "", "trees": trees}


def run_experiment(config: ExperimentConfig) -> dict:
    """Run ``config.runs`` seeded samplers and write grammars, Viterbi trees and scores."""
    corpus = load_corpus(config)
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    if config.jobs > 1 and config.runs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            results = list(pool.map(_one_run, [config] * config.runs,
                                    [corpus] * config.runs, range(config.runs)))
    else:
        results = [_one_run(config, corpus, k) for k in range(config.runs)]

    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["run", "seed", "status", "iterations", "logjoint", "error"])
        for r in results:
            writer.writerow([r["run"], r["seed"], r["status"], r["iterations"],
                             r["logjoint"], r["error"]])

    report = {"config": asdict(config), "runs": [
        {k: v for k, v in r.items() if k not in ("trees", "trace")} for r in results
    ]}
    if corpus.gold is not None:
        preds = {r["run"]: r["trees"] for r in results if r["status"] == "ok"}
        scores = score_runs(corpus.gold, preds, config.punct)
        with open(out / "scores.json", "w", encoding="utf-8") as f:
            json.dump(scores, f, indent=2, sort_keys=True)
        with open(out / "scores.csv", "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["run", "metric", "score"])
            for run, s in scores.items():
                for metric in METRICS:
                    writer.writerow([run, metric, repr(s[metric])])
        report["scores"] = scores
    return report


def sweep(config: ExperimentConfig, axis: str, values: Sequence) -> dict:
    """Run one experiment per axis value under ``config.output/<axis>=<value>``.

    Writes ``sweep.csv`` (columns axis_value, run, metric, score; one row per
    successful run and metric) and ``failed.csv`` listing failed cells.
    """
    if axis not in ("beta", "C", "depth"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one value")
    if config.gold is None:
        raise ValueError("sweeps need gold trees to score")
    field_name = {"beta": "beta", "C": "C", "depth": "depth_bound"}[axis]
    base = Path(config.output)
    # invalid axis values are caller errors, raised before any cell runs
    plan = []
    for value in values:
        label = _axis_label(axis, value)
        plan.append((label, replace(config, **{field_name: value},
                                    output=str(base / f"{axis}={label}"))))
    base.mkdir(parents=True, exist_ok=True)
    rows, failures, cells = [], [], {}
    for label, cell_cfg in plan:
        try:
            report = run_experiment(cell_cfg)
        except Exception as err:
            log.warning("sweep cell %s=%s failed: %s", axis, label, err)
            failures.append({"axis_value": label, "run": "*", "error": f"{type(err).__name__}: {err}"})
            continue
        cells[label] = report
        for r in report["runs"]:
            if r["status"] != "ok":
                failures.append({"axis_value": label, "run": r["run"], "error": r["error"]})
                continue
            scores = report["scores"][str(r["run"])]
            rows.extend((label, r["run"], m, scores[m]) for m in METRICS)
    with open(base / "sweep.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["axis_value", "run", "metric", "score"])
        for label, run, metric, score in rows:
            writer.writerow([label, run, metric, repr(score)])
    with open(base / "failed.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, ["axis_value", "run", "error"])
        writer.writeheader()
        writer.writerows(failures)
    return {"axis": axis, "rows": rows, "failures": failures, "cells": cells}


def _axis_label(axis: str, value) -> str:
    if axis == "depth":
        d = parse_depth(value)
        return "unbounded" if d is None else str(d)
    return str(value)


def sweep_means(rows, metric: str) -> dict[str, float]:
    """Mean score per axis value for one metric."""
    acc: dict[str, list[float]] = {}
    for label, _, m, score in rows:
        if m == metric:
            acc.setdefault(label, []).append(float(score))
    return {k: float(np.mean(v)) for k, v in acc.items()}


# -- synthetic data ----------------------------------------------------------


def sample_tree_from_grammar(g: Grammar, rng: np.random.Generator, max_len: int,
                             words: Sequence[str] | None = None) -> Tree | None:
    """Top-down derivation; ``None`` as soon as the yield must exceed ``max_len``."""
    C = g.C
    words = words or g.words or [f"w{i}" for i in range(g.V)]
    cdf = np.cumsum(g.expansion, axis=1)
    root_cdf = np.cumsum(g.root)

    def draw(table: np.ndarray) -> int:
        idx = int(np.searchsorted(table, rng.random() * table[-1], side="right"))
        return min(idx, table.shape[0] - 1)

    # every open nonterminal yields at least one token
    choices: list[int] = []
    stack = [draw(root_cdf)]
    leaves = 0
    while stack:
        c = stack.pop()
        e = draw(cdf[c])
        choices.append(c * cdf.shape[1] + e)
        if e >= C * C:
            leaves += 1
        else:
            stack.append(e % C)
            stack.append(e // C)
        if leaves + len(stack) > max_len:
            return None

    it = iter(choices)

    def build() -> Tree:
        c, e = divmod(next(it), cdf.shape[1])
        if e >= C * C:
            return Tree(str(c), (Tree(words[e - C * C]),))
        left = build()
        return Tree(str(c), (left, build()))

    return build()


def generate_from_grammar(g: Grammar, sentences: int, max_len: int,
                          rng: np.random.Generator, min_len: int = 1,
                          max_attempts: int = 1_000_000) -> list[Tree]:
    """Sample ``sentences`` trees with ``min_len <= yield length <= max_len``."""
    out: list[Tree] = []
    attempts = 0
    while len(out) < sentences:
        attempts += 1
        tree = sample_tree_from_grammar(g, rng, max_len)
        if tree is not None and len(tree) >= min_len:
            out.append(tree)
        if attempts >= max_attempts and len(out) < attempts / 1000:
            raise RuntimeError(
                f"rejected {attempts - len(out)} of {attempts} sampled sentences; "
                "increase max_len, lower min_len or change the generating grammar"
            )
    return out


def generate_synthetic(C: int, V: int, beta_gen: float, sentences: int, max_len: int,
                       seed: int, min_len: int = 1) -> tuple[Grammar, list[Tree]]:
    """Draw a grammar from the prior and a treebank from that grammar."""
    rng = np.random.default_rng(seed)
    g = sample_prior(C, V, beta_gen, rng).with_words([f"w{i}" for i in range(V)])
    return g, generate_from_grammar(g, sentences, max_len, rng, min_len)


def _zipf(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def sparse_grammar(nouns: int = 10, verbs: int = 5, determiners: int = 3,
                   pronouns: int = 4) -> Grammar:
    """A five-category grammar with few nonzero rules and Zipfian lexicons.

    Categories: 0 clause, 1 noun phrase, 2 verb phrase, 3 determiner, 4 noun::

        0 -> 1 2              1.0
        1 -> 3 4 | pronoun    0.6 | 0.4
        2 -> 2 1 | verb       0.45 | 0.55
        3 -> determiner       1.0
        4 -> noun             1.0
    """
    groups = {
        "n": nouns, "v": verbs, "d": determiners, "p": pronouns,
    }
    if min(groups.values()) < 1:
        raise ValueError("every word class needs at least one word")
    words = [f"{k}{i}" for k, n in groups.items() for i in range(n)]
    index = {w: i for i, w in enumerate(words)}
    C = 5
    G = np.zeros((C, C * C + len(words)))

    def lex(cat: int, prefix: str, mass: float) -> None:
        for i, q in enumerate(_zipf(groups[prefix])):
            G[cat, C * C + index[f"{prefix}{i}"]] = mass * q

    G[0, 1 * C + 2] = 1.0
    G[1, 3 * C + 4] = 0.6
    lex(1, "p", 0.4)
    G[2, 2 * C + 1] = 0.45
    lex(2, "v", 0.55)
    lex(3, "d", 1.0)
    lex(4, "n", 1.0)
    root = np.zeros(C)
    root[0] = 1.0
    return Grammar(G, root, 1.0, tuple(words))


def nested_grammar(words_per_class: int = 4, embed: float = 0.5) -> Grammar:
    """Center-embedding grammar: ``S -> A T | A B``, ``T -> S B``.

    A sentence ``a^n b^n`` has one parse, of memory depth ``n``. Each of the
    preterminals ``A`` and ``B`` emits its own word class.
    """
    if not 0 <= embed < 1:
        raise ValueError("embed must lie in [0, 1)")
    C = 4
    S, A, B, T = range(C)
    k = words_per_class
    words = [f"a{i}" for i in range(k)] + [f"b{i}" for i in range(k)]
    G = np.zeros((C, C * C + 2 * k))
    G[S, A * C + T] = embed
    G[S, A * C + B] = 1 - embed
    G[T, S * C + B] = 1.0
    G[A, C * C: C * C + k] = _zipf(k)
    G[B, C * C + k:] = _zipf(k)
    root = np.zeros(C)
    root[S] = 1.0
    return Grammar(G, root, 1.0, tuple(words))


def write_synthetic(out_dir, grammar: Grammar, trees: Sequence[Tree]) -> dict[str, str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": str(out / "corpus.txt"),
        "gold": str(out / "gold.trees"),
        "grammar": str(out / "generator.grammar"),
    }
    with open(paths["corpus"], "w", encoding="utf-8") as f:
        for t in trees:
            f.write(" ".join(t.leaves()) + "\n")
    write_trees(paths["gold"], trees)
    save_grammar(paths["grammar"], grammar)
    return paths
