"""Chart inference for induced grammars: inside scores, tree sampling, Viterbi
parsing and the blocked Gibbs sampler over trees and grammars.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .grammar import Grammar, RuleCounts, resample_posterior, sample_prior
from .treebank import Corpus, Tree

log = logging.getLogger(__name__)


class ParseError(RuntimeError):
    """Sentence has no (depth-legal) parse under the grammar."""


def _bound(D: int | None) -> int:
    if D is None:
        return 0
    if int(D) != D or D < 1:
        raise ValueError(f"depth bound must be a positive integer or None, got {D!r}")
    return int(D)


def _tokens(sentence: Sequence[int], V: int) -> np.ndarray:
    arr = np.asarray(sentence, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("sentence must be a nonempty sequence of token ids")
    if arr.min() < 0 or arr.max() >= V:
        raise KeyError(f"token id out of vocabulary range 0..{V - 1}")
    return arr


def _log_arrays(g: Grammar) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore"):
        return np.log(g.expansion), np.log(g.root)


def nodes_to_tree(nodes: np.ndarray, words: Sequence[str]) -> Tree:
    """Build a ``Tree`` with integer-string labels from pre-order node records."""
    pos = 0

    def build() -> Tree:
        nonlocal pos
        i, j, c, k = (int(x) for x in nodes[pos])
        pos += 1
        if k < 0:
            return Tree(str(c), (Tree(words[i]),))
        left = build()
        right = build()
        return Tree(str(c), (left, right))

    return build()


def tree_to_nodes(tree: Tree) -> np.ndarray:
    rows = []
    for i, j, node in tree.spans():
        if node.is_preterminal:
            rows.append((i, j, int(node.label), -1))
        else:
            rows.append((i, j, int(node.label), i + len(node.children[0])))
    return np.array(rows, dtype=np.int64)


@dataclass
class Chart:
    """Inside chart of one sentence; see ``_kernels`` for the layout."""

    tokens: np.ndarray
    scores: np.ndarray
    exponents: np.ndarray
    nonzero: np.ndarray
    bound: int | None
    root: np.ndarray

    @property
    def n(self) -> int:
        return self.tokens.shape[0]

    def log_score(self, i: int, j: int, c: int, state: int = 0) -> float:
        """Log inside score of category ``c`` over ``[i, j)``."""
        v = self.scores[i, j, state, c]
        if v <= 0 or not self.nonzero[i, j]:
            return -math.inf
        return math.log(v) + self.exponents[i, j] * math.log(2.0)

    def log_mass(self) -> float:
        """Log probability of the sentence, summed over all legal trees."""
        C = self.root.shape[0]
        return K.sentence_logmass(self.n, self.root, C, self.scores, self.exponents, self.nonzero)

    def mass(self) -> float:
        return math.exp(self.log_mass())


def inside_chart(sentence: Sequence[int], g: Grammar, D: int | None = None) -> Chart:
    tokens = _tokens(sentence, g.V)
    bound = _bound(D)
    left, right = K.state_tables(bound)
    n, C = tokens.shape[0], g.C
    ins = np.zeros((n, n + 1, left.shape[0], C))
    ex = np.zeros((n, n + 1), np.int64)
    nz = np.zeros((n, n + 1), np.bool_)
    K.inside(tokens, g.expansion, C, left, right, ins, ex, nz, np.zeros(C * C))
    return Chart(tokens, ins, ex, nz, D, g.root)


def sample_tree(chart: Chart, g: Grammar, rng: np.random.Generator,
                words: Sequence[str] | None = None) -> Tree:
    """Draw a tree from the posterior over (depth-legal) parses of the sentence."""
    n, C = chart.n, g.C
    left, right = K.state_tables(_bound(chart.bound))
    nodes = np.zeros((2 * n - 1, 4), np.int64)
    W = np.zeros(max(C, (n - 1) * C * C))
    stack = np.zeros((2 * n, 4), np.int64)
    ok = K.sample(n, g.expansion, g.root, C, left, right, chart.scores, chart.exponents,
                  chart.nonzero, rng.random(n), nodes, W, stack)
    if not ok:
        raise ParseError("sentence has zero probability under the grammar")
    return nodes_to_tree(nodes, _words(chart.tokens, words))


def _words(tokens: np.ndarray, words: Sequence[str] | None) -> list[str]:
    if words is None:
        return [str(int(t)) for t in tokens]
    return [words[int(t)] for t in tokens]


def viterbi_nodes(sentence: Sequence[int], g: Grammar, D: int | None = None,
                  log_g: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[np.ndarray, float]:
    tokens = _tokens(sentence, g.V)
    left, right = K.state_tables(_bound(D))
    logG, logroot = log_g if log_g is not None else _log_arrays(g)
    nodes = np.zeros((2 * tokens.shape[0] - 1, 4), np.int64)
    score = K.viterbi(tokens, logG, logroot, g.C, left, right, nodes)
    if score == -math.inf:
        raise ParseError("sentence has no parse under the grammar")
    return nodes, score


def viterbi_parse(sentence: Sequence[int], g: Grammar, D: int | None = None,
                  words: Sequence[str] | None = None) -> Tree:
    """Most probable tree. Ties go to the smaller split point, then the smaller
    left category, then the smaller right category."""
    nodes, _ = viterbi_nodes(sentence, g, D)
    return nodes_to_tree(nodes, _words(np.asarray(sentence), words))


def viterbi_logprob(sentence: Sequence[int], g: Grammar, D: int | None = None) -> float:
    return viterbi_nodes(sentence, g, D)[1]


# -- Gibbs sampling ----------------------------------------------------------


@dataclass
class GibbsConfig:
    C: int
    beta: float
    D: int | None = None
    iterations: int = 700
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.C) != self.C or self.C < 1:
            raise ValueError(f"C must be a positive integer, got {self.C!r}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations!r}")
        _bound(self.D)


@dataclass
class GibbsState:
    grammar: Grammar
    corpus: Corpus
    config: GibbsConfig
    iteration: int = 0
    nodes: np.ndarray | None = None
    trace: list[float] = field(default_factory=list)
    _tokens: np.ndarray | None = field(default=None, repr=False)
    _offsets: np.ndarray | None = field(default=None, repr=False)

    @property
    def seed(self) -> int:
        return self.config.seed

    def tree_nodes(self, t: int) -> np.ndarray:
        a, b = self._offsets[t], self._offsets[t + 1]
        return self.nodes[2 * a - t : 2 * b - t - 1]

    @property
    def trees(self) -> list[Tree]:
        if self.nodes is None:
            return []
        return [nodes_to_tree(self.tree_nodes(t), self.corpus.sentences[t])
                for t in range(len(self.corpus))]

    def counts(self) -> RuleCounts:
        C, V = self.grammar.C, self.grammar.V
        counts = RuleCounts.zeros(C, V)
        if self.nodes is None:
            return counts
        for t in range(len(self.corpus)):
            a, b = self._offsets[t], self._offsets[t + 1]
            K.count_nodes(self._tokens[a:b], self.tree_nodes(t), C, counts.expansion, counts.root)
        return counts

    def viterbi_trees(self) -> list[Tree]:
        """Viterbi parses of every sentence under the current grammar."""
        g = self.grammar
        log_g = _log_arrays(g)
        out = []
        for t in range(len(self.corpus)):
            a, b = self._offsets[t], self._offsets[t + 1]
            nodes, _ = viterbi_nodes(self._tokens[a:b], g, self.config.D, log_g)
            out.append(nodes_to_tree(nodes, self.corpus.sentences[t]))
        return out


def encode_corpus(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    lengths = [len(s) for s in corpus.sentences]
    if not lengths or min(lengths) == 0:
        raise ValueError("corpus must contain nonempty sentences")
    offsets = np.zeros(len(lengths) + 1, np.int64)
    offsets[1:] = np.cumsum(lengths)
    tokens = np.fromiter(
        (corpus.vocab[tok] for sent in corpus.sentences for tok in sent),
        dtype=np.int64,
        count=int(offsets[-1]),
    )
    return tokens, offsets


def gibbs_step(state: GibbsState) -> None:
    """One iteration: sample all trees, then the grammar given their counts.

    Sentence ``t`` of iteration ``k`` draws from the stream seeded by
    ``(seed, k, 0)`` at offset ``offsets[t]``, so results do not depend on the
    order sentences are processed in.
    """
    g = state.grammar
    C, V = g.C, g.V
    tokens, offsets = state._tokens, state._offsets
    N = len(offsets) - 1
    k = state.iteration
    uniforms = np.random.default_rng([state.seed, k, 0]).random(tokens.shape[0])
    left, right = K.state_tables(_bound(state.config.D))
    logG, logroot = _log_arrays(g)
    nodes = np.zeros((2 * tokens.shape[0] - N, 4), np.int64)
    counts = RuleCounts.zeros(C, V)
    status = np.zeros(N, np.int64)
    tree_logp = np.zeros(N)
    K.gibbs_sweep(tokens, offsets, g.expansion, g.root, logG, logroot, C, left, right,
                  uniforms, nodes, counts.expansion, counts.root, status, tree_logp)
    if status.any():
        bad = int(np.flatnonzero(status)[0])
        raise ParseError(f"iteration {k}: sentence {bad} has no legal parse")
    state.nodes = nodes
    state.trace.append(float(tree_logp.sum()))
    grammar_rng = np.random.default_rng([state.seed, k, 1])
    state.grammar = resample_posterior(counts, g.beta, grammar_rng).with_words(state.corpus.words)
    state.iteration = k + 1


def gibbs_init(corpus: Corpus, config: GibbsConfig) -> GibbsState:
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    tokens, offsets = encode_corpus(corpus)
    V = len(corpus.vocab)
    g = sample_prior(config.C, V, config.beta, np.random.default_rng([config.seed]))
    return GibbsState(g.with_words(corpus.words), corpus, config,
                      _tokens=tokens, _offsets=offsets)


def gibbs_run(corpus: Corpus, config: GibbsConfig, log_file=None) -> GibbsState:
    """Run the sampler; the returned grammar is the last one sampled.

    ``log_file`` receives one ``iter <k> logjoint <value>`` line per iteration,
    where the value is the summed log probability of the trees sampled in
    iteration ``k`` under the grammar they were sampled from.
    """
    state = gibbs_init(corpus, config)
    for _ in range(config.iterations):
        gibbs_step(state)
        line = f"iter {state.iteration} logjoint {state.trace[-1]:.10g}"
        if log_file is not None:
            log_file.write(line + "\n")
        if state.iteration % 50 == 0:
            log.info(line)
    return state


def corpus_log_joint(state: GibbsState) -> float:
    """Summed tree log probabilities (root choice included) under ``state.grammar``."""
    if state.nodes is None:
        return 0.0
    logG, logroot = _log_arrays(state.grammar)
    C = state.grammar.C
    total = 0.0
    for t in range(len(state.corpus)):
        a, b = state._offsets[t], state._offsets[t + 1]
        total += K.nodes_logprob(state._tokens[a:b], state.tree_nodes(t), logG, logroot, C)
    return total
