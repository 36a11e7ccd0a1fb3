"""CNF grammars as row-stochastic matrices with a symmetric Dirichlet prior.

Row ``c`` of ``Grammar.expansion`` is the expansion distribution of category
``c``. Columns ``0 .. C*C-1`` are binary expansions, column ``l*C + r`` being
``c -> l r``; columns ``C*C .. C*C+V-1`` are terminal expansions ``c -> w``
(a terminal followed by the null node). ``root`` is the distribution of the
top category of a tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .treebank import Tree

TINY = np.finfo(np.float64).tiny
_SMALL_SHAPE = 1.0


class GrammarError(ValueError):
    pass


def _check_dims(C: int, V: int) -> None:
    if int(C) != C or C < 1:
        raise GrammarError(f"C must be a positive integer, got {C!r}")
    if int(V) != V or V < 1:
        raise GrammarError(f"V must be a positive integer, got {V!r}")


def _check_beta(beta: float) -> None:
    if not np.isfinite(beta) or beta <= 0:
        raise GrammarError(f"beta must be positive, got {beta!r}")


def sample_dirichlet(alpha: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draws along the last axis of ``alpha``.

    Small shapes use ``Gamma(a) = Gamma(a + 1) * U**(1/a)`` in log space so
    rows with tiny concentrations do not underflow to all-zero. Remaining
    zeros are clamped to the smallest normal double before normalizing.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    small = alpha < _SMALL_SHAPE
    log_g = np.log(rng.standard_gamma(np.where(small, alpha + 1.0, alpha)))
    u = rng.random(alpha.shape)
    log_g = log_g + np.where(small, np.log(u) / alpha, 0.0)
    log_g -= log_g.max(axis=-1, keepdims=True)
    p = np.exp(log_g)
    p = np.maximum(p, TINY)
    return p / p.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Grammar:
    expansion: np.ndarray
    root: np.ndarray
    beta: float
    words: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        exp = np.asarray(self.expansion, dtype=np.float64)
        root = np.asarray(self.root, dtype=np.float64)
        C = root.shape[0]
        if exp.ndim != 2 or exp.shape[0] != C or exp.shape[1] <= C * C:
            raise GrammarError(f"expansion shape {exp.shape} does not fit C={C}")
        if self.words is not None and len(self.words) != exp.shape[1] - C * C:
            raise GrammarError("word list length does not match V")
        exp.setflags(write=False)
        root.setflags(write=False)
        object.__setattr__(self, "expansion", exp)
        object.__setattr__(self, "root", root)

    @property
    def C(self) -> int:
        return self.root.shape[0]

    @property
    def V(self) -> int:
        return self.expansion.shape[1] - self.C * self.C

    @property
    def binary(self) -> np.ndarray:
        """``(C, C, C)`` view: ``binary[c, l, r] = P(c -> l r)``."""
        return self.expansion[:, : self.C * self.C].reshape(self.C, self.C, self.C)

    @property
    def lexical(self) -> np.ndarray:
        """``(C, V)`` view of terminal expansion probabilities."""
        return self.expansion[:, self.C * self.C :]

    def binary_index(self, left: int, right: int) -> int:
        return left * self.C + right

    def terminal_index(self, word: int) -> int:
        return self.C * self.C + word

    def validate(self, atol: float = 1e-9) -> None:
        """Raise ``GrammarError`` unless every row is a probability vector."""
        for name, arr in (("expansion", self.expansion), ("root", self.root)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise GrammarError(f"{name} has negative or non-finite entries")
            if not np.allclose(arr.sum(axis=-1), 1.0, rtol=0, atol=atol):
                raise GrammarError(f"{name} rows do not sum to 1")

    def with_words(self, words: Sequence[str]) -> Grammar:
        return Grammar(self.expansion, self.root, self.beta, tuple(words))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grammar):
            return NotImplemented
        return (
            self.beta == other.beta
            and self.words == other.words
            and np.array_equal(self.expansion, other.expansion)
            and np.array_equal(self.root, other.root)
        )


@dataclass
class RuleCounts:
    expansion: np.ndarray
    root: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.expansion = np.asarray(self.expansion, dtype=np.int64)
        C = self.expansion.shape[0]
        if self.root is None:
            self.root = np.zeros(C, dtype=np.int64)
        self.root = np.asarray(self.root, dtype=np.int64)

    @classmethod
    def zeros(cls, C: int, V: int) -> RuleCounts:
        _check_dims(C, V)
        return cls(np.zeros((C, C * C + V), dtype=np.int64), np.zeros(C, dtype=np.int64))

    @property
    def C(self) -> int:
        return self.root.shape[0]

    @property
    def V(self) -> int:
        return self.expansion.shape[1] - self.C * self.C

    def __add__(self, other: RuleCounts) -> RuleCounts:
        if self.expansion.shape != other.expansion.shape:
            raise GrammarError("cannot add counts of different shapes")
        return RuleCounts(self.expansion + other.expansion, self.root + other.root)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RuleCounts):
            return NotImplemented
        return np.array_equal(self.expansion, other.expansion) and np.array_equal(
            self.root, other.root
        )

    def total(self) -> int:
        return int(self.expansion.sum())


def sample_prior(C: int, V: int, beta: float, rng: np.random.Generator) -> Grammar:
    """Draw each expansion row and the root distribution from Dirichlet(beta)."""
    _check_dims(C, V)
    _check_beta(beta)
    return resample_posterior(RuleCounts.zeros(C, V), beta, rng)


def resample_posterior(counts: RuleCounts, beta: float, rng: np.random.Generator) -> Grammar:
    _check_beta(beta)
    C = counts.C
    if counts.expansion.ndim != 2 or counts.expansion.shape[0] != C or counts.V < 1:
        raise GrammarError(f"counts shape {counts.expansion.shape} does not fit C={C}")
    expansion = sample_dirichlet(beta + counts.expansion, rng)
    root = sample_dirichlet(beta + counts.root, rng)
    return Grammar(expansion, root, float(beta))


def _category(label: str, C: int) -> int:
    try:
        c = int(label)
    except ValueError:
        raise GrammarError(f"category label {label!r} is not an integer") from None
    if not 0 <= c < C:
        raise GrammarError(f"category {c} out of range for C={C}")
    return c


def tree_rule_counts(trees: Iterable[Tree], vocab: Mapping[str, int], C: int) -> RuleCounts:
    """Sufficient statistics of binary trees with integer category labels."""
    V = len(vocab)
    counts = RuleCounts.zeros(C, V)
    for tree in trees:
        counts.root[_category(tree.label, C)] += 1
        for node in tree.subtrees():
            parent = _category(node.label, C)
            if node.is_preterminal:
                word = node.children[0].label
                if word not in vocab:
                    raise GrammarError(f"out-of-vocabulary token {word!r}")
                counts.expansion[parent, C * C + vocab[word]] += 1
            elif len(node.children) == 2 and not any(c.is_leaf for c in node.children):
                left, right = (_category(c.label, C) for c in node.children)
                counts.expansion[parent, left * C + right] += 1
            else:
                raise GrammarError(f"node {node.label} is neither binary nor preterminal")
    return counts


def expansion_logprob(g: Grammar, parent: int, expansion: int) -> float:
    if not 0 <= parent < g.C:
        raise IndexError(f"parent {parent} out of range")
    if not 0 <= expansion < g.expansion.shape[1]:
        raise IndexError(f"expansion {expansion} out of range")
    p = g.expansion[parent, expansion]
    return float(np.log(p)) if p > 0 else -np.inf


def tree_logprob(g: Grammar, tree: Tree, vocab: Mapping[str, int]) -> float:
    """Log probability of a tree, root choice included."""
    counts = tree_rule_counts([tree], vocab, g.C)
    return counts_logprob(g, counts)


def counts_logprob(g: Grammar, counts: RuleCounts) -> float:
    total = 0.0
    for probs, cnt in ((g.expansion, counts.expansion), (g.root, counts.root)):
        used = cnt > 0
        if np.any(probs[used] == 0):
            return -np.inf
        total += float(np.sum(cnt[used] * np.log(probs[used])))
    return total


def row_entropy(p: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) along the last axis, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=-1)


def sparsity_entropy(g: Grammar) -> dict:
    """Row entropies normalized by ``log(C*C + V)``; 0 is one-hot, 1 is uniform."""
    n = g.expansion.shape[1]
    per_row = row_entropy(g.expansion) / np.log(n)
    per_row = np.clip(per_row, 0.0, 1.0)
    return {"per_row": per_row, "mean": float(per_row.mean())}


# -- text format -------------------------------------------------------------


def format_grammar(g: Grammar) -> str:
    words = g.words or tuple(str(w) for w in range(g.V))
    lines = [f"{g.C} {g.V} {g.beta!r}"]
    C = g.C
    for c in range(C):
        for l in range(C):
            for r in range(C):
                lines.append(f"{c} -> {l} {r} : {g.expansion[c, l * C + r]:.17g}")
        for w, word in enumerate(words):
            lines.append(f'{c} -> "{word}" : {g.expansion[c, C * C + w]:.17g}')
    for c in range(C):
        lines.append(f"ROOT -> {c} : {g.root[c]:.17g}")
    return "\n".join(lines) + "\n"


def parse_grammar(text: str) -> Grammar:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GrammarError("empty grammar file")
    try:
        C_s, V_s, beta_s = lines[0].split()
        C, V, beta = int(C_s), int(V_s), float(beta_s)
    except ValueError:
        raise GrammarError(f"bad header line {lines[0]!r}") from None
    expansion = np.zeros((C, C * C + V))
    root = np.zeros(C)
    words: list[str | None] = [None] * V
    word_ids: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], 2):
        lhs, _, rest = line.partition(" -> ")
        rhs, _, prob_s = rest.rpartition(" : ")
        try:
            prob = float(prob_s)
            if lhs == "ROOT":
                root[int(rhs)] = prob
            elif rhs.startswith('"') and rhs.endswith('"'):
                word = rhs[1:-1]
                if word not in word_ids:
                    word_ids[word] = len(word_ids)
                    words[word_ids[word]] = word
                expansion[int(lhs), C * C + word_ids[word]] = prob
            else:
                l, r = rhs.split()
                expansion[int(lhs), int(l) * C + int(r)] = prob
        except (ValueError, IndexError):
            raise GrammarError(f"line {lineno}: cannot parse rule {line!r}") from None
    return Grammar(expansion, root, beta, tuple(words) if None not in words else None)


def save_grammar(path, g: Grammar) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_grammar(g))


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as f:
        return parse_grammar(f.read())
