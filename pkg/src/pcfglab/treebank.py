"""Bracketed constituency trees: reading, writing and evaluation-side normalization.

Trees are immutable. A leaf is a ``Tree`` with no children whose label is the
surface token; a preterminal is a node whose single child is a leaf.

>>> t = parse_tree("(S (NP-SBJ (D a) (N dog)) (VP (V ran)))")
>>> serialize(t)
'(S (NP (D a) (N dog)) (VP (V ran)))'
>>> t.leaves()
('a', 'dog', 'ran')
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence


class TreebankError(ValueError):
    """Malformed bracketed input."""


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple[Tree, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def leaves(self) -> tuple[str, ...]:
        if self.is_leaf:
            return (self.label,)
        out: list[str] = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node.label)
            else:
                stack.extend(reversed(node.children))
        return tuple(out)

    def __len__(self) -> int:
        return len(self.leaves())

    def subtrees(self) -> Iterator[Tree]:
        """Pre-order iteration over internal nodes."""
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            yield node
            stack.extend(reversed(node.children))

    def spans(self) -> Iterator[tuple[int, int, Tree]]:
        """Yield ``(start, end, node)`` for every internal node, pre-order."""

        def walk(node: Tree, start: int) -> Iterator[tuple[int, int, Tree]]:
            if node.is_leaf:
                return
            end = start
            inner: list[tuple[int, int, Tree]] = []
            for child in node.children:
                if child.is_leaf:
                    end += 1
                else:
                    sub = list(walk(child, end))
                    inner.extend(sub)
                    end = sub[0][1]
            yield (start, end, node)
            yield from inner

        yield from walk(self, 0)

    def is_binary(self) -> bool:
        """True if every internal node is binary or a preterminal."""
        return all(
            node.is_preterminal
            or (len(node.children) == 2 and not any(c.is_leaf for c in node.children))
            for node in self.subtrees()
        )

    def __str__(self) -> str:
        return serialize(self)


@dataclass
class Corpus:
    """Token sequences, optional aligned gold trees and a dense vocabulary."""

    sentences: list[tuple[str, ...]]
    gold: list[Tree] | None = None
    vocab: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.vocab:
            for sent in self.sentences:
                for tok in sent:
                    self.vocab.setdefault(tok, len(self.vocab))
        if self.gold is not None:
            if len(self.gold) != len(self.sentences):
                raise TreebankError(
                    f"{len(self.gold)} gold trees for {len(self.sentences)} sentences"
                )
            for idx, (tree, sent) in enumerate(zip(self.gold, self.sentences)):
                if tree.leaves() != tuple(sent):
                    raise TreebankError(f"gold tree {idx} does not yield sentence {idx}")

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def words(self) -> list[str]:
        """Vocabulary in id order."""
        return sorted(self.vocab, key=self.vocab.__getitem__)

    def encode(self, sentence: Sequence[str]) -> list[int]:
        try:
            return [self.vocab[tok] for tok in sentence]
        except KeyError as err:
            raise KeyError(f"out-of-vocabulary token {err.args[0]!r}") from None

    @classmethod
    def from_trees(cls, trees: Sequence[Tree]) -> Corpus:
        return cls([t.leaves() for t in trees], gold=list(trees))


# -- reading -----------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_ESCAPES = {"(": "-LRB-", ")": "-RRB-"}


def _unescape(token: str) -> str:
    return token.replace("-LRB-", "(").replace("-RRB-", ")")


def strip_function_tags(label: str) -> str:
    """``NP-SBJ-1`` -> ``NP``; ``NP=2`` -> ``NP``; ``-LRB-`` and ``-NONE-`` kept."""
    if not label or label[0] in "-=":
        return label
    return re.split(r"[-=]", label, maxsplit=1)[0]


def parse_tree(text: str, line: int = 1) -> Tree:
    """Parse a single bracketed tree. Leaves are unescaped (``-LRB-`` -> ``(``)."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise TreebankError(f"line {line}: empty tree")
    stack: list[tuple[str | None, list[Tree]]] = []
    result: Tree | None = None
    pos = 0
    while pos < len(tokens):
        tok = tokens[pos]
        if tok == "(":
            if result is not None:
                raise TreebankError(f"line {line}: text after end of tree")
            label = None
            if pos + 1 < len(tokens) and tokens[pos + 1] not in "()":
                label = tokens[pos + 1]
                pos += 1
            stack.append((label, []))
        elif tok == ")":
            if not stack:
                raise TreebankError(f"line {line}: unbalanced parentheses (extra ')')")
            label, kids = stack.pop()
            if not kids:
                raise TreebankError(f"line {line}: empty constituent ({label or ''})")
            if label is None:
                # PTB wrapper "( (S ...) )"
                if len(kids) != 1:
                    raise TreebankError(f"line {line}: unlabeled node with several children")
                node = kids[0]
            else:
                node = Tree(strip_function_tags(label), tuple(kids))
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
        else:
            if not stack:
                raise TreebankError(f"line {line}: token {tok!r} outside brackets")
            stack[-1][1].append(Tree(_unescape(tok)))
        pos += 1
    if stack:
        raise TreebankError(f"line {line}: unbalanced parentheses (missing ')')")
    if result is None:
        raise TreebankError(f"line {line}: empty tree")
    return result


def parse_bracketed(text: str) -> list[Tree]:
    """Parse one tree per nonblank line."""
    return [
        parse_tree(line, lineno)
        for lineno, line in enumerate(text.splitlines(), 1)
        if line.strip()
    ]


def read_trees(path) -> list[Tree]:
    with open(path, encoding="utf-8") as f:
        return parse_bracketed(f.read())


def read_sentences(path) -> list[tuple[str, ...]]:
    """Raw corpus: one sentence per line, space-separated tokens."""
    with open(path, encoding="utf-8") as f:
        return [tuple(line.split()) for line in f if line.strip()]


# -- writing -----------------------------------------------------------------


def _escape(token: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in token)


def serialize(tree: Tree) -> str:
    if tree.is_leaf:
        return _escape(tree.label)
    parts: list[str] = []

    def emit(node: Tree) -> None:
        if node.is_leaf:
            parts.append(_escape(node.label))
            return
        parts.append("(" + node.label)
        for child in node.children:
            parts.append(" ")
            emit(child)
        parts.append(")")

    emit(tree)
    return "".join(parts)


def write_trees(path, trees: Iterable[Tree]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for tree in trees:
            f.write(serialize(tree) + "\n")


# -- normalization -----------------------------------------------------------


def collapse_unaries(tree: Tree) -> Tree:
    """Remove unary chains, keeping the topmost label of each chain.

    >>> serialize(collapse_unaries(parse_tree("(S (VP (V run)))")))
    '(S run)'
    """
    if tree.is_leaf:
        return tree
    node = tree
    while len(node.children) == 1 and not node.children[0].is_leaf:
        node = node.children[0]
    return Tree(tree.label, tuple(collapse_unaries(c) for c in node.children))


def is_punct_token(token: str) -> bool:
    """Every character is Unicode punctuation (P*) or symbol (S*)."""
    return bool(token) and all(unicodedata.category(ch)[0] in "PS" for ch in token)


PunctPredicate = Callable[[str, str], bool]


def char_punct(token: str, tag: str) -> bool:
    return is_punct_token(token)


def tag_punct(tags: Iterable[str]) -> PunctPredicate:
    """Predicate marking leaves whose preterminal label is in ``tags``."""
    tagset = frozenset(tags)
    return lambda token, tag: tag in tagset


def no_punct(token: str, tag: str) -> bool:
    return False


def punct_positions(tree: Tree, is_punct: PunctPredicate = char_punct) -> set[int]:
    """Token indices the predicate marks as punctuation."""
    out: set[int] = set()
    for i, j, node in tree.spans():
        if node.is_preterminal and is_punct(node.children[0].label, node.label):
            out.add(i)
    if tree.is_leaf and is_punct(tree.label, ""):
        out.add(0)
    return out


def remove_positions(tree: Tree, positions: set[int]) -> Tree | None:
    """Delete the given token positions, prune emptied nodes and re-collapse.

    Returns ``None`` if nothing survives.
    """
    counter = iter(range(len(tree)))

    def prune(node: Tree) -> Tree | None:
        if node.is_leaf:
            return None if next(counter) in positions else node
        kids = [k for k in (prune(c) for c in node.children) if k is not None]
        return Tree(node.label, tuple(kids)) if kids else None

    pruned = prune(tree)
    return None if pruned is None else collapse_unaries(pruned)


def strip_punctuation(tree: Tree, is_punct: PunctPredicate = char_punct) -> Tree | None:
    """Remove punctuation leaves; ``None`` when the whole tree was punctuation."""
    return remove_positions(tree, punct_positions(tree, is_punct))


def gold_constituents(tree: Tree) -> Counter:
    """Multiset of ``((start, end), label)`` for internal nodes spanning >= 2 tokens."""
    return Counter(((i, j), node.label) for i, j, node in tree.spans() if j - i >= 2)


# -- statistics --------------------------------------------------------------

TERMINAL = "<t>"


def corpus_stats(trees: Sequence[Tree]) -> dict:
    """Distinct nonterminal categories and expansion signatures.

    Leaves are abstracted to a single terminal marker, so ``(N dog)`` and
    ``(N cat)`` share the rule ``N -> <t>``.
    """
    if not trees:
        raise ValueError("corpus_stats needs at least one tree")
    categories: set[str] = set()
    rules: Counter = Counter()
    for tree in trees:
        for node in tree.subtrees():
            categories.add(node.label)
            rhs = tuple(TERMINAL if c.is_leaf else c.label for c in node.children)
            rules[(node.label, rhs)] += 1
    return {
        "unique_categories": len(categories),
        "unique_rules": len(rules),
        "rule_histogram": rules,
    }
