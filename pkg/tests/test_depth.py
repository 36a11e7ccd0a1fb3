import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfglab.depth import annotate_depths, check_bound, tree_depth
from pcfglab.treebank import Tree, parse_tree

from oracles import random_tree


def right_branching(n: int) -> Tree:
    t = Tree("X", (Tree(f"w{n - 1}"),))
    for i in range(n - 2, -1, -1):
        t = Tree("X", (Tree("X", (Tree(f"w{i}"),)), t))
    return t


def left_branching(n: int) -> Tree:
    t = Tree("X", (Tree("w0"),))
    for i in range(1, n):
        t = Tree("X", (t, Tree("X", (Tree(f"w{i}"),))))
    return t


def center_embedded(n: int) -> Tree:
    """a^n b^n with S -> A T, T -> S B, innermost S -> A B."""
    s = Tree("S", (Tree("A", (Tree("a"),)), Tree("B", (Tree("b"),))))
    for _ in range(n - 1):
        t = Tree("T", (s, Tree("B", (Tree("b"),))))
        s = Tree("S", (Tree("A", (Tree("a"),)), t))
    return s


def test_right_branching():
    nodes = annotate_depths(right_branching(4))
    assert all(n.depth == 1 for n in nodes if n.end - n.start >= 2)
    assert tree_depth(right_branching(4)) == 1


def test_left_branching():
    nodes = annotate_depths(left_branching(4))
    assert all(n.depth == 1 for n in nodes if n.end - n.start >= 2)
    assert tree_depth(left_branching(4)) == 1


def test_a2b2():
    t = center_embedded(2)
    nodes = annotate_depths(t)
    inner = [n for n in nodes if n.label == "S" and (n.start, n.end) == (1, 3)]
    assert len(inner) == 1 and inner[0].depth == 2 and inner[0].side == "L"
    assert nodes[0].depth == 1 and nodes[0].side == "L"
    assert tree_depth(t) == 2


def test_a3b3():
    assert tree_depth(center_embedded(3)) == 3


def test_single_preterminal():
    assert tree_depth(parse_tree("(X w)")) == 1


def test_check_bound():
    assert check_bound(right_branching(5), 1)
    assert not check_bound(center_embedded(2), 1)
    assert check_bound(center_embedded(2), 3)
    with pytest.raises(ValueError):
        check_bound(right_branching(2), 0)


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        tree_depth(parse_tree("(X (A a) (B b) (C c))"))


def test_recurrence_on_sides():
    t = center_embedded(3)
    by_span = {(n.start, n.end): n for n in annotate_depths(t)}
    for n in annotate_depths(t):
        assert n.side in ("L", "R")
    # every right child keeps the parent's depth
    assert by_span[(1, 6)].side == "R" and by_span[(1, 6)].depth == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31))
def test_depth_bounds(n, seed):
    t = random_tree(np.random.default_rng(seed), [f"w{i}" for i in range(n)], [0], binary=True)
    d = tree_depth(t)
    assert 1 <= d <= max(1, math.ceil(n / 2))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**31))
def test_right_spine_extension(n, seed):
    t = random_tree(np.random.default_rng(seed), [f"w{i}" for i in range(n)], [0], binary=True)
    extended = Tree("X", (Tree("X", (Tree("new"),)), t))
    assert tree_depth(extended) <= tree_depth(t) + 1
    # free whenever the tree already starts with a lexical left corner
    if t.children and t.children[0].is_preterminal:
        assert tree_depth(extended) == tree_depth(t)
    # attaching a word on the right never costs memory
    appended = Tree("X", (t, Tree("X", (Tree("new"),))))
    assert tree_depth(appended) == tree_depth(t)


def test_left_branching_under_right_child_costs_a_level():
    t = left_branching(3)
    assert tree_depth(Tree("X", (Tree("X", (Tree("new"),)), t))) == 2
