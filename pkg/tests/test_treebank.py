from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from pcfglab.treebank import (
    Corpus,
    Tree,
    TreebankError,
    collapse_unaries,
    corpus_stats,
    gold_constituents,
    parse_bracketed,
    parse_tree,
    serialize,
    strip_punctuation,
    tag_punct,
)


def test_parse_simple():
    (t,) = parse_bracketed("(S (NP (D a) (N dog)) (VP (V ran)))")
    assert t.label == "S"
    assert t.leaves() == ("a", "dog", "ran")
    assert [c.label for c in t.children] == ["NP", "VP"]


def test_function_tags_stripped():
    t = parse_tree("(S (NP-SBJ (N dogs)) (VP (V run)))")
    assert t.children[0].label == "NP"
    assert parse_tree("(S (NP-SBJ-1=2 (N dogs)))").children[0].label == "NP"
    assert parse_tree("(S (-LRB- -LRB-) (-NONE- x))").children[0].label == "-LRB-"
    assert parse_tree("(S (-NONE- x))").children[0].label == "-NONE-"


@pytest.mark.parametrize("text", ["(S (NP (N a))", "(S a))", ")"])
def test_unbalanced(text):
    with pytest.raises(TreebankError, match="line 1"):
        parse_bracketed(text)


def test_error_reports_line_number():
    with pytest.raises(TreebankError, match="line 2"):
        parse_bracketed("(S (A a))\n(S (B b)")


def test_empty_tree():
    with pytest.raises(TreebankError):
        parse_tree("")
    with pytest.raises(TreebankError):
        parse_tree("(S )")


def test_ptb_wrapper():
    assert parse_tree("( (S (A a) (B b)) )") == parse_tree("(S (A a) (B b))")


def test_serialize_format():
    assert serialize(parse_tree("(N   dog)")) == "(N dog)"


def test_paren_tokens_escaped():
    t = Tree("S", (Tree("X", (Tree("("),)), Tree("Y", (Tree("a)b"),))))
    text = serialize(t)
    assert text == "(S (X -LRB-) (Y a-RRB-b))"
    assert parse_tree(text) == t


_labels = st.sampled_from(["S", "NP", "VP", "X", "0", "12"])
_tokens = st.text(alphabet="ab()=-.,!é", min_size=1, max_size=4).filter(
    lambda s: s not in ("-LRB-", "-RRB-")
)


def _trees():
    leaf_pre = st.builds(lambda lab, tok: Tree(lab, (Tree(tok),)), _labels, _tokens)
    return st.recursive(
        leaf_pre,
        lambda kids: st.builds(
            lambda lab, cs: Tree(lab, tuple(cs)), _labels, st.lists(kids, min_size=1, max_size=3)
        ),
        max_leaves=12,
    )


@settings(max_examples=200, deadline=None)
@given(_trees())
def test_round_trip(t):
    assert parse_tree(serialize(t)) == t
    assert serialize(parse_tree(serialize(t))) == serialize(t)


@pytest.mark.parametrize(
    "src, expected",
    [
        ("(S (VP (V run)))", "(S run)"),
        ("(A (B (C (D d) (E e))))", "(A (D d) (E e))"),
        ("(S (NP (D a) (N dog)) (V ran))", "(S (NP (D a) (N dog)) (V ran))"),
    ],
)
def test_collapse_unaries(src, expected):
    assert serialize(collapse_unaries(parse_tree(src))) == expected


def _has_unary_internal(t: Tree) -> bool:
    return any(
        len(n.children) == 1 and not n.children[0].is_leaf for n in t.subtrees()
    )


@settings(max_examples=200, deadline=None)
@given(_trees())
def test_collapse_idempotent(t):
    once = collapse_unaries(t)
    assert collapse_unaries(once) == once
    assert not _has_unary_internal(once)
    assert once.leaves() == t.leaves()


def test_strip_punctuation():
    t = parse_tree("(S (NP (N dogs)) (VP (V run)) (. .))")
    assert serialize(strip_punctuation(t)) == "(S (NP dogs) (VP run))"
    assert strip_punctuation(parse_tree("(ROOT (. !) (. ?))")) is None


def test_strip_punctuation_identity():
    t = parse_tree("(S (NP (D a) (N dog)) (VP (V ran)))")
    assert strip_punctuation(t) == collapse_unaries(t)


def test_strip_punctuation_by_tag():
    t = parse_tree("(S (NP (N dogs)) (PU x) (VP (V run)))")
    assert strip_punctuation(t, tag_punct({"PU"})).leaves() == ("dogs", "run")
    # character test would keep the letter token
    assert strip_punctuation(t).leaves() == ("dogs", "x", "run")


def test_strip_punctuation_unicode():
    t = parse_tree("(S (A 你好) (P 。) (B «) (C a.b))")
    assert strip_punctuation(t).leaves() == ("你好", "a.b")


@settings(max_examples=200, deadline=None)
@given(_trees())
def test_strip_preserves_order(t):
    from pcfglab.treebank import is_punct_token

    out = strip_punctuation(t)
    expected = tuple(w for w in t.leaves() if not is_punct_token(w))
    if out is None:
        assert expected == ()
    else:
        assert out.leaves() == expected
        assert not _has_unary_internal(out)


def test_gold_constituents():
    t = parse_tree("(S (NP (D a) (N dog)) (VP ran))")
    assert gold_constituents(t) == Counter({((0, 3), "S"): 1, ((0, 2), "NP"): 1})
    assert gold_constituents(parse_tree("(N dog)")) == Counter()
    rb = parse_tree("(A (x a) (B (x b) (C (x c) (x d))))")
    assert sorted(s for s, _ in gold_constituents(rb)) == [(0, 4), (1, 4), (2, 4)]


@settings(max_examples=100, deadline=None)
@given(_trees())
def test_gold_constituents_well_formed(t):
    t = collapse_unaries(t)
    n = len(t)
    for (i, j), _ in gold_constituents(t):
        assert 0 <= i < j <= n and j - i >= 2


def test_corpus_stats():
    t = parse_tree("(S (A a) (B b))")
    s = corpus_stats([t, t])
    assert s["unique_categories"] == 3
    assert s["unique_rules"] == 3
    assert s["rule_histogram"][("S", ("A", "B"))] == 2
    s1 = corpus_stats([parse_tree("(N dog)")])
    assert (s1["unique_categories"], s1["unique_rules"]) == (1, 1)
    with pytest.raises(ValueError):
        corpus_stats([])


def test_corpus_vocab_and_alignment():
    c = Corpus([("a", "b"), ("b", "c")])
    assert c.vocab == {"a": 0, "b": 1, "c": 2}
    assert c.encode(["c", "a"]) == [2, 0]
    with pytest.raises(KeyError):
        c.encode(["z"])
    with pytest.raises(TreebankError):
        Corpus([("a", "b")], gold=[parse_tree("(S (X a) (X c))")])
