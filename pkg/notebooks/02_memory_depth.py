"""
Memory depth and bounded parsing
================================

A left-corner parser needs one memory slot per pending center embedding.
Purely left- or right-branching trees fit in one slot.
"""

import numpy as np

from pcfglab.depth import annotate_depths, tree_depth
from pcfglab.experiment import generate_from_grammar, nested_grammar
from pcfglab.inducer import inside_chart, viterbi_parse
from pcfglab.treebank import parse_tree

right = parse_tree("(X (X a) (X (X b) (X (X c) (X d))))")
nested = parse_tree("(S (A a) (T (S (A a) (B b)) (B b)))")
print(tree_depth(right), tree_depth(nested))
for node in annotate_depths(nested):
    print(node)

# %%
# ``nested_grammar`` only derives a^n b^n by center embedding. A depth bound
# below n leaves such sentences with no parse at all.
g = nested_grammar(words_per_class=1)
sentence = [0, 0, 0, 1, 1, 1]  # a a a b b b
for D in (1, 2, 3, None):
    print(f"D={D}: log p = {inside_chart(sentence, g, D).log_mass():.3f}")

print(viterbi_parse(sentence, g, words=g.words))

# %%
# Depths of a sample from the same grammar with a larger lexicon.
trees = generate_from_grammar(nested_grammar(), 1000, 10, np.random.default_rng(0))
depths = np.bincount([tree_depth(t) for t in trees])
print(dict(enumerate(depths.tolist())))
