"""
Scoring induced categories
==========================

Induced grammars label constituents with bare integers, so labeled scores
cannot compare label strings. Homogeneity asks instead whether each predicted
label picks out a single gold category.
"""

from pcfglab.evaluate import evaluate, homogeneity_completeness_v
from pcfglab.treebank import parse_tree

# The same four spans, labeled twice. Gold says A, A, B, B.
pairs = [("A", "X"), ("A", "X"), ("B", "X"), ("B", "Y")]
print(homogeneity_completeness_v(pairs))

# %%
# Splitting a predicted category never costs homogeneity. V-measure also
# counts completeness, so it goes down.
gold = [parse_tree(f"({lab} (x a) (x b))") for lab in "AAAABBBB"]
coarse = [parse_tree(f"({lab} (x a) (x b))") for lab in "XXXXYYYY"]
fine = [parse_tree(f"({lab} (x a) (x b))") for lab in "XXZZYYWW"]

for name, pred in [("coarse", coarse), ("fine", fine)]:
    s = evaluate(gold, pred)
    print(f"{name:6s}  RH {s['rh']:.3f}  RVM {s['rvm']:.3f}")

# %%
# Bracketing recall multiplies in. Here the prediction misses one gold span
# per sentence, so RH is half the homogeneity above.
gold = [parse_tree(f"({lab} (x a) (x b) (Q (x c) (x d)))") for lab in "AABB"]
pred = [parse_tree(f"({lab} (x a) (K (x b) (x c)) (x d))") for lab in "XXXY"]
s = evaluate(gold, pred)
print(f"recall {s['recall']:.2f}  h {s['h']:.4f}  RH {s['rh']:.4f}")
