"""
Inducing a grammar from synthetic text
======================================

Sample a treebank from a small sparse grammar, hide the trees, and ask the
Gibbs sampler to recover them. Scores compare the induced Viterbi trees with
the generating trees.
"""

import numpy as np

from pcfglab.evaluate import evaluate, normalize_corpus
from pcfglab.experiment import generate_from_grammar, sparse_grammar
from pcfglab.grammar import format_grammar
from pcfglab.inducer import GibbsConfig, gibbs_run
from pcfglab.treebank import Corpus

gen = sparse_grammar()
trees = generate_from_grammar(gen, 2000, 10, np.random.default_rng(0))
corpus = Corpus([t.leaves() for t in trees])
print(len(corpus), "sentences, vocabulary", len(corpus.vocab))
print(trees[0])

# %%
# Two concentrations, two seeds each.
for beta in (0.01, 1.0):
    for seed in (0, 1):
        state = gibbs_run(corpus, GibbsConfig(C=5, beta=beta, iterations=150, seed=seed))
        s = evaluate(*normalize_corpus(trees, state.viterbi_trees(), None))
        print(f"beta {beta:<5} seed {seed}  log p {state.trace[-1]:9.1f}  "
              f"F1 {s['f1']:.3f}  RH {s['rh']:.3f}  RVM {s['rvm']:.3f}")

# %%
# Rules of the last induced grammar with probability above 0.05.
for line in format_grammar(state.grammar).splitlines()[1:]:
    if not line.startswith("ROOT") and float(line.rsplit(":", 1)[1]) > 0.05:
        print(line)
