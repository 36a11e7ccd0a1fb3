"""Bayesian PCFG induction with optional memory-depth bounds, plus labeled and
unlabeled evaluation against treebanks."""

from .depth import annotate_depths, check_bound, tree_depth
from .evaluate import evaluate, homogeneity_completeness_v, permutation_test, rh, rvm
from .grammar import Grammar, RuleCounts, load_grammar, sample_prior, save_grammar
from .inducer import GibbsConfig, gibbs_run, inside_chart, sample_tree, viterbi_parse
from .treebank import Corpus, Tree, parse_tree, read_trees, serialize

__all__ = [
    "Corpus", "GibbsConfig", "Grammar", "RuleCounts", "Tree",
    "annotate_depths", "check_bound", "evaluate", "gibbs_run",
    "homogeneity_completeness_v", "inside_chart", "load_grammar", "parse_tree",
    "permutation_test", "read_trees", "rh", "rvm", "sample_prior", "sample_tree",
    "save_grammar", "serialize", "tree_depth", "viterbi_parse",
]
__version__ = "0.1.0"
