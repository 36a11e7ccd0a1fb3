"""Command-line entry point: ``pcfglab <command> ...``.

Induction commands read an optional ``--config`` file of ``key = value`` lines;
flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .depth import tree_depth
from .evaluate import evaluate, normalize_corpus, permutation_test, sentence_scores
from .experiment import (
    METRICS,
    ExperimentConfig,
    generate_from_grammar,
    generate_synthetic,
    nested_grammar,
    punct_predicate,
    read_config,
    run_experiment,
    sparse_grammar,
    sweep,
    sweep_means,
    write_synthetic,
)
from .grammar import load_grammar
from .treebank import TreebankError, corpus_stats, read_trees

BUILTIN_GRAMMARS = {"sparse": sparse_grammar, "nested": nested_grammar}


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--corpus", help="raw corpus, one sentence per line")
    p.add_argument("--gold", help="bracketed gold trees aligned with the corpus")
    p.add_argument("--C", type=int, dest="C", help="number of categories")
    p.add_argument("--beta", type=float, help="symmetric Dirichlet concentration")
    p.add_argument("--depth-bound", dest="depth_bound",
                   help="maximum memory depth, or 'unbounded'")
    p.add_argument("--iterations", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, help="master seed; run k uses seed + k")
    p.add_argument("--output", help="output directory")
    p.add_argument("--punct", help="chars | none | tags:<file>")
    p.add_argument("--jobs", type=int, help="parallel runs")


def _load_config(args: argparse.Namespace, extra=()) -> tuple[ExperimentConfig, dict]:
    values = read_config(args.config, extra) if args.config else {}
    for f in fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    rest = {k: values.pop(k) for k in extra if k in values}
    return ExperimentConfig(**values), rest


def cmd_induce(args) -> dict:
    config, _ = _load_config(args)
    report = run_experiment(config)
    out = {"output": config.output,
           "runs": [{k: r[k] for k in ("run", "seed", "status", "logjoint")} for r in report["runs"]]}
    if "scores" in report and "all" in report["scores"]:
        out["scores"] = report["scores"]["all"]
    return out


def cmd_sweep(args) -> dict:
    config, rest = _load_config(args, extra=("axis", "values"))
    axis = args.axis or rest.get("axis")
    values = args.values or rest.get("values")
    if not axis or not values:
        raise ValueError("sweep needs an axis and values (flags or config keys)")
    values = [v.strip() for v in values.split(",") if v.strip()]
    report = sweep(config, axis, values)
    return {
        "axis": axis,
        "means": {m: sweep_means(report["rows"], m) for m in METRICS},
        "failed": len(report["failures"]),
    }


def cmd_eval(args) -> dict:
    gold, pred = read_trees(args.gold), read_trees(args.pred)
    scores = evaluate(*normalize_corpus(gold, pred, punct_predicate(args.punct)))
    scores["metric"] = args.metric
    scores["score"] = scores[args.metric]
    return scores


def cmd_sigtest(args) -> dict:
    is_punct = punct_predicate(args.punct)
    gold = read_trees(args.gold)
    g_a, p_a = normalize_corpus(gold, read_trees(args.pred_a), is_punct)
    g_b, p_b = normalize_corpus(gold, read_trees(args.pred_b), is_punct)
    result = permutation_test(sentence_scores(g_a, p_a), sentence_scores(g_b, p_b),
                              iterations=args.iterations, rng=args.seed)
    result["seed"] = args.seed
    return result


def cmd_depth(args) -> dict:
    depths = [tree_depth(t) for t in read_trees(args.treebank)]
    for d in depths:
        print(d)
    return {}


def cmd_synth(args) -> dict:
    if args.grammar:
        grammar = (BUILTIN_GRAMMARS[args.grammar]() if args.grammar in BUILTIN_GRAMMARS
                   else load_grammar(args.grammar))
        trees = generate_from_grammar(grammar, args.sentences, args.max_len,
                                      np.random.default_rng(args.seed), args.min_len)
    else:
        grammar, trees = generate_synthetic(args.C, args.V, args.beta_gen, args.sentences,
                                            args.max_len, args.seed, args.min_len)
    return write_synthetic(args.output, grammar, trees)


def cmd_stats(args) -> dict:
    trees = read_trees(args.treebank)
    stats = corpus_stats(trees)
    return {
        "sentences": len(trees),
        "tokens": sum(len(t) for t in trees),
        "unique_categories": stats["unique_categories"],
        "unique_rules": stats["unique_rules"],
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcfglab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("induce", help="seeded multi-run Gibbs induction")
    _experiment_flags(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("sweep", help="grid over beta, C or depth")
    _experiment_flags(p)
    p.add_argument("--axis", choices=("beta", "C", "depth"))
    p.add_argument("--values", help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score predicted trees against gold trees")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--metric", choices=("f1", "rh", "rvm", "h", "c", "v"), default="f1")
    p.add_argument("--punct", default="chars", help="chars | none | tags:<file>")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sigtest", help="paired permutation test on unlabeled F1")
    p.add_argument("gold")
    p.add_argument("pred_a")
    p.add_argument("pred_b")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--punct", default="chars")
    p.set_defaults(func=cmd_sigtest)

    p = sub.add_parser("depth", help="print the memory depth of each binary tree")
    p.add_argument("treebank")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("synth", help="sample a synthetic treebank")
    p.add_argument("--output", required=True)
    p.add_argument("--grammar", help=f"grammar file or one of {sorted(BUILTIN_GRAMMARS)}")
    p.add_argument("--C", type=int, dest="C", default=5)
    p.add_argument("--V", type=int, dest="V", default=20)
    p.add_argument("--beta-gen", type=float, default=0.1)
    p.add_argument("--sentences", type=int, default=1000)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="category and rule counts of a treebank")
    p.add_argument("treebank")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except (ValueError, KeyError, OSError, TreebankError) as err:
        print(f"pcfglab {args.command}: error: {err}", file=sys.stderr)
        return 1
    if result:
        print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
