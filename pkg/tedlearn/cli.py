"""Command line interface."""

from __future__ import annotations

import argparse
from collections.abc import Sequence
import csv
import logging
from pathlib import Path
import sys

import numpy as np

from .bedl import BedlConfig, bedl_fit
from .classifiers import error_rate, goodness_fit, goodness_predict, knn_classify, similarity
from .const import (
    DEFAULT_SUBGRADIENT_ITERATIONS,
    GOODNESS,
    KNN,
    METHOD_BEDL,
    METHOD_GESL,
    METHOD_NONE,
    MGLVQ,
    REFRESH_CURRENT,
    REFRESH_INITIAL,
)
from .coopt import coopt_average
from .costs import (
    EmbeddingCostModel,
    cosine_init,
    load_word_vectors,
    read_cost_matrix,
    read_embedding,
    write_cost_matrix,
    write_embedding,
)
from .datasets import generate_strings
from .error import DatasetError, TedLearnError
from .experiment import ExperimentConfig, run_experiment, stratified_splits, write_report
from .gesl import gesl_fit
from .mglvq import classify_nearest_prototype, median_glvq_fit
from .pca import MODE_ALL, MODE_TOP2, MODE_VARIANCE, pca_project
from .ted import ted, ted_matrix
from .trees import load_dataset, parse_bracket, read_tree_corpus, save_dataset

_LOGGER = logging.getLogger(__name__)


def _write_matrix(matrix: np.ndarray, out: str | None) -> None:
    fp = Path(out).open("w", encoding="utf-8", newline="") if out else sys.stdout
    try:
        csv.writer(fp).writerows([repr(float(v)) for v in row] for row in matrix)
    finally:
        if out:
            fp.close()


def _read_matrix(path: str) -> np.ndarray:
    try:
        return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    except ValueError as err:
        raise DatasetError(f"Malformed matrix file {path}") from err


def _read_labels(path: str) -> np.ndarray:
    try:
        return np.atleast_1d(np.loadtxt(path, delimiter=",", dtype=int))
    except ValueError as err:
        raise DatasetError(f"Malformed label file {path}") from err


def cmd_generate_strings(args: argparse.Namespace) -> None:
    """Write the Strings dataset."""
    save_dataset(generate_strings(args.seed), args.out)


def cmd_ted(args: argparse.Namespace) -> None:
    """Write tree edit distances between two corpora."""
    costs = read_cost_matrix(args.costs)
    xs = read_tree_corpus(args.trees_a, costs.alphabet)
    ys = read_tree_corpus(args.trees_b, costs.alphabet)
    _write_matrix(ted_matrix(xs, ys, costs), args.out)


def cmd_coopt(args: argparse.Namespace) -> None:
    """Write the co-optimal edit frequencies of two trees."""
    costs = read_cost_matrix(args.costs)
    x = parse_bracket(args.tree_a, costs.alphabet)
    y = parse_bracket(args.tree_b, costs.alphabet)
    _write_matrix(coopt_average(x, y, costs, ted(x, y, costs)).matrix, args.out)


def cmd_mglvq_fit(args: argparse.Namespace) -> None:
    """Print the selected prototype indices."""
    model = median_glvq_fit(
        _read_matrix(args.distances), _read_labels(args.labels), args.k, seed=args.seed
    )
    print("\n".join(str(int(i)) for i in model.indices))  # noqa: T201


def cmd_train_bedl(args: argparse.Namespace) -> None:
    """Learn and write a label embedding, or cosine costs over word vectors."""
    dataset = load_dataset(args.data)
    config = BedlConfig(
        prototypes=args.k,
        beta=args.beta_scale * 2.0 * args.k * len(dataset),
        budget=args.budget,
        outer_limit=args.outer_limit,
    )
    init = None
    if args.word_vectors:
        base, _ = load_word_vectors(args.word_vectors, dataset.alphabet)
        init = cosine_init(dataset.alphabet, base)
    result = bedl_fit(dataset, config, seed=args.seed, init=init)
    if isinstance(result.model, EmbeddingCostModel):
        write_embedding(result.model, args.out)
    else:
        write_cost_matrix(result.model, args.out)


def cmd_train_gesl(args: argparse.Namespace) -> None:
    """Learn and write an explicit cost matrix."""
    dataset = load_dataset(args.data)
    beta = args.beta_scale * 2.0 * args.k * len(dataset)
    result = gesl_fit(dataset, args.k, beta, iterations=args.iterations)
    write_cost_matrix(result.costs, args.out)


def cmd_evaluate(args: argparse.Namespace) -> None:
    """Write per-fold test errors of one classifier on a distance matrix."""
    distances = _read_matrix(args.distances)
    labels = _read_labels(args.labels)
    rows = []
    for fold, (train, test) in enumerate(stratified_splits(labels, args.folds, args.seed)):
        block = distances[np.ix_(test, train)]
        if args.classifier == KNN:
            predicted = knn_classify(block, labels[train], args.k)
        elif args.classifier == MGLVQ:
            model = median_glvq_fit(
                distances[np.ix_(train, train)], labels[train], args.k, seed=args.seed
            )
            predicted = classify_nearest_prototype(block[:, model.indices], model)
        else:
            model = goodness_fit(distances[np.ix_(train, train)], labels[train], args.lam)
            predicted = goodness_predict(model, similarity(block))
        rows.append((fold, args.classifier, error_rate(predicted, labels[test])))

    writer = csv.writer(sys.stdout)
    writer.writerow(("fold", "classifier", "error"))
    writer.writerows((fold, name, f"{error:.6f}") for fold, name, error in rows)


def cmd_run_experiment(args: argparse.Namespace) -> None:
    """Run a cross-validation experiment and write its report."""
    overrides = {
        "seed": args.seed,
        "method": args.method,
        "outer_folds": args.outer_folds,
        "inner_folds": args.inner_folds,
        "prototype_range": args.prototype_range,
        "neighbor_range": args.neighbor_range,
        "lambda_range": args.lambda_range,
        "beta_scale_range": args.beta_scale_range,
        "grid_points": args.grid_points,
        "budget": args.budget,
        "outer_limit": args.outer_limit,
        "averaged": args.averaged,
        "refresh": args.refresh,
        "iterations": args.iterations,
        "n_jobs": args.jobs,
        "word_vectors": args.word_vectors,
    }
    overrides = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in overrides.items()
    }
    if args.config:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig(seed=args.seed).with_overrides(**overrides)
    dataset = load_dataset(args.data) if args.data else generate_strings(args.seed)
    reports = run_experiment(config, dataset)
    write_report(reports, args.out, include_runtime=not args.no_runtime)


def cmd_embed_export(args: argparse.Namespace) -> None:
    """Write the PCA projection of an embedding, the gap at the origin."""
    model = read_embedding(args.embedding)
    vectors = np.vstack([model.embedding.T, np.zeros(model.dim)])
    result = pca_project(vectors, mode=args.mode)
    names = [*model.alphabet.labels, model.alphabet.label(model.gap)]
    with Path(args.pca).open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["label", *(f"pc{i + 1}" for i in range(result.projected.shape[1]))])
        for name, row in zip(names, result.projected, strict=True):
            writer.writerow([name, *(repr(float(v)) for v in row)])
    _LOGGER.info("Explained variance: %s", result.cumulative.tolist())


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    parser = argparse.ArgumentParser(prog="tedlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-strings", help="generate the Strings dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_strings)

    p = sub.add_parser("ted", help="tree edit distance matrix between two corpora")
    p.add_argument("--costs", required=True)
    p.add_argument("trees_a")
    p.add_argument("trees_b")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ted)

    p = sub.add_parser("coopt", help="co-optimal edit frequencies of two trees")
    p.add_argument("--costs", required=True)
    p.add_argument("tree_a")
    p.add_argument("tree_b")
    p.add_argument("--out")
    p.set_defaults(func=cmd_coopt)

    p = sub.add_parser("mglvq-fit", help="select prototypes by median GLVQ")
    p.add_argument("--distances", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mglvq_fit)

    p = sub.add_parser("train-bedl", help="learn a label embedding")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta-scale", type=float, default=0.0)
    p.add_argument("--budget", type=int, default=BedlConfig.budget)
    p.add_argument("--outer-limit", type=int, default=BedlConfig.outer_limit)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word-vectors", help="learn cosine costs over these word vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_bedl)

    p = sub.add_parser("train-gesl", help="learn an explicit cost matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta-scale", type=float, default=0.0)
    p.add_argument("--iterations", type=int, default=DEFAULT_SUBGRADIENT_ITERATIONS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_gesl)

    p = sub.add_parser("evaluate", help="cross-validate a classifier on a distance matrix")
    p.add_argument("--distances", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--classifier", choices=(KNN, MGLVQ, GOODNESS), required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--lam", type=float, default=1e-3)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run-experiment", help="run nested cross-validation")
    p.add_argument("--config")
    p.add_argument("--data", help="dataset JSON, Strings when omitted")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", choices=(METHOD_NONE, METHOD_GESL, METHOD_BEDL))
    p.add_argument("--outer-folds", type=int)
    p.add_argument("--inner-folds", type=int)
    p.add_argument("--prototype-range", type=int, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--neighbor-range", type=int, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--lambda-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--beta-scale-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--grid-points", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--outer-limit", type=int)
    p.add_argument(
        "--single-script",
        dest="averaged",
        action="store_const",
        const=False,
        help="train on one co-optimal edit script instead of the average",
    )
    p.add_argument("--refresh", choices=(REFRESH_CURRENT, REFRESH_INITIAL))
    p.add_argument("--iterations", type=int)
    p.add_argument("--word-vectors")
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-runtime", action="store_true", help="omit runtimes from the report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("embed-export", help="export the PCA projection of an embedding")
    p.add_argument("--embedding", required=True)
    p.add_argument("--pca", required=True)
    p.add_argument("--mode", choices=(MODE_TOP2, MODE_VARIANCE, MODE_ALL), default=MODE_TOP2)
    p.set_defaults(func=cmd_embed_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (TedLearnError, OSError) as err:
        _LOGGER.error("%s", err)
        return 1
    return 0
