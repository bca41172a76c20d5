"""Command-line interface.

Subcommands::

    priorprop build-graph  --features F --t T --output G
    priorprop propagate    --graph G|--features F --t T  --labels L [...] --output P
    priorprop analyze      --graph G|--features F --t T  --labels L --truth Y --output R
    priorprop demo         [synthetic-spec flags] --output R

Exit codes: 0 success, 2 usage or input validation failure, 1 internal error.
Every command is a pure function of its inputs and flags; repeated runs
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from priorprop import evaluation, fileio, multisource
from priorprop.bounds import audit_inequalities, compute_bound
from priorprop.graph import (
    Graph,
    GraphFormatError,
    average_degree,
    build_threshold_graph,
    compute_neighborhoods,
)
from priorprop.solver import (
    PriorField,
    SolverConfig,
    solve_soft,
    solve_standard,
    solve_with_prior,
)
from priorprop.spectral import spectral_bound


def _add_graph_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--features", help="feature matrix file (requires --t)")
    p.add_argument("--t", type=float, help="average-degree target for graph construction")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("direct", "iterative"), default="direct")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--unreachable-fill", type=float, default=0.5)


def _load_graph_input(args) -> Graph:
    if (args.graph is None) == (args.features is None):
        raise ValueError("exactly one of --graph or --features is required")
    if args.graph is not None:
        return fileio.load_graph(args.graph)
    if args.t is None:
        raise ValueError("--features requires --t")
    return build_threshold_graph(fileio.load_features(args.features), args.t)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        method=args.method,
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        unreachable_fill=args.unreachable_fill,
    )


def _alpha_from_args(args, graph, votes, labels):
    scheme = args.alpha_scheme
    if scheme in ("accuracy", "boosting"):
        if args.accuracies:
            acc = fileio.load_accuracies(args.accuracies)
            if acc.p.size != votes.labeler_count:
                raise ValueError("accuracy file does not match labeler count")
        else:
            acc = multisource.estimate_accuracy_from_labeled(votes, labels)
        if scheme == "accuracy":
            return multisource.alpha_accuracy(votes, acc)
        return multisource.alpha_boosting(votes, acc)
    if scheme == "probabilistic":
        if not args.features:
            raise ValueError("--alpha-scheme probabilistic requires --features")
        feats = fileio.load_features(args.features)
        return multisource.alpha_probabilistic(votes, feats, labels, args.k_neighbors)
    if scheme == "constant":
        return multisource.alpha_constant(votes, args.alpha_constant)
    if scheme == "oracle":
        if not args.truth:
            raise ValueError("--alpha-scheme oracle requires --truth")
        truth = fileio.load_labels(args.truth)
        y = _truth_vector(truth, graph.node_count)
        return multisource.alpha_oracle(votes, y)
    raise ValueError(f"unknown alpha scheme {scheme!r}")


def _truth_vector(truth_labels, node_count: int) -> np.ndarray:
    if len(truth_labels) != node_count:
        raise ValueError(
            f"ground truth must label every node ({len(truth_labels)} of {node_count} given)"
        )
    y = np.empty(node_count, dtype=np.int8)
    y[truth_labels.indices] = truth_labels.values
    return y


def cmd_build_graph(args) -> int:
    features = fileio.load_features(args.features)
    graph = build_threshold_graph(features, args.t)
    fileio.save_graph(graph, args.output)
    print(
        f"wrote {args.output}: {graph.node_count} nodes, {graph.edge_count} edges, "
        f"average degree {fileio.fmt_float(average_degree(graph))}"
    )
    return 0


def cmd_propagate(args) -> int:
    graph = _load_graph_input(args)
    labels = fileio.load_labels(args.labels)
    labels.validate_against(graph.node_count)
    config = _solver_config(args)

    if args.eta is not None:
        if args.votes:
            raise ValueError("--eta (soft solve) cannot be combined with --votes")
        prediction = solve_soft(graph, labels, args.eta)
    elif args.votes:
        votes = fileio.load_votes(args.votes)
        if votes.node_count != graph.node_count:
            raise ValueError("vote matrix does not match graph size")
        alpha = _alpha_from_args(args, graph, votes, labels)
        prediction = multisource.solve_multi_source(graph, labels, votes, alpha, config)
    elif args.mu > 0:
        prior = PriorField.constant(graph.node_count, h=0.5, mu=args.mu)
        prediction = solve_with_prior(graph, labels, prior, config)
    else:
        prediction = solve_standard(graph, labels, config)

    fileio.save_prediction(prediction, args.output)
    print(
        f"wrote {args.output}: method={prediction.method} converged={prediction.converged} "
        f"residual={fileio.fmt_float(prediction.residual)}"
    )
    if args.truth:
        truth = fileio.load_labels(args.truth)
        y = _truth_vector(truth, graph.node_count)
        metrics = evaluation.evaluate(prediction, y, args.epsilon)
        metrics_path = args.metrics_output or args.output + ".metrics.json"
        fileio.write_json(metrics.to_dict(), metrics_path)
        print(f"wrote {metrics_path}")
    return 0


def cmd_analyze(args) -> int:
    graph = _load_graph_input(args)
    labels = fileio.load_labels(args.labels)
    labels.validate_against(graph.node_count)
    truth = fileio.load_labels(args.truth)
    y = _truth_vector(truth, graph.node_count)
    config = _solver_config(args)

    if args.votes:
        votes = fileio.load_votes(args.votes)
        if votes.node_count != graph.node_count:
            raise ValueError("vote matrix does not match graph size")
        alpha = _alpha_from_args(args, graph, votes, labels)
        prior = multisource.reduce_to_single_prior(votes, alpha)
    else:
        prior = PriorField.constant(graph.node_count, h=0.5, mu=args.mu)

    partition = compute_neighborhoods(graph, labels)
    bound = compute_bound(graph, y, prior, partition, config)
    prediction = solve_with_prior(graph, labels, prior, config)
    audit = audit_inequalities(graph, y, prior, prediction, partition)
    soft = solve_soft(graph, labels, args.eta)
    full = None
    if args.full_t is not None or args.full_m is not None or args.full_k is not None:
        full = (args.full_t or 1, args.full_m or 1.0, args.full_k or 1.0)
    spectral = spectral_bound(graph, soft, labels, y, args.eta, args.delta, full)

    report = {
        "bound_report": bound.to_dict(),
        "audit": audit.to_dict(),
        "spectral_report": spectral.to_dict(),
    }
    fileio.write_json(report, args.output)
    print(f"wrote {args.output}: audit_passed={audit.passed} spectral_finite={spectral.finite}")
    return 0


def cmd_demo(args) -> int:
    spec = evaluation.SyntheticSpec(
        cluster_count=args.clusters,
        points_per_cluster=args.points_per_cluster,
        separation=args.separation,
        dimension=args.dimension,
        noise_scale=args.noise,
        labeler_accuracies=tuple(float(v) for v in args.accuracies.split(",")),
        labeler_coverages=tuple(float(v) for v in args.coverages.split(",")),
        seed=args.seed,
        labeled_count=args.labeled,
        graph_degree_target=args.t,
        mu=args.mu,
        epsilon=args.epsilon,
    )
    methods = tuple(m.strip() for m in args.methods.split(","))
    report = evaluation.pipeline_report(spec, methods, with_bounds=not args.no_bounds)
    fileio.write_json(report.to_dict(), args.output)
    print(report.to_text())
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorprop",
        description="Label propagation with priors, weak-labeler fusion and bound diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build a distance-threshold graph from features")
    p.add_argument("--features", required=True, help="feature matrix file")
    p.add_argument("--t", type=float, required=True, help="average-degree target")
    p.add_argument("--output", required=True, help="edge-list output path")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("propagate", help="solve a propagation problem and write scores")
    _add_graph_inputs(p)
    p.add_argument("--labels", required=True, help="labeled-node file")
    p.add_argument("--mu", type=float, default=0.0, help="constant prior pull toward 0.5")
    p.add_argument("--eta", type=float, help="soft-constraint weight (selects the soft solve)")
    p.add_argument("--votes", help="weak-vote matrix file (selects the multi-source solve)")
    p.add_argument("--accuracies", help="estimated labeler accuracies file")
    p.add_argument(
        "--alpha-scheme",
        choices=multisource.ALPHA_SCHEMES,
        default="accuracy",
        help="trust-weight scheme for --votes",
    )
    p.add_argument("--alpha-constant", type=float, default=1.0)
    p.add_argument("--k-neighbors", type=int, default=10)
    p.add_argument("--truth", help="full ground-truth labels (enables metrics output)")
    p.add_argument("--epsilon", type=float, default=evaluation.DEFAULT_EPSILON)
    _add_solver_flags(p)
    p.add_argument("--output", required=True, help="prediction output path")
    p.add_argument("--metrics-output", help="metrics JSON path (default: <output>.metrics.json)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("analyze", help="bound, audit and spectral reports (needs full truth)")
    _add_graph_inputs(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True, help="full ground-truth labels")
    p.add_argument("--mu", type=float, default=1.0, help="constant prior weight when no votes")
    p.add_argument("--votes")
    p.add_argument("--accuracies")
    p.add_argument("--alpha-scheme", choices=multisource.ALPHA_SCHEMES, default="accuracy")
    p.add_argument("--alpha-constant", type=float, default=1.0)
    p.add_argument("--k-neighbors", type=int, default=10)
    p.add_argument("--eta", type=float, default=0.01, help="soft weight for the spectral part")
    p.add_argument("--delta", type=float, default=0.1, help="confidence parameter")
    p.add_argument("--full-t", type=int, help="full spectral variant: multiplicity bound t")
    p.add_argument("--full-m", type=float, help="full spectral variant: label magnitude M")
    p.add_argument("--full-k", type=float, help="full spectral variant: score magnitude K")
    _add_solver_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("demo", help="synthetic end-to-end comparison table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--points-per-cluster", type=int, default=250)
    p.add_argument("--separation", type=float, default=100.0)
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--accuracies", default="0.8,0.8,0.8")
    p.add_argument("--coverages", default="0.6,0.6,0.6")
    p.add_argument("--labeled", type=int, default=100)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=evaluation.DEFAULT_EPSILON)
    p.add_argument("--methods", default=",".join(evaluation.PIPELINE_METHODS))
    p.add_argument("--no-bounds", action="store_true", help="skip per-method bound reports")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
