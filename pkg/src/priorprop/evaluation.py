"""Scoring, synthetic data, and the multi-method comparison pipeline.

A node *abstains* when its score is within ``epsilon`` of 0.5; abstentions
earn half credit, so

    accuracy = coverage * non_abstain_accuracy + (1 - coverage) * 0.5

holds exactly (accuracy is computed through this identity). The synthetic
generators produce Gaussian cluster data and independent noisy labelers for
desk-scale experiments; everything is deterministic under the spec seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from priorprop import multisource
from priorprop.bounds import BoundReport, compute_bound
from priorprop.graph import LabelSet, build_threshold_graph, compute_neighborhoods
from priorprop.multisource import (
    ABSTAIN,
    AlphaAssignment,
    LabelerAccuracy,
    WeakVoteMatrix,
    estimate_accuracy_from_labeled,
    reduce_to_single_prior,
    solve_multi_source,
)
from priorprop.solver import Prediction, PriorField, SolverConfig, solve_standard, solve_with_prior

DEFAULT_EPSILON = 1e-3

PIPELINE_METHODS = (
    "lpa",
    "wl",
    "lpa+wl",
    "lpad:accuracy",
    "lpad:boosting",
    "lpad:probabilistic",
    "lpad:constant",
    "lpad:oracle",
)


@dataclass(frozen=True, eq=False)
class Metrics:
    """Half-credit accuracy, coverage and non-abstain accuracy."""

    accuracy: float
    coverage: float
    non_abstain_accuracy: float
    abstain_epsilon: float
    node_count: int
    abstain_count: int
    correct_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "coverage": self.coverage,
            "non_abstain_accuracy": self.non_abstain_accuracy,
            "abstain_epsilon": self.abstain_epsilon,
            "node_count": self.node_count,
            "abstain_count": self.abstain_count,
            "correct_count": self.correct_count,
        }


def evaluate(prediction, true_labels_full, epsilon: float = DEFAULT_EPSILON) -> Metrics:
    """Score a prediction against full ground truth.

    A node abstains iff ``|f - 0.5| <= epsilon``; a non-abstaining node is
    correct iff its score is on the true label's side of 0.5.
    """
    epsilon = float(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    f = prediction.f if isinstance(prediction, Prediction) else np.asarray(prediction, float)
    y = np.asarray(true_labels_full)
    if f.shape != y.shape:
        raise ValueError("prediction and truth sizes differ")
    total = int(f.size)
    abstain = np.abs(f - 0.5) <= epsilon
    voted = ~abstain
    correct = voted & ((f > 0.5) == (y == 1))
    n_voted = int(voted.sum())
    n_correct = int(correct.sum())
    coverage = n_voted / total
    na_acc = n_correct / n_voted if n_voted else 0.5
    accuracy = coverage * na_acc + (1.0 - coverage) * 0.5
    return Metrics(
        accuracy=accuracy,
        coverage=coverage,
        non_abstain_accuracy=na_acc,
        abstain_epsilon=epsilon,
        node_count=total,
        abstain_count=total - n_voted,
        correct_count=n_correct,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic clustered instance with noisy labelers."""

    cluster_count: int = 2
    points_per_cluster: int = 250
    separation: float = 100.0
    dimension: int = 2
    noise_scale: float = 1.0
    labeler_accuracies: tuple[float, ...] = (0.8, 0.8, 0.8)
    labeler_coverages: tuple[float, ...] = (0.6, 0.6, 0.6)
    seed: int = 0
    labeled_count: int = 100
    graph_degree_target: float = 10.0
    mu: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.cluster_count < 1 or self.points_per_cluster < 1 or self.dimension < 1:
            raise ValueError("cluster_count, points_per_cluster and dimension must be positive")
        if self.separation <= 0 or self.noise_scale < 0:
            raise ValueError("separation must be positive, noise_scale non-negative")
        if len(self.labeler_accuracies) != len(self.labeler_coverages):
            raise ValueError("one coverage per accuracy required")
        if not all(0 < a < 1 for a in self.labeler_accuracies):
            raise ValueError("labeler accuracies must lie in (0, 1)")
        if not all(0 <= c <= 1 for c in self.labeler_coverages):
            raise ValueError("labeler coverages must lie in [0, 1]")
        n = self.cluster_count * self.points_per_cluster
        if not (1 <= self.labeled_count <= n):
            raise ValueError("labeled_count must be between 1 and the point count")
        if self.graph_degree_target <= 0 or self.mu < 0 or self.epsilon < 0:
            raise ValueError("invalid graph/evaluation parameters")

    @property
    def node_count(self) -> int:
        return self.cluster_count * self.points_per_cluster


def generate_clusters(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian blobs on a line; cluster classes alternate 0/1."""
    rng = np.random.default_rng(spec.seed)
    feats = []
    labels = []
    for c in range(spec.cluster_count):
        center = np.zeros(spec.dimension)
        center[0] = c * spec.separation
        pts = center + spec.noise_scale * rng.standard_normal(
            (spec.points_per_cluster, spec.dimension)
        )
        feats.append(pts)
        labels.append(np.full(spec.points_per_cluster, c % 2, dtype=np.int8))
    return np.vstack(feats), np.concatenate(labels)


def generate_weak_labelers(
    true_labels_full, accuracies: Sequence[float], coverages: Sequence[float], seed
) -> WeakVoteMatrix:
    """Independent labelers: vote with prob. coverage, correct with prob. accuracy."""
    y = np.asarray(true_labels_full)
    acc = np.asarray(accuracies, dtype=np.float64)
    cov = np.asarray(coverages, dtype=np.float64)
    if acc.shape != cov.shape or acc.ndim != 1 or acc.size < 1:
        raise ValueError("accuracies and coverages must be equal-length 1-D sequences")
    if np.any(acc <= 0) or np.any(acc >= 1) or np.any(cov < 0) or np.any(cov > 1):
        raise ValueError("accuracies in (0,1), coverages in [0,1] required")
    rng = np.random.default_rng(seed)
    n, k = y.size, acc.size
    votes = np.full((n, k), ABSTAIN, dtype=np.int8)
    for j in range(k):
        cast = rng.random(n) < cov[j]
        correct = rng.random(n) < acc[j]
        col = np.where(correct, y, 1 - y).astype(np.int8)
        votes[cast, j] = col[cast]
    return WeakVoteMatrix(votes)


def _select_labeled(y: np.ndarray, count: int, seed) -> LabelSet:
    """Class-balanced labeled subset, deterministic under the seed."""
    rng = np.random.default_rng(seed)
    picks = []
    per_class = [count - count // 2, count // 2]
    for c, want in enumerate(per_class):
        pool = np.flatnonzero(y == c)
        if pool.size < want:
            raise ValueError("not enough points in a class to label")
        picks.append(rng.permutation(pool)[:want])
    idx = np.sort(np.concatenate(picks))
    return LabelSet(idx, y[idx])


@dataclass(frozen=True, eq=False)
class MethodResult:
    method: str
    metrics: Metrics
    bound: BoundReport | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "metrics": self.metrics.to_dict(),
            "bound_report": self.bound.to_dict() if self.bound is not None else None,
        }


@dataclass(frozen=True, eq=False)
class PipelineReport:
    spec: SyntheticSpec
    results: tuple[MethodResult, ...]

    def result(self, method: str) -> MethodResult:
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self) -> dict[str, Any]:
        spec_dict = {
            "cluster_count": self.spec.cluster_count,
            "points_per_cluster": self.spec.points_per_cluster,
            "separation": self.spec.separation,
            "dimension": self.spec.dimension,
            "noise_scale": self.spec.noise_scale,
            "labeler_accuracies": list(self.spec.labeler_accuracies),
            "labeler_coverages": list(self.spec.labeler_coverages),
            "seed": self.spec.seed,
            "labeled_count": self.spec.labeled_count,
            "graph_degree_target": self.spec.graph_degree_target,
            "mu": self.spec.mu,
            "epsilon": self.spec.epsilon,
        }
        return {"spec": spec_dict, "results": [r.to_dict() for r in self.results]}

    def to_text(self) -> str:
        header = f"{'method':<20} {'accuracy':>10} {'coverage':>10} {'na_accuracy':>12}"
        lines = [header, "-" * len(header)]
        for r in self.results:
            m = r.metrics
            lines.append(
                f"{r.method:<20} {m.accuracy:>10.4f} {m.coverage:>10.4f} "
                f"{m.non_abstain_accuracy:>12.4f}"
            )
        return "\n".join(lines)


def _alpha_for_scheme(
    scheme: str,
    votes: WeakVoteMatrix,
    features: np.ndarray,
    labels: LabelSet,
    truth: np.ndarray,
    acc: LabelerAccuracy,
    constant: float = 1.0,
    k_neighbors: int = 10,
) -> AlphaAssignment:
    if scheme == "accuracy":
        return multisource.alpha_accuracy(votes, acc)
    if scheme == "boosting":
        return multisource.alpha_boosting(votes, acc)
    if scheme == "probabilistic":
        return multisource.alpha_probabilistic(votes, features, labels, k_neighbors)
    if scheme == "constant":
        return multisource.alpha_constant(votes, constant)
    if scheme == "oracle":
        return multisource.alpha_oracle(votes, truth)
    raise ValueError(f"unknown alpha scheme {scheme!r}")


def pipeline_report(
    spec: SyntheticSpec,
    methods: Sequence[str] = PIPELINE_METHODS,
    with_bounds: bool = True,
) -> PipelineReport:
    """Run the requested methods on one synthetic instance and score them.

    ``wl`` is the weighted-vote prior evaluated directly (no propagation);
    ``lpa+wl`` propagates with that prior at constant ``spec.mu``; ``lpad:*``
    methods propagate on the anchor-augmented graph with the named trust
    scheme. Bound reports are attached to every propagation method.
    """
    for m in methods:
        if m not in PIPELINE_METHODS:
            raise ValueError(f"unknown method {m!r}")
    features, truth = generate_clusters(spec)
    votes = generate_weak_labelers(
        truth, spec.labeler_accuracies, spec.labeler_coverages, spec.seed + 1_000_003
    )
    labels = _select_labeled(truth, spec.labeled_count, spec.seed + 2_000_003)
    graph = build_threshold_graph(features, spec.graph_degree_target)
    partition = compute_neighborhoods(graph, labels)
    acc = estimate_accuracy_from_labeled(votes, labels)
    wl_prior = reduce_to_single_prior(votes, multisource.alpha_accuracy(votes, acc))
    config = SolverConfig()

    results = []
    for method in methods:
        bound_prior: PriorField | None
        if method == "lpa":
            pred = solve_standard(graph, labels, config)
            scores = pred.f
            bound_prior = PriorField.constant(graph.node_count)
        elif method == "wl":
            scores = wl_prior.h
            bound_prior = None
        elif method == "lpa+wl":
            prior = PriorField(wl_prior.h, np.full(graph.node_count, spec.mu))
            pred = solve_with_prior(graph, labels, prior, config)
            scores = pred.f
            bound_prior = prior
        else:
            scheme = method.split(":", 1)[1]
            alpha = _alpha_for_scheme(scheme, votes, features, labels, truth, acc)
            pred = solve_multi_source(graph, labels, votes, alpha, config)
            scores = pred.f
            bound_prior = reduce_to_single_prior(votes, alpha)
        metrics = evaluate(scores, truth, spec.epsilon)
        bound = None
        if with_bounds and bound_prior is not None:
            bound = compute_bound(graph, truth, bound_prior, partition, config)
        results.append(MethodResult(method=method, metrics=metrics, bound=bound))
    return PipelineReport(spec=spec, results=tuple(results))
