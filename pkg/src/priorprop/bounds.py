"""Per-hop flow, smoothness and error diagnostics, and the certified bound.

For the hop layering ``N_0 (labeled), N_1, ..., N_l`` around the labeled set,
this module measures, per hop k:

* flows: in-flow (edge weight to hop k-1), between-flow (within hop k, ordered
  pairs, so each within-hop edge counts twice) and out-flow (to hop k+1);
* Dirichlet conductance ``(in + out) / (in + between + out)``;
* smoothness ``s_k``: total weighted true-label disagreement on edges at hop k;
* prior error ``alpha_k``: mean |h - y| over the hop;
* solution errors: average, in-/between-/out-flow weighted, and the ratios
  ``a_k`` (in/avg), ``b_k`` (out/avg) with ``delta_k = b_k / a_k``.

From flows, smoothness and prior error alone it assembles

    c_k = (s_k + sum_{i in hop} mu_i |h_i - y_i|) / (in_k + sum mu_i)
    gamma_k = out_k / (in_k + sum mu_i)
    d_k = c_k + gamma_k d_{k+1}          (d_l = c_l)

giving the informal per-hop bound ``sum_{i<=k} d_i`` and, with the measured
ratios, the certified bound ``(1/a_k) sum_{i<=k} d_i prod_{j=i}^{k-1} delta_j``
on the hop's average error. ``audit_inequalities`` numerically re-checks the
chain of per-node and per-hop inequalities this bound rests on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from priorprop.graph import Graph, LabelSet, NeighborhoodPartition
from priorprop.solver import Prediction, PriorField, SolverConfig, solve_with_prior

BETWEEN_FLOW_CONVENTION = "ordered-pairs (each within-hop edge counted twice)"


def _as_truth(true_labels_full, node_count: int) -> np.ndarray:
    y = np.asarray(true_labels_full)
    if y.shape != (node_count,):
        raise ValueError("true labels must cover every node")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("true labels must be 0 or 1")
    return y.astype(np.float64)


def _scores(prediction) -> np.ndarray:
    if isinstance(prediction, Prediction):
        return prediction.f
    return np.asarray(prediction, dtype=np.float64)


def _directional_weights(
    graph: Graph, partition: NeighborhoodPartition
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node edge weight going one hop in, within the hop, one hop out."""
    hop_of = partition.hop_of
    rows = np.repeat(np.arange(graph.node_count), np.diff(graph.indptr))
    row_hops = hop_of[rows]
    nbr_hops = hop_of[graph.indices]
    reachable = (row_hops >= 0) & (nbr_hops >= 0)
    inw = np.zeros(graph.node_count)
    betw = np.zeros(graph.node_count)
    outw = np.zeros(graph.node_count)
    for target, arr in ((-1, inw), (0, betw), (1, outw)):
        mask = reachable & (nbr_hops == row_hops + target)
        np.add.at(arr, rows[mask], graph.weights[mask])
    return inw, betw, outw


@dataclass(frozen=True, eq=False)
class FlowProfile:
    """Per-hop flows, indexed by hop (index 0 = labeled set).

    ``out_flow[k]`` is stored as ``in_flow[k+1]``; the two are the same
    edge-boundary sum, so the identity between them holds exactly.
    ``out_flow[l]`` is 0: the last hop has nowhere to flow to.
    """

    in_flow: np.ndarray
    between_flow: np.ndarray
    out_flow: np.ndarray
    sizes: np.ndarray

    @property
    def max_hop(self) -> int:
        return int(self.sizes.size - 1)


def compute_flows(graph: Graph, partition: NeighborhoodPartition) -> FlowProfile:
    partition.validate_against(graph)
    l = partition.max_hop
    inw, betw, _ = _directional_weights(graph, partition)
    in_flow = np.zeros(l + 1)
    between = np.zeros(l + 1)
    for k in range(l + 1):
        nodes = partition.hops[k]
        if k >= 1:
            in_flow[k] = float(np.sum(inw[nodes]))
        between[k] = float(np.sum(betw[nodes]))
    out_flow = np.zeros(l + 1)
    out_flow[:l] = in_flow[1 : l + 1]
    sizes = np.array([h.size for h in partition.hops], dtype=np.int64)
    return FlowProfile(in_flow=in_flow, between_flow=between, out_flow=out_flow, sizes=sizes)


def conductance(flows: FlowProfile, k: int) -> float | None:
    """Fraction of hop k's incident edge weight that crosses its boundary.

    None (missing) for a hop with no incident edges at all.
    """
    denom = flows.in_flow[k] + flows.between_flow[k] + flows.out_flow[k]
    if denom <= 0:
        return None
    return float((flows.in_flow[k] + flows.out_flow[k]) / denom)


def gamma(flows: FlowProfile, mu_total_k: float, k: int) -> float:
    """Out-flow over (in-flow plus total prior weight) at hop k."""
    denom = flows.in_flow[k] + mu_total_k
    if denom <= 0:
        raise ValueError(f"hop {k} has zero in-flow and zero prior weight")
    return float(flows.out_flow[k] / denom)


def smoothness(
    graph: Graph, true_labels_full, partition: NeighborhoodPartition, k: int
) -> float:
    """Total weighted true-label disagreement on edges incident to hop k."""
    y = _as_truth(true_labels_full, graph.node_count)
    total = 0.0
    for i in partition.hops[k]:
        nbrs, w = graph.neighbors(int(i))
        total += float(np.sum(w * np.abs(y[nbrs] - y[i])))
    return total


def prior_error(
    prior: PriorField, true_labels_full, partition: NeighborhoodPartition, k: int
) -> float:
    """Mean |h - y| over hop k."""
    y = _as_truth(true_labels_full, prior.node_count)
    nodes = partition.hops[k]
    if nodes.size == 0:
        raise ValueError(f"hop {k} is empty")
    return float(np.mean(np.abs(prior.h[nodes] - y[nodes])))


@dataclass(frozen=True, eq=False)
class HopErrors:
    """Measured solution errors per hop; nan marks undefined entries."""

    avg: np.ndarray
    in_err: np.ndarray
    between_err: np.ndarray
    out_err: np.ndarray
    in_ratio: np.ndarray
    out_ratio: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.out_ratio / self.in_ratio


def neighborhood_errors(
    graph: Graph, prediction, true_labels_full, partition: NeighborhoodPartition
) -> HopErrors:
    """Average and flow-weighted errors of a prediction, hop by hop.

    The in-/between-/out-errors are flow-weighted averages of |f - y| over the
    hop's nodes, weighting each node by its edge weight in the corresponding
    direction. Ratios ``a_k = in/avg`` and ``b_k = out/avg`` are nan wherever
    the hop's average error is zero or the corresponding flow is zero.
    """
    f = _scores(prediction)
    y = _as_truth(true_labels_full, graph.node_count)
    if f.shape != y.shape:
        raise ValueError("prediction does not cover every node")
    partition.validate_against(graph)
    err = np.abs(f - y)
    inw, betw, outw = _directional_weights(graph, partition)
    l = partition.max_hop

    avg = np.zeros(l + 1)
    e_in = np.full(l + 1, np.nan)
    e_bet = np.full(l + 1, np.nan)
    e_out = np.full(l + 1, np.nan)
    for k in range(l + 1):
        nodes = partition.hops[k]
        avg[k] = float(np.mean(err[nodes]))
        for wvec, store in ((inw, e_in), (betw, e_bet), (outw, e_out)):
            flow = float(np.sum(wvec[nodes]))
            if flow > 0:
                store[k] = float(np.sum(wvec[nodes] * err[nodes])) / flow
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(avg > 0, e_in / avg, np.nan)
        b = np.where(avg > 0, e_out / avg, np.nan)
    return HopErrors(avg=avg, in_err=e_in, between_err=e_bet, out_err=e_out, in_ratio=a, out_ratio=b)


def _none_if_nan(x: float | None) -> float | None:
    if x is None:
        return None
    x = float(x)
    return None if np.isnan(x) else x


@dataclass(frozen=True, eq=False)
class HopRecord:
    hop: int
    size: int
    in_flow: float
    between_flow: float
    out_flow: float
    conductance: float | None
    mu_total: float
    smoothness: float
    prior_error: float
    gamma: float
    local_term: float
    accumulated_term: float
    informal_bound: float
    avg_error: float
    in_error: float | None
    between_error: float | None
    out_error: float | None
    in_error_ratio: float | None
    out_error_ratio: float | None
    error_ratio: float | None
    certified_bound: float
    bound_source: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "hop": self.hop,
            "size": self.size,
            "in_flow": self.in_flow,
            "between_flow": self.between_flow,
            "out_flow": self.out_flow,
            "conductance": _none_if_nan(self.conductance),
            "mu_total": self.mu_total,
            "smoothness": self.smoothness,
            "prior_error": self.prior_error,
            "gamma": self.gamma,
            "local_term": self.local_term,
            "accumulated_term": self.accumulated_term,
            "informal_bound": self.informal_bound,
            "avg_error": self.avg_error,
            "in_error": _none_if_nan(self.in_error),
            "between_error": _none_if_nan(self.between_error),
            "out_error": _none_if_nan(self.out_error),
            "in_error_ratio": _none_if_nan(self.in_error_ratio),
            "out_error_ratio": _none_if_nan(self.out_error_ratio),
            "error_ratio": _none_if_nan(self.error_ratio),
            "certified_bound": self.certified_bound,
            "bound_source": self.bound_source,
        }


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Bound ingredients and measured errors for every hop, plus globals."""

    hops: tuple[HopRecord, ...]
    labeled_count: int
    unreachable_count: int
    mu_constant: float | None
    solver_method: str
    solver_residual: float
    ratio_min: float | None
    ratio_max: float | None

    def hop(self, k: int) -> HopRecord:
        return self.hops[k - 1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "labeled_count": self.labeled_count,
            "unreachable_count": self.unreachable_count,
            "mu_constant": self.mu_constant,
            "solver_method": self.solver_method,
            "solver_residual": self.solver_residual,
            "error_ratio_min": _none_if_nan(self.ratio_min),
            "error_ratio_max": _none_if_nan(self.ratio_max),
            "between_flow_convention": BETWEEN_FLOW_CONVENTION,
            "hops": [h.to_dict() for h in self.hops],
        }


def compute_bound(
    graph: Graph,
    true_labels_full,
    prior: PriorField,
    partition: NeighborhoodPartition,
    config: SolverConfig | None = None,
) -> BoundReport:
    """Assemble the per-hop error bound and measure the solved errors.

    The bound terms (``c``, ``gamma``, ``d``, informal bound) use only flows,
    smoothness and prior error. The certified bound additionally uses the
    measured error ratios of the internally solved optimum; at hops where a
    needed ratio is undefined (zero average error somewhere in the chain) it
    falls back to the informal bound and says so in ``bound_source``.
    """
    y = _as_truth(true_labels_full, graph.node_count)
    partition.validate_against(graph)
    labels = LabelSet(partition.hops[0], y[partition.hops[0]].astype(np.int8))
    prediction = solve_with_prior(graph, labels, prior, config)

    flows = compute_flows(graph, partition)
    errors = neighborhood_errors(graph, prediction, y, partition)
    l = partition.max_hop

    mu_total = np.zeros(l + 1)
    pull_error = np.zeros(l + 1)
    s = np.zeros(l + 1)
    a_err = np.zeros(l + 1)
    for k in range(1, l + 1):
        nodes = partition.hops[k]
        mu_total[k] = float(np.sum(prior.mu[nodes]))
        pull_error[k] = float(np.sum(prior.mu[nodes] * np.abs(prior.h[nodes] - y[nodes])))
        s[k] = smoothness(graph, y, partition, k)
        a_err[k] = prior_error(prior, y, partition, k)

    c = np.zeros(l + 1)
    gam = np.zeros(l + 1)
    for k in range(1, l + 1):
        denom = flows.in_flow[k] + mu_total[k]
        if denom <= 0:
            raise ValueError(f"hop {k} has zero in-flow and zero prior weight")
        c[k] = (s[k] + pull_error[k]) / denom
        gam[k] = flows.out_flow[k] / denom

    d = np.zeros(l + 1)
    for k in range(l, 0, -1):
        d[k] = c[k] + (gam[k] * d[k + 1] if k < l else 0.0)
    informal = np.cumsum(d)

    delta = errors.delta
    records = []
    for k in range(1, l + 1):
        a_k = errors.in_ratio[k]
        chain_ok = np.isfinite(a_k) and np.all(np.isfinite(delta[1:k]))
        if chain_ok:
            total = 0.0
            prod = 1.0
            for i in range(k, 0, -1):
                total += d[i] * prod
                if i > 1:
                    prod *= delta[i - 1]
            certified = float(total / a_k)
            source = "measured"
        else:
            certified = float(informal[k])
            source = "informal_fallback"
        records.append(
            HopRecord(
                hop=k,
                size=int(flows.sizes[k]),
                in_flow=float(flows.in_flow[k]),
                between_flow=float(flows.between_flow[k]),
                out_flow=float(flows.out_flow[k]),
                conductance=conductance(flows, k),
                mu_total=float(mu_total[k]),
                smoothness=float(s[k]),
                prior_error=float(a_err[k]),
                gamma=float(gam[k]),
                local_term=float(c[k]),
                accumulated_term=float(d[k]),
                informal_bound=float(informal[k]),
                avg_error=float(errors.avg[k]),
                in_error=float(errors.in_err[k]),
                between_error=float(errors.between_err[k]),
                out_error=float(errors.out_err[k]),
                in_error_ratio=float(errors.in_ratio[k]),
                out_error_ratio=float(errors.out_ratio[k]),
                error_ratio=float(delta[k]),
                certified_bound=certified,
                bound_source=source,
            )
        )

    mu_vals = prior.mu
    mu_constant = float(mu_vals[0]) if mu_vals.size and np.all(mu_vals == mu_vals[0]) else None
    ratios = np.concatenate([errors.in_ratio[1:], errors.out_ratio[1:]])
    ratios = ratios[np.isfinite(ratios)]
    return BoundReport(
        hops=tuple(records),
        labeled_count=int(partition.hops[0].size),
        unreachable_count=int(partition.unreachable.size),
        mu_constant=mu_constant,
        solver_method=prediction.method,
        solver_residual=prediction.residual,
        ratio_min=float(ratios.min()) if ratios.size else None,
        ratio_max=float(ratios.max()) if ratios.size else None,
    )


@dataclass(frozen=True, eq=False)
class AuditCheck:
    family: str
    location: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True, eq=False)
class AuditReport:
    passed: bool
    slack: float
    checks: tuple[AuditCheck, ...]

    def failures(self) -> list[AuditCheck]:
        return [c for c in self.checks if not c.passed]

    def worst_by_family(self) -> dict[str, AuditCheck]:
        worst: dict[str, AuditCheck] = {}
        for c in self.checks:
            if c.family not in worst or c.margin < worst[c.family].margin:
                worst[c.family] = c
        return worst

    def to_dict(self) -> dict[str, Any]:
        families: dict[str, dict[str, Any]] = {}
        for c in self.checks:
            fam = families.setdefault(
                c.family, {"count": 0, "failed": 0, "worst_margin": None, "worst_at": None}
            )
            fam["count"] += 1
            if not c.passed:
                fam["failed"] += 1
            if fam["worst_margin"] is None or c.margin < fam["worst_margin"]:
                fam["worst_margin"] = c.margin
                fam["worst_at"] = c.location
        return {
            "passed": self.passed,
            "slack": self.slack,
            "families": families,
            "failures": [
                {"family": c.family, "at": c.location, "lhs": c.lhs, "rhs": c.rhs}
                for c in self.failures()
            ],
        }


def audit_inequalities(
    graph: Graph,
    true_labels_full,
    prior: PriorField,
    prediction,
    partition: NeighborhoodPartition,
    slack: float = 1e-6,
) -> AuditReport:
    """Numerically verify the inequality chain behind the certified bound.

    Checks, each allowed ``slack`` of violation:

    * ``node_error``: per unlabeled reachable node, its error is at most the
      prior/label-weighted average of its neighbors' errors plus the local
      smoothness and prior-error terms;
    * ``hop_transfer`` / ``hop_transfer_last``: the per-hop error-difference
      inequalities obtained by summing the node inequality over a hop;
    * ``ratio_transfer`` / ``ratio_transfer_last``: the same inequalities
      rewritten with the measured in/out error ratios (skipped at hops where
      a needed ratio is undefined).

    These hold at any exact optimum; failures indicate the prediction is not
    the optimum (or was perturbed).
    """
    f = _scores(prediction)
    y = _as_truth(true_labels_full, graph.node_count)
    partition.validate_against(graph)
    err = np.abs(f - y)
    hop_of = partition.hop_of
    l = partition.max_hop
    checks: list[AuditCheck] = []

    for k in range(1, l + 1):
        for i in partition.hops[k]:
            i = int(i)
            nbrs, w = graph.neighbors(i)
            denom = float(np.sum(w)) + prior.mu[i]
            lhs = err[i]
            rhs = (
                float(np.sum(w * err[nbrs]))
                + float(np.sum(w * np.abs(y[nbrs] - y[i])))
                + prior.mu[i] * abs(prior.h[i] - y[i])
            ) / denom
            checks.append(
                AuditCheck("node_error", f"node {i}", float(lhs), float(rhs), lhs <= rhs + slack)
            )

    flows = compute_flows(graph, partition)
    errors = neighborhood_errors(graph, f, y, partition)
    mu_err = np.zeros(l + 1)
    pull_error = np.zeros(l + 1)
    s = np.zeros(l + 1)
    for k in range(1, l + 1):
        nodes = partition.hops[k]
        mu_err[k] = float(np.sum(prior.mu[nodes] * err[nodes]))
        pull_error[k] = float(np.sum(prior.mu[nodes] * np.abs(prior.h[nodes] - y[nodes])))
        s[k] = smoothness(graph, y, partition, k)

    def out_err(k: int) -> float:
        # E_out(0) is exactly 0: labeled nodes carry no error
        if k == 0:
            return 0.0
        v = errors.out_err[k]
        return float(v)

    for k in range(1, l):
        lhs = flows.in_flow[k] * (errors.in_err[k] - out_err(k - 1)) + mu_err[k]
        rhs = (
            flows.out_flow[k] * (errors.in_err[k + 1] - out_err(k))
            + s[k]
            + pull_error[k]
        )
        checks.append(
            AuditCheck("hop_transfer", f"hop {k}", float(lhs), float(rhs), lhs <= rhs + slack)
        )
    if l >= 1:
        lhs = flows.in_flow[l] * (errors.in_err[l] - out_err(l - 1)) + mu_err[l]
        rhs = s[l] + pull_error[l]
        checks.append(
            AuditCheck("hop_transfer_last", f"hop {l}", float(lhs), float(rhs), lhs <= rhs + slack)
        )

    mu_total = np.array(
        [float(np.sum(prior.mu[partition.hops[k]])) for k in range(l + 1)]
    )
    a, b, e = errors.in_ratio, errors.out_ratio, errors.avg

    def ratio_term(k: int) -> float | None:
        # b_0 E_0 is exactly 0; elsewhere nan-propagates
        if k == 0:
            return 0.0
        v = b[k] * e[k]
        return None if np.isnan(v) else float(v)

    for k in range(1, l):
        prev = ratio_term(k - 1)
        cur = ratio_term(k)
        needed = (a[k], a[k + 1])
        if prev is None or cur is None or any(np.isnan(v) for v in needed):
            continue
        denom = flows.in_flow[k] + mu_total[k]
        c_k = (s[k] + pull_error[k]) / denom
        gam_k = flows.out_flow[k] / denom
        lhs = a[k] * e[k] - prev
        rhs = gam_k * (a[k + 1] * e[k + 1] - cur) + c_k
        checks.append(
            AuditCheck("ratio_transfer", f"hop {k}", float(lhs), float(rhs), lhs <= rhs + slack)
        )
    if l >= 1:
        prev = ratio_term(l - 1)
        if prev is not None and not np.isnan(a[l]):
            denom = flows.in_flow[l] + mu_total[l]
            c_l = (s[l] + pull_error[l]) / denom
            lhs = a[l] * e[l] - prev
            checks.append(
                AuditCheck(
                    "ratio_transfer_last", f"hop {l}", float(lhs), float(c_l), lhs <= c_l + slack
                )
            )

    return AuditReport(passed=all(c.passed for c in checks), slack=slack, checks=tuple(checks))
