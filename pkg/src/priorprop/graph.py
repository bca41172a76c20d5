"""Sparse symmetric similarity graphs and their hop decomposition.

The graph is stored as a CSR adjacency structure with sorted neighbor lists,
so every traversal is deterministic. Instances are immutable after
construction; reads are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist


class GraphFormatError(ValueError):
    """Malformed, asymmetric, self-looped or negatively weighted edge data."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, non-negatively weighted graph over ``node_count`` nodes.

    ``indptr``/``indices``/``weights`` form a CSR adjacency in which every
    undirected edge appears in both endpoint rows and neighbor ids are sorted
    within each row. ``degrees`` caches the per-node weighted degree and is
    always equal to the recomputed row sums.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_edges(
        cls, node_count: int, edges: Iterable[tuple[int, int, float]]
    ) -> "Graph":
        """Build a graph from undirected ``(i, j, w)`` records.

        Each undirected edge may be listed once in either orientation (or in
        both, with equal weight). Self-loops, negative or non-finite weights,
        out-of-range indices and conflicting duplicate weights are rejected.
        Zero-weight records are dropped: they contribute nothing to any
        propagation or flow formula.
        """
        if node_count < 1:
            raise GraphFormatError("node_count must be positive")
        canonical: dict[tuple[int, int], float] = {}
        for rec in edges:
            try:
                i, j, w = rec
                i, j, w = int(i), int(j), float(w)
            except (TypeError, ValueError) as exc:
                raise GraphFormatError(f"malformed edge record {rec!r}") from exc
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise GraphFormatError(f"edge ({i}, {j}) out of range for {node_count} nodes")
            if i == j:
                raise GraphFormatError(f"self-loop on node {i}")
            if not np.isfinite(w) or w < 0:
                raise GraphFormatError(f"edge ({i}, {j}) has invalid weight {w}")
            key = (i, j) if i < j else (j, i)
            if key in canonical:
                if canonical[key] != w:
                    raise GraphFormatError(
                        f"conflicting weights {canonical[key]} and {w} for edge {key}"
                    )
                continue
            if w == 0.0:
                continue
            canonical[key] = w

        m = len(canonical)
        rows = np.empty(2 * m, dtype=np.int64)
        cols = np.empty(2 * m, dtype=np.int64)
        vals = np.empty(2 * m, dtype=np.float64)
        for pos, ((i, j), w) in enumerate(canonical.items()):
            rows[2 * pos], cols[2 * pos], vals[2 * pos] = i, j, w
            rows[2 * pos + 1], cols[2 * pos + 1], vals[2 * pos + 1] = j, i, w
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        degrees = np.zeros(node_count, dtype=np.float64)
        for i in range(node_count):
            degrees[i] = float(np.sum(vals[indptr[i] : indptr[i + 1]]))
        g = cls(
            node_count=node_count,
            indptr=indptr,
            indices=cols,
            weights=vals,
            degrees=degrees,
        )
        return g

    @property
    def edge_count(self) -> int:
        """Number of undirected edges."""
        return self.indices.size // 2

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted neighbor ids and matching weights of node ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degree(self, i: int) -> float:
        return float(self.degrees[i])

    def edge_list(self) -> list[tuple[int, int, float]]:
        """Each undirected edge once, as ``(i, j, w)`` with ``i < j``, sorted."""
        out = []
        for i in range(self.node_count):
            nbrs, w = self.neighbors(i)
            keep = nbrs > i
            out.extend((i, int(j), float(wv)) for j, wv in zip(nbrs[keep], w[keep]))
        return out

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Adjacency as a scipy CSR matrix (shared, read-only)."""
        return sp.csr_matrix(
            (self.weights, self.indices, self.indptr),
            shape=(self.node_count, self.node_count),
        )

    @cached_property
    def component_of(self) -> np.ndarray:
        """Connected-component id per node."""
        n_comp, comp = connected_components(self.matrix, directed=False)
        return comp


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Hard-labeled nodes: sorted unique indices and binary labels."""

    indices: np.ndarray
    values: np.ndarray

    def __init__(self, indices: Sequence[int], values: Sequence[int]):
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.int8)
        if idx.ndim != 1 or val.shape != idx.shape:
            raise ValueError("indices and values must be 1-D and equally long")
        if idx.size and np.unique(idx).size != idx.size:
            raise ValueError("labeled indices must be unique")
        if not np.all(np.isin(val, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        order = np.argsort(idx)
        object.__setattr__(self, "indices", idx[order])
        object.__setattr__(self, "values", val[order])

    def __len__(self) -> int:
        return int(self.indices.size)

    def validate_against(self, node_count: int) -> None:
        if self.indices.size and int(self.indices[-1]) >= node_count:
            raise ValueError("labeled index out of range")
        if self.indices.size and int(self.indices[0]) < 0:
            raise ValueError("labeled index negative")


@dataclass(frozen=True, eq=False)
class NeighborhoodPartition:
    """Hop layering around the labeled set.

    ``hops[0]`` is the labeled set itself, ``hops[k]`` the nodes whose
    shortest path to any labeled node has length ``k``; ``unreachable``
    collects nodes with no path to a labeled node. ``hop_of`` maps each node
    to its hop index (-1 for unreachable).
    """

    hops: tuple[np.ndarray, ...]
    unreachable: np.ndarray
    hop_of: np.ndarray

    @property
    def max_hop(self) -> int:
        return len(self.hops) - 1

    def validate_against(self, graph: Graph) -> None:
        if self.hop_of.size != graph.node_count:
            raise ValueError("partition does not match graph size")


def compute_neighborhoods(graph: Graph, labels: LabelSet) -> NeighborhoodPartition:
    """Breadth-first hop layering from the labeled set.

    Deterministic regardless of edge insertion order (frontiers are kept
    sorted). Raises if ``labels`` is empty.
    """
    labels.validate_against(graph.node_count)
    if len(labels) == 0:
        raise ValueError("at least one labeled node is required")
    hop_of = np.full(graph.node_count, -1, dtype=np.int64)
    frontier = labels.indices.copy()
    hop_of[frontier] = 0
    hops = [frontier]
    k = 0
    while True:
        candidates = []
        for i in frontier:
            nbrs, _ = graph.neighbors(int(i))
            candidates.append(nbrs)
        if candidates:
            cand = np.unique(np.concatenate(candidates))
            nxt = cand[hop_of[cand] < 0]
        else:
            nxt = np.empty(0, dtype=np.int64)
        if nxt.size == 0:
            break
        k += 1
        hop_of[nxt] = k
        hops.append(nxt)
        frontier = nxt
    unreachable = np.flatnonzero(hop_of < 0).astype(np.int64)
    return NeighborhoodPartition(hops=tuple(hops), unreachable=unreachable, hop_of=hop_of)


def build_threshold_graph(features: np.ndarray, t: float) -> Graph:
    """Euclidean distance-threshold graph with unit edge weights.

    Connects ``i != j`` iff their distance is strictly below the
    linear-interpolation quantile at fraction ``t/N`` of all ``N**2`` pairwise
    distances (self-distances included in the pool), which makes the average
    degree come out near ``t``. A fraction above 1 places the threshold above
    the largest distance and yields the complete graph. Duplicated points are
    connected whenever the threshold is positive, but a point is never
    connected to itself.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("features must be a 2-D array with at least two rows")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    t = float(t)
    n = x.shape[0]
    if t <= 0:
        raise ValueError("degree target t must be positive")
    if t / n > 100:
        raise ValueError(f"degree target t={t} is out of range for {n} nodes")
    dist = cdist(x, x)
    q = t / n
    threshold = np.inf if q > 1 else float(np.quantile(dist.ravel(), q))
    iu, ju = np.triu_indices(n, k=1)
    keep = dist[iu, ju] < threshold
    edges = [(int(a), int(b), 1.0) for a, b in zip(iu[keep], ju[keep])]
    return Graph.from_edges(n, edges)


def average_degree(graph: Graph) -> float:
    return 2.0 * graph.edge_count / graph.node_count
