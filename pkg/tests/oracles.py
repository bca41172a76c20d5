"""Independent brute-force oracles for the test suite.

Everything here is written with naive loops straight from the objective
definitions, deliberately sharing no code with the library, so solver outputs
can be certified against a second route.
"""

import numpy as np


def naive_prior_objective(edges, h, mu, f):
    """sum over undirected edges w (f_i - f_j)^2 + sum_i mu_i (f_i - h_i)^2."""
    total = 0.0
    for i, j, w in edges:
        total += w * (f[i] - f[j]) ** 2
    for i in range(len(f)):
        total += mu[i] * (f[i] - h[i]) ** 2
    return total


def naive_soft_objective(edges, labeled, eta, f):
    """Ordered-pair smoothness (each edge twice) plus eta-weighted label penalty."""
    total = 0.0
    for i, j, w in edges:
        total += 2.0 * w * (f[i] - f[j]) ** 2
    for i, y in labeled:
        total += eta * (f[i] - y) ** 2
    return total


def naive_multi_objective(edges, votes, alpha, f):
    """Undirected-edge smoothness plus per-cast-vote pull terms."""
    total = 0.0
    for i, j, w in edges:
        total += w * (f[i] - f[j]) ** 2
    n, k = votes.shape
    for i in range(n):
        for j in range(k):
            if votes[i, j] != -1:
                total += alpha[i, j] * (f[i] - votes[i, j]) ** 2
    return total


def minimize_quadratic(objective, dim, x0=None):
    """Exact minimizer of a quadratic via finite differences of the objective.

    Unit-step differences are exact for quadratics: the Hessian entry is
    E(x+ei+ej) - E(x+ei) - E(x+ej) + E(x) and the gradient the central
    difference. Requires a positive-definite Hessian (a determined system).
    """
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    e = np.eye(dim)
    base = objective(x0)
    shifted = np.array([objective(x0 + e[i]) for i in range(dim)])
    hess = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                hess[i, i] = objective(x0 + 2 * e[i]) - 2 * shifted[i] + base
            else:
                hess[i, j] = hess[j, i] = (
                    objective(x0 + e[i] + e[j]) - shifted[i] - shifted[j] + base
                )
    grad = np.array(
        [(objective(x0 + e[i]) - objective(x0 - e[i])) / 2.0 for i in range(dim)]
    )
    return x0 - np.linalg.solve(hess, grad)


def random_connected_graph(rng, n, extra_edges=3, w_low=0.05, w_high=2.0):
    """Random spanning tree plus extra random edges; unique (i<j, w) records."""
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(w_low, w_high))
    for _ in range(extra_edges):
        a, b = rng.integers(0, n, size=2)
        if a == b:
            continue
        key = (min(int(a), int(b)), max(int(a), int(b)))
        if key not in edges:
            edges[key] = float(rng.uniform(w_low, w_high))
    return [(i, j, w) for (i, j), w in sorted(edges.items())]


def random_labels(rng, n, max_labeled=3):
    count = int(rng.integers(1, max_labeled + 1))
    idx = rng.choice(n, size=count, replace=False)
    vals = rng.integers(0, 2, size=count)
    return np.sort(idx), vals[np.argsort(idx)]
