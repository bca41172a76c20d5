# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gauss-Seidel sweep for the weighted-neighbor-average update."""


def gs_sweep(double[::1] f, long long[::1] indptr, long long[::1] indices,
             double[::1] weights, long long[::1] order, double[::1] base,
             double[::1] denom):
    """One in-place sweep of f[i] <- (sum_j w_ij f[j] + base) / denom.

    ``order`` lists the nodes to update, in update order; ``base`` and
    ``denom`` are aligned with ``order``. Accumulation runs left to right in
    adjacency order so the result is bit-identical to the Python fallback.
    """
    cdef Py_ssize_t k, p
    cdef long long i
    cdef double acc
    for k in range(order.shape[0]):
        i = order[k]
        acc = base[k]
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + weights[p] * f[indices[p]]
        f[i] = acc / denom[k]
