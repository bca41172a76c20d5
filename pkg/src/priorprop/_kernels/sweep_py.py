"""Pure-Python Gauss-Seidel sweep, the fallback for the compiled kernel.

Accumulates in the same left-to-right adjacency order as the Cython version,
so both backends produce bit-identical iterates.
"""


def gs_sweep(f, indptr, indices, weights, order, base, denom):
    for k in range(order.shape[0]):
        i = order[k]
        acc = float(base[k])
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + weights[p] * f[indices[p]]
        f[i] = acc / denom[k]
