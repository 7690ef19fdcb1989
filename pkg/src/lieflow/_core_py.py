"""Pure numpy implementations of the chain-graph kernels.

These mirror the compiled kernels in ``_core.pyx`` and are used when the
extension is not built (or ``LIEFLOW_PURE=1``).
"""

from __future__ import annotations

import itertools

import numpy as np


def grid_offsets(reach: np.ndarray) -> np.ndarray:
    """All integer offset vectors inside the box ``[0, reach]`` in C order."""
    axes = [np.arange(int(r) + 1) for r in reach]
    return np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(-1, len(reach))


def step2_log_diff(a: np.ndarray, y: np.ndarray, c: np.ndarray | None) -> np.ndarray:
    """``log(exp(a)^-1 exp(y))`` for step <= 2: ``y - a - [a, y - a]/2``.

    Bracketing with ``y - a`` instead of ``y`` is the same value (``[a, a] = 0``)
    but avoids cancellation between large nearby points.
    """
    w = y - a
    if c is not None:
        w = w - 0.5 * np.einsum("...p,...q,pqk->...k", a, w, c)
    return w


def edges_step2(images, c, origin, spacing, shape, radius, eps, chunk: int = 256):
    """CSR adjacency of the grid graph ``i -> j`` iff ``||log(x_j^-1 y_i)|| < eps``.

    ``images[i]`` is the flow image of node ``i``; node ``j`` sits at
    ``origin + idx(j) * spacing`` with ``idx`` the C-order multi-index over ``shape``.
    ``radius[i, k]`` bounds ``|x_j[k] - images[i, k]|`` over all edges.
    """
    images = np.ascontiguousarray(images, dtype=float)
    origin = np.asarray(origin, dtype=float)
    shape = np.asarray(shape, dtype=np.int64)
    n, d = images.shape
    has_bracket = c is not None and np.any(c)
    cc = np.asarray(c, dtype=float) if has_bracket else None
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    eps2 = eps * eps
    counts = np.zeros(n, dtype=np.int64)
    src_parts, dst_parts = [], []
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        y = images[start:stop]
        r = radius[start:stop]
        lo = np.maximum(np.ceil((y - r - origin) / spacing), 0).astype(np.int64)
        hi = np.minimum(np.floor((y + r - origin) / spacing), shape - 1).astype(np.int64)
        reach = np.max(np.maximum(hi - lo, 0), axis=0) if len(y) else np.zeros(d, dtype=np.int64)
        offs = grid_offsets(reach)
        idx = lo[:, None, :] + offs[None, :, :]
        ok = np.all((idx <= hi[:, None, :]), axis=2) & np.all(hi >= lo, axis=1)[:, None]
        rows, cols = np.nonzero(ok)
        if rows.size == 0:
            continue
        cand = idx[rows, cols]
        a = origin + cand * spacing
        yy = y[rows]
        w = step2_log_diff(a, yy, cc)
        d2 = np.sum(w * w, axis=1)
        keep = d2 < eps2
        src = rows[keep] + start
        dst = cand[keep] @ strides
        src_parts.append(src)
        dst_parts.append(dst)
    if src_parts:
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n).astype(np.int64)
    else:
        dst = np.zeros(0, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst.astype(np.int64)


def tarjan_scc(indptr, indices):
    """Iterative Tarjan.  Returns component labels in order of completion."""
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    n = len(indptr) - 1
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    labels = np.full(n, -1, dtype=np.int64)
    stack: list[int] = []
    counter = 0
    ncomp = 0
    ptr = indptr.tolist()
    adj = indices.tolist()
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, ptr[root])]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack[root] = True
        while work:
            v, pos = work[-1]
            end = ptr[v + 1]
            descended = False
            while pos < end:
                w = adj[pos]
                pos += 1
                if index[w] == -1:
                    work[-1] = (v, pos)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack[w] = True
                    work.append((w, ptr[w]))
                    descended = True
                    break
                if onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if descended:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    labels[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
    return labels
