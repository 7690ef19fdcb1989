"""Sampled chain graphs: one-step (eps, tau) transitions between grid nodes, SCCs and recurrence."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .chains import Chain, ChainError
from .groups import FlowSpec, central_distance_coords, flow_apply
from .linalg import logm_near_identity


class GraphWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ChainGraph:
    spec: FlowSpec
    coords: np.ndarray  # (N, d) chart coordinates of the nodes
    indptr: np.ndarray
    indices: np.ndarray
    eps: float
    tau: float
    spacing: float
    window: np.ndarray  # (d, 2)
    shape: tuple[int, ...]
    interior_mask: np.ndarray
    backend: str = ""

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1])

    @property
    def nodes(self) -> np.ndarray:
        """Group elements of the nodes."""
        return self.spec.chart.exp(self.coords)

    def successors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.successors(i)
        k = np.searchsorted(row, j)
        return bool(k < len(row) and row[k] == j)

    def edge_sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))

    def transpose(self) -> "ChainGraph":
        src = self.edge_sources()
        order = np.lexsort((src, self.indices))
        counts = np.bincount(self.indices, minlength=self.n_nodes)
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return ChainGraph(
            self.spec.reversed(),
            self.coords,
            indptr,
            src[order].astype(np.int64),
            self.eps,
            self.tau,
            self.spacing,
            self.window,
            self.shape,
            self.interior_mask,
            self.backend,
        )

    def node_index(self, coords) -> int:
        """Index of the grid node closest to ``coords``."""
        idx = np.rint((np.asarray(coords, dtype=float) - self.window[:, 0]) / self.spacing).astype(np.int64)
        idx = np.clip(idx, 0, np.array(self.shape) - 1)
        return int(np.ravel_multi_index(tuple(idx), self.shape))


def normalize_window(window, dim: int) -> np.ndarray:
    """Accepts a half-width, a ``(lo, hi)`` pair, or one pair per axis."""
    w = np.asarray(window, dtype=float)
    if w.ndim == 0:
        w = np.array([[-float(w), float(w)]] * dim)
    elif w.shape == (2,):
        w = np.tile(w, (dim, 1))
    if w.shape != (dim, 2) or np.any(w[:, 1] < w[:, 0]):
        raise ValueError(f"bad window for dimension {dim}: {window!r}")
    return w


def grid(window: np.ndarray, spacing: float) -> tuple[np.ndarray, tuple[int, ...]]:
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    shape = tuple(int(np.floor((hi - lo) / spacing + 1e-9)) + 1 for lo, hi in window)
    idx = np.indices(shape).reshape(len(shape), -1).T
    return window[:, 0] + idx * spacing, shape


def interior_mask(spec: FlowSpec, coords: np.ndarray, window: np.ndarray, eps: float, tau: float, samples: int = 17) -> np.ndarray:
    """Nodes whose orbit segment over ``[-tau, tau]`` stays at least ``eps`` inside the window."""
    lo = window[:, 0] + eps
    hi = window[:, 1] - eps
    mask = np.ones(len(coords), dtype=bool)
    for t in np.linspace(-tau, tau, samples):
        y = coords @ spec.coord_flow(t).T
        mask &= np.all((y >= lo - 1e-12) & (y <= hi + 1e-12), axis=1)
    return mask


def _radius_step2(spec: FlowSpec, images: np.ndarray, eps: float) -> np.ndarray:
    c = spec.chart.alg.structure_constants
    if not np.any(c):
        return np.full(images.shape, eps * (1 + 1e-9))
    # x = y exp(-w) = y - (I + ad_y / 2) w, so |x_k - y_k| <= eps ||row_k(I + ad_y / 2)||
    m = np.eye(images.shape[1]) + 0.5 * np.einsum("ni,ijk->nkj", images, c)
    return eps * np.linalg.norm(m, axis=2) * (1 + 1e-9) + 1e-12


def _edges_bruteforce(spec: FlowSpec, coords: np.ndarray, images: np.ndarray, eps: float, chunk: int = 64):
    """All pairs, chunked over sources; used for matrix charts and nilpotency step > 2."""
    chart = spec.chart
    n = len(coords)
    src_parts, dst_parts = [], []
    if chart.kind == "matrix-embedded":
        node_inv = np.linalg.inv(chart.exp(coords))
        kappa = float(np.linalg.norm(chart.basis.reshape(chart.dim, -1), 2))
        pre = min(chart.window, float(np.expm1(kappa * eps)))
        eye = np.eye(chart.size)
        for start in range(0, n, chunk):
            y = images[start : start + chunk]
            p = np.einsum("jab,ibc->ijac", node_inv, y)
            off = np.linalg.norm(p - eye, axis=(-2, -1))
            ii, jj = np.nonzero(off < pre)
            if ii.size == 0:
                continue
            w = chart.from_matrix(logm_near_identity(p[ii, jj], chart.window))
            keep = np.sum(w * w, axis=1) < eps * eps
            src_parts.append(ii[keep] + start)
            dst_parts.append(jj[keep])
    else:
        for start in range(0, n, chunk):
            y = images[start : start + chunk]
            w = chart.log_diff(coords[None, :, :], y[:, None, :])
            ii, jj = np.nonzero(np.sum(w * w, axis=2) < eps * eps)
            src_parts.append(ii + start)
            dst_parts.append(jj)
    src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int64)


def build_chain_graph(spec: FlowSpec, window, spacing: float, eps: float, tau: float) -> ChainGraph:
    """Grid graph with an edge ``i -> j`` iff ``d(phi_tau(x_i), x_j) < eps``."""
    if eps <= 0 or tau <= 0:
        raise ValueError("eps and tau must be positive")
    chart = spec.chart
    win = normalize_window(window, chart.dim)
    coords, shape = grid(win, spacing)
    if len(coords) == 0:
        raise ValueError("empty grid")
    if eps < spacing / 2:
        warnings.warn(f"eps = {eps:g} < spacing / 2 = {spacing / 2:g}: graph is nearly disconnected", GraphWarning, stacklevel=2)
    mask = interior_mask(spec, coords, win, eps, tau)
    step = getattr(chart, "step", 1)
    if chart.kind != "matrix-embedded" and step <= 2:
        images = coords @ spec.coord_flow(tau).T
        c = chart.alg.structure_constants if np.any(chart.alg.structure_constants) else None
        radius = _radius_step2(spec, images, eps)
        indptr, indices = _kernels.edges_step2(images, c, win[:, 0], float(spacing), np.array(shape, dtype=np.int64), radius, float(eps))
        backend = _kernels.BACKEND
    else:
        if chart.kind == "matrix-embedded":
            images = flow_apply(spec, tau, chart.exp(coords))
        else:
            images = coords @ spec.coord_flow(tau).T
        indptr, indices = _edges_bruteforce(spec, coords, images, eps)
        backend = "numpy-bruteforce"
    return ChainGraph(spec, coords, np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64), float(eps), float(tau), float(spacing), win, shape, mask, backend)


def strongly_connected_components(graph: ChainGraph) -> np.ndarray:
    """SCC labels, renumbered so that components appear in order of their smallest node."""
    raw = np.asarray(_kernels.tarjan_scc(graph.indptr, graph.indices))
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    remap = np.empty(len(order), dtype=np.int64)
    remap[order] = np.arange(len(order))
    return remap[raw]


def self_loops(graph: ChainGraph) -> np.ndarray:
    src = graph.edge_sources()
    out = np.zeros(graph.n_nodes, dtype=bool)
    out[src[src == graph.indices]] = True
    return out


@dataclass(frozen=True, eq=False)
class RecurrenceReport:
    labels: np.ndarray
    cyclic: np.ndarray  # node lies on a directed cycle (ignoring the interior mask)
    recurrent: np.ndarray  # cyclic and interior
    components: list = field(default_factory=list)  # arrays of recurrent node indices per SCC
    central_distance: np.ndarray | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def recurrent_nodes(self) -> np.ndarray:
        return np.nonzero(self.recurrent)[0]


def recurrent_estimate(graph: ChainGraph) -> RecurrenceReport:
    labels = strongly_connected_components(graph)
    sizes = np.bincount(labels)
    cyclic = (sizes[labels] >= 2) | self_loops(graph)
    recurrent = cyclic & graph.interior_mask
    comps = []
    rec_idx = np.nonzero(recurrent)[0]
    if rec_idx.size:
        for lab in np.unique(labels[rec_idx]):
            comps.append(rec_idx[labels[rec_idx] == lab])
    cdist = np.asarray(central_distance_coords(graph.spec, graph.coords), dtype=float).reshape(-1)
    params = {
        "eps": graph.eps,
        "tau": graph.tau,
        "spacing": graph.spacing,
        "window": graph.window.tolist(),
    }
    return RecurrenceReport(labels, cyclic, recurrent, comps, cdist, params)


def mutual_reachability_fraction(graph: ChainGraph, report: RecurrenceReport | None = None) -> float:
    """Fraction of ordered interior node pairs ``(x, y)`` that lie on a common cycle."""
    report = recurrent_estimate(graph) if report is None else report
    inside = graph.interior_mask
    n_in = int(np.sum(inside))
    if n_in == 0:
        return 0.0
    sel = report.labels[inside & report.cyclic]
    counts = np.bincount(sel) if sel.size else np.zeros(0)
    return float(np.sum(counts.astype(float) ** 2) / float(n_in) ** 2)


def omega_estimate(graph: ChainGraph, x: int) -> np.ndarray:
    """Nodes reachable from ``x`` by paths with at least one edge (sorted)."""
    if not 0 <= x < graph.n_nodes:
        raise IndexError(f"node {x} not in graph")
    seen = np.zeros(graph.n_nodes, dtype=bool)
    queue = deque(int(j) for j in graph.successors(x))
    for j in queue:
        seen[j] = True
    while queue:
        v = queue.popleft()
        for w in graph.successors(v):
            if not seen[w]:
                seen[w] = True
                queue.append(int(w))
    return np.nonzero(seen)[0]


def find_cycle(graph: ChainGraph, x: int) -> list[int] | None:
    """A shortest closed path ``x -> ... -> x`` (BFS), or None."""
    parent = {}
    queue = deque()
    for j in graph.successors(x):
        j = int(j)
        if j == x:
            return [x, x]
        if j not in parent:
            parent[j] = x
            queue.append(j)
    while queue:
        v = queue.popleft()
        for w in graph.successors(v):
            w = int(w)
            if w == x:
                back = [v]
                while back[-1] != x:
                    back.append(parent[back[-1]])
                return back[::-1] + [x]
            if w not in parent:
                parent[w] = v
                queue.append(w)
    return None


def extract_chain(graph: ChainGraph, path) -> Chain:
    path = [int(p) for p in path]
    if len(path) < 2:
        raise ChainError("a path needs at least two nodes")
    for a, b in zip(path, path[1:]):
        if not graph.has_edge(a, b):
            raise ChainError(f"{a} -> {b} is not an edge")
    pts = graph.spec.chart.exp(graph.coords[path])
    return Chain(pts, np.full(len(path) - 1, graph.tau))
