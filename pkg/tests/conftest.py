"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest
from scipy.linalg import block_diag
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from lieflow.scenarios import catalog


def resolvent_parts(d, points=256, merge=0.02):
    """Semisimple split of ``d`` from contour integrals of the resolvent.

    Eigenvalues closer than ``merge`` (relative) are grouped; each spectral projector is
    ``(1/2 pi i) oint (zI - D)^-1 dz`` over a circle around its group,
    evaluated with the trapezoid rule.  Returns ``(H, E, N)``.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    ev = np.linalg.eigvals(d)
    scale = max(1.0, float(np.max(np.abs(ev))))
    groups: list[list[complex]] = []
    for lam in ev:
        for g in groups:
            if abs(lam - g[0]) < merge * scale:
                g.append(complex(lam))
                break
        else:
            groups.append([complex(lam)])
    centers = [complex(np.mean(g)) for g in groups]
    sep = min((abs(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]), default=scale)
    r = 0.45 * sep
    circle = np.exp(2j * np.pi * np.arange(points) / points)
    H = np.zeros((n, n), dtype=complex)
    E = np.zeros((n, n), dtype=complex)
    for c in centers:
        # trapezoid rule: dz / (2 pi i) contributes r * w / points at node w
        p = sum(np.linalg.solve((c + r * w) * np.eye(n) - d, np.eye(n)) * (r * w) for w in circle) / points
        H += c.real * p
        E += 1j * c.imag * p
    # projectors of conjugate centers are conjugate, so both sums are real
    H, E = H.real, E.real
    return H, E, d - H - E


def sympy_parts(d):
    """Exact semisimple split of an integer matrix through the sympy Jordan form."""
    import sympy

    m = sympy.Matrix(np.asarray(d, dtype=int).tolist())
    p, j = m.jordan_form()
    diag = sympy.diag(*[j[i, i] for i in range(j.rows)])
    re = sympy.diag(*[sympy.re(j[i, i]) for i in range(j.rows)])
    s_re = p * re * p.inv()
    s_all = p * diag * p.inv()
    H = np.array(sympy.N(sympy.simplify(s_re)).tolist(), dtype=complex).real
    S = np.array(sympy.N(sympy.simplify(s_all)).tolist(), dtype=complex).real
    d = np.asarray(d, dtype=float)
    return H, S - H, d - S


def random_canonical(rng, n=6):
    """``(J, H, E)`` for a random real canonical form with blocks up to size 3 (real) or 2 (complex pairs)."""
    blocks = []
    size = 0
    while size < n:
        kind = rng.choice(["real", "complex"]) if n - size >= 2 else "real"
        if kind == "real":
            m = int(rng.integers(1, min(3, n - size) + 1))
            lam = float(rng.choice(np.arange(-3, 3.5, 0.5)))
            b = lam * np.eye(m) + np.eye(m, k=1)
            hb, eb = lam * np.eye(m), np.zeros((m, m))
        else:
            m = int(rng.integers(1, min(2, (n - size) // 2) + 1))
            a = float(rng.choice(np.arange(-2, 2.5, 0.5)))
            w = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
            rot = np.array([[0.0, -w], [w, 0.0]])
            b = np.kron(np.eye(m), a * np.eye(2) + rot) + np.kron(np.eye(m, k=1), np.eye(2))
            hb, eb = a * np.eye(2 * m), np.kron(np.eye(m), rot)
        blocks.append((b, hb, eb))
        size += b.shape[0]
    return tuple(block_diag(*[blk[i] for blk in blocks]) for i in range(3))


def random_conjugator(rng, n=6, max_cond=100.0):
    while True:
        p = rng.normal(size=(n, n))
        if np.linalg.cond(p) < max_cond:
            return p


def jordan_suite(seed=0, count=100, n=6):
    """``(D, H, E, N)`` with ``D = P J P^-1`` and the exact parts conjugated the same way."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        j, h, e = random_canonical(rng, n)
        p = random_conjugator(rng, n)
        pi = np.linalg.inv(p)
        d = p @ j @ pi
        H, E = p @ h @ pi, p @ e @ pi
        out.append((d, H, E, d - H - E))
    return out


def scc_oracle(indptr, indices, n):
    """Strong components from scipy, relabelled by smallest member for comparison."""
    m = csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    _, lab = connected_components(m, directed=True, connection="strong")
    return canonical_labels(lab)


def canonical_labels(labels):
    labels = np.asarray(labels)
    first = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, l in enumerate(labels):
        out[i] = first.setdefault(int(l), len(first))
    return out


def bruteforce_edges(spec, coords, eps, tau):
    """Every ordered pair tested with the chart distance; the definition of an edge."""
    chart = spec.chart
    images = np.array([spec_flow(spec, tau, x) for x in coords])
    edges = set()
    for i, y in enumerate(images):
        for j, x in enumerate(coords):
            try:
                d = float(chart.distance(y, x))
            except ValueError:
                continue
            if d < eps:
                edges.add((i, j))
    return edges


def spec_flow(spec, t, x):
    from lieflow.groups import flow_apply

    return flow_apply(spec, t, x)


def graph_edges(graph):
    return set(zip(graph.edge_sources().tolist(), graph.indices.tolist()))


@pytest.fixture(scope="session")
def scenarios():
    return catalog()


@pytest.fixture
def rng():
    """A fresh generator per test, so results do not depend on test order."""
    return np.random.default_rng(12345)
