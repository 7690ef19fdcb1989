"""Quotients ``G/H`` by a connected normal flow-invariant subgroup ``H = exp(h)``.

For an ideal ``h`` of a nilpotent (or abelian) algebra the quotient is again a
simply connected nilpotent group, and in exponential coordinates the
projection is the linear map ``v -> Q^T v`` where the columns of ``Q`` are an
orthonormal complement of ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .algebra import LieAlgebra, bracket
from .chains import Chain, ChainError
from .groups import FlowSpec, UnsupportedError, flow_apply, make_chart
from .linalg import orth, span_residual

IDEAL_TOL = 1e-9


class QuotientError(ValueError):
    pass


def _complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal complement built by Gram-Schmidt on the projected standard basis.

    For coordinate ideals this keeps the remaining coordinate axes in order.
    """
    proj = np.eye(n) - basis @ basis.T
    cols: list[np.ndarray] = []
    for i in range(n):
        v = proj[:, i].copy()
        for c in cols:
            v -= (c @ v) * c
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cols.append(v / nv)
        if len(cols) == n - basis.shape[1]:
            break
    return np.array(cols).T if cols else np.zeros((n, 0))


@dataclass(frozen=True, eq=False)
class QuotientMap:
    spec: FlowSpec
    h_basis: np.ndarray  # orthonormal columns spanning the ideal h
    complement: np.ndarray  # orthonormal columns spanning h^perp
    algebra: LieAlgebra  # g/h in the complement basis
    induced_D: np.ndarray

    @property
    def ambient(self):
        return self.spec.chart

    def project(self, g: np.ndarray) -> np.ndarray:
        """``pi`` in exponential coordinates."""
        return np.asarray(g, dtype=float) @ self.complement

    def section(self, q: np.ndarray) -> np.ndarray:
        """The lift ``exp(Q log q)`` of a quotient point."""
        return np.asarray(q, dtype=float) @ self.complement.T

    def h_part(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.h_basis @ self.h_basis.T

    def off_h(self, v: np.ndarray) -> np.ndarray | float:
        v = np.asarray(v, dtype=float)
        out = np.linalg.norm(v - self.h_part(v), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    @cached_property
    def flow(self) -> FlowSpec:
        return induced_flow(self)


def quotient_map(spec: FlowSpec, ideal) -> QuotientMap:
    """Build the quotient by the span of ``ideal`` (basis indices or a matrix of column vectors)."""
    chart = spec.chart
    if chart.kind not in ("abelian", "nilpotent-exp"):
        raise UnsupportedError("quotients are implemented for abelian and nilpotent-exp charts")
    alg = chart.alg
    n = alg.dim
    ideal = np.asarray(ideal)
    if ideal.ndim == 1:
        idx = [int(i) for i in ideal]
        if any(not 0 <= i < n for i in idx):
            raise QuotientError(f"ideal indices {idx} out of range for dimension {n}")
        hb = np.eye(n)[:, idx]
    else:
        hb = np.asarray(ideal, dtype=float)
    hb = orth(hb) if hb.size else np.zeros((n, 0))
    worst = 0.0
    for i in range(n):
        for j in range(hb.shape[1]):
            worst = max(worst, span_residual(bracket(alg, alg.basis(i), hb[:, j]), hb))
    if worst >= IDEAL_TOL:
        raise QuotientError(f"subspace is not an ideal (residual {worst:.3g}); H would not be normal")
    d_res = max((span_residual(spec.D @ hb[:, j], hb) for j in range(hb.shape[1])), default=0.0)
    if d_res >= IDEAL_TOL:
        raise QuotientError(f"ideal is not invariant under D (residual {d_res:.3g}); no induced flow")
    q = _complement(hb, n)
    k = q.shape[1]
    c = alg.structure_constants
    cq = np.einsum("ia,jb,ijl,lc->abc", q, q, c, q) if k else np.zeros((0, 0, 0))
    cq[np.abs(cq) < 1e-14] = 0.0
    labels = tuple(f"q{i}" for i in range(k))
    qalg = LieAlgebra(cq, labels, f"{alg.name}/h") if k else None
    d_hat = q.T @ spec.D @ q
    return QuotientMap(spec, hb, q, qalg, d_hat)


def induced_flow(qm: QuotientMap) -> FlowSpec:
    if qm.algebra is None:
        raise QuotientError("quotient is trivial (H = G)")
    kind = "abelian" if not np.any(qm.algebra.structure_constants) else "nilpotent-exp"
    chart = make_chart(kind, qm.algebra)
    return FlowSpec(chart, "derivation", qm.induced_D)


def intertwining_residual(qm: QuotientMap, samples: int = 100, seed: int = 0, radius: float = 2.0) -> float:
    """Largest ``d(pi(phi_t g), phi^_t(pi g))`` over random ``t`` and ``g``."""
    rng = np.random.default_rng(seed)
    spec = qm.spec
    qflow = qm.flow
    worst = 0.0
    for _ in range(samples):
        g = rng.uniform(-radius, radius, size=spec.chart.dim)
        t = rng.uniform(-2, 2)
        a = qm.project(flow_apply(spec, t, g))
        b = flow_apply(qflow, t, qm.project(g))
        worst = max(worst, float(qflow.chart.distance(a, b)))
    return worst


def project_chain(qm: QuotientMap, chain: Chain) -> Chain:
    """``pi(xi)``: same times, projected points.  Jump residuals can only shrink."""
    return Chain(qm.project(chain.points), chain.times)


@dataclass(frozen=True, eq=False)
class LiftResult:
    chain: Chain  # from x_0^-1 to h y^-1
    h: np.ndarray  # terminal correction in H (exponential coordinates)
    residuals: np.ndarray


def _best_h_step(chart, qm: QuotientMap, left: np.ndarray, right_inv: np.ndarray, U_radius: float, index: int):
    """Minimize ``||log(left exp(w) right_inv)||`` over ``w`` in h."""
    hb = qm.h_basis
    k = hb.shape[1]

    def resid(s):
        w = hb @ s
        return float(np.linalg.norm(chart.log(chart.mul(chart.mul(left, chart.exp(w)), right_inv))))

    if k == 0:
        return np.zeros(chart.dim), resid(np.zeros(0))
    base = chart.log(chart.mul(left, right_inv))
    s0 = -(hb.T @ base)
    best_s, best = s0, resid(s0)
    if best >= U_radius * 1e-6:
        opt = minimize(resid, s0, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 2000})
        if opt.fun < best:
            best_s, best = opt.x, float(opt.fun)
    radius = U_radius
    while best >= U_radius and radius <= 10 * U_radius:
        axes = [np.linspace(-radius, radius, 21)] * k
        for pt in np.array(np.meshgrid(*axes)).reshape(k, -1).T:
            r = resid(s0 + pt)
            if r < best:
                best_s, best = s0 + pt, r
        radius *= 2
    if best >= U_radius:
        raise ArithmeticError(f"no coset representative within U at jump {index} (best residual {best:.3g})")
    return hb @ best_s, best


def lift_chain(qm: QuotientMap, zeta: Chain, U_radius: float, lifts: np.ndarray | None = None) -> LiftResult:
    """Lift a quotient chain through ``pi(x_0) .. pi(x_n)`` to a chain of ``G`` from ``x_0^-1`` to ``h x_n^-1``.

    ``lifts`` are preimages ``x_i`` of the quotient points (default: the
    section ``exp(Q log q)``).  The new points are ``(x_i h_i)^-1`` with
    ``h_0 = e`` and ``h_{k+1} = h' phi_{tau_k}(h_k)``, the factor ``h'`` in
    ``H`` chosen to minimize the jump residual.
    """
    spec = qm.spec
    chart = spec.chart
    xs = qm.section(zeta.points) if lifts is None else np.asarray(lifts, dtype=float)
    if xs.shape[0] != zeta.points.shape[0]:
        raise ChainError("one lift per quotient point required")
    if lifts is not None and np.max(np.abs(qm.project(xs) - zeta.points)) > 1e-9:
        raise ChainError("lifts do not project to the quotient chain")
    h = chart.identity()
    ys = [chart.inv(chart.mul(xs[0], h))]
    res = []
    for k, t in enumerate(zeta.times):
        right_inv = chart.inv(flow_apply(spec, t, xs[k]))
        hprime, r = _best_h_step(chart, qm, xs[k + 1], right_inv, U_radius, k)
        h = chart.mul(chart.exp(hprime), flow_apply(spec, t, h))
        ys.append(chart.inv(chart.mul(xs[k + 1], h)))
        res.append(r)
    return LiftResult(Chain(np.array(ys), zeta.times), chart.inv(h), np.array(res))


def homo_witness(qm: QuotientMap, U_radius: float, samples: int = 100, seed: int = 0, radius: float = 2.0, directions: int = 16) -> float:
    """An ``eps`` such that every quotient point within ``eps`` of ``pi(x)`` has a preimage in ``B(e, U) x``.

    The quotient carries the right-invariant log metric.  For each sampled
    ``x`` and quotient point ``q = p pi(x)`` the minimal-norm preimage of ``p``
    is solved for explicitly and ``u x`` is checked to project onto ``q``.
    Returns ``inf`` for the trivial quotient.
    """
    if qm.algebra is None:
        return float("inf")
    rng = np.random.default_rng(seed)
    chart = qm.spec.chart
    qchart = qm.flow.chart
    k = qm.complement.shape[1]
    xs = rng.uniform(-radius, radius, size=(samples, chart.dim))
    dirs = rng.normal(size=(directions, k))
    dirs = np.vstack([dirs / np.linalg.norm(dirs, axis=1, keepdims=True), np.eye(k), -np.eye(k)])

    def ok(r: float) -> bool:
        for x in xs:
            px = qm.project(x)
            for d in dirs:
                p = r * d
                q = qchart.mul(p, px)
                # minimal-norm v with Q^T v = log p among v = Q log p + (h part)
                v = qm.section(p)
                u_norm = float(np.linalg.norm(v))
                if u_norm >= U_radius:
                    return False
                if float(qchart.distance(qm.project(chart.mul(v, x)), q)) > 1e-9:
                    return False
        return True

    for frac in np.linspace(1.0, 0.05, 20):
        r = U_radius * frac * (1 - 1e-12)
        if ok(r):
            return float(r)
    return 0.0
