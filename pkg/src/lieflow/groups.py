"""Concrete groups, flows of automorphisms, distances and the stable/central/unstable factorization.

Three chart kinds are supported:

``abelian``
    ``R^n`` with coordinate addition.
``nilpotent-exp``
    a simply connected nilpotent group in exponential coordinates, multiplied
    with the (terminating) Baker-Campbell-Hausdorff series.
``matrix-embedded``
    a matrix group (``SL(2,R)``, ``SO(3)``) whose elements are matrices; the
    principal logarithm is only used within ``||g - I||_F < window``.

Elements are plain arrays: coordinate vectors for the first two kinds,
square matrices for the last.  Every operation broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import LieAlgebra, ad, is_derivation, nilpotency_step
from .grading import TriDecomposition, decompose_algebra
from .jordan import JordanDecomposition, classify, jordan_additive
from .linalg import LOG_WINDOW, OutOfWindowError, expm, logm_near_identity

CHART_KINDS = ("abelian", "nilpotent-exp", "matrix-embedded")

__all__ = [
    "AbelianChart",
    "NilpotentExpChart",
    "MatrixChart",
    "FlowSpec",
    "OutOfWindowError",
    "central_distance",
    "factorize",
    "flow_apply",
    "group_inv",
    "group_mul",
    "left_invariant_distance",
    "make_chart",
    "uniform_neighborhood_check",
]


class ChartError(ValueError):
    pass


class UnsupportedError(ValueError):
    pass


def _br(c: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...j,ijk->...k", u, v, c)


class GroupChart:
    kind: str
    alg: LieAlgebra

    @property
    def dim(self) -> int:
        return self.alg.dim

    def identity(self) -> np.ndarray:
        raise NotImplementedError

    def exp(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_diff(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``log(a^-1 b)`` in algebra coordinates."""
        return self.log(self.mul(self.inv(a), b))

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
        d = np.linalg.norm(self.log_diff(x, y), axis=-1)
        return float(d) if np.ndim(d) == 0 else d

    def same(self, other: "GroupChart") -> bool:
        return self is other or (
            self.kind == other.kind
            and self.dim == other.dim
            and np.array_equal(self.alg.structure_constants, other.alg.structure_constants)
        )


class AbelianChart(GroupChart):
    kind = "abelian"

    def __init__(self, alg: LieAlgebra):
        if np.any(alg.structure_constants):
            raise ChartError("abelian chart requires an abelian algebra")
        self.alg = alg

    def identity(self):
        return np.zeros(self.dim)

    def exp(self, v):
        return np.array(v, dtype=float)

    def log(self, g):
        return np.array(g, dtype=float)

    def mul(self, a, b):
        return np.asarray(a, dtype=float) + np.asarray(b, dtype=float)

    def inv(self, a):
        return -np.asarray(a, dtype=float)

    def log_diff(self, a, b):
        return np.asarray(b, dtype=float) - np.asarray(a, dtype=float)

    def __repr__(self):
        return f"AbelianChart({self.dim})"


class NilpotentExpChart(GroupChart):
    """Exponential coordinates on a simply connected nilpotent group of step <= 4."""

    kind = "nilpotent-exp"
    MAX_STEP = 4

    def __init__(self, alg: LieAlgebra):
        step = nilpotency_step(alg)
        if step is None:
            raise ChartError(f"{alg} is not nilpotent; exp is not a global chart")
        if step > self.MAX_STEP:
            raise ChartError(f"nilpotency step {step} exceeds supported {self.MAX_STEP}")
        self.alg = alg
        self.step = step
        self.c = alg.structure_constants

    def identity(self):
        return np.zeros(self.dim)

    def exp(self, v):
        return np.array(v, dtype=float)

    def log(self, g):
        return np.array(g, dtype=float)

    def bch(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``log(exp(x) exp(y))``; exact for step <= 4."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = x + y
        if self.step < 2:
            return z
        c = self.c
        xy = _br(c, x, y)
        z = z + 0.5 * xy
        if self.step < 3:
            return z
        x_xy = _br(c, x, xy)
        y_xy = _br(c, y, xy)
        z = z + (x_xy - y_xy) / 12.0
        if self.step < 4:
            return z
        return z - _br(c, y, x_xy) / 24.0

    def mul(self, a, b):
        return self.bch(a, b)

    def inv(self, a):
        return -np.asarray(a, dtype=float)

    def log_diff(self, a, b):
        """BCH of ``-a`` and ``b`` with every bracket taken against ``d = b - a``.

        Equal to ``bch(-a, b)`` since ``[a, a] = 0``, but without the cancellation
        that ``[a, b]`` suffers when ``a`` and ``b`` are large and close.
        """
        x = -np.asarray(a, dtype=float)
        y = np.asarray(b, dtype=float)
        z = y + x
        if self.step < 2:
            return z
        c = self.c
        xd = _br(c, x, z)
        w = z + 0.5 * xd
        if self.step < 3:
            return w
        x_xd = _br(c, x, xd)
        w = w + (x_xd - _br(c, y, xd)) / 12.0
        if self.step < 4:
            return w
        return w - _br(c, y, x_xd) / 24.0

    def __repr__(self):
        return f"NilpotentExpChart({self.alg.name}, step={self.step})"


SL2_BASIS = np.array([[[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
SO3_BASIS = np.array(
    [
        [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ]
)
MATRIX_GROUPS = {"SL(2,R)": SL2_BASIS, "SO(3)": SO3_BASIS}


class MatrixChart(GroupChart):
    """A matrix Lie group with the principal-log chart near the identity."""

    kind = "matrix-embedded"

    def __init__(self, alg: LieAlgebra, group: str, window: float = LOG_WINDOW):
        if group not in MATRIX_GROUPS:
            raise ChartError(f"unknown matrix group {group!r}; known: {sorted(MATRIX_GROUPS)}")
        basis = MATRIX_GROUPS[group]
        if basis.shape[0] != alg.dim:
            raise ChartError(f"{group} has dimension {basis.shape[0]}, algebra has {alg.dim}")
        comm = np.einsum("iab,jbc->ijac", basis, basis) - np.einsum("jab,ibc->ijac", basis, basis)
        want = np.einsum("ijk,kac->ijac", alg.structure_constants, basis)
        if np.max(np.abs(comm - want)) > 1e-12:
            raise ChartError(f"basis matrices of {group} do not realize {alg}")
        self.alg = alg
        self.group = group
        self.window = float(window)
        self.basis = basis
        self.size = basis.shape[1]
        self._flat_pinv = np.linalg.pinv(basis.reshape(alg.dim, -1).T)

    def identity(self):
        return np.eye(self.size)

    def to_matrix(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("...k,kab->...ab", np.asarray(v, dtype=float), self.basis)

    def from_matrix(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return m.reshape(*m.shape[:-2], -1) @ self._flat_pinv.T

    def exp(self, v):
        return expm(self.to_matrix(v))

    def log(self, g):
        return self.from_matrix(logm_near_identity(g, self.window))

    def mul(self, a, b):
        return np.asarray(a) @ np.asarray(b)

    def inv(self, a):
        return np.linalg.inv(a)

    def relation_defect(self, g: np.ndarray) -> float:
        g = np.asarray(g, dtype=float)
        if self.group == "SL(2,R)":
            return float(np.max(np.abs(np.linalg.det(g) - 1.0)))
        eye = np.eye(self.size)
        orth_def = np.max(np.abs(np.swapaxes(g, -1, -2) @ g - eye))
        return float(max(orth_def, np.max(np.abs(np.linalg.det(g) - 1.0))))

    def __repr__(self):
        return f"MatrixChart({self.group})"


def make_chart(kind: str, alg: LieAlgebra, group: str | None = None, window: float | None = None) -> GroupChart:
    if kind == "abelian":
        return AbelianChart(alg)
    if kind == "nilpotent-exp":
        return NilpotentExpChart(alg)
    if kind == "matrix-embedded":
        if group is None:
            raise ChartError("matrix-embedded chart needs a group name")
        return MatrixChart(alg, group, LOG_WINDOW if window is None else window)
    raise ChartError(f"unknown chart kind {kind!r}")


def group_mul(chart: GroupChart, a, b):
    return chart.mul(a, b)


def group_inv(chart: GroupChart, a):
    return chart.inv(a)


def left_invariant_distance(chart: GroupChart, x, y):
    """``||log(x^-1 y)||``; raises OutOfWindowError for matrix charts far from the identity."""
    return chart.distance(x, y)


# ---------------------------------------------------------------------------
# Flows


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A flow of automorphisms.

    ``mode='derivation'``: ``generator`` is the derivation matrix ``D`` and
    ``phi_t = exp o e^{tD} o log`` (abelian / nilpotent-exp charts).
    ``mode='inner'``: ``generator`` holds the coordinates of ``X`` and
    ``phi_t`` is conjugation by ``e^{tX}`` (matrix charts); its derivation is ``ad X``.
    """

    chart: GroupChart
    mode: str
    generator: np.ndarray

    def __post_init__(self):
        gen = np.array(self.generator, dtype=float)
        gen.setflags(write=False)
        object.__setattr__(self, "generator", gen)
        n = self.chart.dim
        if self.mode == "derivation":
            if self.chart.kind == "matrix-embedded":
                raise ChartError("derivation mode needs an abelian or nilpotent-exp chart")
            if gen.shape != (n, n):
                raise ChartError(f"derivation must be {n}x{n}")
            ok, defect = is_derivation(self.chart.alg, gen)
            if not ok:
                raise ChartError(f"not a derivation (Leibniz defect {defect:.3g})")
        elif self.mode == "inner":
            if self.chart.kind != "matrix-embedded":
                raise ChartError("inner mode needs a matrix-embedded chart")
            if gen.shape != (n,):
                raise ChartError(f"inner generator must have {n} coordinates")
        else:
            raise ChartError(f"unknown flow mode {self.mode!r}")

    @cached_property
    def D(self) -> np.ndarray:
        if self.mode == "derivation":
            return np.array(self.generator)
        return ad(self.chart.alg, self.generator)

    @cached_property
    def jordan(self) -> JordanDecomposition:
        return jordan_additive(self.D)

    @cached_property
    def tri(self) -> TriDecomposition:
        return decompose_algebra(self.chart.alg, self.jordan)

    @cached_property
    def flow_type(self) -> str:
        return classify(self.D)

    @cached_property
    def _x_matrix(self) -> np.ndarray:
        return self.chart.to_matrix(self.generator)

    def coord_flow(self, t: float) -> np.ndarray:
        """``e^{tD}``: the flow acting on logarithmic coordinates."""
        return expm(t * self.D)

    def reversed(self) -> "FlowSpec":
        return FlowSpec(self.chart, self.mode, -self.generator)

    def compose(self, other: "FlowSpec") -> "FlowSpec":
        """The flow ``phi o psi`` for commuting ``phi`` (self) and ``psi`` (other)."""
        if not self.chart.same(other.chart) or self.mode != other.mode:
            raise ChartError("flows live on different groups")
        return FlowSpec(self.chart, self.mode, self.generator + other.generator)

    def __repr__(self):
        return f"FlowSpec({self.mode}, {self.chart!r})"


def flow_apply(spec: FlowSpec, t: float, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if spec.mode == "derivation":
        return g @ spec.coord_flow(t).T
    m = expm(t * spec._x_matrix)
    return m @ g @ np.linalg.inv(m)


def flow_apply_times(spec: FlowSpec, times: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Apply ``phi_{times[i]}`` to ``g[i]`` for a stack of elements."""
    times = np.asarray(times, dtype=float)
    g = np.asarray(g, dtype=float)
    if spec.mode == "derivation":
        mats = expm(times[:, None, None] * spec.D)
        return np.einsum("nij,nj->ni", mats, g)
    m = expm(times[:, None, None] * spec._x_matrix)
    return m @ g @ np.linalg.inv(m)


def _log_coords(chart: GroupChart, g: np.ndarray) -> np.ndarray:
    return chart.log(g)


def off_subspace_norm(coords: np.ndarray, basis: np.ndarray) -> np.ndarray | float:
    coords = np.asarray(coords, dtype=float)
    resid = coords - (coords @ basis) @ basis.T if basis.shape[1] else coords
    out = np.linalg.norm(resid, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def central_distance(spec: FlowSpec, g: np.ndarray):
    """Norm of the part of ``log g`` orthogonal to the central subalgebra."""
    return off_subspace_norm(_log_coords(spec.chart, g), spec.tri.zero)


def central_distance_coords(spec: FlowSpec, coords: np.ndarray):
    return off_subspace_norm(coords, spec.tri.zero)


# ---------------------------------------------------------------------------
# Factorization on decomposable groups


@dataclass(frozen=True)
class Factorization:
    unstable: np.ndarray
    central: np.ndarray
    stable: np.ndarray
    residual: float
    iterations: int


class ConvergenceError(ArithmeticError):
    pass


def _require_exp_chart(spec: FlowSpec) -> None:
    if spec.chart.kind not in ("abelian", "nilpotent-exp"):
        raise UnsupportedError("factorization needs an abelian or nilpotent-exp chart")


def _factor_product(chart, bases, theta):
    bp, b0, bm = bases
    k1, k2 = bp.shape[1], b0.shape[1]
    u = theta[..., :k1] @ bp.T
    c = theta[..., k1 : k1 + k2] @ b0.T
    s = theta[..., k1 + k2 :] @ bm.T
    return chart.mul(chart.mul(u, c), s)


def factorize_batch(spec: FlowSpec, g: np.ndarray, tol: float = 1e-12, max_iter: int = 50):
    """Newton solve of ``g = u c s`` in exponential coordinates for a stack ``g`` of shape (M, d).

    Returns ``theta`` of shape (M, d): coordinates of ``log u`` in the unstable
    basis, then ``log c`` in the central basis, then ``log s`` in the stable basis.
    """
    _require_exp_chart(spec)
    chart = spec.chart
    tri = spec.tri
    bases = (tri.plus, tri.zero, tri.minus)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    full = np.hstack(bases)
    theta = np.linalg.solve(full, g.T).T  # linear initial guess
    h = 1e-6
    d = chart.dim
    for it in range(1, max_iter + 1):
        f = _factor_product(chart, bases, theta) - g
        jac = np.empty((theta.shape[0], d, d))
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            jac[:, :, k] = (_factor_product(chart, bases, theta + e) - _factor_product(chart, bases, theta - e)) / (2 * h)
        step = np.linalg.solve(jac, f[..., None])[..., 0]
        theta = theta - step
        if np.max(np.abs(step)) < tol:
            return theta, it
    f = _factor_product(chart, bases, theta) - g
    if np.max(np.abs(f)) > 1e-9:
        raise ConvergenceError(f"factorization did not converge in {max_iter} iterations")
    return theta, max_iter


def factorize(spec: FlowSpec, g: np.ndarray, class_hint: str | None = None) -> Factorization:
    """Unique factorization ``g = u c s`` with ``u in G+``, ``c in G0``, ``s in G-``.

    ``class_hint`` (if given) is checked for decomposability first.
    """
    _require_exp_chart(spec)
    if class_hint is not None:
        from .grading import algebra_decomposability_report

        rep = algebra_decomposability_report(spec.chart.alg, spec.tri, class_hint)
        if rep.verdict != "decomposable":
            raise UnsupportedError(f"group is not known to be decomposable ({rep.reason})")
    theta, iters = factorize_batch(spec, np.asarray(g, dtype=float)[None, :])
    theta = theta[0]
    tri = spec.tri
    k1, k2 = tri.plus.shape[1], tri.zero.shape[1]
    u = tri.plus @ theta[:k1]
    c = tri.zero @ theta[k1 : k1 + k2]
    s = tri.minus @ theta[k1 + k2 :]
    chart = spec.chart
    resid = float(chart.distance(g, chart.mul(chart.mul(u, c), s)))
    return Factorization(u, c, s, resid, iters)


# ---------------------------------------------------------------------------
# Right uniform neighborhoods


@dataclass(frozen=True)
class UniformReport:
    passed: bool
    rho: float
    tau: float
    V_radius: float
    samples: int
    trivial: bool = False


def _ball(rng, n: int, dim: int, radius: float, on_sphere: float = 0.5) -> np.ndarray:
    if dim == 0:
        return np.zeros((n, 0))
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = rng.random(n) ** (1.0 / dim)
    r[: int(on_sphere * n)] = 1.0
    return v * (radius * r)[:, None]


def _signed_axes(dim: int) -> np.ndarray:
    return np.vstack([np.eye(dim), -np.eye(dim)]) if dim else np.zeros((0, 0))


def uniform_neighborhood_check(
    spec: FlowSpec,
    V_radius: float,
    tau: float,
    samples: int = 200,
    seed: int = 0,
    slice_radius: float = 1.0,
    directions: int = 24,
) -> UniformReport:
    """Search the largest ``rho`` with ``x B(e, rho)`` inside ``A = G^{+,0} V`` for sampled ``x``.

    ``V`` is the closed ball of radius ``V_radius`` in ``G-`` and the points
    ``x`` are drawn from a bounded slice of ``G^{+,0} phi_tau(V)``.
    Membership in ``A`` is decided by factorizing and measuring the stable factor.
    """
    _require_exp_chart(spec)
    chart = spec.chart
    tri = spec.tri
    km = tri.minus.shape[1]
    if km == 0:
        return UniformReport(True, float("inf"), tau, V_radius, 0, trivial=True)
    rng = np.random.default_rng(seed)
    b_pz = tri.plus_zero
    p0 = _ball(rng, samples, b_pz.shape[1], slice_radius, on_sphere=0.0) @ b_pz.T if b_pz.shape[1] else np.zeros((samples, chart.dim))
    r = _ball(rng, samples, km, V_radius)
    axes = _signed_axes(km) * V_radius
    r[: len(axes)] = axes[: samples]
    v = r @ tri.minus.T
    x = chart.mul(chart.exp(p0), flow_apply(spec, tau, chart.exp(v)))
    w = rng.normal(size=(directions, chart.dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    w = np.vstack([w, _signed_axes(chart.dim), tri.minus.T, -tri.minus.T])
    xx = np.repeat(x, len(w), axis=0)
    ww = np.tile(w, (len(x), 1))
    k1k2 = tri.plus.shape[1] + tri.zero.shape[1]

    def passes(rho: float) -> bool:
        z = chart.mul(xx, chart.exp(rho * ww))
        theta, _ = factorize_batch(spec, z)
        return bool(np.all(np.linalg.norm(theta[:, k1k2:], axis=1) <= V_radius * (1 + 1e-12)))

    rho_pass = 0.0
    for k in range(30):
        rho = V_radius * 2.0 ** (-k)
        if passes(rho):
            rho_pass = rho
            break
    if rho_pass == 0.0:
        return UniformReport(False, 0.0, tau, V_radius, samples)
    lo, hi = rho_pass, 2 * rho_pass
    if k == 0:
        hi = 4 * V_radius
        if passes(hi):
            return UniformReport(True, hi, tau, V_radius, samples)
    for _ in range(25):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return UniformReport(True, lo, tau, V_radius, samples)


def uniform_threshold_scan(spec: FlowSpec, V_radius: float, taus, **kw) -> tuple[list[UniformReport], float | None]:
    """Run the check over ``taus`` (ascending); return the reports and the smallest tau from which all pass."""
    reports = [uniform_neighborhood_check(spec, V_radius, float(t), **kw) for t in sorted(taus)]
    tau0 = None
    for rep in reversed(reports):
        if not rep.passed:
            break
        tau0 = rep.tau
    return reports, tau0
