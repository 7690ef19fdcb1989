"""Eigenspace layers of the hyperbolic part and the unstable/central/stable splitting."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import (
    LieAlgebra,
    bracket,
    is_solvable,
    killing_form,
    lower_central_series,
    restrict,
)
from .jordan import JordanDecomposition
from .linalg import orth, smallest_right_singular, span_residual

CLASS_HINTS = ("solvable", "semisimple-compact", "semisimple-noncompact", "general")


class GradingError(ValueError):
    pass


class SignAmbiguityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EigenLayer:
    lam: float
    basis: np.ndarray  # orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class TriDecomposition:
    plus: np.ndarray
    zero: np.ndarray
    minus: np.ndarray
    layers: tuple[EigenLayer, ...]
    lam_tol: float
    ambiguous: bool = False

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.plus.shape[1], self.zero.shape[1], self.minus.shape[1]

    def subspace(self, which: str) -> np.ndarray:
        return {"plus": self.plus, "zero": self.zero, "minus": self.minus}[which]

    @property
    def plus_zero(self) -> np.ndarray:
        return orth(np.hstack([self.plus, self.zero]))

    @property
    def minus_zero(self) -> np.ndarray:
        return orth(np.hstack([self.minus, self.zero]))


def lambda_tol(jd: JordanDecomposition) -> float:
    rho = float(np.max(np.abs(np.linalg.eigvals(jd.H)))) if jd.H.size else 0.0
    return 1e-8 * (1.0 + rho)


def layer_decomposition(alg: LieAlgebra, jd: JordanDecomposition) -> list[EigenLayer]:
    h = jd.H
    if h.shape != (alg.dim, alg.dim):
        raise GradingError("decomposition does not act on this algebra")
    vals = np.linalg.eigvals(h)
    tol = lambda_tol(jd)
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-6 * (1.0 + np.max(np.abs(vals), initial=0.0)):
        raise GradingError("hyperbolic part has non-real spectrum")
    reals = np.sort(vals.real)
    groups: list[list[float]] = []
    for v in reals:
        if groups and abs(v - groups[-1][-1]) < max(1e-6 * (1 + abs(v)), tol):
            groups[-1].append(v)
        else:
            groups.append([v])
    layers = []
    n = alg.dim
    for g in groups:
        lam = float(np.mean(g))
        if abs(lam) < tol:
            lam = 0.0
        basis = smallest_right_singular(h - lam * np.eye(n), len(g))
        basis = orth(np.real(basis))
        resid = float(np.max(np.abs(h @ basis - lam * basis)))
        if resid > 1e-6 * (1 + abs(lam)):
            raise GradingError(f"hyperbolic part is not semisimple at eigenvalue {lam:g}")
        layers.append(EigenLayer(lam, basis))
    return layers


def tri_decomposition(alg: LieAlgebra, layers: list[EigenLayer], lam_tol: float | None = None) -> TriDecomposition:
    if lam_tol is None:
        rho = max((abs(l.lam) for l in layers), default=0.0)
        lam_tol = 1e-8 * (1.0 + rho)
    n = alg.dim
    parts: dict[str, list[np.ndarray]] = {"plus": [], "zero": [], "minus": []}
    ambiguous = False
    for layer in layers:
        if lam_tol <= abs(layer.lam) < 2 * lam_tol:
            ambiguous = True
        if abs(layer.lam) < lam_tol:
            parts["zero"].append(layer.basis)
        elif layer.lam > 0:
            parts["plus"].append(layer.basis)
        else:
            parts["minus"].append(layer.basis)
    if ambiguous:
        warnings.warn("eigenvalue sign close to the zero threshold", SignAmbiguityWarning, stacklevel=2)

    def stack(bs):
        return orth(np.hstack(bs)) if bs else np.zeros((n, 0))

    tri = TriDecomposition(stack(parts["plus"]), stack(parts["zero"]), stack(parts["minus"]), tuple(layers), lam_tol, ambiguous)
    if sum(tri.dims) != n:
        raise GradingError(f"subspace dimensions {tri.dims} do not add up to {n}")
    return tri


def decompose_algebra(alg: LieAlgebra, jd: JordanDecomposition) -> TriDecomposition:
    return tri_decomposition(alg, layer_decomposition(alg, jd))


def bracket_grading_defect(alg: LieAlgebra, layers: list[EigenLayer]) -> float:
    """Largest component of ``[g_lam, g_mu]`` lying outside ``g_{lam+mu}``.

    Components are read off in the direct-sum decomposition given by the
    layers, not by orthogonal projection.
    """
    v = np.hstack([l.basis for l in layers])
    if v.shape[1] != alg.dim:
        raise GradingError("layers do not span the algebra")
    vinv = np.linalg.inv(v)
    offsets = np.cumsum([0] + [l.dim for l in layers])
    lams = np.array([l.lam for l in layers])
    tol = 1e-6 * (1.0 + np.max(np.abs(lams), initial=0.0))
    worst = 0.0
    for a, la in enumerate(layers):
        for b, lb in enumerate(layers):
            br = bracket(alg, la.basis.T[:, None, :], lb.basis.T[None, :, :]).reshape(-1, alg.dim)
            coeff = br @ vinv.T
            target = np.nonzero(np.abs(lams - (la.lam + lb.lam)) < tol)[0]
            keep = np.zeros(alg.dim, dtype=bool)
            for t in target:
                keep[offsets[t] : offsets[t + 1]] = True
            outside = coeff[:, ~keep] @ v[:, ~keep].T
            if outside.size:
                worst = max(worst, float(np.max(np.linalg.norm(outside, axis=1))))
    return worst


def subalgebra_residual(alg: LieAlgebra, basis: np.ndarray) -> float:
    """Largest distance of a bracket of basis vectors from the span."""
    worst = 0.0
    for i in range(basis.shape[1]):
        for j in range(basis.shape[1]):
            worst = max(worst, span_residual(bracket(alg, basis[:, i], basis[:, j]), basis))
    return worst


def invariance_residual(m: np.ndarray, basis: np.ndarray) -> float:
    if basis.shape[1] == 0:
        return 0.0
    return max(span_residual(m @ basis[:, i], basis) for i in range(basis.shape[1]))


def subspace_is_nilpotent(alg: LieAlgebra, basis: np.ndarray) -> bool:
    if basis.shape[1] == 0:
        return True
    return lower_central_series(restrict(alg, basis))[-1].shape[1] == 0


@dataclass(frozen=True)
class DecomposabilityReport:
    verdict: str  # 'decomposable' | 'not decomposable' | 'unknown'
    class_hint: str
    solvable: bool
    killing_rank: int
    killing_negative_definite: bool
    zero_spans: bool
    reason: str


def algebra_decomposability_report(alg: LieAlgebra, tri: TriDecomposition, class_hint: str) -> DecomposabilityReport:
    if class_hint not in CLASS_HINTS:
        raise GradingError(f"unknown class hint {class_hint!r}")
    solv = is_solvable(alg)
    k = killing_form(alg)
    ev = np.linalg.eigvalsh(k)
    scale = max(1.0, float(np.max(np.abs(ev))))
    rank = int(np.sum(np.abs(ev) > 1e-9 * scale))
    negdef = bool(np.all(ev < -1e-9 * scale))
    semisimple = rank == alg.dim
    if class_hint == "solvable" and not solv:
        raise GradingError("class hint 'solvable' but the derived series does not reach {0}")
    if class_hint.startswith("semisimple") and not semisimple:
        raise GradingError(f"class hint {class_hint!r} but the Killing form is degenerate")
    if class_hint == "semisimple-compact" and not negdef:
        raise GradingError("class hint 'semisimple-compact' but the Killing form is not negative definite")
    if class_hint == "semisimple-noncompact" and negdef:
        raise GradingError("class hint 'semisimple-noncompact' but the Killing form is negative definite")
    zero_spans = tri.zero.shape[1] == alg.dim
    if class_hint == "solvable":
        verdict, reason = "decomposable", "solvable groups are decomposable by any flow"
    elif class_hint.startswith("semisimple"):
        if zero_spans:
            verdict, reason = "decomposable", "semisimple and the central part is everything"
        else:
            verdict, reason = "not decomposable", "semisimple with a nontrivial hyperbolic part"
    elif zero_spans:
        verdict, reason = "decomposable", "the central part is everything"
    else:
        verdict, reason = "unknown", "no applicable rule for general groups"
    return DecomposabilityReport(verdict, class_hint, solv, rank, negdef, zero_spans, reason)
