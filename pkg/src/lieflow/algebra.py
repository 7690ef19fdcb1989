"""Finite-dimensional real Lie algebras given by structure constants.

An algebra with basis ``e_0 .. e_{n-1}`` is stored as a dense array ``c`` with
``[e_i, e_j] = sum_k c[i, j, k] e_k``.  Vectors are plain coordinate arrays and
linear maps are ``n x n`` matrices acting on coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import orth

JACOBI_TOL = 1e-10
LEIBNIZ_TOL = 1e-10


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    structure_constants: np.ndarray
    labels: tuple[str, ...] = ()
    name: str = ""
    _checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        c = np.array(self.structure_constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise AlgebraError(f"structure constants must be n x n x n, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise AlgebraError("structure constants must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        labels = tuple(self.labels) or tuple(f"e{i}" for i in range(c.shape[0]))
        if len(labels) != c.shape[0]:
            raise AlgebraError("one label per basis vector required")
        object.__setattr__(self, "labels", labels)
        if self._checked:
            asym = np.max(np.abs(c + c.transpose(1, 0, 2)))
            if asym > JACOBI_TOL:
                raise AlgebraError(f"structure constants not antisymmetric (defect {asym:.3g})")
            jd = jacobi_defect(self)
            if jd >= JACOBI_TOL:
                raise AlgebraError(f"Jacobi identity fails (defect {jd:.3g})")

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def basis(self, i: int | str) -> np.ndarray:
        if isinstance(i, str):
            i = self.labels.index(i)
        v = np.zeros(self.dim)
        v[i] = 1.0
        return v

    def vector(self, **coords: float) -> np.ndarray:
        v = np.zeros(self.dim)
        for k, val in coords.items():
            v[self.labels.index(k)] = val
        return v

    def __repr__(self):
        return f"LieAlgebra({self.name or 'unnamed'}, dim={self.dim})"


def unchecked(c: np.ndarray, labels=(), name="") -> LieAlgebra:
    """Build a LieAlgebra without validation (used to probe corrupted constants)."""
    return LieAlgebra(np.asarray(c, dtype=float), tuple(labels), name, _checked=False)


def _check_vec(alg: LieAlgebra, *vs: np.ndarray) -> None:
    for v in vs:
        if np.shape(v)[-1] != alg.dim:
            raise AlgebraError(f"vector of length {np.shape(v)[-1]} does not belong to {alg}")


def bracket(alg: LieAlgebra, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Lie bracket ``[u, v]``; broadcasts over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_vec(alg, u, v)
    return np.einsum("...i,...j,ijk->...k", u, v, alg.structure_constants)


def jacobi_defect(alg: LieAlgebra) -> float:
    c = alg.structure_constants
    t = np.einsum("ijm,mkl->ijkl", c, c)  # [[e_i, e_j], e_k]
    total = t + np.einsum("jkil->ijkl", t) + np.einsum("kijl->ijkl", t)
    return float(np.max(np.abs(total))) if total.size else 0.0


def ad(alg: LieAlgebra, x: np.ndarray) -> np.ndarray:
    """Matrix of ``v -> [x, v]``."""
    x = np.asarray(x, dtype=float)
    _check_vec(alg, x)
    return np.einsum("i,ijk->kj", x, alg.structure_constants)


def derivation_defect(alg: LieAlgebra, m: np.ndarray) -> float:
    """max_ij ||M[e_i,e_j] - [Me_i,e_j] - [e_i,Me_j]||_inf."""
    m = np.asarray(m, dtype=float)
    if m.shape != (alg.dim, alg.dim):
        raise AlgebraError(f"map of shape {m.shape} does not act on {alg}")
    c = alg.structure_constants
    lhs = np.einsum("ijk,lk->ijl", c, m)
    r1 = np.einsum("ai,ajl->ijl", m, c)
    r2 = np.einsum("bj,ibl->ijl", m, c)
    return float(np.max(np.abs(lhs - r1 - r2)))


def is_derivation(alg: LieAlgebra, m: np.ndarray, tol: float = LEIBNIZ_TOL) -> tuple[bool, float]:
    d = derivation_defect(alg, m)
    return d <= tol, d


def killing_form(alg: LieAlgebra) -> np.ndarray:
    c = alg.structure_constants
    k = np.einsum("imk,jkm->ij", c, c)
    return 0.5 * (k + k.T)


def bracket_span(alg: LieAlgebra, a: np.ndarray, b: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of span{[u, v] : u in cols(a), v in cols(b)}."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((alg.dim, 0))
    br = np.einsum("ia,jb,ijk->abk", a, b, alg.structure_constants).reshape(-1, alg.dim)
    if not np.any(br):
        return np.zeros((alg.dim, 0))
    q = orth(br.T, rel_tol)
    # Absolute floor: brackets that are pure rounding noise span nothing.
    if np.max(np.abs(br)) < 1e-12:
        return np.zeros((alg.dim, 0))
    return q


def derived_series(alg: LieAlgebra) -> list[np.ndarray]:
    """[g, g^(1), ...] as orthonormal column bases.

    Stops at ``{0}`` (solvable) or at the first term equal in dimension to its
    predecessor, which is then listed once more to show stabilization.
    """
    cur = np.eye(alg.dim)
    series = [cur]
    while True:
        nxt = bracket_span(alg, cur, cur)
        series.append(nxt)
        if nxt.shape[1] == 0 or nxt.shape[1] == cur.shape[1]:
            return series
        cur = nxt


def lower_central_series(alg: LieAlgebra) -> list[np.ndarray]:
    g = np.eye(alg.dim)
    cur = g
    series = [cur]
    while True:
        nxt = bracket_span(alg, g, cur)
        series.append(nxt)
        if nxt.shape[1] == 0 or nxt.shape[1] == cur.shape[1]:
            return series
        cur = nxt


def is_solvable(alg: LieAlgebra) -> bool:
    return derived_series(alg)[-1].shape[1] == 0


def is_nilpotent(alg: LieAlgebra) -> bool:
    return lower_central_series(alg)[-1].shape[1] == 0


def nilpotency_step(alg: LieAlgebra) -> int | None:
    """Smallest s with g^{s+1} = 0 in the lower central series, or None if not nilpotent."""
    lcs = lower_central_series(alg)
    if lcs[-1].shape[1] != 0:
        return None
    return len(lcs) - 1


def restrict(alg: LieAlgebra, basis: np.ndarray, tol: float = 1e-9, name: str = "") -> LieAlgebra:
    """The subalgebra spanned by the columns of ``basis``, in that basis."""
    basis = np.asarray(basis, dtype=float)
    k = basis.shape[1]
    if k == 0:
        raise AlgebraError("cannot restrict to the zero subspace")
    br = np.einsum("ia,jb,ijl->abl", basis, basis, alg.structure_constants)
    coef, *_ = np.linalg.lstsq(basis, br.reshape(-1, alg.dim).T, rcond=None)
    recon = basis @ coef
    res = float(np.max(np.abs(recon - br.reshape(-1, alg.dim).T))) if br.size else 0.0
    if res > tol:
        raise AlgebraError(f"subspace is not closed under the bracket (residual {res:.3g})")
    c = coef.T.reshape(k, k, k)
    c[np.abs(c) < 1e-14] = 0.0
    return LieAlgebra(c, tuple(f"b{i}" for i in range(k)), name or f"sub({alg.name})")


def nilpotent_subspace(alg: LieAlgebra, basis: np.ndarray) -> bool:
    """Whether the subalgebra spanned by ``basis`` is nilpotent ({0} counts as nilpotent)."""
    if basis.shape[1] == 0:
        return True
    return is_nilpotent(restrict(alg, basis))


# ---------------------------------------------------------------------------
# Built-in algebras


def abelian(n: int = 2) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)), tuple(f"e{i + 1}" for i in range(n)), f"abelian{n}")


def heisenberg() -> LieAlgebra:
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    return LieAlgebra(c, ("X", "Y", "Z"), "heisenberg")


def sl2() -> LieAlgebra:
    # basis H, E, F:  [H,E] = 2E, [H,F] = -2F, [E,F] = H
    c = np.zeros((3, 3, 3))
    c[0, 1, 1], c[1, 0, 1] = 2.0, -2.0
    c[0, 2, 2], c[2, 0, 2] = -2.0, 2.0
    c[1, 2, 0], c[2, 1, 0] = 1.0, -1.0
    return LieAlgebra(c, ("H", "E", "F"), "sl2")


def so3() -> LieAlgebra:
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k], c[j, i, k] = 1.0, -1.0
    return LieAlgebra(c, ("L1", "L2", "L3"), "so3")


def direct_sum(a: LieAlgebra, b: LieAlgebra) -> LieAlgebra:
    n, m = a.dim, b.dim
    c = np.zeros((n + m, n + m, n + m))
    c[:n, :n, :n] = a.structure_constants
    c[n:, n:, n:] = b.structure_constants
    return LieAlgebra(c, a.labels + b.labels, f"{a.name}+{b.name}")


BUILTIN_ALGEBRAS = {
    "abelian1": lambda: abelian(1),
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "abelian4": lambda: abelian(4),
    "heisenberg": heisenberg,
    "sl2": sl2,
    "so3": so3,
}
