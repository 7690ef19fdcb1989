"""Real additive Jordan-Chevalley decomposition ``D = H + E + N``.

``H`` is semisimple with real spectrum, ``E`` semisimple with imaginary
spectrum, ``N`` nilpotent, and the three commute.  The construction goes
through real generalized eigenspaces: on the space belonging to the
eigenvalue cluster ``a +- bi`` the map ``H`` is ``a * I`` and ``E`` is the
rotation part of the semisimple piece of ``D``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

COMMUTE_TOL = 1e-8


class NumericalDegeneracyError(ArithmeticError):
    pass


class ClusteringWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EigenCluster:
    """One real generalized eigenspace.

    ``value`` has non-negative imaginary part; a non-real value stands for the
    conjugate pair, and then ``basis`` has ``2 * multiplicity`` columns laid out
    as ``[Re W | Im W]`` for a complex basis ``W`` of the ``value`` eigenspace.
    """

    value: complex
    multiplicity: int
    basis: np.ndarray
    complex_basis: np.ndarray | None = None

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0


@dataclass(frozen=True)
class SpectralData:
    clusters: tuple[EigenCluster, ...]
    tol: float
    ambiguous: bool = False

    @property
    def eigenvalues(self) -> list[tuple[complex, int]]:
        out = []
        for c in self.clusters:
            out.append((c.value, c.multiplicity))
            if not c.is_real:
                out.append((c.value.conjugate(), c.multiplicity))
        return out

    @property
    def basis(self) -> np.ndarray:
        return np.hstack([c.basis for c in self.clusters])


@dataclass(frozen=True)
class JordanDecomposition:
    H: np.ndarray
    E: np.ndarray
    N: np.ndarray
    spectral: SpectralData

    @property
    def D(self) -> np.ndarray:
        return self.H + self.E + self.N

    def parts(self) -> dict[str, np.ndarray]:
        return {"H": self.H, "E": self.E, "N": self.N}


def default_tol(d: np.ndarray) -> float:
    rho = float(np.max(np.abs(np.linalg.eigvals(d)))) if d.size else 0.0
    return max(1e-7 * rho, 1e-10)


def _single_linkage(vals: np.ndarray, tol: float) -> list[list[int]]:
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) < tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _kernel_power(d: np.ndarray, mu: complex, m: int) -> tuple[np.ndarray, float]:
    """Basis of ker (D - mu)^m (real mu) or ker (D^2 - 2 Re mu D + |mu|^2)^m, plus fit quality.

    Returns (complex basis of ker (D - mu)^m, largest selected singular value
    relative to the operator scale).
    """
    n = d.shape[0]
    a = d - mu * np.eye(n)
    p = np.linalg.matrix_power(a, m)
    _, s, vh = np.linalg.svd(p)
    w = vh[n - m :].conj().T
    scale = max(1.0, float(np.linalg.norm(a, 2))) ** m
    return w, float(s[n - m] / scale) if m else 0.0


def _split(d: np.ndarray, vals: np.ndarray, idx: list[int], tol: float, floor: float) -> list[list[int]]:
    """Recursively split a cluster whose members are not a single defective eigenvalue."""
    if len(idx) == 1:
        return [idx]
    mu = complex(np.mean(vals[idx]))
    _, fit = _kernel_power(d, mu, len(idx))
    if fit <= 1e-9 or tol <= floor:
        return [idx]
    out = []
    sub_tol = max(tol / 10.0, floor)
    for grp in _single_linkage(vals[idx], sub_tol):
        out.extend(_split(d, vals, [idx[g] for g in grp], sub_tol, floor))
    return out


def _conjugation_closed(members: np.ndarray, tol: float) -> bool:
    # LAPACK returns eigenvalues of real matrices in exact conjugate pairs, so a
    # real (possibly defective, hence split) eigenvalue forms a conjugation-closed group.
    return all(np.min(np.abs(members - v.conjugate())) <= tol for v in members)


def generalized_eigenspaces(d: np.ndarray, tol: float | None = None) -> SpectralData:
    """Real generalized eigenspaces of ``d``.

    ``tol`` is the resolution below which eigenvalues are considered equal
    (default ``1e-7 * spectral radius``, floor ``1e-10``).  Defective
    eigenvalues split under rounding by roughly ``(u ||D||)^(1/m)``, so the
    first merge pass uses the larger of ``tol`` and that defect scale, and any
    merged cluster that is not a single eigenvalue is split again.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("square matrix required")
    if not np.all(np.isfinite(d)):
        raise ValueError("matrix must be finite")
    n = d.shape[0]
    if tol is None:
        tol = default_tol(d)
    vals = np.linalg.eigvals(d)
    scale = max(1.0, float(np.linalg.norm(d, 2)))
    rho = max(1.0, float(np.max(np.abs(vals)))) if n else 1.0
    defect_tol = rho * (np.finfo(float).eps * scale * 1e2) ** (1.0 / max(n, 1))
    merge_tol = max(tol, defect_tol)

    groups = []
    for grp in _single_linkage(vals, merge_tol):
        groups.extend(_split(d, vals, grp, merge_tol, tol))

    centers = [complex(np.mean(vals[g])) for g in groups]
    ambiguous = False
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            gap = min(abs(vals[a] - vals[b]) for a in groups[i] for b in groups[j])
            if gap < 2 * tol:
                ambiguous = True
    if ambiguous:
        warnings.warn("eigenvalue clusters close to the merge threshold", ClusteringWarning, stacklevel=2)

    clusters = []
    used = [False] * len(groups)
    for i, (g, mu) in enumerate(zip(groups, centers)):
        if used[i]:
            continue
        used[i] = True
        m = len(g)
        if _conjugation_closed(vals[g], 1e-9 * scale):
            # real eigenvalue (its conjugate partner, if split off numerically, is itself)
            mu_r = mu.real
            w, _ = _kernel_power(d, mu_r, m)
            basis = np.real_if_close(w, tol=1e6)
            if np.iscomplexobj(basis):
                # kernel of a real matrix: rotate to a real basis
                u, _, _ = np.linalg.svd(np.hstack([w.real, w.imag]))
                basis = u[:, :m]
            clusters.append(EigenCluster(complex(mu_r, 0.0), m, np.asarray(basis, dtype=float)))
            continue
        # conjugate partner
        partner = None
        for j in range(len(groups)):
            if not used[j] and len(groups[j]) == m and abs(centers[j] - mu.conjugate()) < max(merge_tol, 1e-8 * scale):
                partner = j
                break
        if partner is None:
            raise NumericalDegeneracyError(f"no conjugate partner for eigenvalue cluster {mu:.6g}")
        used[partner] = True
        if mu.imag < 0:
            mu = mu.conjugate()
        mu = complex(0.5 * (mu.real + centers[partner].real), 0.5 * (mu.imag + abs(centers[partner].imag)))
        w, _ = _kernel_power(d, mu, m)
        clusters.append(EigenCluster(mu, m, np.hstack([w.real, w.imag]), w))

    clusters.sort(key=lambda c: (c.value.real, c.value.imag))
    return SpectralData(tuple(clusters), tol, ambiguous)


def jordan_additive(d: np.ndarray, tol: float | None = None) -> JordanDecomposition:
    d = np.asarray(d, dtype=float)
    spec = generalized_eigenspaces(d, tol)
    n = d.shape[0]
    if n == 0:
        z = np.zeros((0, 0))
        return JordanDecomposition(z, z, z, spec)
    v = spec.basis
    h_blk = np.zeros((n, n))
    e_blk = np.zeros((n, n))
    pos = 0
    for c in spec.clusters:
        k = c.basis.shape[1]
        a = c.value.real
        h_blk[pos : pos + k, pos : pos + k] = a * np.eye(k)
        if not c.is_real:
            m = c.multiplicity
            b = c.value.imag
            e_blk[pos : pos + m, pos + m : pos + 2 * m] = b * np.eye(m)
            e_blk[pos + m : pos + 2 * m, pos : pos + m] = -b * np.eye(m)
        pos += k
    if pos != n:
        raise NumericalDegeneracyError(f"generalized eigenspaces span {pos} of {n} dimensions")
    vinv = np.linalg.inv(v)
    hmat = v @ h_blk @ vinv
    emat = v @ e_blk @ vinv
    nmat = d - hmat - emat
    for name, a, b in (("H,E", hmat, emat), ("H,N", hmat, nmat), ("E,N", emat, nmat)):
        defect = float(np.max(np.abs(a @ b - b @ a)))
        if defect > COMMUTE_TOL:
            raise NumericalDegeneracyError(f"parts {name} fail to commute (defect {defect:.3g})")
    return JordanDecomposition(hmat, emat, nmat, spec)


def classify(d: np.ndarray, tol: float | None = None) -> str:
    """One of 'hyperbolic', 'elliptic', 'nilpotent', 'mixed'.  The zero map is 'nilpotent'."""
    d = np.asarray(d, dtype=float)
    scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    small = 1e-9 * scale if tol is None else tol
    if not d.size or np.max(np.abs(d)) <= small:
        return "nilpotent"
    jd = jordan_additive(d)
    zh = np.max(np.abs(jd.H)) <= small
    ze = np.max(np.abs(jd.E)) <= small
    zn = np.max(np.abs(jd.N)) <= small
    if zh and ze:
        return "nilpotent"
    if zh and zn:
        return "elliptic"
    if ze and zn:
        return "hyperbolic"
    return "mixed"
