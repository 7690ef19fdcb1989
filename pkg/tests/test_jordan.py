import warnings

import numpy as np
import pytest
from conftest import jordan_suite, resolvent_parts, sympy_parts
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lieflow.algebra import ad, is_derivation, so3, sl2
from lieflow.jordan import ClusteringWarning, classify, generalized_eigenspaces, jordan_additive


def comm(a, b):
    return a @ b - b @ a


def check_invariants(jd, d, recon=1e-9, commute=1e-8, typing=1e-8):
    n = d.shape[0]
    assert np.max(np.abs(jd.H + jd.E + jd.N - d)) < recon
    for a, b in ((jd.H, jd.E), (jd.H, jd.N), (jd.E, jd.N)):
        assert np.max(np.abs(comm(a, b))) < commute
    assert np.max(np.abs(np.linalg.eigvals(jd.H).imag)) < typing
    assert np.max(np.abs(np.linalg.eigvals(jd.E).real)) < typing
    assert np.max(np.abs(np.linalg.matrix_power(jd.N, n))) < typing


# generalized eigenspaces


def test_eigenspaces_diagonal():
    sd = generalized_eigenspaces(np.diag([1.0, -1.0, 0.0]))
    vals = sorted(v.real for v, m in sd.eigenvalues)
    assert vals == pytest.approx([-1.0, 0.0, 1.0])
    for c in sd.clusters:
        axis = int(np.argmax(np.abs(c.basis[:, 0])))
        assert np.allclose(np.abs(c.basis[:, 0]), np.eye(3)[axis])
        assert [1.0, -1.0, 0.0][axis] == pytest.approx(c.value.real)


def test_eigenspaces_rotation():
    sd = generalized_eigenspaces(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert len(sd.clusters) == 1
    c = sd.clusters[0]
    assert c.value == pytest.approx(1j)
    assert c.basis.shape == (2, 2)
    assert np.linalg.matrix_rank(c.basis) == 2
    assert sorted(sd.eigenvalues, key=lambda p: p[0].imag) == [(pytest.approx(-1j), 1), (pytest.approx(1j), 1)]


def test_eigenspaces_jordan_block():
    d = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert np.array_equal((d - np.eye(2)) @ (d - np.eye(2)), np.zeros((2, 2)))
    sd = generalized_eigenspaces(d)
    assert len(sd.clusters) == 1
    assert sd.clusters[0].multiplicity == 2
    assert sd.clusters[0].basis.shape == (2, 2)


@pytest.mark.parametrize("case", range(20))
def test_eigenspaces_span_and_invariant(case):
    d, *_ = jordan_suite(seed=100 + case, count=1)[0]
    sd = generalized_eigenspaces(d)
    assert sum(m for _, m in sd.eigenvalues) == 6
    b = sd.basis
    assert b.shape == (6, 6)
    assert np.linalg.matrix_rank(b) == 6
    for c in sd.clusters:
        # D c.basis stays in span(c.basis)
        coef, *_ = np.linalg.lstsq(c.basis, d @ c.basis, rcond=None)
        assert np.max(np.abs(c.basis @ coef - d @ c.basis)) < 1e-8


def test_near_degenerate_spectrum_warns():
    d = np.diag([1.0, 1.0 + 1.5e-7])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sd = generalized_eigenspaces(d, tol=1e-7)
    assert sd.ambiguous
    assert any(issubclass(w.category, ClusteringWarning) for w in caught)


# additive decomposition: worked cases


def test_jordan_block_parts():
    jd = jordan_additive(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(jd.H, np.eye(2), atol=1e-12)
    assert np.allclose(jd.E, 0, atol=1e-12)
    assert np.allclose(jd.N, [[0.0, 1.0], [0.0, 0.0]], atol=1e-12)


def test_rotation_parts():
    d = np.array([[0.0, -1.0], [1.0, 0.0]])
    jd = jordan_additive(d)
    assert np.allclose(jd.H, 0, atol=1e-12)
    assert np.allclose(jd.E, d, atol=1e-12)
    assert np.allclose(jd.N, 0, atol=1e-12)


def test_zero_parts():
    jd = jordan_additive(np.zeros((3, 3)))
    for m in (jd.H, jd.E, jd.N):
        assert np.array_equal(m, np.zeros((3, 3)))


def test_diagonal_parts():
    d = np.diag([1.0, -1.0, 0.0])
    jd = jordan_additive(d)
    assert np.allclose(jd.H, d, atol=1e-12)
    assert np.allclose(jd.E, 0, atol=1e-12)
    assert np.allclose(jd.N, 0, atol=1e-12)


def test_parts_are_exactly_real():
    d = np.array([[1.0, -2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 3.0]])
    jd = jordan_additive(d)
    for m in (jd.H, jd.E, jd.N):
        assert m.dtype == np.float64


# oracles


@pytest.mark.parametrize(
    "d",
    [
        [[1, 1], [0, 1]],
        [[0, -1], [1, 0]],
        [[2, 1, 0], [0, 2, 0], [0, 0, -1]],
        [[1, -2, 0], [2, 1, 0], [0, 0, 3]],
        [[0, -1, 1, 0], [1, 0, 0, 1], [0, 0, 0, -1], [0, 0, 1, 0]],
        [[3, 1, 2], [-1, 1, 0], [0, 0, 2]],
    ],
)
def test_matches_sympy_jordan_form(d):
    d = np.array(d, dtype=float)
    H, E, N = sympy_parts(d)
    jd = jordan_additive(d)
    assert np.allclose(jd.H, H, atol=1e-9)
    assert np.allclose(jd.E, E, atol=1e-9)
    assert np.allclose(jd.N, N, atol=1e-9)


def catalog_derivations(scenarios):
    for name, sc in scenarios.items():
        yield name, sc.algebra, sc.flow().D


def test_matches_resolvent_oracle_on_catalog(scenarios):
    for name, _, d in catalog_derivations(scenarios):
        H, E, N = resolvent_parts(d)
        jd = jordan_additive(d)
        assert np.max(np.abs(jd.H - H)) < 1e-8, name
        assert np.max(np.abs(jd.E - E)) < 1e-8, name
        assert np.max(np.abs(jd.N - N)) < 1e-8, name


def test_matches_resolvent_oracle_on_suite():
    for d, *_ in jordan_suite(seed=7, count=25):
        H, E, _ = resolvent_parts(d)
        jd = jordan_additive(d)
        assert np.max(np.abs(jd.H - H)) < 1e-8
        assert np.max(np.abs(jd.E - E)) < 1e-8


def test_suite_matches_construction():
    for d, H, E, N in jordan_suite(seed=3, count=30):
        jd = jordan_additive(d)
        check_invariants(jd, d)
        assert np.max(np.abs(jd.H - H)) < 1e-7
        assert np.max(np.abs(jd.E - E)) < 1e-7


def test_derivation_closure_on_catalog(scenarios):
    for name, alg, d in catalog_derivations(scenarios):
        jd = jordan_additive(d)
        for part, m in jd.parts().items():
            ok, defect = is_derivation(alg, m, tol=1e-9)
            assert ok, (name, part, defect)


def test_independent_of_basis_order(rng):
    d, *_ = jordan_suite(seed=11, count=1)[0]
    perm = rng.permutation(6)
    p = np.eye(6)[perm]
    jd = jordan_additive(d)
    jp = jordan_additive(p @ d @ p.T)
    assert np.allclose(p @ jd.H @ p.T, jp.H, atol=1e-9)
    assert np.allclose(p @ jd.E @ p.T, jp.E, atol=1e-9)


@given(arrays(np.int64, (4, 4), elements=st.integers(-3, 3)))
@settings(max_examples=40, deadline=None)
def test_random_integer_matrices(m):
    d = m.astype(float)
    jd = jordan_additive(d)
    assert np.max(np.abs(jd.H + jd.E + jd.N - d)) < 1e-9
    # integer matrices can carry defective eigenvalues: commutation and
    # nilpotency hold at the cube-root conditioning of the spectrum
    for a, b in ((jd.H, jd.E), (jd.H, jd.N), (jd.E, jd.N)):
        assert np.max(np.abs(comm(a, b))) < 1e-4


# classification


def test_classify_nilpotent_ad_e():
    g = sl2()
    a = ad(g, g.basis("E"))
    assert np.allclose(np.linalg.matrix_power(a, 3), 0)
    assert classify(a) == "nilpotent"


def test_classify_so3_elliptic(rng):
    g = so3()
    for _ in range(50):
        assert classify(ad(g, rng.normal(size=3))) == "elliptic"


def test_classify_examples():
    assert classify(np.diag([1.0, -1.0, 0.0])) == "hyperbolic"
    assert classify(np.zeros((2, 2))) == "nilpotent"
    assert classify(np.array([[1.0, 1.0], [0.0, 1.0]])) == "mixed"
    assert classify(np.array([[0.0, -1.0], [1.0, 0.0]])) == "elliptic"
