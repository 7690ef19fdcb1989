import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm, logm

from lieflow.algebra import abelian, heisenberg, sl2, so3
from lieflow.grading import GradingError
from lieflow.groups import (
    ChartError,
    FlowSpec,
    UnsupportedError,
    central_distance,
    factorize,
    flow_apply,
    flow_apply_times,
    group_inv,
    group_mul,
    left_invariant_distance,
    make_chart,
    uniform_neighborhood_check,
)
from lieflow.linalg import OutOfWindowError

H3 = make_chart("nilpotent-exp", heisenberg())
PLANE = make_chart("abelian", abelian(2))
SL2 = make_chart("matrix-embedded", sl2(), "SL(2,R)")
SO3 = make_chart("matrix-embedded", so3(), "SO(3)")
H3_SADDLE = FlowSpec(H3, "derivation", np.diag([1.0, -1.0, 0.0]))
PLANE_SADDLE = FlowSpec(PLANE, "derivation", np.diag([1.0, -1.0]))
ROTATION = FlowSpec(PLANE, "derivation", np.array([[0.0, -1.0], [1.0, 0.0]]))

small3 = arrays(np.float64, 3, elements=st.floats(-2, 2, allow_nan=False))


def h3_matrix(v):
    """Upper triangular 3x3 realization of the Heisenberg algebra."""
    m = np.zeros((3, 3))
    m[0, 1], m[1, 2], m[0, 2] = v[0], v[1], v[2]
    return m


def h3_from_matrix(m):
    return np.array([m[0, 1], m[1, 2], m[0, 2]])


# group law


def test_abelian_product():
    assert np.array_equal(group_mul(PLANE, np.array([1.0, 2.0]), np.array([3.0, -1.0])), [4.0, 1.0])


def test_heisenberg_bch_xy():
    x, y = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    assert np.allclose(group_mul(H3, x, y), [1.0, 1.0, 0.5], atol=1e-15)


@given(small3, small3)
@settings(max_examples=50, deadline=None)
def test_heisenberg_product_matches_matrix_group(a, b):
    # oracle: multiply the unipotent matrices and take the matrix log
    m = expm(h3_matrix(a)) @ expm(h3_matrix(b))
    oracle = h3_from_matrix(np.real(logm(m)))
    assert np.allclose(group_mul(H3, a, b), oracle, atol=1e-9)


@given(small3)
@settings(max_examples=30, deadline=None)
def test_inverse(a):
    for chart in (H3, make_chart("abelian", abelian(3))):
        assert np.allclose(group_mul(chart, a, group_inv(chart, a)), chart.identity(), atol=1e-14)


@given(small3, small3, small3)
@settings(max_examples=30, deadline=None)
def test_heisenberg_associative(a, b, c):
    lhs = H3.mul(H3.mul(a, b), c)
    rhs = H3.mul(a, H3.mul(b, c))
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("chart", [SL2, SO3], ids=["sl2", "so3"])
def test_matrix_chart_relations(chart):
    rng = np.random.default_rng(85)
    for _ in range(20):
        g = chart.exp(rng.normal(scale=0.8, size=3))
        assert chart.relation_defect(g) < 1e-10
        assert np.allclose(chart.mul(g, chart.inv(g)), np.eye(chart.size), atol=1e-12)
        v = rng.uniform(-0.1, 0.1, size=3)  # well inside the log window
        assert np.allclose(chart.log(chart.exp(v)), v, atol=1e-12)


def test_matrix_chart_checks_group():
    with pytest.raises(ChartError):
        make_chart("matrix-embedded", heisenberg(), "SO(3)")
    with pytest.raises(ChartError):
        make_chart("matrix-embedded", so3(), "SU(2)")
    with pytest.raises(ChartError):
        make_chart("lattice", so3())


# flows


def test_heisenberg_flow_example():
    g = np.array([1.0, 1.0, 0.5])
    assert np.allclose(flow_apply(H3_SADDLE, 1.0, g), [np.e, 1 / np.e, 0.5], atol=1e-14)


def test_flow_at_zero_is_identity(scenarios, rng):
    for sc in scenarios.values():
        spec = sc.flow()
        g = spec.chart.exp(rng.normal(scale=0.3, size=sc.algebra.dim))
        assert np.allclose(flow_apply(spec, 0.0, g), g, atol=1e-15)


def test_rotation_quarter_turn():
    assert np.allclose(flow_apply(ROTATION, np.pi / 2, np.array([1.0, 0.0])), [0.0, 1.0], atol=1e-15)


def test_batched_flow_matches_single(scenarios, rng):
    for sc in scenarios.values():
        spec = sc.flow()
        g = np.array([spec.chart.exp(rng.normal(scale=0.3, size=sc.algebra.dim)) for _ in range(5)])
        t = rng.uniform(-1, 1, size=5)
        batch = flow_apply_times(spec, t, g)
        for i in range(5):
            assert np.allclose(batch[i], flow_apply(spec, t[i], g[i]), atol=1e-13)


def random_element(spec, rng, scale):
    return spec.chart.exp(rng.normal(scale=scale, size=spec.chart.dim))


def test_homomorphism_and_flow_laws(scenarios, rng):
    for name, sc in scenarios.items():
        spec = sc.flow()
        chart = spec.chart
        # matrix charts measure distance in the log window, so stay near e
        scale = 0.1 if chart.kind == "matrix-embedded" else 1.0
        for _ in range(1000 if chart.kind != "matrix-embedded" else 200):
            a, b = random_element(spec, rng, scale), random_element(spec, rng, scale)
            t, s = rng.uniform(-1, 1, size=2)
            lhs = flow_apply(spec, t, chart.mul(a, b))
            rhs = chart.mul(flow_apply(spec, t, a), flow_apply(spec, t, b))
            assert chart.distance(lhs, rhs) < 1e-9, name
            lhs = flow_apply(spec, t + s, a)
            rhs = flow_apply(spec, t, flow_apply(spec, s, a))
            assert chart.distance(lhs, rhs) < 1e-9, name


def test_inner_flow_is_conjugation(rng):
    chart = SL2
    spec = FlowSpec(chart, "inner", np.array([0.0, 1.0, 0.0]))
    x = chart.to_matrix([0.0, 1.0, 0.0])
    g = chart.exp(rng.normal(scale=0.3, size=3))
    t = 0.7
    assert np.allclose(flow_apply(spec, t, g), expm(t * x) @ g @ expm(-t * x), atol=1e-13)


def test_flow_spec_mode_checks():
    with pytest.raises(ValueError):
        FlowSpec(SO3, "derivation", np.zeros((3, 3)))
    with pytest.raises(ValueError):
        FlowSpec(H3, "inner", np.zeros(3))
    with pytest.raises(ValueError):
        FlowSpec(H3, "derivation", np.eye(3))  # not a derivation


# distance


def test_distance_examples():
    assert left_invariant_distance(PLANE, np.array([1.0, 1.0]), np.array([2.0, 1.0])) == pytest.approx(1.0)
    assert left_invariant_distance(H3, H3.identity(), np.array([0.0, 0.0, 0.3])) == pytest.approx(0.3)
    g = np.array([0.3, -0.2, 1.0])
    assert left_invariant_distance(H3, g, g) == 0.0


@given(small3, small3, small3)
@settings(max_examples=50, deadline=None)
def test_distance_left_invariant_and_symmetric(g, x, y):
    d = H3.distance(x, y)
    assert abs(H3.distance(H3.mul(g, x), H3.mul(g, y)) - d) < 1e-10 * (1 + d)
    assert abs(H3.distance(y, x) - d) < 1e-12 * (1 + d)


def test_matrix_distance_left_invariant(rng):
    for chart in (SL2, SO3):
        for _ in range(20):
            x = chart.exp(rng.normal(scale=0.5, size=3))
            y = chart.mul(x, chart.exp(rng.uniform(-0.1, 0.1, size=3)))
            g = chart.exp(rng.normal(scale=0.5, size=3))
            assert abs(chart.distance(chart.mul(g, x), chart.mul(g, y)) - chart.distance(x, y)) < 1e-10


def test_matrix_distance_out_of_window():
    with pytest.raises(OutOfWindowError):
        SO3.distance(SO3.identity(), SO3.exp(np.array([0.0, 0.0, 2.0])))


# central distance and subgroup invariance


def test_central_distance_examples():
    assert central_distance(H3_SADDLE, np.array([0.0, 0.0, 0.7])) == 0.0
    assert central_distance(H3_SADDLE, np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)
    assert central_distance(ROTATION, np.array([1.3, -0.4])) == pytest.approx(0.0, abs=1e-15)


def test_subgroups_flow_invariant(scenarios, rng):
    for name, sc in scenarios.items():
        spec = sc.flow()
        if spec.chart.kind == "matrix-embedded":
            continue
        tri = spec.tri
        for which in ("plus", "zero", "minus"):
            b = tri.subspace(which)
            if not b.shape[1]:
                continue
            for _ in range(20):
                g = b @ rng.normal(size=b.shape[1])
                img = flow_apply(spec, rng.uniform(-1, 1), g)
                resid = img - b @ (b.T @ img)
                assert np.linalg.norm(resid) < 1e-9, (name, which)


def test_contraction_on_stable_subgroup(rng):
    for spec in (PLANE_SADDLE, H3_SADDLE):
        b = spec.tri.minus
        for _ in range(20):
            s = spec.chart.exp(b @ rng.uniform(-1, 1, size=b.shape[1]))
            d = [spec.chart.distance(flow_apply(spec, t, s), spec.chart.identity()) for t in np.linspace(0, 3, 13)]
            assert np.all(np.diff(d) <= 1e-12)
            # phi_tau(V) lands inside V for the unit ball V
            assert d[4] <= np.linalg.norm(spec.chart.log(s)) + 1e-12


# factorization


def test_factorize_round_trip(rng):
    for _ in range(20):
        a, b, c = rng.uniform(-1.5, 1.5, size=3)
        g = H3.mul(H3.mul(np.array([a, 0, 0]), np.array([0, 0, c])), np.array([0, b, 0]))
        f = factorize(H3_SADDLE, g)
        assert np.allclose(f.unstable, [a, 0, 0], atol=1e-10)
        assert np.allclose(f.central, [0, 0, c], atol=1e-10)
        assert np.allclose(f.stable, [0, b, 0], atol=1e-10)
        assert f.residual < 1e-9


def test_factorize_identity():
    f = factorize(H3_SADDLE, H3.identity())
    for part in (f.unstable, f.central, f.stable):
        assert np.array_equal(part, np.zeros(3))


def test_factorize_abelian_split():
    f = factorize(PLANE_SADDLE, np.array([3.0, -2.0]))
    assert np.allclose(f.unstable, [3.0, 0.0])
    assert np.allclose(f.central, [0.0, 0.0])
    assert np.allclose(f.stable, [0.0, -2.0])


def test_factorize_rejects_matrix_and_non_decomposable():
    with pytest.raises(UnsupportedError):
        factorize(FlowSpec(SO3, "inner", np.array([0.0, 0.0, 1.0])), SO3.identity())
    # 'general' with a hyperbolic part gives no decomposability verdict
    with pytest.raises(UnsupportedError):
        factorize(H3_SADDLE, H3.identity(), class_hint="general")
    with pytest.raises(GradingError):
        factorize(H3_SADDLE, H3.identity(), class_hint="semisimple-noncompact")


# uniform neighborhoods


def test_uniform_heisenberg_tau2():
    rep = uniform_neighborhood_check(H3_SADDLE, 0.5, 2.0, samples=60)
    assert rep.passed and rep.rho >= 0.1


def test_uniform_plane_saddle_closed_form():
    rep = uniform_neighborhood_check(PLANE_SADDLE, 0.5, 1.0, samples=100)
    bound = 0.5 * (1 - np.exp(-1))
    assert rep.passed
    assert rep.rho <= bound * (1 + 1e-6)
    assert rep.rho == pytest.approx(bound, rel=1e-3)


def test_uniform_elliptic_trivial():
    rep = uniform_neighborhood_check(ROTATION, 0.5, 1.0)
    assert rep.passed and rep.trivial


def test_uniform_fails_at_tau_zero():
    assert not uniform_neighborhood_check(PLANE_SADDLE, 0.5, 0.0, samples=50).passed
