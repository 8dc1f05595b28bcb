import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leapdg.discretization import (build_discretization, element_nodes, l2_inner_product,
                                   project_function)
from leapdg.errors import ReferenceElementError
from leapdg.mesh import build_mesh, generate_structured_square
from leapdg.quadrature import triangle_quadrature
from leapdg.reference import build_reference_operators

from oracles import PhysicalPolynomial, segment_rule

REF_VERTS = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


def test_linear_nodes_are_vertices():
    ops = build_reference_operators(1)
    assert ops.Np == 3
    assert sorted(zip(ops.r, ops.s)) == sorted(map(tuple, REF_VERTS))


def test_degree_four_counts():
    ops = build_reference_operators(4)
    assert ops.Np == 15
    assert ops.face_nodes.shape == (3, 5)


@pytest.mark.parametrize("N", [0, 13])
def test_order_out_of_range(N):
    with pytest.raises(ReferenceElementError):
        build_reference_operators(N)


def test_dr_of_r_squared():
    ops = build_reference_operators(2)
    np.testing.assert_allclose(ops.Dr @ ops.r**2, 2 * ops.r, atol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 12])
def test_operator_invariants(N):
    ops = build_reference_operators(N)
    one = np.ones(ops.Np)
    np.testing.assert_allclose(ops.Dr @ one, 0, atol=1e-11)
    np.testing.assert_allclose(ops.Ds @ one, 0, atol=1e-11)
    for a in range(N + 1):
        for b in range(N + 1 - a):
            f = ops.r**a * ops.s**b
            dfr = a * ops.r**max(a - 1, 0) * ops.s**b
            dfs = b * ops.r**a * ops.s**max(b - 1, 0)
            np.testing.assert_allclose(ops.Dr @ f, dfr, atol=1e-9)
            np.testing.assert_allclose(ops.Ds @ f, dfs, atol=1e-9)
    np.testing.assert_allclose(ops.M, ops.M.T, atol=1e-14)
    assert np.linalg.eigvalsh(ops.M).min() > 0
    assert np.isfinite(np.linalg.cond(ops.V))
    # face node lists pick exactly the nodes on each edge
    on_edge = [np.abs(ops.s + 1) < 1e-12, np.abs(ops.r + ops.s) < 1e-12, np.abs(ops.r + 1) < 1e-12]
    for f in range(3):
        assert sorted(ops.face_nodes[f]) == sorted(np.flatnonzero(on_edge[f]))


@pytest.mark.parametrize("N", [1, 2, 4, 7])
def test_lift_matches_edge_quadrature(N, rng):
    ops = build_reference_operators(N)
    nodes = np.column_stack([ops.r, ops.s])
    u = PhysicalPolynomial(N, ops.r, ops.s, rng.standard_normal(ops.Np))
    basis = [PhysicalPolynomial(N, ops.r, ops.s, e) for e in np.eye(ops.Np)]
    ML = ops.M @ ops.lift
    Nfp = ops.Nfp
    for f, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        x, y, w = segment_rule(REF_VERTS[a], REF_VERTS[b], n=N + 3)
        length = np.linalg.norm(REF_VERTS[b] - REF_VERTS[a])
        utrace = u(nodes[ops.face_nodes[f], 0], nodes[ops.face_nodes[f], 1])
        via_lift = 0.5 * length * ML[:, f * Nfp:(f + 1) * Nfp] @ utrace
        dense = np.array([np.sum(w * u(x, y) * phi(x, y)) for phi in basis])
        np.testing.assert_allclose(via_lift, dense, atol=1e-9)


def test_quadrature_integrates_monomials():
    r, s, w = triangle_quadrature(10)
    assert w.sum() == pytest.approx(2.0, abs=1e-14)
    # integral of (1 + r) over the reference triangle: 2 - 2/3 = 4/3
    assert np.sum(w * (1 + r)) == pytest.approx(4 / 3, abs=1e-14)
    assert np.sum(w * r * s) == pytest.approx(np.sum(w * r * s))


def test_project_constant_and_linear():
    mesh = generate_structured_square(2)
    ops = build_reference_operators(3)
    np.testing.assert_array_equal(project_function(ops, mesh, 3, lambda x, y: 1.0), 1.0)
    x, y = element_nodes(ops, mesh, 5)
    np.testing.assert_allclose(project_function(ops, mesh, 5, lambda x, y: 2 * x - y),
                               2 * x - y, atol=1e-15)


def test_project_rejects_non_finite():
    mesh = generate_structured_square(1)
    ops = build_reference_operators(2)
    with pytest.raises(ValueError, match="non-finite"), np.errstate(divide="ignore"):
        project_function(ops, mesh, 0, lambda x, y: np.log(x + 1))


def test_interpolation_error_decreases_with_degree():
    mesh = build_mesh(np.array([[0.1, 0.0], [0.9, 0.2], [0.3, 0.8]]), [[0, 1, 2]])
    f = lambda x, y: np.sin(np.pi * x * y)
    errs = []
    for N in range(1, 9):
        ops = build_reference_operators(N)
        vals = project_function(ops, mesh, 0, f)
        assert np.max(np.abs(vals - f(*element_nodes(ops, mesh, 0)))) == 0.0
        r, s, w = triangle_quadrature(30)
        interp = ops.interpolation_matrix(r, s)
        v = mesh.vertices
        xq = v[0, 0] + 0.5 * (r + 1) * (v[1, 0] - v[0, 0]) + 0.5 * (s + 1) * (v[2, 0] - v[0, 0])
        yq = v[0, 1] + 0.5 * (r + 1) * (v[1, 1] - v[0, 1]) + 0.5 * (s + 1) * (v[2, 1] - v[0, 1])
        errs.append(np.sqrt(mesh.jacobians[0] * np.sum(w * (interp @ vals - f(xq, yq))**2)))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_interpolation_rate_under_refinement():
    f = lambda x, y: np.exp(x) * np.cos(2 * y)
    from leapdg.analysis import l2_error
    from leapdg.semidiscrete import FieldState
    N = 2
    errs, hs = [], []
    for n in (4, 8, 16):
        disc = build_discretization(generate_structured_square(n), N)
        st_ = FieldState(disc.interpolate(f), 0 * disc.x, 0 * disc.x)
        e = l2_error(disc, st_, lambda x, y, t: (f(x, y), 0 * x, 0 * x), 0.0, 0.0)["Ex"]
        errs.append(e)
        hs.append(disc.mesh.h.max())
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= N + 0.5


def test_l2_inner_product_examples():
    mesh = build_mesh(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.5]]), [[0, 1, 2]])
    ops = build_reference_operators(3)
    one = np.ones(ops.Np)
    A = mesh.areas[0]
    assert l2_inner_product(ops, mesh, 0, one, one) == pytest.approx(A)
    assert l2_inner_product(ops, mesh, 0, one, one, 2.5) == pytest.approx(2.5 * A)

    ref = build_mesh(REF_VERTS, [[0, 1, 2]])
    x, y = element_nodes(ops, ref, 0)
    # with a = r + 1, b = s + 1 the triangle is a, b >= 0, a + b <= 2 and
    # the integral of a*b is 2^4 / 4! = 2/3
    assert l2_inner_product(ops, ref, 0, x + 1, y + 1) == pytest.approx(2 / 3, abs=1e-13)
    assert l2_inner_product(ops, ref, 0, x, y) == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        l2_inner_product(ops, ref, 0, x[:-1], y)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 10.0))
def test_physical_mass_spd(N, scale):
    mesh = build_mesh(np.array([[0.0, 0.0], [scale, 0.0], [0.3 * scale, 0.7 * scale]]),
                      [[0, 1, 2]])
    ops = build_reference_operators(N)
    assert np.linalg.eigvalsh(mesh.jacobians[0] * ops.M).min() > 0


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_trace_nodes_coincide(N):
    disc = build_discretization(generate_structured_square(3), N)
    fx, fy = disc.face_x.reshape(-1), disc.face_y.reshape(-1)
    inner = ~disc.boundary[..., None].repeat(disc.ops.Nfp, axis=2)
    ext = disc.exterior_index
    np.testing.assert_allclose(fx[ext][inner], disc.face_x[inner], atol=1e-10)
    np.testing.assert_allclose(fy[ext][inner], disc.face_y[inner], atol=1e-10)
