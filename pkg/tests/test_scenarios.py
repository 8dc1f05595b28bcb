import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leapdg.scenarios import (Circle, ManufacturedScenario, ScatteringScenario, eps_xx, eps_xy,
                              eps_yy, incident_field, incident_time_derivative, make_scenario,
                              manufactured_exact, manufactured_sources, scattering_sources,
                              scenario_geometry)
from leapdg.solver import structured_problem

from oracles import fd_derivative


def _residual_fd(x, y, t, h=1e-3):
    """Sources rebuilt from finite differences of the exact fields."""
    Ex = lambda X, Y, T: manufactured_exact(X, Y, T)[0]
    Ey = lambda X, Y, T: manufactured_exact(X, Y, T)[1]
    Hz = lambda X, Y, T: manufactured_exact(X, Y, T)[2]
    dt = lambda f: fd_derivative(lambda T: f(x, y, T), h)(t)
    dx = lambda f: fd_derivative(lambda X: f(X, y, t), h)(x)
    dy = lambda f: fd_derivative(lambda Y: f(x, Y, t), h)(y)
    exx, exy, eyy = eps_xx(x, y), eps_xy(x, y), eps_yy(x, y)
    Sx = exx * dt(Ex) + exy * dt(Ey) - dy(Hz)
    Sy = exy * dt(Ex) + eyy * dt(Ey) + dx(Hz)
    SH = dt(Hz) + dx(Ey) - dy(Ex)
    return Sx, Sy, SH


def test_epsilon_at_origin_is_identity():
    assert (eps_xx(0.0, 0.0), eps_xy(0.0, 0.0), eps_yy(0.0, 0.0)) == (1.0, 0.0, 1.0)


def test_exact_fields_vanish_at_t0(rng):
    x, y = rng.uniform(-1, 1, (2, 50))
    for f in manufactured_exact(x, y, 0.0):
        np.testing.assert_array_equal(f, 0.0)


def test_source_structure_at_t0(rng):
    x, y = rng.uniform(-1, 1, (2, 50))
    Sx, Sy, _ = manufactured_sources(x, y, 0.0)
    ex = manufactured_exact(x, y, 0.5)  # spatial profiles, sin(pi/2) = 1
    np.testing.assert_allclose(Sx, np.pi * (eps_xx(x, y) * ex[0] + eps_xy(x, y) * ex[1]),
                               rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(Sy, np.pi * (eps_xy(x, y) * ex[0] + eps_yy(x, y) * ex[1]),
                               rtol=1e-13, atol=1e-14)


def test_sources_match_finite_differences(rng):
    x, y = rng.uniform(-1, 1, (2, 100))
    t = rng.uniform(0, 1, 100)
    analytic = manufactured_sources(x, y, t)
    numeric = _residual_fd(x, y, t)
    for a, b in zip(analytic, numeric):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_exact_solution_is_discrete_near_fixed_point():
    # exact nodal data plus boundary data: the semi-discrete residual is small and shrinks with h
    sc = ManufacturedScenario()
    res = []
    for n in (4, 8):
        p = structured_problem(sc, n, 3, 1)
        d, op = p.disc, p.op
        t = 0.3
        Ex, Ey, Hz = sc.exact(d.x, d.y, t)
        dEx, dEy, dHz = (np.pi * np.cos(np.pi * t) * f for f in sc.exact(d.x, d.y, 0.5))
        gx, gy = op.electric_volume_and_h_flux(Hz)
        ax, ay = op.electric_alpha_flux(d.jump(Ex), d.jump(Ey))
        sx, sy = p.sources.electric(t)
        ux, uy = op.electric_update(gx + ax + sx, gy + ay + sy)
        res.append(d.norm(ux - dEx, uy - dEy))
        gz = op.magnetic_strong(Ex, Ey, d.jump(Hz)) + p.sources.magnetic(t)
        assert d.norm(op.magnetic_update(gz) - dHz) < 0.05
    assert res[1] < res[0] / 4


def test_geometry_membership():
    one = ScatteringScenario("one_circle")
    three = ScatteringScenario("three_circles")
    assert one.inside(0.0, 0.0) and three.inside(0.0, 0.0)
    assert one.inside(0.4, 0.0) and not three.inside(0.4, 0.0)
    assert scenario_geometry("three_circles")[0] == Circle(0.0, 0.5, 0.1)
    assert not one.inside(0.5, 0.0)  # strict inequality on the rim
    with pytest.raises(ValueError):
        scenario_geometry("square")


def test_scattering_sources_inside_circle(rng):
    sc = ScatteringScenario("one_circle")
    r = rng.uniform(0, 0.49, 40)
    th = rng.uniform(0, 2 * np.pi, 40)
    x, y = r * np.cos(th), r * np.sin(th)
    t = rng.uniform(0, 1, 40)
    P, Q, R = scattering_sources(x, y, t, sc)
    np.testing.assert_array_equal(P, 0.0)
    np.testing.assert_allclose(Q, -2 * np.sin(10 * (x - t)), atol=1e-14)
    np.testing.assert_array_equal(R, 0.0)


def test_scattering_sources_vanish_outside(rng):
    sc = ScatteringScenario("three_circles")
    x, y = rng.uniform(-1, 1, (2, 400))
    out = ~sc.inside(x, y)
    for f in scattering_sources(x, y, 0.37, sc):
        np.testing.assert_array_equal(np.asarray(f)[out], 0.0)


def test_permeability_contrast_gives_magnetic_source():
    sc = ScatteringScenario("one_circle", mu=1.5)
    P, Q, R = scattering_sources(np.array([0.1]), np.array([0.0]), 0.2, sc)
    np.testing.assert_allclose(R, -0.5 * 10 * np.sin(10 * (0.1 - 0.2)))


def test_nodal_sources_match_pointwise_sources():
    sc = ScatteringScenario("one_circle")
    p = structured_problem(sc, 6, 2, 0)
    d = p.disc
    for t in (0.0, 0.13, 0.7):
        SE = p.sources.electric(t)
        P, Q, _ = sc.sources(d.x, d.y, t)
        # nodes on element boundaries follow the element's region, so compare element means
        inside = p.mesh.regions == 1
        np.testing.assert_allclose(SE[1][inside], -0.2 * 10 * np.sin(10 * (d.x[inside] - t)),
                                   atol=1e-13)
        np.testing.assert_array_equal(SE[1][~inside], 0.0)
        np.testing.assert_array_equal(SE[0], 0.0)
    assert p.sources.magnetic(0.1) is None


@given(x=st.floats(-3, 3), t=st.floats(0, 3), delta=st.floats(-1, 1))
@settings(max_examples=50, deadline=None)
def test_incident_phase_speed_one(x, t, delta):
    a = incident_field(np.array(x + delta), 0.0, t + delta)
    b = incident_field(np.array(x), 0.0, t)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)


def test_incident_field_solves_background_system(rng):
    x, y = rng.uniform(-1, 1, (2, 100))
    t = rng.uniform(0, 1, 100)
    Ex, Ey, Hz = incident_field(x, y, t)
    assert (Ex == 0).all() and Ey[0] == Hz[0]
    assert incident_field(np.array(0.0), 0.0, 0.0)[1] == 1.0
    dEx, dEy, dHz = incident_time_derivative(x, y, t)
    dEy_dx = fd_derivative(lambda X: incident_field(X, y, t)[1], 1e-4)(x)
    dHz_dx = fd_derivative(lambda X: incident_field(X, y, t)[2], 1e-4)(x)
    # background system with eps = mu = 1: dHz/dt = -dEy/dx and dEy/dt = -dHz/dx
    np.testing.assert_allclose(dHz + dEy_dx, 0, atol=1e-9)
    np.testing.assert_allclose(dEy + dHz_dx, 0, atol=1e-9)
    np.testing.assert_allclose(dEx, 0)


def test_zero_contrast_stays_zero():
    sc = ScatteringScenario("none")
    p = structured_problem(sc, 6, 2, 0)
    assert p.sources.magnetic(0.0) is None
    for t in (0.0, 0.3):
        assert not any(s.any() for s in p.sources.electric(t))


def test_make_scenario():
    assert isinstance(make_scenario("manufactured"), ManufacturedScenario)
    sc = make_scenario("one_circle", circles=[[0.1, 0.2, 0.3]], eps_inside=2.0)
    assert sc.circles == (Circle(0.1, 0.2, 0.3),) and sc.eps_inside == 2.0
    with pytest.raises(ValueError):
        make_scenario("bogus")
