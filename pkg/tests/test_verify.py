"""Manufactured solution, energy, error norms and observed rates"""

import math

import numpy as np
import pytest
import sympy as sym

from forms.schemas import CoefficientLaw
from forms.service import FormAssembler
from mesh.service import unit_square_mesh
from scheme.schemas import FieldState, SchemeParams
from shared.exceptions import RateSequenceError
from space.service import build_mixed_space, interpolate
from verify.mms import X, Y, build_manufactured_solution, manufactured_solution, mms_sources
from verify.schemas import ErrorReport
from verify.service import energy, error_norms, observed_rates

pytestmark = pytest.mark.unit

STEP = 1e-3


def d1(f, h=STEP):
    """Fourth-order central difference of a scalar function of one variable."""
    return lambda s: (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h)


def dx(f):
    return lambda x, y, t: d1(lambda s: f(s, y, t))(x)


def dy(f):
    return lambda x, y, t: d1(lambda s: f(x, s, t))(y)


def dt(f):
    return lambda x, y, t: d1(lambda s: f(x, y, s))(t)


def component(pair, c):
    return lambda x, y, t: pair(x, y, t)[c]


@pytest.fixture
def points(rng):
    # keep the stencils inside the square
    size = 1000
    return (
        0.05 + 0.9 * rng.random(size),
        0.05 + 0.9 * rng.random(size),
        0.3 + 0.5 * rng.random(size),
    )


def assert_close(actual, expected, rel=1e-7):
    scale = max(1.0, float(np.max(np.abs(expected))))
    np.testing.assert_allclose(actual, expected, atol=rel * scale)


# -- manufactured solution -----------------------------------------------------------


def test_fields_at_time_zero(rng):
    exact = manufactured_solution(SchemeParams())
    x, y = rng.random(100), rng.random(100)
    np.testing.assert_allclose(exact.phi(x, y, 0.0), 2.0)
    np.testing.assert_allclose(exact.mu(x, y, 0.0), 6.0 / 0.05)
    for pair in (exact.u, exact.B):
        np.testing.assert_allclose(pair(x, y, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(
        exact.g_phi(x, y, 0.0), np.cos(np.pi * x) * np.cos(np.pi * y), atol=1e-12
    )
    gx, gy = exact.g_B(x, y, 0.0)
    np.testing.assert_allclose(gx, np.sin(np.pi * x) * np.cos(np.pi * y), atol=1e-12)
    np.testing.assert_allclose(gy, -np.sin(np.pi * y) * np.cos(np.pi * x), atol=1e-12)


def test_exact_fields_satisfy_the_constraints(rng):
    exact = manufactured_solution(SchemeParams())
    x, y, t = rng.random(1000), rng.random(1000), rng.random(1000)
    np.testing.assert_allclose(exact.div_u(x, y, t), 0.0, atol=1e-12)
    np.testing.assert_allclose(exact.div_B(x, y, t), 0.0, atol=1e-12)
    for side in (0.0, 1.0):
        ux, uy = exact.u(np.full_like(x, side), y, t)
        np.testing.assert_allclose([ux, uy], 0.0, atol=1e-14)
        ux, uy = exact.u(x, np.full_like(y, side), t)
        np.testing.assert_allclose([ux, uy], 0.0, atol=1e-14)
        np.testing.assert_allclose(exact.B(np.full_like(x, side), y, t)[0], 0.0, atol=1e-14)
        np.testing.assert_allclose(exact.B(x, np.full_like(y, side), t)[1], 0.0, atol=1e-14)


def test_chemical_potential_matches_finite_differences(points):
    params = SchemeParams()
    exact = manufactured_solution(params)
    x, y, t = points
    laplacian = dx(dx(exact.phi))(x, y, t) + dy(dy(exact.phi))(x, y, t)
    phi = exact.phi(x, y, t)
    expected = -params.eps * laplacian + (phi**3 - phi) / params.eps
    assert_close(exact.mu(x, y, t), expected)


def test_phase_source_matches_finite_differences(points):
    params = SchemeParams()
    exact = manufactured_solution(params)
    x, y, t = points
    kappa = params.kappa

    def flux(axis):
        deriv = dx if axis == 0 else dy
        return lambda px, py, s: kappa(exact.phi(px, py, s)) * deriv(exact.mu)(px, py, s)

    ux, uy = exact.u(x, y, t)
    expected = (
        dt(exact.phi)(x, y, t)
        - params.eps * (dx(flux(0))(x, y, t) + dy(flux(1))(x, y, t))
        + ux * dx(exact.phi)(x, y, t)
        + uy * dy(exact.phi)(x, y, t)
    )
    assert_close(exact.g_phi(x, y, t), expected)


def test_induction_source_matches_finite_differences(points):
    params = SchemeParams()
    exact = manufactured_solution(params)
    x, y, t = points
    b1, b2 = component(exact.B, 0), component(exact.B, 1)
    u1, u2 = component(exact.u, 0), component(exact.u, 1)

    def resistive(px, py, s):
        return params.eta(exact.phi(px, py, s)) * (dx(b2)(px, py, s) - dy(b1)(px, py, s))

    def transport(px, py, s):
        return u1(px, py, s) * b2(px, py, s) - u2(px, py, s) * b1(px, py, s)

    gx, gy = exact.g_B(x, y, t)
    assert_close(gx, dt(b1)(x, y, t) + dy(resistive)(x, y, t) - dy(transport)(x, y, t))
    assert_close(gy, dt(b2)(x, y, t) - dx(resistive)(x, y, t) + dx(transport)(x, y, t))


def test_momentum_source_matches_finite_differences(points):
    nu = 0.7
    params = SchemeParams(
        lam=1.5,
        s_c=2.0,
        kappa=CoefficientLaw.constant(1.0),
        nu=CoefficientLaw.constant(nu),
        eta=CoefficientLaw.constant(1.0),
    )
    exact = manufactured_solution(params)
    x, y, t = points
    u = [component(exact.u, c) for c in range(2)]
    b1, b2 = component(exact.B, 0), component(exact.B, 1)
    curl_b = dx(b2)(x, y, t) - dy(b1)(x, y, t)
    lorentz = (b2(x, y, t) * curl_b, -b1(x, y, t) * curl_b)
    mu = exact.mu(x, y, t)
    grad_phi = (dx(exact.phi)(x, y, t), dy(exact.phi)(x, y, t))
    grad_p = (dx(exact.p)(x, y, t), dy(exact.p)(x, y, t))
    ux, uy = exact.u(x, y, t)

    g = exact.g_u(x, y, t)
    for c in range(2):
        # div(2 nu D(u)) reduces to nu lap(u) for a solenoidal field
        laplacian = dx(dx(u[c]))(x, y, t) + dy(dy(u[c]))(x, y, t)
        convection = ux * dx(u[c])(x, y, t) + uy * dy(u[c])(x, y, t)
        expected = (
            dt(u[c])(x, y, t)
            - nu * laplacian
            + convection
            + params.s_c * lorentz[c]
            + grad_p[c]
            - params.lam * mu * grad_phi[c]
        )
        assert_close(g[c], expected)


def test_momentum_source_matches_finite_differences_of_the_strain_flux(points):
    params = SchemeParams()
    exact = manufactured_solution(params)
    x, y, t = points
    u = [component(exact.u, c) for c in range(2)]
    deriv = (dx, dy)

    def stress(c, d):
        def flux(px, py, s):
            strain = deriv[d](u[c])(px, py, s) + deriv[c](u[d])(px, py, s)
            return params.nu(exact.phi(px, py, s)) * strain

        return flux

    b1, b2 = component(exact.B, 0), component(exact.B, 1)
    curl_b = dx(b2)(x, y, t) - dy(b1)(x, y, t)
    lorentz = (b2(x, y, t) * curl_b, -b1(x, y, t) * curl_b)
    mu = exact.mu(x, y, t)
    grad_phi = (dx(exact.phi)(x, y, t), dy(exact.phi)(x, y, t))
    grad_p = (dx(exact.p)(x, y, t), dy(exact.p)(x, y, t))
    ux, uy = exact.u(x, y, t)

    g = exact.g_u(x, y, t)
    for c in range(2):
        viscous = sum(deriv[d](stress(c, d))(x, y, t) for d in range(2))
        convection = ux * dx(u[c])(x, y, t) + uy * dy(u[c])(x, y, t)
        expected = (
            dt(u[c])(x, y, t)
            - viscous
            + convection
            + params.s_c * lorentz[c]
            + grad_p[c]
            - params.lam * mu * grad_phi[c]
        )
        assert_close(g[c], expected)


def test_phase_field_has_zero_normal_derivative_on_the_boundary(rng):
    exact = manufactured_solution(SchemeParams())
    s, t = rng.random(1000), rng.random(1000)
    for side in (0.0, 1.0):
        wall = np.full_like(s, side)
        for grad, scale in ((exact.grad_phi, 1e-14), (exact.grad_mu, 1e-10)):
            np.testing.assert_allclose(grad(wall, s, t)[0], 0.0, atol=scale)
            np.testing.assert_allclose(grad(s, wall, t)[1], 0.0, atol=scale)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5])
def test_exact_pressure_has_zero_mean(t):
    nodes, weights = np.polynomial.legendre.leggauss(12)
    nodes, weights = 0.5 * (nodes + 1.0), 0.5 * weights
    x, y = np.meshgrid(nodes, nodes, indexing="ij")
    exact = manufactured_solution(SchemeParams())
    mean = float(np.sum(np.outer(weights, weights) * exact.p(x, y, t)))
    assert mean == pytest.approx(0.0, abs=1e-14)


def test_non_solenoidal_fields_rejected():
    unit = CoefficientLaw.constant()
    fields = {"phi": X, "u": (X, sym.Integer(0)), "p": sym.Integer(0), "B": (Y, X)}
    with pytest.raises(ValueError, match="velocity"):
        build_manufactured_solution(0.1, 1.0, 1.0, unit, unit, unit, fields)


def test_solutions_are_cached():
    params = SchemeParams()
    assert manufactured_solution(params) is manufactured_solution(SchemeParams())


def test_mms_sources_follow_the_parameters(points):
    x, y, t = points
    sources = mms_sources(SchemeParams())
    exact = manufactured_solution(SchemeParams())
    np.testing.assert_array_equal(sources.g_phi(x, y, t), exact.g_phi(x, y, t))
    for got, expected in zip(sources.g_u(x, y, t), exact.g_u(x, y, t)):
        np.testing.assert_array_equal(got, expected)
    # the Lorentz force scales with the coupling coefficient
    stronger = mms_sources(SchemeParams(s_c=2.0))
    assert not np.allclose(stronger.g_u(x, y, t)[0], sources.g_u(x, y, t)[0])
    np.testing.assert_allclose(stronger.g_B(x, y, t), sources.g_B(x, y, t), rtol=1e-14)


# -- energy --------------------------------------------------------------------------


def _state(space, phi, u=(0.0, 0.0), b=(0.0, 0.0)):
    return FieldState(
        t=0.0,
        phi=interpolate(space.mesh, space.q_map, phi),
        mu=np.zeros(space.q_map.n_dofs),
        u=interpolate(space.mesh, space.x_map, lambda x, y: u),
        p=np.zeros(space.m_map.n_dofs),
        B=interpolate(space.mesh, space.w_map, lambda x, y: b),
    )


@pytest.mark.parametrize(
    "phi, u, b, expected",
    [
        (1.0, (0.0, 0.0), (0.0, 0.0), 0.0),
        (-1.0, (0.0, 0.0), (0.0, 0.0), 0.0),
        (0.0, (0.0, 0.0), (0.0, 0.0), 5.0),
        (2.0, (0.0, 0.0), (0.0, 0.0), 45.0),
        (0.0, (1.0, 2.0), (0.0, 3.0), 16.5),
    ],
)
def test_energy_of_constant_states(space4, assembler4, phi, u, b, expected):
    params = SchemeParams(s_c=2.0)
    state = _state(space4, lambda x, y: phi, u, b)
    assert energy(state, params, assembler4) == pytest.approx(expected, abs=1e-12)


def test_energy_of_a_linear_profile(space4, assembler4):
    params = SchemeParams()
    state = _state(space4, lambda x, y: x)
    # gradient part 0.05 / 2, bulk part 5 * 8 / 15
    assert energy(state, params, assembler4) == pytest.approx(0.025 + 8.0 / 3.0, rel=1e-12)


# -- error norms ---------------------------------------------------------------------


def test_quadratic_fields_are_reproduced(space4, assembler4):
    unit = CoefficientLaw.constant()
    fields = {
        "phi": X**2 + X * Y,
        "u": (X**2, -2 * X * Y),
        "p": X + Y - 1,
        "B": (Y**2, X**2),
    }
    exact = build_manufactured_solution(0.1, 1.0, 1.0, unit, unit, unit, fields)
    state = FieldState(
        t=0.0,
        phi=interpolate(space4.mesh, space4.q_map, exact.initial_phi),
        mu=np.zeros(space4.q_map.n_dofs),
        u=interpolate(space4.mesh, space4.x_map, exact.initial_u),
        p=interpolate(space4.mesh, space4.m_map, lambda x, y: exact.p(x, y, 0.0)),
        B=interpolate(space4.mesh, space4.w_map, exact.initial_B),
    )
    report = error_norms(state, exact, 0.0, assembler4)
    assert set(report.errors) == {"phi", "mu", "u", "p", "B"}
    assert set(report.errors["p"]) == {"L2"}
    assert set(report.errors["u"]) == {"L2", "H1_semi", "H1"}
    for field in ("phi", "u", "B", "p"):
        for value in report.errors[field].values():
            assert value < 1e-12
    assert report.errors["mu"]["L2"] > 0.0
    assert report.n == 4 and report.h == 0.25


def _interpolated_exact(space, exact, t):
    def at_t(f):
        return lambda x, y: f(x, y, t)

    return FieldState(
        t=t,
        phi=interpolate(space.mesh, space.q_map, at_t(exact.phi)),
        mu=interpolate(space.mesh, space.q_map, at_t(exact.mu)),
        u=interpolate(space.mesh, space.x_map, at_t(exact.u)),
        p=interpolate(space.mesh, space.m_map, at_t(exact.p)),
        B=interpolate(space.mesh, space.w_map, at_t(exact.B)),
    )


def test_interpolation_errors_converge_at_second_order():
    params = SchemeParams()
    exact = manufactured_solution(params)
    reports = []
    for n in (8, 16):
        space = build_mixed_space(unit_square_mesh(n))
        state = _interpolated_exact(space, exact, 0.5)
        reports.append(error_norms(state, exact, 0.5, FormAssembler(space)))
    table = observed_rates(reports)
    for row in table.tracked():
        assert 1.7 <= row.rate <= 2.3, row


# -- observed rates ------------------------------------------------------------------


def _report(n, value):
    return ErrorReport(n=n, h=1.0 / n, errors={"u": {"H1": value, "L2": 0.0}})


def test_observed_rates():
    table = observed_rates([_report(4, 0.4), _report(8, 0.1), _report(16, 0.05)])
    assert table.levels == [4, 8, 16]
    assert table.rates("u", "H1") == pytest.approx([2.0, 1.0])
    assert all(math.isnan(rate) for rate in table.rates("u", "L2"))
    assert [row.field for row in table.tracked()] == ["u", "u"]


def test_rates_need_a_halving_sequence():
    with pytest.raises(RateSequenceError):
        observed_rates([_report(4, 0.4)])
    with pytest.raises(RateSequenceError):
        observed_rates([_report(4, 0.4), _report(6, 0.1)])


def test_energy_of_the_exact_fields_stays_finite(space4, assembler4):
    params = SchemeParams()
    exact = manufactured_solution(params)
    values = [
        energy(_interpolated_exact(space4, exact, t), params, assembler4)
        for t in np.linspace(0.0, 1.0, 11)
    ]
    assert np.all(np.isfinite(values))
    assert values[0] == pytest.approx(45.0, rel=1e-12)
    assert np.max(np.abs(np.diff(values))) < 0.5 * values[0]
