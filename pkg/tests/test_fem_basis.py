"""Reference element, quadrature and affine map tests"""

from math import factorial

import numpy as np
import pytest

from fem_basis.quadrature import gauss_rule
from fem_basis.service import (
    affine_map_from_jacobian,
    affine_maps,
    eval_basis,
    physical_gradients,
    reference_element,
)
from mesh.service import unit_square_mesh
from shared.exceptions import DegenerateElementError, QuadratureError

pytestmark = pytest.mark.unit


def monomial_integral(a: int, b: int) -> float:
    """Integral of xi^a eta^b over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, 11))
def test_weights_sum_to_reference_area(degree):
    rule = gauss_rule(degree)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    assert np.all(rule.weights > 0.0)


@pytest.mark.parametrize("degree", range(1, 11))
def test_rules_integrate_monomials_exactly(degree):
    rule = gauss_rule(degree)
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            value = float(np.sum(rule.weights * xi**a * eta**b))
            assert value == pytest.approx(monomial_integral(a, b), rel=1e-12, abs=1e-15)


def test_points_lie_in_the_reference_triangle():
    for degree in range(1, 11):
        pts = gauss_rule(degree).points
        assert np.all(pts >= -1e-15)
        assert np.all(pts.sum(axis=1) <= 1.0 + 1e-15)


def test_degree_seven_uses_the_degree_eight_rule():
    assert gauss_rule(7).degree == 8
    assert gauss_rule(7).size == 16


@pytest.mark.parametrize("degree", [0, 11, -3])
def test_untabulated_degree_rejected(degree):
    with pytest.raises(QuadratureError):
        gauss_rule(degree)


@pytest.mark.parametrize("degree", [1, 2])
def test_basis_is_nodal(degree):
    element = reference_element(degree)
    values, _ = eval_basis(element, element.nodes)
    np.testing.assert_allclose(values, np.eye(element.node_count), atol=1e-15)


@pytest.mark.parametrize("degree", [1, 2])
def test_partition_of_unity(degree, rng):
    pts = rng.random((50, 2))
    pts = pts[pts.sum(axis=1) <= 1.0]
    values, grads = eval_basis(reference_element(degree), pts)
    np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)


def test_p2_gradients_match_finite_differences():
    element = reference_element(2)
    point = np.array([0.2, 0.3])
    step = 1e-6
    _, grads = eval_basis(element, point)
    for d in range(2):
        shift = np.zeros(2)
        shift[d] = step
        plus, _ = eval_basis(element, point + shift)
        minus, _ = eval_basis(element, point - shift)
        np.testing.assert_allclose(grads[:, d], (plus - minus) / (2 * step), atol=1e-8)


def test_p2_values_at_the_centroid():
    values, _ = eval_basis(reference_element(2), np.array([1.0 / 3.0, 1.0 / 3.0]))
    np.testing.assert_allclose(values[:3], -1.0 / 9.0, atol=1e-15)
    np.testing.assert_allclose(values[3:], 4.0 / 9.0, atol=1e-15)


@pytest.mark.parametrize("degree", [2, 6, 8])
def test_integral_of_xy_over_the_reference_triangle(degree):
    rule = gauss_rule(degree)
    value = float(np.sum(rule.weights * rule.points[:, 0] * rule.points[:, 1]))
    assert value == pytest.approx(1.0 / 24.0, rel=1e-13)


def test_single_point_drops_quadrature_axis():
    values, grads = eval_basis(reference_element(2), np.array([0.25, 0.25]))
    assert values.shape == (6,)
    assert grads.shape == (6, 2)


def test_p2_node_order():
    nodes = reference_element(2).nodes
    np.testing.assert_allclose(nodes[3:], [[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])


def test_affine_maps_of_uniform_mesh():
    mesh = unit_square_mesh(4)
    amap = affine_maps(mesh)
    np.testing.assert_allclose(amap.det, 2.0 * mesh.signed_areas())
    np.testing.assert_allclose(amap.det, 1.0 / 16.0)
    physical = amap.to_physical(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_allclose(physical, mesh.vertices[mesh.triangles])


def test_physical_gradients_of_linear_functions():
    mesh = unit_square_mesh(3)
    amap = affine_maps(mesh)
    _, ref = eval_basis(reference_element(1), gauss_rule(1).points)
    grads = physical_gradients(amap, ref)
    # f = 2x - 3y interpolated by P1 has gradient (2, -3) everywhere
    f = 2.0 * mesh.vertices[:, 0] - 3.0 * mesh.vertices[:, 1]
    local = f[mesh.triangles]
    grad_f = np.einsum("fqnd,fn->fqd", grads, local)
    np.testing.assert_allclose(grad_f[..., 0], 2.0, atol=1e-12)
    np.testing.assert_allclose(grad_f[..., 1], -3.0, atol=1e-12)


def test_degenerate_triangle_rejected():
    jac = np.array([[[1.0, 2.0], [1.0, 2.0]]])
    with pytest.raises(DegenerateElementError):
        affine_map_from_jacobian(jac, np.zeros((1, 2)))


def test_inverted_triangle_rejected():
    jac = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    with pytest.raises(DegenerateElementError):
        affine_map_from_jacobian(jac, np.zeros((1, 2)))


def test_degree_three_rule_misses_quartics():
    xi = gauss_rule(3).points[:, 0]
    assert np.sum(gauss_rule(3).weights * xi**4) != pytest.approx(1.0 / 30.0, abs=1e-6)
    xi4 = gauss_rule(4).points[:, 0]
    assert np.sum(gauss_rule(4).weights * xi4**4) == pytest.approx(1.0 / 30.0, abs=1e-14)


def test_gradients_scale_inversely_with_the_element():
    mesh = unit_square_mesh(1)
    scaled = unit_square_mesh(4)
    _, ref = eval_basis(reference_element(2), gauss_rule(2).points)
    coarse = physical_gradients(affine_maps(mesh), ref)
    fine = physical_gradients(affine_maps(scaled), ref)
    # the first triangle of both meshes has the same shape, four times smaller
    np.testing.assert_allclose(fine[0], 4.0 * coarse[0], rtol=1e-13)
