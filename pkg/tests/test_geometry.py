import numpy as np
import pytest

from backend.errors import InvalidGeometry
from backend.geometry import DomainSpec, build_mesh, radial_integral, uniform_submesh


def test_dual_cells_cover_each_subdomain():
    mesh = build_mesh(DomainSpec(xs=0.4, xL=1.0, n1=10, n2=30))
    assert mesh.part1.cell_volumes.sum() == pytest.approx(0.4)
    assert mesh.part2.cell_volumes.sum() == pytest.approx(0.6)
    assert mesh.measure1 == pytest.approx(0.4)
    assert mesh.interface_measure == 1.0


def test_interface_node_is_carried_twice():
    mesh = build_mesh(DomainSpec(xs=0.5, xL=1.0, n1=8, n2=12))
    assert mesh.size == 9 + 13
    assert mesh.nodes1[mesh.interface_index_1] == mesh.nodes2[0] == 0.5
    assert mesh.interface_index_2 == mesh.interface_index_1 + 1
    u1, u2 = mesh.split(mesh.coordinates)
    np.testing.assert_array_equal(u1, mesh.nodes1)
    np.testing.assert_array_equal(u2, mesh.nodes2)


def test_radial_weights_are_exact():
    part = uniform_submesh(0.0, 1.0, 16, radial_power=2)
    assert part.cell_volumes.sum() == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert part.boundary_weight('right') == 1.0
    assert part.boundary_weight('left') == 0.0
    assert radial_integral(1.0, 2.0, 1) == pytest.approx(1.5)


def test_refine_doubles_both_parts():
    mesh = build_mesh(DomainSpec(xs=0.5, xL=1.0, n1=8, n2=16)).refine()
    assert (mesh.part1.n, mesh.part2.n) == (16, 32)


def test_evaluate_is_piecewise():
    mesh = build_mesh(DomainSpec(xs=0.5, xL=1.0, n1=8, n2=8))
    values = mesh.evaluate(lambda x: 2 * x)
    np.testing.assert_allclose(values, 2 * mesh.coordinates)


@pytest.mark.parametrize('spec', [
    dict(x0=0.0, xs=1.0, xL=0.5),
    dict(x0=0.0, xs=0.5, xL=1.0, n1=4),
    dict(x0=-1.0, xs=0.5, xL=1.0, radial_power=1),
    dict(x0=0.0, xs=0.5, xL=1.0, radial_power=-1),
])
def test_invalid_geometry(spec):
    with pytest.raises(InvalidGeometry):
        build_mesh(DomainSpec(**spec))
