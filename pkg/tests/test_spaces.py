import numpy as np
import pytest

from hdgmg.mesh import build_unit_box_mesh
from hdgmg.spaces import (FacetSpace, PressureSpace, cr_divergence,
                          cr_gradient, cr_values_at)
from conftest import p1_gradient_vandermonde


def test_two_triangle_counts():
    mesh = build_unit_box_mesh(2, 1.5)
    scalar = FacetSpace(mesh, 1, dirichlet="all")
    assert scalar.n_free == 1          # only the diagonal facet is free
    vec = FacetSpace(mesh, 2, dirichlet="all")
    assert vec.n_free == 2


def test_free_count_matches_bruteforce_boundary():
    mesh = build_unit_box_mesh(2, 0.25)
    space = FacetSpace(mesh, 1, dirichlet="all")
    # brute force: a facet is boundary iff it appears in exactly one element
    seen = {}
    for row in mesh.elem_facets:
        for f in row:
            seen[f] = seen.get(f, 0) + 1
    n_interior = sum(1 for c in seen.values() if c == 2)
    assert space.n_free == mesh.n_facets - (mesh.n_facets - n_interior)
    assert space.n_free == n_interior


def test_rejects_bad_components():
    mesh = build_unit_box_mesh(2, 1.5)
    with pytest.raises(ValueError):
        FacetSpace(mesh, 3, dirichlet="all")


def test_weights_match_elementwise_inner_product(rng):
    mesh = build_unit_box_mesh(2, 0.5)
    space = FacetSpace(mesh, 1, dirichlet="all")
    u = rng.standard_normal(space.n_free)
    v = rng.standard_normal(space.n_free)
    weighted = float(np.sum(space.weight_0l * u * v))
    # assemble sum_K |K|/(d+1) sum_i u(m_i) v(m_i) element by element
    uf = space.full_vector(u)[mesh.elem_facets]
    vf = space.full_vector(v)[mesh.elem_facets]
    direct = float(np.sum(mesh.elem_measure[:, None] / 3.0 * uf * vf))
    assert weighted == pytest.approx(direct, rel=1e-13)
    assert (space.weight_0l > 0).all()


@pytest.mark.parametrize("dim", [2, 3])
def test_cr_gradient_cases(rng, dim):
    mesh = build_unit_box_mesh(dim, 1.0 if dim == 2 else 1.2)
    # constants have zero gradient
    assert np.abs(cr_gradient(mesh, 0, np.full(dim + 1, 3.2))).max() < 1e-13
    # values of the coordinate function x reproduce the gradient (1, 0, ...)
    mki = mesh.local_facet_barycenters()[0]
    g = cr_gradient(mesh, 0, mki[:, 0])
    assert np.allclose(g, np.eye(dim)[0], atol=1e-13)
    # random values match a dense Vandermonde solve
    for elem in range(min(4, mesh.n_elements)):
        vals = rng.standard_normal(dim + 1)
        verts = mesh.vertices[mesh.elements[elem]]
        expect = p1_gradient_vandermonde(verts, vals)
        assert np.allclose(cr_gradient(mesh, elem, vals), expect, atol=1e-12)


def test_cr_divergence_cases():
    mesh = build_unit_box_mesh(2, 1.0)
    mki = mesh.local_facet_barycenters()[0]
    rigid = np.tile([0.7, -0.3], (3, 1))
    assert cr_divergence(mesh, 0, rigid) == pytest.approx(0.0, abs=1e-13)
    solenoidal = np.column_stack([mki[:, 0], -mki[:, 1]])
    assert cr_divergence(mesh, 0, solenoidal) == pytest.approx(0.0, abs=1e-13)
    expanding = mki.copy()
    assert cr_divergence(mesh, 0, expanding) == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_linear_reproduction_on_every_element(rng, dim):
    """P1 reconstruction from facet-barycenter values reproduces any global
    linear on every element."""
    mesh = build_unit_box_mesh(dim, 0.7)
    a = rng.standard_normal(dim)
    b = 0.37
    lin = lambda p: p @ a + b
    nodal = lin(mesh.local_facet_barycenters().reshape(-1, dim)).reshape(
        mesh.n_elements, dim + 1)
    pts = mesh.elem_barycenter + 0.1 * (rng.random((mesh.n_elements, dim)) - 0.5) \
        * mesh.h_K_facet.min()
    elems = np.arange(mesh.n_elements)
    vals = cr_values_at(mesh, elems, pts, nodal)
    assert np.abs(vals - lin(pts)).max() < 1e-13


def test_pressure_mean_zero_projection():
    mesh = build_unit_box_mesh(2, 0.6)
    ps = PressureSpace(mesh, mean_zero=True)
    p = np.arange(mesh.n_elements, dtype=float)
    q = ps.project_mean_zero(p)
    assert float(mesh.elem_measure @ q) == pytest.approx(0.0, abs=1e-12)
    ps_free = PressureSpace(mesh, mean_zero=False)
    assert ps_free.project_mean_zero(p) is p


def test_dirichlet_predicate_selects_subset():
    mesh = build_unit_box_mesh(2, 0.5)
    lid_only = FacetSpace(mesh, 2, dirichlet=lambda p: np.abs(p[:, 1] - 1) < 1e-12)
    everything = FacetSpace(mesh, 2, dirichlet="all")
    nothing = FacetSpace(mesh, 2)
    assert nothing.n_free == 2 * mesh.n_facets
    assert everything.n_free < lid_only.n_free < nothing.n_free
    # dirichlet values sampled at facet barycenters, component-shaped
    vals = everything.dirichlet_values(lambda p: np.stack([p[:, 0], 0 * p[:, 0]], axis=1))
    assert vals.shape == (len(everything.dirichlet_facets), 2)
