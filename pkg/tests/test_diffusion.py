import numpy as np
import pytest
import scipy.sparse.linalg as spla

from hdgmg.diffusion import (FullDiffusionSystem, assemble_condensed_diffusion,
                             diffusion_error_norms,
                             diffusion_level_coefficients,
                             recover_local_diffusion)
from hdgmg.linalg import check_symmetric
from hdgmg.mesh import build_step_domain_mesh, build_unit_box_mesh
from hdgmg.problems import SmoothDiffusionProblem
from hdgmg.spaces import FacetSpace

ONE = lambda p: np.ones(p.shape[:-1])


def smooth_coeffs(mesh, dim):
    prob = SmoothDiffusionProblem(dim)
    return diffusion_level_coefficients(mesh, prob.alpha, prob.beta, prob.f), prob


def test_gamma_and_tau_ranges():
    mesh = build_unit_box_mesh(2, 0.5)
    co, _ = smooth_coeffs(mesh, 2)
    assert (co.alpha_h > 0).all()
    assert (co.gamma > 0).all() and (co.gamma <= 1).all()
    co0 = diffusion_level_coefficients(mesh, alpha=ONE)
    assert np.allclose(co0.gamma, 1.0)


def test_pure_diffusion_equals_cr_stiffness():
    """With unit alpha and no reaction the condensed matrix is the plain
    nonconforming P1 stiffness matrix, assembled here independently."""
    mesh = build_unit_box_mesh(2, 0.7)
    space = FacetSpace(mesh, 1, dirichlet="all")
    co = diffusion_level_coefficients(mesh, alpha=ONE)
    A = assemble_condensed_diffusion(mesh, space, co).A.toarray()

    from conftest import p1_gradient_vandermonde
    n = space.n_free
    K = np.zeros((n, n))
    for k in range(mesh.n_elements):
        verts = mesh.vertices[mesh.elements[k]]
        grads = np.array([p1_gradient_vandermonde(verts, np.eye(3)[i])
                          for i in range(3)])
        loc = mesh.elem_measure[k] * grads @ grads.T
        dofs = space.facet_rank[mesh.elem_facets[k]]
        for i in range(3):
            if dofs[i] < 0:
                continue
            for j in range(3):
                if dofs[j] >= 0:
                    K[dofs[i], dofs[j]] += loc[i, j]
    assert np.abs(A - K).max() < 1e-12 * np.abs(K).max()


def test_constants_in_kernel_without_dirichlet():
    mesh = build_unit_box_mesh(2, 0.7)
    space = FacetSpace(mesh, 1)     # no constraints anywhere
    co = diffusion_level_coefficients(mesh, alpha=ONE)
    A = assemble_condensed_diffusion(mesh, space, co).A
    ones = np.ones(space.n_free)
    assert np.abs(A @ ones).max() < 1e-12


@pytest.mark.parametrize("dim,target_h", [(2, 0.3), (3, 0.6)])
def test_condensation_matches_schur_complement(dim, target_h):
    mesh = build_unit_box_mesh(dim, target_h)
    space = FacetSpace(mesh, 1, dirichlet="all")
    co, _ = smooth_coeffs(mesh, dim)
    cond = assemble_condensed_diffusion(mesh, space, co)
    full = FullDiffusionSystem(mesh, space, co)
    S, rhs = full.schur_condense()
    A = cond.A.toarray()
    assert np.linalg.norm(S - A) <= 1e-12 * np.linalg.norm(A)
    assert np.linalg.norm(rhs - cond.rhs) <= 1e-12 * np.linalg.norm(cond.rhs)
    assert check_symmetric(cond.A)


def test_energy_identity():
    mesh = build_unit_box_mesh(2, 0.3)
    space = FacetSpace(mesh, 1, dirichlet="all")
    co, _ = smooth_coeffs(mesh, 2)
    full = FullDiffusionSystem(mesh, space, co)
    sigma, u_vals, uhat = full.solve()
    assert full.energy_identity_residual(sigma, u_vals, uhat) < 1e-10


def test_zero_data_gives_zero_solution():
    mesh = build_unit_box_mesh(2, 0.5)
    space = FacetSpace(mesh, 1, dirichlet="all")
    co = diffusion_level_coefficients(mesh, alpha=ONE, beta=ONE)
    full = FullDiffusionSystem(mesh, space, co)
    sigma, u_vals, uhat = full.solve()
    assert np.abs(sigma).max() < 1e-14
    assert np.abs(u_vals).max() < 1e-14
    assert np.abs(uhat).max() < 1e-14


def test_recovery_matches_full_solve():
    mesh = build_unit_box_mesh(2, 0.4)
    space = FacetSpace(mesh, 1, dirichlet="all")
    co, _ = smooth_coeffs(mesh, 2)
    cond = assemble_condensed_diffusion(mesh, space, co)
    full = FullDiffusionSystem(mesh, space, co)
    sigma, u_vals, uhat = full.solve()
    u = spla.spsolve(cond.A.tocsc(), cond.rhs)
    s2, uv2 = recover_local_diffusion(cond, u)
    assert np.abs(u - uhat).max() < 1e-11
    assert np.abs(s2 - sigma).max() < 1e-11
    assert np.abs(uv2 - u_vals).max() < 1e-11


def test_recovery_trivial_cases():
    mesh = build_unit_box_mesh(2, 0.7)
    space = FacetSpace(mesh, 1, dirichlet="all")
    # f = 0, beta = 0: the primal values equal the facet values
    co = diffusion_level_coefficients(mesh, alpha=ONE)
    cond = assemble_condensed_diffusion(mesh, space, co)
    u = np.arange(space.n_free, dtype=float)
    sigma, u_vals = recover_local_diffusion(cond, u)
    uhat_loc = space.full_vector(u)[mesh.elem_facets]
    assert np.abs(u_vals - uhat_loc).max() < 1e-13
    # constant facet data (no constraints): zero flux
    space_all = FacetSpace(mesh, 1)
    cond_all = assemble_condensed_diffusion(
        mesh, space_all, diffusion_level_coefficients(mesh, alpha=ONE))
    sigma, _ = recover_local_diffusion(cond_all, np.full(space_all.n_free, 2.5))
    assert np.abs(sigma).max() < 1e-13


def test_error_norms_on_interpolant():
    """Interpolating an affine field reproduces it: both errors at roundoff."""
    mesh = build_unit_box_mesh(2, 0.5)
    lin_u = lambda p: 2 * p[..., 0] - 3 * p[..., 1] + 0.5
    const_sigma = lambda p: np.broadcast_to(np.array([1.0, 2.0]), p.shape)
    nodal = lin_u(mesh.local_facet_barycenters().reshape(-1, 2)).reshape(
        mesh.n_elements, 3)
    sigma = np.tile([1.0, 2.0], (mesh.n_elements, 1))
    eu, es = diffusion_error_norms(mesh, sigma, nodal, lin_u, const_sigma)
    assert eu < 1e-13 and es < 1e-13


def test_schur_on_step_domain_with_neumann():
    """The step mesh with a free (unconstrained) outlet exercises rows whose
    boundary facets carry no constraint."""
    mesh = build_step_domain_mesh(2, 0.5)
    space = FacetSpace(mesh, 1, dirichlet=lambda p: p[:, 0] < 5 - 1e-12)
    co, _ = smooth_coeffs(mesh, 2)
    cond = assemble_condensed_diffusion(mesh, space, co)
    full = FullDiffusionSystem(mesh, space, co)
    S, rhs = full.schur_condense()
    assert np.linalg.norm(S - cond.A.toarray()) <= 1e-12 * np.linalg.norm(S)
    assert np.linalg.norm(rhs - cond.rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1)


def test_inhomogeneous_dirichlet_lifting_exact_for_linear():
    """With alpha = 1, beta = f = 0 and boundary data from a global linear,
    the discrete solution is that linear's facet interpolant."""
    mesh = build_unit_box_mesh(2, 0.4)
    space = FacetSpace(mesh, 1, dirichlet="all")
    lin = lambda p: 1.5 * p[..., 0] - 0.7 * p[..., 1] + 2.0
    co = diffusion_level_coefficients(mesh, alpha=ONE)
    cond = assemble_condensed_diffusion(mesh, space, co, dirichlet_values=lin)
    u = spla.spsolve(cond.A.tocsc(), cond.rhs)
    expect = lin(mesh.facet_barycenter[space.free_mask])
    assert np.abs(u - expect).max() < 1e-11
