import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hdgmg.linalg import check_symmetric
from hdgmg.mesh import build_step_domain_mesh, build_unit_box_mesh
from hdgmg.problems import BackwardStepProblem, ManufacturedStokesProblem
from hdgmg.spaces import FacetSpace, PressureSpace
from hdgmg.stokes import (FullStokesSystem, assemble_condensed_stokes,
                          recover_local_stokes, stokes_error_norms,
                          stokes_level_coefficients, uzawa_solve)


def manufactured_setup(dim, target_h, epsilon=1e-8, beta=10.0):
    pr = ManufacturedStokesProblem(dim, beta=beta)
    mesh = build_unit_box_mesh(dim, target_h)
    vs = FacetSpace(mesh, dim, dirichlet="all")
    ps = PressureSpace(mesh, mean_zero=True)
    co = stokes_level_coefficients(mesh, pr.mu, pr.beta)
    system = assemble_condensed_stokes(mesh, vs, ps, co, epsilon=epsilon, f=pr.f)
    return pr, mesh, vs, ps, co, system


def test_translation_fields():
    mesh = build_unit_box_mesh(2, 0.7)
    vs = FacetSpace(mesh, 2)        # no constraints
    co = stokes_level_coefficients(mesh, 1.0, 0.0)
    system = assemble_condensed_stokes(mesh, vs, PressureSpace(mesh), co)
    rigid = np.tile([1.0, -2.0], vs.n_free_facets)
    # stiffness kernel contains translations, and their divergence vanishes
    assert np.abs(system.A @ rigid).max() < 1e-12
    assert np.abs(system.B @ rigid).max() < 1e-12


@pytest.mark.parametrize("dim,target_h", [(2, 0.4), (3, 0.7)])
def test_condensation_matches_schur(dim, target_h):
    pr, mesh, vs, ps, co, system = manufactured_setup(dim, target_h)
    full = FullStokesSystem(mesh, vs, ps, co, f=pr.f)
    S, rhs = full.schur_condense()
    nh = vs.n_free
    A = system.A.toarray()
    assert np.linalg.norm(S[:nh, :nh] - A) <= 1e-12 * np.linalg.norm(A)
    BW = (sp.diags(mesh.elem_measure) @ system.B).toarray()
    assert np.linalg.norm(S[:nh, nh:] + BW.T) <= 1e-12 * np.linalg.norm(BW)
    assert np.linalg.norm(S[nh:, :nh] + BW) <= 1e-12 * np.linalg.norm(BW)
    assert np.abs(S[nh:, nh:]).max() < 1e-12
    assert check_symmetric(system.A)
    assert check_symmetric(system.Aeps)


def test_energy_identity_manufactured():
    pr, mesh, vs, ps, co, _ = manufactured_setup(2, 0.4)
    full = FullStokesSystem(mesh, vs, ps, co, f=pr.f)
    L, u_vals, uhat, p = full.solve()
    assert full.energy_identity_residual(L, u_vals, uhat) < 1e-10


def test_zero_data_zero_solution():
    _, mesh, vs, ps, co, _ = manufactured_setup(2, 0.5)
    full = FullStokesSystem(mesh, vs, ps, co, f=None)
    L, u_vals, uhat, p = full.solve()
    for arr in (L, u_vals, uhat, p):
        assert np.abs(arr).max() < 1e-12


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6, 1e-8])
def test_aeps_spd(eps, rng):
    _, mesh, vs, ps, co, system = manufactured_setup(2, 0.5, epsilon=eps)
    x = rng.standard_normal(vs.n_free)
    assert float(x @ (system.Aeps @ x)) > 0
    ew = np.linalg.eigvalsh(system.Aeps.toarray())
    assert ew[0] > 0


def test_one_uzawa_step_nearly_divergence_free():
    pr, mesh, vs, ps, co, system = manufactured_setup(2, 0.4, epsilon=1e-8)
    lu = spla.splu(system.Aeps.tocsc())
    u, p, _ = uzawa_solve(system, lambda b: (lu.solve(b), 1), k_max=1)
    # after one step the residual divergence scales like eps * |p|
    div = system.full_divergence(u)
    assert np.abs(div).max() <= 10 * system.epsilon * np.abs(p).max()
    assert float(mesh.elem_measure @ p) == pytest.approx(0.0, abs=1e-10)


def test_uzawa_zero_rhs():
    _, mesh, vs, ps, co, system = manufactured_setup(2, 0.5)
    system.rhs[:] = 0.0
    system.f_vals[:] = 0.0
    lu = spla.splu(system.Aeps.tocsc())
    u, p, _ = uzawa_solve(system, lambda b: (lu.solve(b), 1), k_max=1)
    assert np.abs(u).max() < 1e-14 and np.abs(p).max() < 1e-14


def test_uzawa_geometric_decay(rng):
    """Pressure error contracts at least at rate eps/(eps + mu0), mu0 the
    smallest Schur eigenvalue measured against a direct reference."""
    eps = 1e-2
    pr, mesh, vs, ps, co, system = manufactured_setup(2, 0.5, epsilon=eps)
    full = FullStokesSystem(mesh, vs, ps, co, f=pr.f)
    _, _, uhat_ref, p_ref = full.solve()

    A = system.A.toarray()
    BW = (sp.diags(mesh.elem_measure) @ system.B).toarray()
    # Schur operator in the measure-weighted pressure pairing
    M_s = BW @ np.linalg.solve(A, BW.T)
    ew = scipy.linalg.eigh(M_s, np.diag(mesh.elem_measure), eigvals_only=True)
    mu0 = ew[ew > 1e-10][0]
    rate = eps / (eps + mu0)

    lu = spla.splu(system.Aeps.tocsc())
    errs = []
    prev_u = None
    for k in range(1, 5):
        u, p, _ = uzawa_solve(system, lambda b: (lu.solve(b), 1), k_max=k)
        errs.append(np.sqrt(float(mesh.elem_measure @ (p - p_ref) ** 2)))
        prev_u = u
    for k in range(1, len(errs)):
        assert errs[k] <= rate * errs[k - 1] * 1.05
    # velocity follows the pressure error (penalized energy bound)
    uerr = np.sqrt(float((prev_u - uhat_ref) @ (system.A @ (prev_u - uhat_ref))))
    assert uerr <= 10 * np.sqrt(eps) * (errs[-1] + 1e-14)


def test_recovery_matches_full_solve():
    pr, mesh, vs, ps, co, system = manufactured_setup(2, 0.4)
    full = FullStokesSystem(mesh, vs, ps, co, f=pr.f)
    L, u_vals, uhat, p = full.solve()
    lu = spla.splu(system.Aeps.tocsc())
    u, puz, _ = uzawa_solve(system, lambda b: (lu.solve(b), 1), k_max=1)
    L2, uv2 = recover_local_stokes(system, u)
    assert np.abs(L2 - L).max() < 1e-8 * max(1, np.abs(L).max())
    assert np.abs(uv2 - u_vals).max() < 1e-8
    assert np.abs(puz - p).max() < 1e-7 * max(1, np.abs(p).max())


def test_recovery_trivial_cases():
    mesh = build_unit_box_mesh(2, 0.5)
    vs = FacetSpace(mesh, 2)            # unconstrained: translations are global
    co = stokes_level_coefficients(mesh, 1.0, 0.0)
    system = assemble_condensed_stokes(mesh, vs, PressureSpace(mesh), co)
    rigid = np.tile([0.3, 0.4], vs.n_free_facets)
    L, u_vals = recover_local_stokes(system, rigid)
    assert np.abs(L).max() < 1e-13
    uhat_loc = vs.full_vector(rigid)[mesh.elem_facets]
    assert np.abs(u_vals - uhat_loc).max() < 1e-13


def test_error_norms_reproduce_divfree_linear():
    mesh = build_unit_box_mesh(2, 0.5)
    u_lin = lambda p: np.stack([p[..., 0], -p[..., 1]], axis=-1)
    L_exact = -np.array([[1.0, 0.0], [0.0, -1.0]])
    L_fn = lambda p: np.broadcast_to(L_exact, p.shape[:-1] + (2, 2))
    nodal = u_lin(mesh.local_facet_barycenters())
    L = np.tile(L_exact, (mesh.n_elements, 1, 1))
    eu, ediv, eL = stokes_error_norms(mesh, L, nodal, u_lin, L_fn)
    assert eu < 1e-12 and ediv < 1e-12 and eL < 1e-12


def test_step_domain_do_nothing_outlet():
    """Open outlet: no mean-zero handling needed, the boundary fixes the
    pressure, and the per-element continuity rows hold exactly."""
    pr = BackwardStepProblem(2)
    mesh = build_step_domain_mesh(2, 0.5)
    vs = FacetSpace(mesh, 2, dirichlet=pr.dirichlet)
    ps = PressureSpace(mesh, mean_zero=False)
    co = stokes_level_coefficients(mesh, pr.mu, pr.beta)
    plain = assemble_condensed_stokes(mesh, vs, ps, co, f=pr.f,
                                      dirichlet_values=pr.dirichlet_values)
    full = FullStokesSystem(mesh, vs, ps, co, f=pr.f,
                            dirichlet_values=pr.dirichlet_values)
    S, rhs = full.schur_condense()
    nh = vs.n_free
    assert np.linalg.norm(S[:nh, :nh] - plain.A.toarray()) \
        <= 1e-11 * np.linalg.norm(S[:nh, :nh])
    assert np.linalg.norm(rhs[:nh] - plain.rhs) <= 1e-11 * np.linalg.norm(plain.rhs)
    L, u_vals, uhat, p = full.solve()
    div = plain.full_divergence(uhat)
    assert np.abs(div).max() < 1e-9
