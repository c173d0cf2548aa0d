"""Reaction-diffusion discretization with piecewise-constant facet unknowns.

The globally coupled system is assembled directly in its condensed form: a
nonconforming P1 stiffness term with harmonically averaged diffusion alpha_h,
plus a facet-diagonal reaction term damped by the factor
gamma = alpha_h / (alpha_h + h_K^2 beta / (d+1)).  The element unknowns
(flux and primal value) are recovered afterwards in closed form, per element.
The uncondensed three-field block system exists only as a test oracle.
"""

import numpy as np
import scipy.sparse.linalg as spla

from .linalg import assemble_from_triplets
from .quadrature import integrate_elementwise, quad_points, simplex_rule


class LevelDiffusionCoefficients:
    """Coefficient samples a single mesh level needs: alpha_h per element and
    beta, f, gamma, tau per (element, local facet)."""

    def __init__(self, mesh, alpha_h, beta_vals, f_vals):
        d = mesh.dim
        self.mesh = mesh
        self.alpha_h = alpha_h
        self.beta_vals = beta_vals
        self.f_vals = f_vals
        hk = mesh.h_K_facet
        self.gamma = alpha_h[:, None] / (alpha_h[:, None] + hk ** 2 * beta_vals / (d + 1))
        self.tau = alpha_h[:, None] / hk


def diffusion_level_coefficients(mesh, alpha=None, beta=None, f=None,
                                 alpha_inv_elem=None):
    """Sample problem coefficients on one level.

    alpha/beta/f are vectorized callables on point arrays; beta and f default
    to zero.  alpha may be replaced by `alpha_inv_elem`, a per-element value
    of the inverse coefficient (already projected to this level), which the
    piecewise-constant jump studies need.
    """
    d = mesh.dim
    pts = mesh.local_facet_barycenters().reshape(-1, d)
    if alpha_inv_elem is not None:
        alpha_inv = np.asarray(alpha_inv_elem, dtype=float)
    elif alpha is not None:
        alpha_inv = (1.0 / np.asarray(alpha(pts), dtype=float)) \
            .reshape(mesh.n_elements, d + 1).mean(axis=1)
    else:
        alpha_inv = np.ones(mesh.n_elements)
    alpha_h = 1.0 / alpha_inv
    shape = (mesh.n_elements, d + 1)
    beta_vals = np.asarray(beta(pts), dtype=float).reshape(shape) if beta is not None \
        else np.zeros(shape)
    f_vals = np.asarray(f(pts), dtype=float).reshape(shape) if f is not None \
        else np.zeros(shape)
    return LevelDiffusionCoefficients(mesh, alpha_h, beta_vals, f_vals)


class CondensedDiffusionSystem:
    def __init__(self, A, rhs, space, coeffs, dirichlet_vals):
        self.A = A
        self.rhs = rhs
        self.space = space
        self.coeffs = coeffs
        self.dirichlet_vals = dirichlet_vals


def assemble_condensed_diffusion(mesh, space, coeffs, dirichlet_values=None):
    """Condensed facet system over free DOFs, with Dirichlet data lifted to
    the right-hand side."""
    d = mesh.dim
    g = mesh.cr_basis_gradients()                  # (ne, d+1, d)
    meas = mesh.elem_measure
    stiff = coeffs.alpha_h[:, None, None] * meas[:, None, None] * \
        np.einsum("kid,kjd->kij", g, g)
    react = meas[:, None] / (d + 1) * coeffs.gamma * coeffs.beta_vals
    load = meas[:, None] / (d + 1) * coeffs.gamma * coeffs.f_vals

    dofs = space.elem_dofs()                       # (ne, d+1), -1 on Dirichlet
    free = dofs >= 0
    dvals = space.dirichlet_values(dirichlet_values)
    dval_full = space.full_vector(np.zeros(space.n_free), dvals)
    dval_loc = dval_full[mesh.elem_facets]         # (ne, d+1)

    rows, cols, vals = [], [], []
    rhs = np.zeros(space.n_free)
    for i in range(d + 1):
        fi = free[:, i]
        np.add.at(rhs, dofs[fi, i], load[fi, i])
        for j in range(d + 1):
            vij = stiff[:, i, j].copy()
            if i == j:
                vij += react[:, i]
            both = fi & free[:, j]
            rows.append(dofs[both, i])
            cols.append(dofs[both, j])
            vals.append(vij[both])
            lift = fi & ~free[:, j]
            if np.any(lift):
                np.subtract.at(rhs, dofs[lift, i], vij[lift] * dval_loc[lift, j])
    A = assemble_from_triplets(space.n_free,
                               (np.concatenate(rows), np.concatenate(cols),
                                np.concatenate(vals)))
    return CondensedDiffusionSystem(A, rhs, space, coeffs, dvals)


def recover_local_diffusion(system, u_free):
    """Closed-form element recovery from the facet solution.

    Returns the constant flux per element (ne, d) and primal values at the
    facet barycenters (ne, d+1).
    """
    mesh = system.space.mesh
    d = mesh.dim
    co = system.coeffs
    uhat_full = system.space.full_vector(u_free, system.dirichlet_vals)
    uhat_loc = uhat_full[mesh.elem_facets]
    g = mesh.cr_basis_gradients()
    sigma = -co.alpha_h[:, None] * np.einsum("ki,kid->kd", uhat_loc, g)
    u_vals = co.gamma * (uhat_loc + mesh.h_K_facet ** 2 /
                         ((d + 1) * co.alpha_h[:, None]) * co.f_vals)
    return sigma, u_vals


def nodal_values_at_quad(mesh, nodal):
    """Evaluate per-element P1 nodal data (values at facet barycenters) at the
    error-quadrature points; returns (ne, nq[, c])."""
    bary, _ = simplex_rule(mesh.dim)
    phi = 1.0 - mesh.dim * bary                    # (nq, d+1)
    if nodal.ndim == 2:
        return np.einsum("qi,ki->kq", phi, nodal)
    return np.einsum("qi,kic->kqc", phi, nodal)


def diffusion_error_norms(mesh, sigma, u_vals, exact_u, exact_sigma):
    """L2 errors of the recovered primal field and flux."""
    qpts = quad_points(mesh)
    flat = qpts.reshape(-1, mesh.dim)
    ue = np.asarray(exact_u(flat), dtype=float).reshape(qpts.shape[:2])
    uh = nodal_values_at_quad(mesh, u_vals)
    err_u = np.sqrt(integrate_elementwise(mesh, (ue - uh) ** 2))
    se = np.asarray(exact_sigma(flat), dtype=float).reshape(qpts.shape[0], qpts.shape[1], mesh.dim)
    diff = se - sigma[:, None, :]
    err_s = np.sqrt(integrate_elementwise(mesh, np.einsum("kqd,kqd->kq", diff, diff)))
    return err_u, err_s


# -- uncondensed three-field system (test oracle only) -------------------------

class FullDiffusionSystem:
    """Block system over (flux, primal nodal values, facet unknowns).

    Assembled in the symmetric convention (flux and facet equations negated),
    so eliminating the element-local blocks reproduces the condensed matrix
    with matching signs.
    """

    def __init__(self, mesh, space, coeffs, dirichlet_values=None):
        d = mesh.dim
        ne = mesh.n_elements
        self.mesh, self.space, self.coeffs = mesh, space, coeffs
        self.n_sigma = ne * d
        self.n_u = ne * (d + 1)
        self.n_hat = space.n_free
        n = self.n_sigma + self.n_u + self.n_hat
        dvals = space.dirichlet_values(dirichlet_values)
        self.dirichlet_vals = dvals
        dval_loc = space.full_vector(np.zeros(space.n_free), dvals)[mesh.elem_facets]

        meas = mesh.elem_measure
        fmeas = meas[:, None] / mesh.h_K_facet     # |F_i| per (elem, local)
        normal = mesh.facet_normal
        tau = coeffs.tau
        dofs = space.elem_dofs()
        free = dofs >= 0
        off_u = self.n_sigma
        off_h = self.n_sigma + self.n_u

        rows, cols, vals = [], [], []
        rhs = np.zeros(n)

        def add(r, c, v):
            rows.append(np.asarray(r, dtype=np.int64))
            cols.append(np.asarray(c, dtype=np.int64))
            vals.append(np.asarray(v, dtype=float))

        eids = np.arange(ne)
        # flux equation (negated): -alpha_h^-1 |K| sigma - sum_i |F_i| n_i uhat_i = lift
        for c in range(d):
            add(eids * d + c, eids * d + c, -meas / coeffs.alpha_h)
            for i in range(d + 1):
                coef = fmeas[:, i] * normal[:, i, c]
                fi = free[:, i]
                add(eids[fi] * d + c, off_h + dofs[fi, i], -coef[fi])
                np.add.at(rhs, eids[~fi] * d + c, coef[~fi] * dval_loc[~fi, i])
        # primal equation: (tau |F_i| + |K| beta_i/(d+1)) u_i - tau |F_i| uhat_i = load
        for i in range(d + 1):
            r = off_u + eids * (d + 1) + i
            tf = tau[:, i] * fmeas[:, i]
            add(r, r, tf + meas * coeffs.beta_vals[:, i] / (d + 1))
            fi = free[:, i]
            add(r[fi], off_h + dofs[fi, i], -tf[fi])
            rhs[r] += meas * coeffs.f_vals[:, i] / (d + 1)
            np.add.at(rhs, r[~fi], tf[~fi] * dval_loc[~fi, i])
        # facet equation (negated): -sum_K (|F| sigma.n + tau |F| (u_i - uhat_i)) = 0
        for i in range(d + 1):
            fi = free[:, i]
            r = off_h + dofs[fi, i]
            tf = tau[:, i] * fmeas[:, i]
            for c in range(d):
                add(r, eids[fi] * d + c, -(fmeas[:, i] * normal[:, i, c])[fi])
            add(r, off_u + eids[fi] * (d + 1) + i, -tf[fi])
            add(r, r, tf[fi])

        self.matrix = assemble_from_triplets(
            n, (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)))
        self.rhs = rhs

    def schur_condense(self):
        """Generic block elimination of the element-local unknowns.

        Returns the facet Schur complement (dense) and reduced right-hand side.
        """
        nl = self.n_sigma + self.n_u
        M = self.matrix.tocsc()
        A_ll = M[:nl, :nl]
        A_lg = M[:nl, nl:].toarray()
        A_gl = M[nl:, :nl]
        A_gg = M[nl:, nl:].toarray()
        lu = spla.splu(A_ll)
        X = lu.solve(A_lg)
        S = A_gg - A_gl @ X
        rhs = self.rhs[nl:] - A_gl @ lu.solve(self.rhs[:nl])
        return S, rhs

    def solve(self):
        x = spla.spsolve(self.matrix.tocsc(), self.rhs)
        d = self.mesh.dim
        ne = self.mesh.n_elements
        sigma = x[:self.n_sigma].reshape(ne, d)
        u_vals = x[self.n_sigma:self.n_sigma + self.n_u].reshape(ne, d + 1)
        uhat = x[self.n_sigma + self.n_u:]
        return sigma, u_vals, uhat

    def energy_identity_residual(self, sigma, u_vals, uhat_free):
        """Relative gap between the discrete energy and the load functional."""
        mesh, co = self.mesh, self.coeffs
        d = mesh.dim
        uhat_loc = self.space.full_vector(uhat_free, self.dirichlet_vals)[mesh.elem_facets]
        fmeas = mesh.elem_measure[:, None] / mesh.h_K_facet
        lhs = float(np.sum(mesh.elem_measure / co.alpha_h * np.sum(sigma ** 2, axis=1)))
        lhs += float(np.sum(co.tau * fmeas * (u_vals - uhat_loc) ** 2))
        lhs += float(np.sum(mesh.elem_measure[:, None] / (d + 1) * co.beta_vals * u_vals ** 2))
        rhs = float(np.sum(mesh.elem_measure[:, None] / (d + 1) * co.f_vals * u_vals))
        scale = max(abs(lhs), abs(rhs), 1e-300)
        return abs(lhs - rhs) / scale
