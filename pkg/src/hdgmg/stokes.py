"""Generalized Stokes discretization with vector facet unknowns and
element-wise constant pressure, solved by an augmented-Lagrangian Uzawa
outer iteration.

The condensed velocity block is the vector analogue of the diffusion system;
the divergence matrix B maps facet velocities to the per-element constant
divergence of their piecewise-linear identification.  The penalized operator
A_eps = A + eps^-1 B' W B (W the element measures) reproduces the grad-div
augmented bilinear form exactly, and one pressure update per velocity solve
is p <- p - eps^-1 (B u + boundary divergence).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .linalg import assemble_from_triplets
from .quadrature import integrate_elementwise, quad_points
from .diffusion import nodal_values_at_quad


class StokesLevelCoefficients:
    """Constant viscosity/reaction with the per-(element, facet) damping
    gamma = mu / (mu + h_K^2 beta / (d+1)) and stabilization tau = mu / h_K."""

    def __init__(self, mesh, mu=1.0, beta=0.0):
        d = mesh.dim
        self.mesh = mesh
        self.mu = float(mu)
        self.beta = float(beta)
        hk = mesh.h_K_facet
        self.gamma = self.mu / (self.mu + hk ** 2 * self.beta / (d + 1))
        self.tau = self.mu / hk


def stokes_level_coefficients(mesh, mu=1.0, beta=0.0):
    return StokesLevelCoefficients(mesh, mu, beta)


class CondensedStokesSystem:
    """Velocity block A, divergence matrix B (rows are element divergence
    values), penalized matrix Aeps, and the assembled right-hand side."""

    def __init__(self, A, B, b_dir, Aeps, rhs, epsilon, vspace, pspace, coeffs,
                 dirichlet_vals, f_vals):
        self.A = A
        self.B = B
        self.b_dir = b_dir            # divergence carried by the Dirichlet data
        self.Aeps = Aeps
        self.rhs = rhs
        self.epsilon = epsilon
        self.vspace = vspace
        self.pspace = pspace
        self.coeffs = coeffs
        self.dirichlet_vals = dirichlet_vals
        self.f_vals = f_vals

    def full_divergence(self, u_free):
        return self.B @ u_free + self.b_dir


def _sample_vector(fn, pts, d):
    if fn is None:
        return np.zeros((len(pts), d))
    return np.asarray(fn(pts), dtype=float).reshape(len(pts), d)


def assemble_condensed_stokes(mesh, vspace, pspace, coeffs, epsilon=None,
                              f=None, dirichlet_values=None):
    """Condensed Stokes blocks over free vector facet DOFs.

    Component stiffness mu |K| g_i . g_j, facet-diagonal damped mass, and the
    divergence rows; Dirichlet data is lifted into the right-hand side,
    including its grad-div penalty contribution when epsilon is given.
    """
    d = mesh.dim
    ne = mesh.n_elements
    g = mesh.cr_basis_gradients()                    # (ne, d+1, d)
    meas = mesh.elem_measure
    stiff = coeffs.mu * meas[:, None, None] * np.einsum("kid,kjd->kij", g, g)
    massd = meas[:, None] / (d + 1) * coeffs.gamma * coeffs.beta

    pts = mesh.local_facet_barycenters().reshape(-1, d)
    f_vals = _sample_vector(f, pts, d).reshape(ne, d + 1, d)
    load = meas[:, None, None] / (d + 1) * coeffs.gamma[:, :, None] * f_vals

    dofs = vspace.elem_dofs()                        # (ne, d+1, d)
    free = dofs >= 0
    dvals = vspace.dirichlet_values(dirichlet_values)
    dval_loc = vspace.full_vector(np.zeros(vspace.n_free), dvals)[mesh.elem_facets]

    rows, cols, vals = [], [], []
    rhs = np.zeros(vspace.n_free)
    for i in range(d + 1):
        for c in range(d):
            fi = free[:, i, c]
            np.add.at(rhs, dofs[fi, i, c], load[fi, i, c])
            for j in range(d + 1):
                vij = stiff[:, i, j].copy()
                if i == j:
                    vij += massd[:, i]
                both = fi & free[:, j, c]
                rows.append(dofs[both, i, c])
                cols.append(dofs[both, j, c])
                vals.append(vij[both])
                lift = fi & ~free[:, j, c]
                if np.any(lift):
                    np.subtract.at(rhs, dofs[lift, i, c],
                                   vij[lift] * dval_loc[lift, j, c])
    A = assemble_from_triplets(vspace.n_free,
                               (np.concatenate(rows), np.concatenate(cols),
                                np.concatenate(vals)))

    # divergence rows: (B u)_K = sum_i g_i . u_i; Dirichlet part kept separate
    brows, bcols, bvals = [], [], []
    b_dir = np.zeros(ne)
    eids = np.arange(ne)
    for i in range(d + 1):
        for c in range(d):
            fi = free[:, i, c]
            brows.append(eids[fi])
            bcols.append(dofs[fi, i, c])
            bvals.append(g[fi, i, c])
            b_dir[~fi] += g[~fi, i, c] * dval_loc[~fi, i, c]
    B = assemble_from_triplets(vspace.n_free,
                               (np.concatenate(brows), np.concatenate(bcols),
                                np.concatenate(bvals)), m=ne)

    Aeps = None
    if epsilon is not None:
        W = sp.diags(meas)
        Aeps = (A + (1.0 / epsilon) * (B.T @ W @ B)).tocsr()
        rhs = rhs - (1.0 / epsilon) * (B.T @ (meas * b_dir))
    return CondensedStokesSystem(A, B, b_dir, Aeps, rhs, epsilon, vspace,
                                 pspace, coeffs, dvals, f_vals)


def uzawa_solve(system, inner_solver, k_max=1):
    """Augmented-Lagrangian Uzawa iteration on the penalized system.

    `inner_solver(rhs)` must solve Aeps u = rhs and return (u, iterations).
    Starts from zero pressure; each velocity solve is followed by the
    pressure update p <- p - eps^-1 div(u), projected to zero mean when the
    pressure space requires it.
    """
    eps = system.epsilon
    p = np.zeros(system.pspace.n_dofs)
    u = np.zeros(system.vspace.n_free)
    reports = []
    meas = system.vspace.mesh.elem_measure
    for _ in range(k_max):
        # momentum convention here is  A u - (WB)' p = b,  so the known
        # pressure moves to the right-hand side with a plus sign
        rhs_k = system.rhs + system.B.T @ (meas * p)
        u, iters = inner_solver(rhs_k)
        p = p - (1.0 / eps) * system.full_divergence(u)
        p = system.pspace.project_mean_zero(p)
        reports.append(iters)
    return u, p, reports


def recover_local_stokes(system, u_free):
    """Per-element recovery of the constant velocity-gradient tensor, the
    piecewise-linear velocity nodal values, and the pressure passthrough."""
    mesh = system.vspace.mesh
    d = mesh.dim
    co = system.coeffs
    uhat = system.vspace.full_vector(u_free, system.dirichlet_vals)
    uhat_loc = uhat[mesh.elem_facets]                # (ne, d+1, d)
    g = mesh.cr_basis_gradients()
    L = -co.mu * np.einsum("kia,kib->kab", uhat_loc, g)
    u_vals = co.gamma[:, :, None] * (
        uhat_loc + (mesh.h_K_facet ** 2)[:, :, None] / ((d + 1) * co.mu)
        * system.f_vals)
    return L, u_vals


def stokes_error_norms(mesh, L, u_vals, exact_u, exact_L):
    """L2 errors of velocity and gradient tensor, plus the divergence norm of
    the recovered piecewise-linear velocity."""
    d = mesh.dim
    qpts = quad_points(mesh)
    flat = qpts.reshape(-1, d)
    nq = qpts.shape[1]
    ue = np.asarray(exact_u(flat), dtype=float).reshape(-1, nq, d)
    uh = nodal_values_at_quad(mesh, u_vals)
    err_u = np.sqrt(integrate_elementwise(mesh, np.einsum("kqd,kqd->kq",
                                                          ue - uh, ue - uh)))
    g = mesh.cr_basis_gradients()
    div = np.einsum("kid,kid->k", u_vals, g)
    err_div = np.sqrt(float(np.sum(mesh.elem_measure * div ** 2)))
    Le = np.asarray(exact_L(flat), dtype=float).reshape(-1, nq, d, d)
    dL = Le - L[:, None, :, :]
    err_L = np.sqrt(integrate_elementwise(mesh, np.einsum("kqab,kqab->kq", dL, dL)))
    return err_u, err_div, err_L


# -- uncondensed four-field system (test oracle only) ---------------------------

class FullStokesSystem:
    """Block system over (gradient tensor, velocity nodal values, facet
    velocities, pressure), in the symmetric sign convention.  A zero-mean
    multiplier row makes the enclosed-flow case solvable."""

    def __init__(self, mesh, vspace, pspace, coeffs, f=None, dirichlet_values=None):
        d = mesh.dim
        ne = mesh.n_elements
        self.mesh, self.vspace, self.pspace, self.coeffs = mesh, vspace, pspace, coeffs
        self.n_L = ne * d * d
        self.n_u = ne * (d + 1) * d
        self.n_hat = vspace.n_free
        self.n_p = ne
        n = self.n_L + self.n_u + self.n_hat + self.n_p
        self.offsets = (0, self.n_L, self.n_L + self.n_u,
                        self.n_L + self.n_u + self.n_hat)

        pts = mesh.local_facet_barycenters().reshape(-1, d)
        self.f_vals = _sample_vector(f, pts, d).reshape(ne, d + 1, d)
        dvals = vspace.dirichlet_values(dirichlet_values)
        self.dirichlet_vals = dvals
        dval_loc = vspace.full_vector(np.zeros(vspace.n_free), dvals)[mesh.elem_facets]

        meas = mesh.elem_measure
        fmeas = meas[:, None] / mesh.h_K_facet
        normal = mesh.facet_normal
        tau = coeffs.tau
        dofs = vspace.elem_dofs()
        free = dofs >= 0
        oL, ou, oh, op = self.offsets
        eids = np.arange(ne)

        rows, cols, vals = [], [], []
        rhs = np.zeros(n)

        def add(r, c, v):
            rows.append(np.asarray(r, dtype=np.int64))
            cols.append(np.asarray(c, dtype=np.int64))
            vals.append(np.asarray(v, dtype=float))

        def Lid(r, c):
            return oL + (eids * d + r) * d + c

        def uid(i, r):
            return ou + (eids * (d + 1) + i) * d + r

        # gradient equation (negated): -mu^-1 |K| L_rc - sum_i |F_i| n_i[c] uhat_i[r]
        for r in range(d):
            for c in range(d):
                add(Lid(r, c), Lid(r, c), -meas / coeffs.mu)
                for i in range(d + 1):
                    coef = fmeas[:, i] * normal[:, i, c]
                    fi = free[:, i, r]
                    add(Lid(r, c)[fi], oh + dofs[fi, i, r], -coef[fi])
                    np.add.at(rhs, Lid(r, c)[~fi], coef[~fi] * dval_loc[~fi, i, r])
        # momentum at facet nodes: (tau|F_i| + |K| beta/(d+1)) u - tau|F_i| uhat = load
        for i in range(d + 1):
            tf = tau[:, i] * fmeas[:, i]
            for r in range(d):
                rr = uid(i, r)
                add(rr, rr, tf + meas * coeffs.beta / (d + 1))
                fi = free[:, i, r]
                add(rr[fi], oh + dofs[fi, i, r], -tf[fi])
                rhs[rr] += meas * self.f_vals[:, i, r] / (d + 1)
                np.add.at(rhs, rr[~fi], tf[~fi] * dval_loc[~fi, i, r])
        # continuity (negated): -sum_i |F_i| uhat_i . n_i = -|K| div
        gcr = mesh.cr_basis_gradients()
        for i in range(d + 1):
            for r in range(d):
                coef = meas * gcr[:, i, r]
                fi = free[:, i, r]
                add(op + eids[fi], oh + dofs[fi, i, r], -coef[fi])
                np.add.at(rhs, op + eids[~fi], coef[~fi] * dval_loc[~fi, i, r])
        # facet equation (negated): -sum_K (|F|((L + pI)n)_r + tau|F|(u - uhat)_r)
        for i in range(d + 1):
            tf = tau[:, i] * fmeas[:, i]
            for r in range(d):
                fi = free[:, i, r]
                rr = oh + dofs[fi, i, r]
                for c in range(d):
                    add(rr, Lid(r, c)[fi], -(fmeas[:, i] * normal[:, i, c])[fi])
                add(rr, op + eids[fi], -(fmeas[:, i] * normal[:, i, r])[fi])
                add(rr, uid(i, r)[fi], -tf[fi])
                add(rr, rr, tf[fi])

        self.matrix = assemble_from_triplets(n, (np.concatenate(rows),
                                                 np.concatenate(cols),
                                                 np.concatenate(vals)))
        self.rhs = rhs

    def schur_condense(self):
        """Eliminate the element-local gradient/velocity blocks; returns the
        dense Schur complement over (facet velocity, pressure) and its rhs."""
        nl = self.n_L + self.n_u
        M = self.matrix.tocsc()
        lu = spla.splu(M[:nl, :nl])
        A_lg = M[:nl, nl:].toarray()
        S = M[nl:, nl:].toarray() - M[nl:, :nl] @ lu.solve(A_lg)
        rhs = self.rhs[nl:] - M[nl:, :nl] @ lu.solve(self.rhs[:nl])
        return S, rhs

    def solve(self):
        n = self.matrix.shape[0]
        if self.pspace.mean_zero:
            op = self.offsets[3]
            w = self.mesh.elem_measure
            col = sp.coo_matrix((w, (op + np.arange(self.n_p),
                                     np.zeros(self.n_p, dtype=np.int64))),
                                shape=(n, 1))
            M = sp.bmat([[self.matrix, col], [col.T, None]], format="csc")
            b = np.concatenate([self.rhs, [0.0]])
            x = spla.spsolve(M, b)[:-1]
        else:
            x = spla.spsolve(self.matrix.tocsc(), self.rhs)
        d = self.mesh.dim
        ne = self.mesh.n_elements
        oL, ou, oh, op = self.offsets
        L = x[oL:oL + self.n_L].reshape(ne, d, d)
        u_vals = x[ou:ou + self.n_u].reshape(ne, d + 1, d)
        uhat = x[oh:oh + self.n_hat]
        p = x[op:op + self.n_p]
        return L, u_vals, uhat, p

    def energy_identity_residual(self, L, u_vals, uhat_free):
        mesh, co = self.mesh, self.coeffs
        d = mesh.dim
        uhat_loc = self.vspace.full_vector(uhat_free, self.dirichlet_vals)[mesh.elem_facets]
        fmeas = mesh.elem_measure[:, None] / mesh.h_K_facet
        lhs = float(np.sum(mesh.elem_measure / co.mu * np.einsum("kab,kab->k", L, L)))
        lhs += float(np.sum(co.tau * fmeas * np.einsum("kid,kid->ki",
                                                       u_vals - uhat_loc, u_vals - uhat_loc)))
        lhs += float(np.sum(mesh.elem_measure[:, None] / (d + 1) * co.beta
                            * np.einsum("kid,kid->ki", u_vals, u_vals)))
        rhs = float(np.sum(mesh.elem_measure[:, None] / (d + 1)
                           * np.einsum("kid,kid->ki", self.f_vals, u_vals)))
        scale = max(abs(lhs), abs(rhs), 1e-300)
        return abs(lhs - rhs) / scale
