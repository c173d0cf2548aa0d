"""DOF management for the piecewise-constant facet space and the P0 pressure space.

The facet space carries one unknown per non-Dirichlet facet and component.
Identifying each facet value with the nodal value of a piecewise-linear
function at the facet barycenter maps the space one-to-one onto the classical
nonconforming (facet-midpoint continuous) space, so the same index set serves
both views; `cr_gradient` evaluates that identification's element gradients.
"""

import numpy as np


class FacetSpace:
    """Free-DOF indexing for facet constants, scalar or vector valued.

    Vector DOFs are component-major within each facet: the facet with free
    rank r owns DOFs r*c .. r*c+c-1 (ux, uy[, uz]), keeping vertex patches
    contiguous.  `weight_0l` holds the diagonal weight sum_{K containing F}
    |K|/(d+1) of the discrete facet inner product, repeated per component.
    """

    def __init__(self, mesh, components=1, dirichlet=None):
        if components not in (1, mesh.dim):
            raise ValueError("components must be 1 or the mesh dimension")
        self.mesh = mesh
        self.components = components

        dir_mask = np.zeros(mesh.n_facets, dtype=bool)
        if dirichlet == "all":
            dir_mask[:] = mesh.boundary_mask
        elif callable(dirichlet):
            bidx = np.where(mesh.boundary_mask)[0]
            sel = np.asarray(dirichlet(mesh.facet_barycenter[bidx]), dtype=bool)
            dir_mask[bidx[sel]] = True
        elif dirichlet is not None:
            raise ValueError("dirichlet must be None, 'all', or a predicate")
        self.dirichlet_mask = dir_mask
        self.free_mask = ~dir_mask

        self.facet_rank = -np.ones(mesh.n_facets, dtype=np.int64)
        free = np.where(self.free_mask)[0]
        self.facet_rank[free] = np.arange(len(free))
        self.n_free_facets = len(free)
        self.n_free = len(free) * components

        w = np.zeros(mesh.n_facets)
        contrib = np.broadcast_to(mesh.elem_measure[:, None] / (mesh.dim + 1),
                                  mesh.elem_facets.shape)
        np.add.at(w, mesh.elem_facets, contrib)
        self.weight_0l = np.repeat(w[free], components)

    @property
    def dirichlet_facets(self):
        return np.where(self.dirichlet_mask)[0]

    def dof_of_facet(self, facet_ids, component=0):
        """Global free DOF ids; -1 where the facet is Dirichlet."""
        rank = self.facet_rank[facet_ids]
        dof = rank * self.components + component
        return np.where(rank < 0, -1, dof)

    def elem_dofs(self):
        """Free DOF ids per (element, local facet[, component]); -1 for Dirichlet.

        Shape (ne, d+1) for scalar spaces, (ne, d+1, c) for vector ones.
        """
        rank = self.facet_rank[self.mesh.elem_facets]
        if self.components == 1:
            return np.where(rank < 0, -1, rank)
        dof = rank[..., None] * self.components + np.arange(self.components)
        return np.where(rank[..., None] < 0, -1, dof)

    def dirichlet_values(self, values_fn):
        """Sample boundary data at Dirichlet facet barycenters, (n_dir[, c])."""
        pts = self.mesh.facet_barycenter[self.dirichlet_mask]
        if values_fn is None:
            shape = (len(pts),) if self.components == 1 else (len(pts), self.components)
            return np.zeros(shape)
        vals = np.asarray(values_fn(pts), dtype=float)
        if self.components == 1:
            return vals.reshape(len(pts))
        return vals.reshape(len(pts), self.components)

    def full_vector(self, free_values, dirichlet_values=None):
        """Expand free DOFs to a per-facet array including Dirichlet entries."""
        c = self.components
        shape = (self.mesh.n_facets,) if c == 1 else (self.mesh.n_facets, c)
        out = np.zeros(shape)
        if c == 1:
            out[self.free_mask] = free_values
            if dirichlet_values is not None:
                out[self.dirichlet_mask] = dirichlet_values
        else:
            out[self.free_mask] = free_values.reshape(self.n_free_facets, c)
            if dirichlet_values is not None:
                out[self.dirichlet_mask] = dirichlet_values
        return out


class PressureSpace:
    """One DOF per element; optionally constrained to measure-weighted zero mean."""

    def __init__(self, mesh, mean_zero=True):
        self.mesh = mesh
        self.mean_zero = mean_zero
        self.n_dofs = mesh.n_elements

    def project_mean_zero(self, p):
        if not self.mean_zero:
            return p
        w = self.mesh.elem_measure
        return p - (w @ p) / w.sum()


def cr_gradient(mesh, elem, facet_values):
    """Constant gradient of the P1 function taking `facet_values` at the
    element's facet barycenters."""
    g = mesh.cr_basis_gradients()[elem]           # (d+1, d)
    vals = np.asarray(facet_values, dtype=float)
    return vals @ g


def cr_divergence(mesh, elem, facet_values):
    """Divergence of the vector P1 function with values (d+1, d) at the
    facet barycenters; constant on the element."""
    g = mesh.cr_basis_gradients()[elem]
    vals = np.asarray(facet_values, dtype=float)
    return float(np.sum(vals * g))


def cr_values_at(mesh, elems, points, facet_values_per_elem):
    """Evaluate the facet-barycenter nodal P1 function at given points.

    `points` has shape (n, d) with points[i] inside elements[i];
    `facet_values_per_elem` has shape (n, d+1[, c]).
    """
    d = mesh.dim
    v0 = mesh.vertices[mesh.elements[elems, 0]]
    lam = np.empty((len(elems), d + 1))
    grads = mesh._grad_lambda[elems]
    lam[:, 1:] = np.einsum("nid,nd->ni", grads[:, 1:, :], points - v0)
    lam[:, 0] = 1.0 - lam[:, 1:].sum(axis=1)
    phi = 1.0 - d * lam
    vals = np.asarray(facet_values_per_elem)
    if vals.ndim == 2:
        return np.einsum("ni,ni->n", phi, vals)
    return np.einsum("ni,nic->nc", phi, vals)
