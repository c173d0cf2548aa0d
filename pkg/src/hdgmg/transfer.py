"""Intergrid transfer between facet spaces on consecutive mesh levels.

The base prolongation evaluates the coarse facet function's piecewise-linear
identification at the fine facet barycenters, averaging the two element
traces where the fine facet lies on the coarse skeleton.  Its transpose in
the weighted facet inner products is the restriction.  For the penalized
Stokes velocity operator the averaging is post-corrected by element-local
solves on the fine DOFs interior to each coarse element, which restores the
coarse-grid divergence means that make the cycle robust in the penalty.
"""

import numpy as np
import scipy.sparse as sp

from .kernels import BlockSet
from .mesh import FACET_IN_COARSE_ELEM, FACET_ON_COARSE_FACET


def _cr_basis_at(mesh, elems, points):
    """phi_j(points) for the facet-barycenter P1 basis of given elements."""
    d = mesh.dim
    v0 = mesh.vertices[mesh.elements[elems, 0]]
    lam = np.empty((len(elems), d + 1))
    lam[:, 1:] = np.einsum("nid,nd->ni", mesh._grad_lambda[elems][:, 1:, :], points - v0)
    lam[:, 0] = 1.0 - lam[:, 1:].sum(axis=1)
    return 1.0 - d * lam


def build_prolongation(coarse_mesh, fine_mesh, rmaps, coarse_space, fine_space):
    """Averaging prolongation between free facet DOFs of two nested levels.

    Fine facets interior to a coarse element take that element's trace; fine
    facets on the coarse skeleton average the traces of the adjacent coarse
    elements (single trace on non-Dirichlet boundary).  Coarse Dirichlet
    facets contribute zero, matching the homogeneous correction space.
    """
    if fine_space.components != coarse_space.components:
        raise ValueError("component mismatch")
    free_f = np.where(fine_space.free_mask)[0]
    kind = rmaps.facet_parent_kind[free_f]
    pid = rmaps.facet_parent_id[free_f]

    src_facet, src_elem, src_w = [], [], []
    inside = kind == FACET_IN_COARSE_ELEM
    src_facet.append(free_f[inside])
    src_elem.append(pid[inside])
    src_w.append(np.ones(inside.sum()))

    on = kind == FACET_ON_COARSE_FACET
    fe = coarse_mesh.facet_elements()[pid[on]]
    two = fe[:, 1] >= 0
    w1 = np.where(two, 0.5, 1.0)
    src_facet.append(free_f[on])
    src_elem.append(fe[:, 0])
    src_w.append(w1)
    src_facet.append(free_f[on][two])
    src_elem.append(fe[two, 1])
    src_w.append(np.full(two.sum(), 0.5))

    src_facet = np.concatenate(src_facet)
    src_elem = np.concatenate(src_elem)
    src_w = np.concatenate(src_w)

    phi = _cr_basis_at(coarse_mesh, src_elem,
                       fine_mesh.facet_barycenter[src_facet]) * src_w[:, None]
    cdofs = coarse_space.facet_rank[coarse_mesh.elem_facets[src_elem]]  # -1 on Dirichlet
    rows = np.broadcast_to(fine_space.facet_rank[src_facet][:, None], cdofs.shape)
    keep = cdofs >= 0
    P = sp.coo_matrix((phi[keep], (rows[keep], cdofs[keep])),
                      shape=(fine_space.n_free_facets, coarse_space.n_free_facets)).tocsr()
    P.sum_duplicates()
    if fine_space.components > 1:
        P = sp.kron(P, sp.identity(fine_space.components, format="csr"), format="csr")
    return P


def restrict_operator(P, fine_weights, coarse_weights):
    """Transpose of the prolongation in the weighted facet inner products:
    R = D_coarse^-1 P' D_fine, acting on nodal coefficient vectors."""
    Dc_inv = sp.diags(1.0 / coarse_weights)
    Df = sp.diags(fine_weights)
    return (Dc_inv @ P.T @ Df).tocsr()


def build_bubble_blocks(rmaps, fine_space):
    """Per coarse element, the fine free vector DOFs on facets interior to it.

    Blocks are disjoint, so the local penalized solves of the corrected
    prolongation decouple element by element.
    """
    inside = np.where((rmaps.facet_parent_kind == FACET_IN_COARSE_ELEM)
                      & fine_space.free_mask)[0]
    parent = rmaps.facet_parent_id[inside]
    order = np.lexsort((inside, parent))
    inside, parent = inside[order], parent[order]
    c = fine_space.components
    ranks = fine_space.facet_rank[inside]
    dofs = (ranks[:, None] * c + np.arange(c)).reshape(-1)
    starts = np.searchsorted(parent, np.arange(parent.max() + 2 if len(parent) else 1))
    bptr = starts * c
    return BlockSet(bptr, dofs)


class DivCorrectedProlongation:
    """Averaging prolongation followed by the local penalized-harmonic
    correction on the bubble DOFs: v -> (id - local solve) P v."""

    def __init__(self, P, Aeps, bubbles):
        self.P = P
        self.Aeps = Aeps
        self.bubbles = bubbles.factorize(Aeps)

    def prolong(self, v):
        w = self.P @ v
        t = self.bubbles.solve_blocks(self.Aeps @ w)
        return w - t

    def restrict_dual(self, r):
        """Euclidean transpose applied to assembled residual vectors."""
        t = self.bubbles.solve_blocks(r)
        return self.P.T @ (r - self.Aeps @ t)


class PlainProlongation:
    """Adapter giving the averaging matrix the same interface."""

    def __init__(self, P):
        self.P = P

    def prolong(self, v):
        return self.P @ v

    def restrict_dual(self, r):
        return self.P.T @ r
