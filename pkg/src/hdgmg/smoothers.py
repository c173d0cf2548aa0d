"""Point and vertex-patch smoothers with transpose application.

Jacobi variants are their own transpose; the Gauss-Seidel transposes sweep in
reverse order, so a pre-sweep/post-transpose-sweep pair keeps the multigrid
operator symmetric.  Vertex patches gather all free DOFs on facets meeting a
mesh vertex; their SPD blocks are Cholesky-factored once per level.
"""

import numpy as np

from .kernels import BlockSet, gs_backward, gs_forward


class PointJacobi:
    def __init__(self, A, damping=0.5):
        self.A = A
        self.damping = damping
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise ValueError("nonpositive diagonal")
        self.inv_diag = 1.0 / diag

    def smooth(self, b, x):
        x += self.damping * self.inv_diag * (b - self.A @ x)

    smooth_transpose = smooth

    def apply(self, r):
        """Correction for residual r (x = 0 start)."""
        return self.damping * self.inv_diag * r

    apply_transpose = apply


class PointGaussSeidel:
    def __init__(self, A):
        self.A = A
        self.diag = A.diagonal()
        if np.any(self.diag <= 0):
            raise ValueError("nonpositive diagonal")

    def smooth(self, b, x):
        gs_forward(self.A.indptr, self.A.indices, self.A.data, self.diag, b, x)

    def smooth_transpose(self, b, x):
        gs_backward(self.A.indptr, self.A.indices, self.A.data, self.diag, b, x)

    def apply(self, r):
        x = np.zeros_like(r)
        self.smooth(r, x)
        return x

    def apply_transpose(self, r):
        x = np.zeros_like(r)
        self.smooth_transpose(r, x)
        return x


class BlockJacobi:
    def __init__(self, A, blocks, damping=0.4):
        self.A = A
        self.damping = damping
        self.blocks = blocks.factorize(A)

    def smooth(self, b, x):
        r = b - self.A @ x
        self.blocks.solve_blocks(r, damping=self.damping, out=x)

    smooth_transpose = smooth

    def apply(self, r):
        return self.blocks.solve_blocks(r, damping=self.damping)

    apply_transpose = apply


class BlockGaussSeidel:
    def __init__(self, A, blocks):
        self.A = A
        self.blocks = blocks.factorize(A)

    def smooth(self, b, x):
        self.blocks.gs_sweep(self.A, b, x, reverse=False)

    def smooth_transpose(self, b, x):
        self.blocks.gs_sweep(self.A, b, x, reverse=True)

    def apply(self, r):
        x = np.zeros_like(r)
        self.smooth(r, x)
        return x

    def apply_transpose(self, r):
        x = np.zeros_like(r)
        self.smooth_transpose(r, x)
        return x


def build_vertex_patches(space):
    """Overlapping vertex patches: all free DOFs (every component) on facets
    containing each mesh vertex, in vertex-index order."""
    mesh = space.mesh
    d = mesh.dim
    c = space.components
    free = np.where(space.free_mask)[0]
    verts = mesh.facets[free]                     # (nfree_facets, d)
    fidx = np.repeat(free, d)
    flat_v = verts.reshape(-1)
    order = np.lexsort((fidx, flat_v))
    sv, sf = flat_v[order], fidx[order]
    boundaries = np.nonzero(np.diff(sv))[0] + 1
    starts = np.concatenate([[0], boundaries, [len(sv)]])
    ranks = space.facet_rank[sf]
    dofs = (ranks[:, None] * c + np.arange(c)).reshape(-1)
    bptr = starts * c
    return BlockSet(bptr, dofs)


def build_smoother(A, kind, patches=None, damping=None):
    """Factory: kind in {'pjac', 'pgs', 'bjac', 'bgs'}.

    Defaults: damping 0.5 for point Jacobi, 0.4 for the vertex-block Jacobi.
    """
    if kind == "pjac":
        return PointJacobi(A, 0.5 if damping is None else damping)
    if kind == "pgs":
        return PointGaussSeidel(A)
    if patches is None:
        raise ValueError("block smoothers need vertex patches")
    if kind == "bjac":
        return BlockJacobi(A, patches, 0.4 if damping is None else damping)
    if kind == "bgs":
        return BlockGaussSeidel(A, patches)
    raise ValueError(f"unknown smoother kind {kind!r}")
