"""Structured simplicial meshes, uniform red refinement, and mesh hierarchies.

A mesh level stores, besides vertices/elements/facets, all the geometric
quantities the facet-based discretizations need: element and facet measures,
barycenters, per-(element, local facet) outward unit normals and the local
mesh size h_K = |K|/|F|.  Local facet i of an element is the facet opposite
local vertex i, so the piecewise-linear nodal basis tied to facet barycenters
has the closed form phi_i = 1 - d*lambda_i.
"""

import numpy as np

FACET_ON_COARSE_FACET = 0
FACET_IN_COARSE_ELEM = 1


class MeshLevel:
    """One simplicial mesh (dim 2 or 3) with facet connectivity and geometry.

    Immutable after construction.  Facets are stored as sorted vertex tuples,
    globally ordered lexicographically by that key; ``elem_facets[k, i]`` is
    the global index of the facet of element k opposite its local vertex i.
    """

    def __init__(self, dim, vertices, elements):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.dim = dim
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        if self.elements.shape[1] != dim + 1:
            raise ValueError("elements must be (d+1)-tuples")
        self._orient_elements()
        self._build_facets()
        self._build_geometry()
        self._check_invariants()

    # -- construction helpers -------------------------------------------------

    def _orient_elements(self):
        """Orient triangles positively; keep tetrahedron vertex order as given.

        In 3D the stored order is the refinement-canonical one (children of a
        red refinement must keep it so the interior diagonal choice stays
        shape-regular across levels); reflected children are legal there, so
        all geometry below is computed orientation-free.
        """
        v = self.vertices[self.elements]
        edges = v[:, 1:, :] - v[:, :1, :]
        if self.dim == 2:
            det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
            flip = det < 0
            if np.any(flip):
                self.elements[flip] = self.elements[flip][:, [0, 2, 1]]
        else:
            det = np.einsum("ki,ki->k", edges[:, 0], np.cross(edges[:, 1], edges[:, 2]))
        if np.any(det == 0):
            raise ValueError("degenerate element (zero measure)")

    def _build_facets(self):
        d = self.dim
        ne = self.elements.shape[0]
        nv = self.vertices.shape[0]
        # local facet i = element vertices with vertex i removed, sorted
        keep = [[j for j in range(d + 1) if j != i] for i in range(d + 1)]
        rows = np.empty((ne * (d + 1), d), dtype=np.int64)
        for i in range(d + 1):
            rows[i::d + 1] = np.sort(self.elements[:, keep[i]], axis=1)
        # pack sorted vertex tuples into a single integer key
        key = rows[:, 0]
        for c in range(1, d):
            key = key * nv + rows[:, c]
        ukey, inverse = np.unique(key, return_inverse=True)
        self.facets = np.empty((len(ukey), d), dtype=np.int64)
        self.facets[inverse] = rows
        self.elem_facets = inverse.reshape(ne, d + 1).astype(np.int64)
        counts = np.bincount(inverse, minlength=len(ukey))
        if counts.max() > 2:
            raise ValueError("facet shared by more than two elements")
        self.boundary_mask = counts == 1
        self.n_facets = len(ukey)
        self.n_elements = ne

    def _build_geometry(self):
        d = self.dim
        v = self.vertices[self.elements]                       # (ne, d+1, d)
        edges = (v[:, 1:, :] - v[:, :1, :]).transpose(0, 2, 1)  # columns = v_i - v_0
        if d == 2:
            det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
            fac = 2.0
        else:
            det = np.einsum("ki,ki->k", edges[:, :, 0],
                            np.cross(edges[:, :, 1], edges[:, :, 2], axis=1))
            fac = 6.0
        self.elem_measure = np.abs(det) / fac
        self.elem_barycenter = v.mean(axis=1)

        # gradients of barycentric coordinates: rows of inv(edges)^T
        inv = np.linalg.inv(edges)
        grad = np.empty((self.n_elements, d + 1, d))
        grad[:, 1:, :] = inv
        grad[:, 0, :] = -inv.sum(axis=1)
        norms = np.linalg.norm(grad, axis=2)
        # |F_i| = d * |K| * |grad lambda_i|, outward normal = -grad lambda_i / |...|
        self.facet_normal = -grad / norms[:, :, None]
        self._grad_lambda = grad
        fmeas_local = d * self.elem_measure[:, None] * norms
        self.h_K_facet = self.elem_measure[:, None] / fmeas_local
        self.facet_measure = np.zeros(self.n_facets)
        self.facet_measure[self.elem_facets] = fmeas_local
        fb = np.zeros((self.n_facets, d))
        for i in range(d + 1):
            mask = np.ones(d + 1, dtype=bool)
            mask[i] = False
            fb[self.elem_facets[:, i]] = v[:, mask, :].mean(axis=1)
        self.facet_barycenter = fb

    def _check_invariants(self):
        if np.any(self.elem_measure <= 0):
            raise ValueError("non-positive element measure")
        # outward normals point from element barycenter toward facet barycenters
        mf = self.facet_barycenter[self.elem_facets]           # (ne, d+1, d)
        dots = np.einsum("kid,kid->ki", self.facet_normal, mf - self.elem_barycenter[:, None, :])
        if np.any(dots <= 0):
            raise ValueError("normal orientation check failed")

    # -- derived quantities ----------------------------------------------------

    def facet_elements(self):
        """Adjacent element ids per facet, shape (nf, 2); -1 in the second
        column for boundary facets.  Cached."""
        if not hasattr(self, "_facet_elements"):
            d = self.dim
            flat = self.elem_facets.ravel()
            eidx = np.repeat(np.arange(self.n_elements, dtype=np.int64), d + 1)
            order = np.argsort(flat, kind="stable")
            sf, se = flat[order], eidx[order]
            first = np.searchsorted(sf, np.arange(self.n_facets))
            fe = np.full((self.n_facets, 2), -1, dtype=np.int64)
            fe[:, 0] = se[first]
            interior = ~self.boundary_mask
            fe[interior, 1] = se[first[interior] + 1]
            self._facet_elements = fe
        return self._facet_elements

    def cr_basis_gradients(self):
        """Gradients of phi_i = 1 - d*lambda_i per (element, local facet).

        These equal |F_i| n_i / |K| with n_i the outward unit normal, and are
        the only element data the condensed assemblies need.
        """
        return -self.dim * self._grad_lambda

    def local_facet_barycenters(self):
        """Facet barycenters m_K^i gathered per element, shape (ne, d+1, d)."""
        return self.facet_barycenter[self.elem_facets]

    def max_diameter(self):
        v = self.vertices[self.elements]
        diam = 0.0
        for a in range(self.dim + 1):
            for b in range(a + 1, self.dim + 1):
                diam = max(diam, float(np.linalg.norm(v[:, a] - v[:, b], axis=1).max()))
        return diam

    def export_text(self, path):
        """Debug dump: one `v x y [z]` line per vertex, one `e i j k [l]` per element."""
        with open(path, "w") as fh:
            for p in self.vertices:
                fh.write("v " + " ".join(f"{c:.17g}" for c in p) + "\n")
            for e in self.elements:
                fh.write("e " + " ".join(str(i) for i in e) + "\n")


class RefinementMaps:
    """Parent/child bookkeeping for one uniform refinement step."""

    def __init__(self, child_elems, facet_parent_kind, facet_parent_id):
        self.child_elems = child_elems            # (ne_coarse, 2^d) fine element ids
        self.facet_parent_kind = facet_parent_kind  # per fine facet, ON_COARSE_FACET / IN_COARSE_ELEM
        self.facet_parent_id = facet_parent_id      # coarse facet id, or coarse element id


class MeshHierarchy:
    """Ordered mesh levels (coarsest first) with transfer maps between them."""

    def __init__(self, levels, maps):
        if len(maps) != len(levels) - 1:
            raise ValueError("need one map per level transition")
        self.levels = levels
        self.maps = maps

    @property
    def num_levels(self):
        return len(self.levels)

    def finest(self):
        return self.levels[-1]

    def sub(self, num_levels):
        """The hierarchy truncated to its first `num_levels` levels."""
        return MeshHierarchy(self.levels[:num_levels], self.maps[:num_levels - 1])


def build_hierarchy(coarse, num_levels):
    """Refine `coarse` uniformly num_levels-1 times."""
    levels = [coarse]
    maps = []
    for _ in range(num_levels - 1):
        fine, m = refine_uniform(levels[-1])
        levels.append(fine)
        maps.append(m)
    return MeshHierarchy(levels, maps)


def _edge_midpoints(mesh):
    """Unique edges of the mesh and midpoint vertex ids appended after nv."""
    d = mesh.dim
    pairs = []
    for a in range(d + 1):
        for b in range(a + 1, d + 1):
            pairs.append(np.sort(mesh.elements[:, [a, b]], axis=1))
    edges = np.vstack(pairs)
    nv = mesh.vertices.shape[0]
    key = edges[:, 0] * nv + edges[:, 1]
    ukey, inverse = np.unique(key, return_inverse=True)
    uedges = np.empty((len(ukey), 2), dtype=np.int64)
    uedges[inverse] = edges
    mid_id = nv + np.arange(len(ukey))
    midpoint_of = inverse.reshape(len(pairs), mesh.n_elements)
    verts = np.vstack([mesh.vertices,
                       0.5 * (mesh.vertices[uedges[:, 0]] + mesh.vertices[uedges[:, 1]])])
    return verts, uedges, mid_id, midpoint_of


def refine_uniform(coarse):
    """Red refinement: 4 children per triangle, 8 per tetrahedron.

    3D uses the Freudenthal/Bey rule with the fixed interior diagonal
    (midpoint of edge 0-2 to midpoint of edge 1-3), which keeps Kuhn meshes
    shape regular under repeated refinement.
    """
    d = coarse.dim
    verts, uedges, mid_id, midpoint_of = _edge_midpoints(coarse)
    el = coarse.elements
    ne = coarse.n_elements

    def mid(a, b):
        # pairs enumerated in _edge_midpoints order: (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
        order = {(0, 1): 0, (0, 2): 1, (0, 3): 2, (1, 2): 3, (1, 3): 4, (2, 3): 5} if d == 3 \
            else {(0, 1): 0, (0, 2): 1, (1, 2): 2}
        return mid_id[midpoint_of[order[(a, b)]]]

    if d == 2:
        m01, m02, m12 = mid(0, 1), mid(0, 2), mid(1, 2)
        children = [
            np.column_stack([el[:, 0], m01, m02]),
            np.column_stack([m01, el[:, 1], m12]),
            np.column_stack([m02, m12, el[:, 2]]),
            np.column_stack([m01, m12, m02]),
        ]
    else:
        m01, m02, m03 = mid(0, 1), mid(0, 2), mid(0, 3)
        m12, m13, m23 = mid(1, 2), mid(1, 3), mid(2, 3)
        children = [
            np.column_stack([el[:, 0], m01, m02, m03]),
            np.column_stack([m01, el[:, 1], m12, m13]),
            np.column_stack([m02, m12, el[:, 2], m23]),
            np.column_stack([m03, m13, m23, el[:, 3]]),
            np.column_stack([m01, m02, m03, m13]),
            np.column_stack([m01, m02, m12, m13]),
            np.column_stack([m02, m03, m13, m23]),
            np.column_stack([m02, m12, m13, m23]),
        ]
    nchild = len(children)
    fine_elements = np.empty((ne * nchild, d + 1), dtype=np.int64)
    for c, block in enumerate(children):
        fine_elements[c::nchild] = block
    fine = MeshLevel(d, verts, fine_elements)

    child_elems = np.arange(ne * nchild, dtype=np.int64).reshape(ne, nchild)
    parent_of_fine_elem = np.repeat(np.arange(ne, dtype=np.int64), nchild)

    maps = RefinementMaps(child_elems, *_classify_fine_facets(
        coarse, fine, verts, uedges, parent_of_fine_elem))
    return fine, maps


def _classify_fine_facets(coarse, fine, verts, uedges, parent_of_fine_elem):
    """Each fine facet either subdivides a coarse facet or is interior to a coarse element.

    A fine facet's vertices are coarse vertices or edge midpoints; expanding
    midpoints to their edge endpoints gives a set of coarse vertices which has
    exactly `d` members iff the fine facet lies on a coarse facet (that one).
    """
    d = coarse.dim
    nv_c = coarse.vertices.shape[0]
    nv_f = verts.shape[0]
    fv = fine.facets  # (nf, d)

    # expand to coarse endpoints: original vertex -> (v, v); midpoint -> edge endpoints
    exp = np.empty((fine.n_facets, d, 2), dtype=np.int64)
    is_mid = fv >= nv_c
    exp[:, :, 0] = np.where(is_mid, uedges[np.clip(fv - nv_c, 0, None), 0], fv)
    exp[:, :, 1] = np.where(is_mid, uedges[np.clip(fv - nv_c, 0, None), 1], fv)
    flat = np.sort(exp.reshape(fine.n_facets, 2 * d), axis=1)
    # count distinct coarse vertices per fine facet
    distinct = np.ones(flat.shape, dtype=bool)
    distinct[:, 1:] = flat[:, 1:] != flat[:, :-1]
    ndistinct = distinct.sum(axis=1)

    kind = np.where(ndistinct == d, FACET_ON_COARSE_FACET, FACET_IN_COARSE_ELEM).astype(np.int8)
    parent_id = np.empty(fine.n_facets, dtype=np.int64)

    # interior: parent element = parent of the first adjacent fine element
    first_elem = np.full(fine.n_facets, -1, dtype=np.int64)
    order = np.arange(fine.n_elements * (d + 1) - 1, -1, -1)
    flat_f = fine.elem_facets.reshape(-1)[order]
    first_elem[flat_f] = order // (d + 1)
    inside = kind == FACET_IN_COARSE_ELEM
    parent_id[inside] = parent_of_fine_elem[first_elem[inside]]

    # on coarse facet: look up the d distinct coarse vertices as a coarse facet key
    on = ~inside
    if np.any(on):
        sel = flat[on]
        dm = distinct[on]
        picked = sel[dm].reshape(-1, d)
        key = picked[:, 0]
        for c in range(1, d):
            key = key * nv_c + picked[:, c]
        ckey = coarse.facets[:, 0].copy()
        for c in range(1, d):
            ckey = ckey * nv_c + coarse.facets[:, c]
        sorter = np.argsort(ckey)
        pos = np.searchsorted(ckey, key, sorter=sorter)
        cf = sorter[pos]
        if np.any(ckey[cf] != key):
            raise RuntimeError("fine facet does not match any coarse facet")
        parent_id[on] = cf
    return kind, parent_id


def build_unit_box_mesh(dim, target_h):
    """Structured triangulation of [0,1]^dim with max element diameter <= target_h.

    Squares are split into 2 triangles along the (0,0)-(1,1) diagonal; cubes
    into 6 Kuhn tetrahedra sharing the main diagonal.
    """
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    n = int(np.ceil(np.sqrt(dim) / target_h))
    return _box_mesh(dim, [(0.0, 1.0)] * dim, [n] * dim)


def build_step_domain_mesh(dim, target_h):
    """Backward-facing-step domain ([0.5,5]x[0,0.5]) u ([0,5]x[0.5,1]), extruded in 3D.

    The structured grid is aligned with x=0.5 and y=0.5 so the re-entrant
    corner is respected; the block (0,0.5)x(0,0.5) is carved out.
    """
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    m = int(np.ceil(0.5 * np.sqrt(dim) / target_h))
    s = 0.5 / m

    def keep(cell_idx):
        # cell (i, j[, k]) occupies [i*s,(i+1)*s] x [j*s,(j+1)*s]; drop the corner block
        return ~((cell_idx[0] < m) & (cell_idx[1] < m))

    shape = [10 * m, 2 * m] + ([2 * m] if dim == 3 else [])
    extents = [(0.0, 5.0), (0.0, 1.0)] + ([(0.0, 1.0)] if dim == 3 else [])
    return _box_mesh(dim, extents, shape, keep=keep, spacing=s)


def _box_mesh(dim, extents, shape, keep=None, spacing=None):
    axes = [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(extents, shape)]
    if spacing is not None:
        axes = [lo + spacing * np.arange(n + 1) for (lo, _), n in zip(extents, shape)]
    grids = np.meshgrid(*axes, indexing="ij")
    verts = np.stack([g.reshape(-1) for g in grids], axis=1)
    strides = [int(np.prod([s + 1 for s in shape[k + 1:]])) for k in range(dim)]

    def vid(*idx):
        return sum(i * st for i, st in zip(idx, strides))

    cells = np.indices(shape).reshape(dim, -1)
    if keep is not None:
        cells = cells[:, keep(cells)]
    if dim == 2:
        i, j = cells
        v00 = vid(i, j)
        v10 = vid(i + 1, j)
        v01 = vid(i, j + 1)
        v11 = vid(i + 1, j + 1)
        elements = np.vstack([
            np.column_stack([v00, v10, v11]),
            np.column_stack([v00, v11, v01]),
        ])
    else:
        i, j, k = cells
        corner = {}
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    corner[(a, b, c)] = vid(i + a, j + b, k + c)
        # Kuhn: one tetra per vertex permutation path along the main diagonal
        paths = [
            [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)],
            [(0, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 1)],
            [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 1, 1)],
            [(0, 0, 0), (0, 1, 0), (0, 1, 1), (1, 1, 1)],
            [(0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1)],
            [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)],
        ]
        elements = np.vstack([np.column_stack([corner[p] for p in path]) for path in paths])
    used = np.unique(elements)
    remap = -np.ones(verts.shape[0], dtype=np.int64)
    remap[used] = np.arange(len(used))
    return MeshLevel(dim, verts[used], remap[elements])
