"""Barycenter-based integration rules on simplices and facets.

Three rules drive all assembly: the one-point element rule (exact for
linears), the facet-barycenter element rule (exact for quadratics in 2D and
linears in 3D) and the one-point facet rule (exact for linears).  A
higher-order Grundmann-Moeller rule is kept separately for error norms only.
"""

from functools import lru_cache
from math import factorial

import numpy as np


def _measure(verts):
    verts = np.asarray(verts, dtype=float)
    d = verts.shape[0] - 1
    edges = verts[1:] - verts[0]
    if d == verts.shape[1]:
        return abs(np.linalg.det(edges)) / factorial(d)
    # (d-1)-simplex embedded in R^d (a facet)
    if verts.shape == (2, 2):
        return float(np.linalg.norm(verts[1] - verts[0]))
    if verts.shape == (3, 3):
        return float(np.linalg.norm(np.cross(edges[0], edges[1]))) / 2.0
    gram = edges @ edges.T
    return float(np.sqrt(np.linalg.det(gram))) / factorial(d)


def _facet_barycenters(verts):
    d = verts.shape[0] - 1
    pts = np.empty((d + 1, verts.shape[1]))
    for i in range(d + 1):
        mask = np.ones(d + 1, dtype=bool)
        mask[i] = False
        pts[i] = verts[mask].mean(axis=0)
    return pts


def qk0(element_vertices, integrand):
    """One-point rule |K| * g(m_K)."""
    verts = np.asarray(element_vertices, dtype=float)
    return _measure(verts) * float(integrand(verts.mean(axis=0)))


def qk1(element_vertices, integrand):
    """Facet-barycenter rule |K|/(d+1) * sum_i g(m_K^i)."""
    verts = np.asarray(element_vertices, dtype=float)
    d = verts.shape[0] - 1
    pts = _facet_barycenters(verts)
    vals = np.array([float(integrand(p)) for p in pts])
    return _measure(verts) / (d + 1) * vals.sum()


def qf0(facet_vertices, integrand):
    """One-point facet rule |F| * g(m_F)."""
    verts = np.asarray(facet_vertices, dtype=float)
    return _measure(verts) * float(integrand(verts.mean(axis=0)))


def qk0_boundary(element_vertices, integrand):
    """Element-boundary rule: sum of qf0 over the d+1 facets."""
    verts = np.asarray(element_vertices, dtype=float)
    d = verts.shape[0] - 1
    total = 0.0
    for i in range(d + 1):
        mask = np.ones(d + 1, dtype=bool)
        mask[i] = False
        total += qf0(verts[mask], integrand)
    return total


@lru_cache(maxsize=None)
def simplex_rule(dim, index=2):
    """Grundmann-Moeller rule of degree 2*index+1 on a dim-simplex.

    Returns barycentric coordinates (nq, dim+1) and weights (nq,) scaled so
    that integral(f) over K ~= |K| * sum_q w_q f(x_q).
    """
    s = index
    deg = 2 * s + 1
    n = dim
    bary = []
    weights = []
    for i in range(s + 1):
        w = (-1.0) ** i * 2.0 ** (-2 * s) * (deg + n - 2 * i) ** deg \
            / (factorial(i) * factorial(deg + n - i))
        for beta in _compositions(s - i, n + 1):
            bary.append([(2 * b + 1) / (deg + n - 2 * i) for b in beta])
            weights.append(w)
    bary = np.array(bary)
    weights = np.array(weights) * factorial(n)   # unit-simplex volume 1/n! -> 1
    return bary, weights


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def error_quadrature(element_vertices, integrand):
    """Integrate with a symmetric simplex rule exact for degree >= 5."""
    verts = np.asarray(element_vertices, dtype=float)
    d = verts.shape[0] - 1
    bary, w = simplex_rule(d)
    pts = bary @ verts
    vals = np.array([float(integrand(p)) for p in pts])
    return _measure(verts) * float(w @ vals)


def integrate_elementwise(mesh, values_at_quad, index=2):
    """Sum |K| * sum_q w_q v[k, q] over all elements of a mesh level.

    `values_at_quad` has shape (ne, nq) with nq matching simplex_rule(dim, index).
    """
    _, w = simplex_rule(mesh.dim, index)
    return float(np.einsum("kq,q,k->", values_at_quad, w, mesh.elem_measure))


def quad_points(mesh, index=2):
    """Physical quadrature points per element, shape (ne, nq, dim)."""
    bary, _ = simplex_rule(mesh.dim, index)
    verts = mesh.vertices[mesh.elements]          # (ne, d+1, d)
    return np.einsum("qi,kid->kqd", bary, verts)


def barycentric_moment(exponents, measure=1.0):
    """Exact integral of prod_i lambda_i^a_i over a simplex of given measure."""
    a = tuple(int(e) for e in exponents)
    d = len(a) - 1
    num = 1
    for ai in a:
        num *= factorial(ai)
    return measure * factorial(d) * num / factorial(sum(a) + d)
