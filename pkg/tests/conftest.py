import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_simplex(rng, dim, scale=1.0):
    """Random well-shaped affine simplex: jittered image of the reference."""
    while True:
        verts = rng.random((dim + 1, dim)) * scale
        edges = verts[1:] - verts[0]
        vol = abs(np.linalg.det(edges))
        if vol > 0.05 * scale ** dim:
            return verts


def p1_gradient_vandermonde(verts, node_values):
    """Gradient of the P1 function with given values at the facet barycenters,
    via an explicit Vandermonde solve (oracle for the closed-form path)."""
    d = verts.shape[1]
    nodes = np.empty((d + 1, d))
    for i in range(d + 1):
        mask = np.ones(d + 1, dtype=bool)
        mask[i] = False
        nodes[i] = verts[mask].mean(axis=0)
    V = np.column_stack([np.ones(d + 1), nodes])
    coeff = np.linalg.solve(V, np.asarray(node_values, dtype=float))
    return coeff[1:]
