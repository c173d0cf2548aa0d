"""Benchmark problem definitions: manufactured solutions, cavity and step
flows, and the alternating-coefficient field for the jump-robustness study.

All callables are vectorized over trailing coordinate axes.
"""

import numpy as np

from .mesh import build_unit_box_mesh, build_step_domain_mesh


# -- reaction-diffusion, smooth coefficients ------------------------------------

class SmoothDiffusionProblem:
    """alpha = beta = 1 + sin-product/2 on the unit box, homogeneous Dirichlet,
    with u = prod_i (x_i - x_i^2)."""

    def __init__(self, dim):
        self.dim = dim

    def alpha(self, p):
        out = 1.0 + 0.5 * np.sin(p[..., 0]) * np.sin(p[..., 1])
        if self.dim == 3:
            out = 1.0 + 0.5 * np.sin(p[..., 0]) * np.sin(p[..., 1]) * np.sin(p[..., 2])
        return out

    beta = alpha

    def exact_u(self, p):
        out = (p[..., 0] - p[..., 0] ** 2) * (p[..., 1] - p[..., 1] ** 2)
        if self.dim == 3:
            out = out * (p[..., 2] - p[..., 2] ** 2)
        return out

    def _grad_u(self, p):
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            return np.stack([(1 - 2 * x) * (y - y * y),
                             (x - x * x) * (1 - 2 * y)], axis=-1)
        z = p[..., 2]
        return np.stack([(1 - 2 * x) * (y - y * y) * (z - z * z),
                         (x - x * x) * (1 - 2 * y) * (z - z * z),
                         (x - x * x) * (y - y * y) * (1 - 2 * z)], axis=-1)

    def exact_sigma(self, p):
        return -self.alpha(p)[..., None] * self._grad_u(p)

    def f(self, p):
        x, y = p[..., 0], p[..., 1]
        a = self.alpha(p)
        g = self._grad_u(p)
        if self.dim == 2:
            ax = 0.5 * np.cos(x) * np.sin(y)
            ay = 0.5 * np.sin(x) * np.cos(y)
            lap = -2 * (y - y * y) - 2 * (x - x * x)
            div = ax * g[..., 0] + ay * g[..., 1] + a * lap
        else:
            z = p[..., 2]
            ax = 0.5 * np.cos(x) * np.sin(y) * np.sin(z)
            ay = 0.5 * np.sin(x) * np.cos(y) * np.sin(z)
            az = 0.5 * np.sin(x) * np.sin(y) * np.cos(z)
            lap = (-2 * (y - y * y) * (z - z * z) - 2 * (x - x * x) * (z - z * z)
                   - 2 * (x - x * x) * (y - y * y))
            div = ax * g[..., 0] + ay * g[..., 1] + az * g[..., 2] + a * lap
        return -div + self.beta(p) * self.exact_u(p)

    def coarse_mesh(self, target_h=0.25):
        return build_unit_box_mesh(self.dim, target_h)


# -- reaction-diffusion, alternating coefficient on the finest level ------------

def chessboard_alpha(mesh, rho, cells):
    """Per-element diffusion coefficient alternating between rho and 1 in a
    chessboard pattern of `cells` x `cells` grid squares."""
    bc = mesh.elem_barycenter
    ij = np.floor(bc[:, :2] * cells).astype(np.int64)
    ij = np.clip(ij, 0, cells - 1)
    hi = (ij.sum(axis=1) % 2) == 0
    return np.where(hi, rho, 1.0)


def chessboard_level_alpha_inv(hierarchy, rho):
    """Level coefficient data for the jump study: the chessboard lives on the
    finest level (one color per grid square), and coarser levels carry the
    measure-weighted projection of alpha, inverted.  On every coarser level
    that projection is the global constant (1+rho)/2."""
    finest = hierarchy.finest()
    cells = int(round(float(np.sqrt(finest.n_elements / 2.0))))
    alpha = chessboard_alpha(finest, rho, cells)
    return [1.0 / a for a in project_elementwise(hierarchy, alpha)]


def project_elementwise(hierarchy, finest_values):
    """Measure-weighted projection of per-element data from the finest level
    down the hierarchy; returns one array per level, coarsest first."""
    out = [np.asarray(finest_values, dtype=float)]
    for lvl in range(hierarchy.num_levels - 1, 0, -1):
        fine = hierarchy.levels[lvl]
        coarse = hierarchy.levels[lvl - 1]
        child = hierarchy.maps[lvl - 1].child_elems
        num = (fine.elem_measure[child] * out[-1][child]).sum(axis=1)
        out.append(num / coarse.elem_measure)
    out.reverse()
    return out


# -- generalized Stokes, manufactured solution ----------------------------------

class ManufacturedStokesProblem:
    """mu = 1, beta = 10 unit-box flow with homogeneous Dirichlet velocity,
    divergence-free exact velocity and mean-zero pressure."""

    def __init__(self, dim, mu=1.0, beta=10.0):
        self.dim = dim
        self.mu = mu
        self.beta = beta

    @staticmethod
    def _b(t):          # t^2 (t-1)^2 and derivatives
        return t * t * (t - 1) ** 2

    @staticmethod
    def _b1(t):
        return 2 * t * (t - 1) ** 2 + 2 * t * t * (t - 1)

    @staticmethod
    def _b2(t):
        return 2 * (t - 1) ** 2 + 8 * t * (t - 1) + 2 * t * t

    @staticmethod
    def _c(t):          # 2t - 6t^2 + 4t^3 = (t^2 (t-1)^2)' and derivatives
        return 2 * t - 6 * t * t + 4 * t ** 3

    @staticmethod
    def _c1(t):
        return 2 - 12 * t + 12 * t * t

    @staticmethod
    def _c2(t):
        return -12 + 24 * t

    def exact_u(self, p):
        # 2D: (x^2(x-1)^2 2y(1-y)(2y-1), y^2(y-1)^2 2x(x-1)(2x-1)) = (-b(x)c(y), b(y)c(x))
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            return np.stack([-self._b(x) * self._c(y),
                             self._b(y) * self._c(x)], axis=-1)
        z = p[..., 2]
        return np.stack([self._b(x) * self._c(y) * self._c(z),
                         self._b(y) * self._c(x) * self._c(z),
                         -2 * self._b(z) * self._c(x) * self._c(y)], axis=-1)

    def grad_u(self, p):
        """Component gradients du_i/dx_j, shape (..., d, d)."""
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            g = np.empty(p.shape[:-1] + (2, 2))
            g[..., 0, 0] = -self._b1(x) * self._c(y)
            g[..., 0, 1] = -self._b(x) * self._c1(y)
            g[..., 1, 0] = self._b(y) * self._c1(x)
            g[..., 1, 1] = self._b1(y) * self._c(x)
            return g
        z = p[..., 2]
        g = np.empty(p.shape[:-1] + (3, 3))
        g[..., 0, 0] = self._b1(x) * self._c(y) * self._c(z)
        g[..., 0, 1] = self._b(x) * self._c1(y) * self._c(z)
        g[..., 0, 2] = self._b(x) * self._c(y) * self._c1(z)
        g[..., 1, 0] = self._b(y) * self._c1(x) * self._c(z)
        g[..., 1, 1] = self._b1(y) * self._c(x) * self._c(z)
        g[..., 1, 2] = self._b(y) * self._c(x) * self._c1(z)
        g[..., 2, 0] = -2 * self._b(z) * self._c1(x) * self._c(y)
        g[..., 2, 1] = -2 * self._b(z) * self._c(x) * self._c1(y)
        g[..., 2, 2] = -2 * self._b1(z) * self._c(x) * self._c(y)
        return g

    def exact_L(self, p):
        return -self.mu * self.grad_u(p)

    def exact_p(self, p):
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            return x * (1 - x) * (1 - y) - 1.0 / 12.0
        z = p[..., 2]
        return x * (1 - x) * (1 - y) * (1 - z) - 1.0 / 24.0

    def _grad_p(self, p):
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            return np.stack([(1 - 2 * x) * (1 - y), -x * (1 - x)], axis=-1)
        z = p[..., 2]
        return np.stack([(1 - 2 * x) * (1 - y) * (1 - z),
                         -x * (1 - x) * (1 - z),
                         -x * (1 - x) * (1 - y)], axis=-1)

    def _lap_u(self, p):
        x, y = p[..., 0], p[..., 1]
        if self.dim == 2:
            return np.stack([
                -self._b2(x) * self._c(y) - self._b(x) * self._c2(y),
                self._b(y) * self._c2(x) + self._b2(y) * self._c(x)], axis=-1)
        z = p[..., 2]
        return np.stack([
            self._b2(x) * self._c(y) * self._c(z) + self._b(x) * self._c2(y) * self._c(z)
            + self._b(x) * self._c(y) * self._c2(z),
            self._b2(y) * self._c(x) * self._c(z) + self._b(y) * self._c2(x) * self._c(z)
            + self._b(y) * self._c(x) * self._c2(z),
            -2 * (self._b2(z) * self._c(x) * self._c(y) + self._b(z) * self._c2(x) * self._c(y)
                  + self._b(z) * self._c(x) * self._c2(y))], axis=-1)

    def f(self, p):
        return (self.beta * self.exact_u(p) - self.mu * self._lap_u(p)
                + self._grad_p(p))

    def coarse_mesh(self, target_h=None):
        if target_h is None:
            target_h = 0.25 if self.dim == 2 else 0.5
        return build_unit_box_mesh(self.dim, target_h)


# -- lid-driven cavity and backward-facing step ---------------------------------

class LidDrivenCavityProblem:
    """Unit box, tangential velocity on the top side, no-slip elsewhere."""

    def __init__(self, dim, mu=1.0, beta=0.0):
        self.dim = dim
        self.mu = mu
        self.beta = beta
        self.mean_zero_pressure = True

    def f(self, p):
        return np.zeros(p.shape)

    def dirichlet(self, p):          # all boundary facets constrained
        return np.ones(p.shape[0], dtype=bool)

    def dirichlet_values(self, p):
        vals = np.zeros(p.shape)
        top = np.abs(p[:, self.dim - 1] - 1.0) < 1e-12
        x = p[:, 0]
        if self.dim == 2:
            vals[top, 0] = 4 * x[top] * (1 - x[top])
        else:
            y = p[:, 1]
            vals[top, 0] = 16 * x[top] * (1 - x[top]) * y[top] * (1 - y[top])
        return vals

    def coarse_mesh(self, target_h=None):
        if target_h is None:
            target_h = 0.25 if self.dim == 2 else 0.5
        return build_unit_box_mesh(self.dim, target_h)


class BackwardStepProblem:
    """Step domain, parabolic inflow at x=0, free (do-nothing) outlet at x=5."""

    def __init__(self, dim, mu=1.0, beta=0.0):
        self.dim = dim
        self.mu = mu
        self.beta = beta
        self.mean_zero_pressure = False   # the open outlet fixes the pressure

    def f(self, p):
        return np.zeros(p.shape)

    def dirichlet(self, p):
        return p[:, 0] < 5.0 - 1e-12     # everything except the outlet

    def dirichlet_values(self, p):
        vals = np.zeros(p.shape)
        inflow = p[:, 0] < 1e-12
        y = p[inflow, 1]
        prof = 16 * (1 - y) * (y - 0.5)
        if self.dim == 3:
            z = p[inflow, 2]
            prof = 4 * prof * z * (1 - z)
        vals[inflow, 0] = prof
        return vals

    def coarse_mesh(self, target_h=0.5):
        return build_step_domain_mesh(self.dim, target_h)
