"""End-to-end study drivers: convergence-rate tables and multigrid
iteration/condition studies, with deterministic CSV output.

Each driver returns a SolverReport whose rows mirror the CSV schema
`level,dofs,iters,kappa,err_u,eoc_u,err_flux,eoc_flux[,err_div,eoc_div]`;
empty fields stay empty and non-convergent runs carry the literal `N/A`.
"""

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .diffusion import (assemble_condensed_diffusion, diffusion_error_norms,
                        diffusion_level_coefficients, recover_local_diffusion)
from .linalg import IndefinitePreconditionerError, estimate_condition_number
from .mesh import build_hierarchy, build_step_domain_mesh, build_unit_box_mesh
from .multigrid import (build_diffusion_hierarchy, build_stokes_hierarchy,
                        preconditioned_solve, stationary_solve)
from .problems import (BackwardStepProblem, LidDrivenCavityProblem,
                       ManufacturedStokesProblem, SmoothDiffusionProblem,
                       chessboard_level_alpha_inv)
from .spaces import FacetSpace, PressureSpace
from .stokes import (assemble_condensed_stokes, recover_local_stokes,
                     stokes_error_norms, stokes_level_coefficients, uzawa_solve)

DIFFUSION_COLUMNS = ["level", "dofs", "iters", "kappa",
                     "err_u", "eoc_u", "err_flux", "eoc_flux"]
STOKES_COLUMNS = DIFFUSION_COLUMNS + ["err_div", "eoc_div"]


@dataclass
class ExperimentConfig:
    equation: str                     # 'diffusion' | 'stokes'
    dim: int = 2
    domain: str = "unit_box"          # 'unit_box' | 'step'
    levels: int = 5
    scenario: str = "smooth"          # 'smooth' | 'chessboard' | 'constant'
    smoother: str = "pgs"
    steps: int = 2                    # m, or m(J) for the variable V-cycle
    cycle: str = "v"                  # 'v' | 'w' | 'varv'
    mode: str = "precond"             # 'solver' | 'precond'
    beta: float = 0.0
    rho: float = None
    eps: float = 1e-8
    uzawa_steps: int = 1
    rel_tol: float = 1e-8
    coarse_h: float = None
    out: str = None

    def validate(self):
        checks = [
            (self.equation in ("diffusion", "stokes"), f"equation {self.equation!r}"),
            (self.dim in (2, 3), f"dim {self.dim}"),
            (self.domain in ("unit_box", "step"), f"domain {self.domain!r}"),
            (self.levels >= 1, f"levels {self.levels}"),
            (self.scenario in ("smooth", "chessboard", "constant"),
             f"scenario {self.scenario!r}"),
            (self.smoother in ("pjac", "pgs", "bjac", "bgs"),
             f"smoother {self.smoother!r}"),
            (self.steps >= 1, f"steps {self.steps}"),
            (self.cycle in ("v", "w", "varv"), f"cycle {self.cycle!r}"),
            (self.mode in ("solver", "precond"), f"mode {self.mode!r}"),
            (self.beta >= 0, f"beta {self.beta}"),
            (self.rho is None or self.rho >= 1, f"rho {self.rho}"),
            (self.eps > 0, f"eps {self.eps}"),
            (self.uzawa_steps >= 1, f"uzawa_steps {self.uzawa_steps}"),
            (0 < self.rel_tol < 1, f"rel_tol {self.rel_tol}"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise ValueError("invalid config: " + ", ".join(bad))
        return self


class SolverReport:
    """Ordered result rows with the fixed CSV schema."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, **kw):
        self.rows.append({c: kw.get(c) for c in self.columns})

    @staticmethod
    def _fmt(key, val):
        if val is None:
            return ""
        if key in ("level", "dofs"):
            return str(int(val))
        if key == "iters":
            return val if isinstance(val, str) else str(int(val))
        if key == "kappa":
            return f"{val:.4g}"
        if key.startswith("eoc"):
            return f"{val:.3f}"
        return f"{val:.6e}"

    def to_csv(self, path_or_file=None):
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(self._fmt(c, row[c]) for c in self.columns) + "\n")
        text = buf.getvalue()
        if path_or_file is None:
            return text
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)
        return text

    def __str__(self):
        return self.to_csv()


def _eoc(prev, cur):
    return None if prev is None else float(np.log2(prev / cur))


def _coarse_mesh(config):
    if config.domain == "step":
        return build_step_domain_mesh(config.dim, config.coarse_h or 0.5)
    if config.coarse_h is not None:
        return build_unit_box_mesh(config.dim, config.coarse_h)
    if config.equation == "diffusion":
        if config.scenario == "chessboard":
            return build_unit_box_mesh(config.dim, np.sqrt(config.dim) / 4)
        # convergence studies start from the trivial split of the unit box
        return build_unit_box_mesh(config.dim, np.sqrt(config.dim))
    return build_unit_box_mesh(config.dim, 0.25 if config.dim == 2 else 0.5)


def run_converge_diffusion(config):
    """Per-level errors and estimated convergence orders for the smooth
    manufactured reaction-diffusion problem, solved by multigrid-PCG."""
    config.validate()
    if config.equation != "diffusion" or config.scenario != "smooth":
        raise ValueError("run_converge_diffusion needs a smooth diffusion config")
    prob = SmoothDiffusionProblem(config.dim)
    report = SolverReport(DIFFUSION_COLUMNS)
    hierarchy = build_hierarchy(_coarse_mesh(config), config.levels)
    prev_u = prev_s = None
    for J in range(1, config.levels + 1):
        sub = hierarchy.sub(J)
        hier = build_diffusion_hierarchy(sub, prob, smoother="pgs", m=2)
        mesh = sub.finest()
        co = diffusion_level_coefficients(mesh, prob.alpha, prob.beta, prob.f)
        system = assemble_condensed_diffusion(mesh, hier.spaces[-1], co)
        if J == 1:
            u = hier.levels[0].coarse_solver.solve(system.rhs)
            iters = 1
        else:
            res = preconditioned_solve(hier, system.rhs, rel_tol=1e-10)
            u, iters = res.x, res.iterations
        sigma, u_vals = recover_local_diffusion(system, u)
        err_u, err_s = diffusion_error_norms(mesh, sigma, u_vals,
                                             prob.exact_u, prob.exact_sigma)
        report.add(level=J, dofs=hier.spaces[-1].n_free, iters=iters,
                   err_u=err_u, eoc_u=_eoc(prev_u, err_u),
                   err_flux=err_s, eoc_flux=_eoc(prev_s, err_s))
        prev_u, prev_s = err_u, err_s
    if config.out:
        report.to_csv(config.out)
    return report


def _stokes_problem(config):
    if config.domain == "step":
        return BackwardStepProblem(config.dim, beta=config.beta)
    if config.scenario == "smooth":
        return ManufacturedStokesProblem(config.dim, beta=config.beta)
    return LidDrivenCavityProblem(config.dim, beta=config.beta)


def run_converge_stokes(config):
    """Velocity/divergence/gradient errors and orders for the manufactured
    generalized Stokes flow, one penalized Uzawa step per level."""
    config.validate()
    if config.equation != "stokes":
        raise ValueError("run_converge_stokes needs a stokes config")
    prob = ManufacturedStokesProblem(config.dim, beta=config.beta)
    report = SolverReport(STOKES_COLUMNS)
    hierarchy = build_hierarchy(_coarse_mesh(config), config.levels)
    prev = (None, None, None)
    for J in range(1, config.levels + 1):
        sub = hierarchy.sub(J)
        mesh = sub.finest()
        vspace = FacetSpace(mesh, config.dim, dirichlet="all")
        system = assemble_condensed_stokes(
            mesh, vspace, PressureSpace(mesh, True),
            stokes_level_coefficients(mesh, prob.mu, prob.beta),
            epsilon=config.eps, f=prob.f)
        use_mg = config.dim == 3 and J >= 2
        if use_mg:
            hier = build_stokes_hierarchy(sub, prob, epsilon=config.eps,
                                          smoother="bgs", m=2, cycle="varv")

            def inner(b):
                res = preconditioned_solve(hier, b, rel_tol=1e-10)
                return res.x, res.iterations
        else:
            lu = spla.splu(system.Aeps.tocsc())

            def inner(b):
                return lu.solve(b), 1
        u, p, inner_iters = uzawa_solve(system, inner, k_max=config.uzawa_steps)
        L, u_vals = recover_local_stokes(system, u)
        err_u, err_div, err_L = stokes_error_norms(mesh, L, u_vals,
                                                   prob.exact_u, prob.exact_L)
        report.add(level=J, dofs=vspace.n_free, iters=inner_iters[-1],
                   err_u=err_u, eoc_u=_eoc(prev[0], err_u),
                   err_flux=err_L, eoc_flux=_eoc(prev[1], err_L),
                   err_div=err_div, eoc_div=_eoc(prev[2], err_div))
        prev = (err_u, err_L, err_div)
    if config.out:
        report.to_csv(config.out)
    return report


def _diffusion_study_level(config, hierarchy, J):
    one = lambda p: np.ones(p.shape[:-1])
    sub = hierarchy.sub(J)
    if config.scenario == "chessboard":
        ai_levels = chessboard_level_alpha_inv(sub, config.rho or 1e2)
        coeffs = [diffusion_level_coefficients(sub.levels[l], beta=one,
                                               alpha_inv_elem=ai_levels[l])
                  for l in range(J)]
        hier = build_diffusion_hierarchy(sub, smoother=config.smoother,
                                         m=config.steps, cycle=config.cycle,
                                         coeffs_per_level=coeffs)
        co = diffusion_level_coefficients(sub.finest(), beta=one, f=one,
                                          alpha_inv_elem=ai_levels[-1])
    else:
        prob = SmoothDiffusionProblem(config.dim)
        hier = build_diffusion_hierarchy(sub, prob, smoother=config.smoother,
                                         m=config.steps, cycle=config.cycle)
        co = diffusion_level_coefficients(sub.finest(), prob.alpha, prob.beta,
                                          prob.f)
    system = assemble_condensed_diffusion(sub.finest(), hier.spaces[-1], co)
    return hier, system.rhs


def _stokes_study_level(config, prob, hierarchy, J):
    sub = hierarchy.sub(J)
    hier = build_stokes_hierarchy(sub, prob, epsilon=config.eps,
                                  smoother=config.smoother, m=config.steps,
                                  cycle=config.cycle)
    mesh = sub.finest()
    system = assemble_condensed_stokes(
        mesh, hier.spaces[-1],
        PressureSpace(mesh, getattr(prob, "mean_zero_pressure", True)),
        stokes_level_coefficients(mesh, prob.mu, prob.beta),
        epsilon=config.eps, f=prob.f,
        dirichlet_values=getattr(prob, "dirichlet_values", None))
    return hier, system.rhs


def run_mg_study(config):
    """Iteration counts (and Lanczos condition estimates in preconditioner
    mode) across levels 2..levels; divergence and indefinite-preconditioner
    outcomes are reported as `N/A` rows rather than raised."""
    config.validate()
    report = SolverReport(DIFFUSION_COLUMNS if config.equation == "diffusion"
                          else STOKES_COLUMNS)
    hierarchy = build_hierarchy(_coarse_mesh(config), max(config.levels, 2))
    prob = None if config.equation == "diffusion" else _stokes_problem(config)
    for J in range(2, config.levels + 1):
        if config.equation == "diffusion":
            hier, rhs = _diffusion_study_level(config, hierarchy, J)
        else:
            hier, rhs = _stokes_study_level(config, prob, hierarchy, J)
        dofs = hier.spaces[-1].n_free
        iters, kappa = None, None
        if config.mode == "solver":
            _, it, converged, _ = stationary_solve(hier, rhs, rel_tol=config.rel_tol)
            iters = it if converged else "N/A"
        else:
            try:
                res = preconditioned_solve(hier, rhs, rel_tol=config.rel_tol)
                iters = res.iterations if res.converged else "N/A"
                if res.iterations >= 2:
                    kappa = estimate_condition_number(res)
            except IndefinitePreconditionerError:
                iters = "N/A"
        report.add(level=J, dofs=dofs, iters=iters, kappa=kappa)
    if config.out:
        report.to_csv(config.out)
    return report
