"""Lowest-order hybrid DG discretizations of reaction-diffusion and
generalized Stokes problems, statically condensed to facet unknowns and
solved by optimal geometric multigrid.
"""

from .mesh import (MeshHierarchy, MeshLevel, build_hierarchy,
                   build_step_domain_mesh, build_unit_box_mesh, refine_uniform)
from .spaces import FacetSpace, PressureSpace, cr_divergence, cr_gradient
from .quadrature import error_quadrature, qf0, qk0, qk0_boundary, qk1
from .linalg import (CoarseSolver, IndefinitePreconditionerError,
                     assemble_from_triplets, coarse_direct_solve,
                     estimate_condition_number, pcg)
from .diffusion import (assemble_condensed_diffusion, diffusion_error_norms,
                        diffusion_level_coefficients, recover_local_diffusion)
from .stokes import (assemble_condensed_stokes, recover_local_stokes,
                     stokes_error_norms, stokes_level_coefficients, uzawa_solve)
from .transfer import (DivCorrectedProlongation, build_bubble_blocks,
                       build_prolongation, restrict_operator)
from .smoothers import build_smoother, build_vertex_patches
from .multigrid import (build_diffusion_hierarchy, build_stokes_hierarchy,
                        preconditioned_solve, stationary_solve)
from .experiments import (ExperimentConfig, SolverReport,
                          run_converge_diffusion, run_converge_stokes,
                          run_mg_study)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
