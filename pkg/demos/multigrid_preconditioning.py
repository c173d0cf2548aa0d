"""Level-independence of the V-cycle preconditioner, and how the same cycle
behaves as a plain stationary solver.

The condensed facet system is rediscretized on every level of a structured
hierarchy (coarsest diameter below 1/4).  With two Gauss-Seidel sweeps the
CG iteration counts and Lanczos condition estimates stay flat as the mesh is
refined.  Used as a stationary iteration, damped Jacobi with a single sweep
is too weak: the iteration diverges from four levels on, which the driver
reports as `N/A` instead of failing.

Run:  python demos/multigrid_preconditioning.py
"""

from hdgmg import ExperimentConfig, run_mg_study

print("CG + V-cycle preconditioner, Gauss-Seidel m=2:")
print(run_mg_study(ExperimentConfig(
    equation="diffusion", dim=2, levels=7, smoother="pgs", steps=2,
    mode="precond", coarse_h=0.25)).to_csv())

print("CG + V-cycle preconditioner, damped Jacobi m=2:")
print(run_mg_study(ExperimentConfig(
    equation="diffusion", dim=2, levels=7, smoother="pjac", steps=2,
    mode="precond", coarse_h=0.25)).to_csv())

print("V-cycle as a stationary solver, damped Jacobi m=1 "
      "(diverges from J=4 on):")
print(run_mg_study(ExperimentConfig(
    equation="diffusion", dim=2, levels=5, smoother="pjac", steps=1,
    mode="solver", coarse_h=0.25)).to_csv())

print("V-cycle as a stationary solver, Gauss-Seidel m=4:")
print(run_mg_study(ExperimentConfig(
    equation="diffusion", dim=2, levels=5, smoother="pgs", steps=4,
    mode="solver", coarse_h=0.25)).to_csv())
