"""Generalized Stokes flows: convergence, driven cavity, and a step channel.

The saddle system is solved by a single augmented-Lagrangian step: penalize
the divergence with eps = 1e-8, solve the SPD velocity block, then read the
pressure off the divergence residual.  The velocity block is preconditioned
by a variable V-cycle with vertex-patch block Gauss-Seidel smoothing and the
divergence-corrected intergrid transfer, which keeps CG iteration counts
bounded in the penalty and across levels.  A W-cycle with too few smoothing
steps stops being positive definite; that run is reported as `N/A`.

Run:  python demos/stokes_flows.py
"""

from hdgmg import ExperimentConfig, run_converge_stokes, run_mg_study

print("Manufactured solution, one Uzawa step (mu=1, beta=10):")
print(run_converge_stokes(ExperimentConfig(
    equation="stokes", dim=2, levels=5, beta=10.0, coarse_h=0.25)).to_csv())

print("Lid-driven cavity, variable V-cycle m(J)=1, beta=1000:")
print(run_mg_study(ExperimentConfig(
    equation="stokes", dim=2, levels=6, scenario="constant", smoother="bgs",
    steps=1, cycle="varv", mode="precond", beta=1000.0)).to_csv())

print("Backward-facing step (open outlet), W-cycle m=6:")
print(run_mg_study(ExperimentConfig(
    equation="stokes", dim=2, levels=5, domain="step", scenario="constant",
    smoother="bgs", steps=6, cycle="w", mode="precond", beta=0.0)).to_csv())

print("Lid-driven cavity, W-cycle with a single smoothing step at beta=1000 "
      "(indefinite preconditioner -> N/A):")
print(run_mg_study(ExperimentConfig(
    equation="stokes", dim=2, levels=4, scenario="constant", smoother="bgs",
    steps=1, cycle="w", mode="precond", beta=1000.0)).to_csv())
