"""
Monte-Carlo ensembles and the grid oracle
=========================================

Ensembles draw one channel per trial from a seed derived from the base seed,
so any trial can be replayed and the output does not depend on threading.
"""

import numpy as np

from mmwbeam import (ExperimentSpec, GridOracleSpec, SolverConfig, als_tensor, compare_ensembles,
                     grid_oracle, random_gaussian_tensor, run_ensemble)
from mmwbeam.harness import figure3_specs

specs = figure3_specs(trials=1000, seed=1)
stats = {name: run_ensemble(spec, threads=2) for name, spec in specs.items()}
for name, st in stats.items():
    print(f"{name:14s} median {st.median():.3f}  5%..95% {st.percentile(5):.3f}..{st.percentile(95):.3f}")

rep = compare_ensembles(stats["matrix-power"], stats["tensor-als"])
print("tensor - matrix median, bootstrap 95%:", np.round(rep["bootstrap_median_delta_95"], 3))

# the largest singular value of an N x N Gaussian matrix creeps toward 2 sqrt(N)
for n in (4, 16, 64):
    st = run_ensemble(ExperimentSpec(n=n, m=n, trials=300, seed=1,
                                     config=SolverConfig(max_iterations=50)))
    print(f"N={n:3d}: median sigma1 / 2 sqrt(N) = {st.median() / (2 * np.sqrt(n)):.3f}")

# exhaustive search over quantized unit vectors gives a lower bound on the optimum
T = random_gaussian_tensor(2, 2, 2, seed=4)
g = grid_oracle(T, GridOracleSpec(phase_levels=16))
print("grid best:", g.best, " ALS:", als_tensor(T).sigma, " evaluations:", g.evaluations)
