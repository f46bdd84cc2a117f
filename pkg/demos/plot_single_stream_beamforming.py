"""
Single-stream beamforming: power method, ALS and HOPM
=====================================================

On a flat channel the best beam pair is the top singular pair, found by
alternating power iteration. On a tensor channel ALS and HOPM maximize
the energy |h| of the beamformed FIR channel.
"""

import numpy as np

from mmwbeam import SolverConfig, als_tensor, hopm, power_method, random_gaussian_matrix, random_gaussian_tensor, svd_oracle

H = random_gaussian_matrix(16, 16, seed=3)
res = power_method(H)                      # 8 iterations by default
print("power method sigma:", res.sigma, " SVD:", svd_oracle(H)[0][0])
print("trace:", np.round(res.objective_trace, 4))

T = random_gaussian_tensor(16, 16, 2, seed=3)
a = als_tensor(T)
b = hopm(T)
print("ALS  |h| after 8 iterations:", a.sigma)
print("HOPM |h| after 8 iterations:", b.sigma)

# more iterations and a few random restarts
long = SolverConfig(max_iterations=200, restarts=4, seed=1)
print("ALS  with restarts:", als_tensor(T, long).sigma)

# the tensor channel beats either tap alone
print("best single tap:", max(svd_oracle(T.slice(p))[0][0] for p in range(T.p)))

# a spectral start finds the strong tap; a bad start stays on the weak one
Hs = np.zeros((2, 2, 2))
Hs[0, 0, 0], Hs[1, 1, 1] = 4, 2
print("spectral start:", als_tensor(Hs).sigma, " start on e2:", als_tensor(Hs, v0=[0, 1]).sigma)
