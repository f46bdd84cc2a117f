"""
Channel tensors and beamformed FIR channels
===========================================

A frequency-selective channel is an N x M x P tensor: one N x M matrix per
timing tap. Fixed analog beams collapse it to a P-tap FIR channel.
"""

import numpy as np

from mmwbeam import (beamformed_fir, mode_multiply, random_gaussian_tensor, svd_oracle,
                     tensor_from_json, tensor_to_json)

# a reproducible 4 x 3 x 2 channel with unit-variance complex Gaussian taps
H = random_gaussian_tensor(4, 3, 2, seed=7)
print(H)

# contracting the receive dimension with v, then the transmit one with conj(u),
# gives h[p] = u^H H_p v
u = np.ones(4) / 2
v = np.array([1, 0, 0], dtype=complex)
step = mode_multiply(H, v, 2, squeeze=False)
h = mode_multiply(step, np.conj(u), 1)
print("FIR channel via mode products:", np.round(h, 4))
print("same thing, directly:         ", np.round(beamformed_fir(H, u, v), 4))

# for a single tap the best |h| is the top singular value
s, U, V = svd_oracle(H.slice(0))
print("sigma_1 of tap 0:", s[0], "=", abs(beamformed_fir(H.slice(0), U[:, 0], V[:, 0])[0]))

# fixtures are plain JSON with the transmit index running fastest
text = tensor_to_json(H)
assert tensor_from_json(text) == H
print(text[:80], "...")
