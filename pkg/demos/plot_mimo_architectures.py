"""
Two streams: shared vs split arrays
===================================

In the shared architecture every antenna carries both streams; in the split
architecture each half of the array carries one stream and the beams maximize
|det Xi|, the product of the two stream singular values.
"""

import numpy as np

from mmwbeam import (BlockPartition, als_shared, als_split_matrix, als_split_tensor, capacity_proxy,
                     greedy_pairing, high_snr_capacity, ideal_gain_db, random_gaussian_matrix,
                     random_gaussian_tensor)

# equal phase-shifter count: 16 x 16 with two shifters per antenna vs 32 x 32 with one
shared = als_shared(random_gaussian_matrix(16, 16, seed=2), 2)
split = als_split_matrix(random_gaussian_matrix(32, 32, seed=2), BlockPartition.halves(32, 32))
print("shared stream sigmas:", np.round(shared.stream_sigmas, 3))
print("split  stream sigmas:", np.round(split.stream_sigmas, 3), " |det| =", round(split.objective, 3))

# capacity at 20 dB transmit-power-to-noise ratio, and its high-SNR form
chi = 100.0
s1, s2 = split.stream_sigmas
print("capacity:", capacity_proxy([s1, s2], chi), " high-SNR:", high_snr_capacity(s1, s2, chi))

# on a tensor channel each tap has its own 2 x 2 singular values; pairing the
# largest with the currently weaker stream balances the two streams
T = random_gaussian_tensor(32, 32, 2, seed=2)
res = als_split_tensor(T, BlockPartition.halves(32, 32))
print("per-tap singular values:\n", np.round(res.slice_sigmas, 3))
powers, assignment = greedy_pairing(res.slice_sigmas)
print("stream powers:", np.round(powers, 3), " assignment:", assignment.tolist())

print("ideal gain 8x8: %.2f dB, 16x16: %.2f dB" % (ideal_gain_db(8, 8), ideal_gain_db(16, 16)))
