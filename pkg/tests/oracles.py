"""Independent reference computations shared by the test modules."""
import itertools

import numpy as np


def explicit_xi(H, part, u1, u2, v1, v2):
    """The 2 x 2 beamformed matrix assembled entry by entry."""
    H11, H12, H21, H22 = part.blocks(H)
    return np.array([[np.vdot(u1, H11 @ v1), np.vdot(u1, H12 @ v2)],
                     [np.vdot(u2, H21 @ v1), np.vdot(u2, H22 @ v2)]])


def leximin_oracle(sigma):
    """Per-slice exhaustive search over all K! assignments, keeping the one
    whose sorted accumulated powers are lexicographically largest."""
    sigma = np.asarray(sigma, dtype=float)
    P, K = sigma.shape
    powers = np.zeros(K)
    for p in range(P):
        best = None
        for perm in itertools.permutations(range(K)):
            cand = powers.copy()
            cand[list(perm)] += sigma[p] ** 2
            key = tuple(np.sort(cand))
            if best is None or key > best[0]:
                best = (key, cand)
        powers = best[1]
    return powers


def global_maxmin(sigma):
    """Largest achievable weakest-stream power over every assignment of every slice."""
    sigma = np.asarray(sigma, dtype=float)
    P, K = sigma.shape
    best = -np.inf
    for perms in itertools.product(itertools.permutations(range(K)), repeat=P):
        powers = np.zeros(K)
        for p, perm in enumerate(perms):
            powers[list(perm)] += sigma[p] ** 2
        best = max(best, powers.min())
    return best
