"""Multi-stream beamforming for the shared and split architectures.

Shared architecture: every antenna carries all ``K`` streams, and the beam
matrices ``U`` (``N x K``) and ``V`` (``M x K``) come from alternating
top-``K`` eigenvector fits.

Split architecture (``K = 2``): antennas are partitioned per stream and
``u1, u2, v1, v2`` maximize ``|det Xi|``, the product of the two singular
values of the beamformed ``2 x 2`` channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (BlockPartition, ChannelTensor, as_tensor, canonical_columns,
                      canonical_phase, top_singular_vectors)
from .siso import SolverConfig, _cplx_list

__all__ = [
    "MimoResult",
    "SplitBeamSet",
    "als_shared",
    "als_split_matrix",
    "als_split_tensor",
    "build_det_matrix",
    "split_effective_channel",
    "greedy_pairing",
    "capacity_proxy",
    "high_snr_capacity",
    "ideal_gain_db",
]


@dataclass(frozen=True)
class SplitBeamSet:
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def to_dict(self):
        return {k: _cplx_list(getattr(self, k)) for k in ("u1", "u2", "v1", "v2")}


@dataclass
class MimoResult:
    """Output of a MIMO solver.

    ``effective`` is the beamformed channel as a ``(P, K, K)`` stack (one
    slice for a matrix channel).  ``slice_sigmas[p]`` holds the descending
    singular values of ``effective[p]`` and ``stream_powers`` the per-stream
    powers after greedy pairing.
    """

    beams: object
    effective: np.ndarray
    slice_sigmas: np.ndarray
    stream_powers: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False

    @property
    def stream_sigmas(self) -> np.ndarray:
        """Equivalent singular value per stream, strongest first."""
        return np.sort(np.sqrt(self.stream_powers))[::-1]

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else 0.0

    def to_dict(self) -> dict:
        if isinstance(self.beams, SplitBeamSet):
            beams = self.beams.to_dict()
        else:
            U, V = self.beams
            beams = {"U": [_cplx_list(U[:, k]) for k in range(U.shape[1])],
                     "V": [_cplx_list(V[:, k]) for k in range(V.shape[1])]}
        return {
            "beams": beams,
            "effective": [[_cplx_list(row) for row in X] for X in self.effective],
            "slice_sigmas": self.slice_sigmas.tolist(),
            "stream_powers": self.stream_powers.tolist(),
            "stream_sigmas": self.stream_sigmas.tolist(),
            "objective_trace": [float(x) for x in self.objective_trace],
            "iterations_used": int(self.iterations_used),
            "converged": bool(self.converged),
        }


def _has_converged(trace, tol):
    return len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * trace[-1]


def _slice_singular_values(X):
    return np.linalg.svd(X, compute_uv=False)


def _finish(beams, X, trace, converged):
    sig = _slice_singular_values(X)
    powers, _ = greedy_pairing(sig)
    return MimoResult(beams, X, sig, powers, trace, len(trace), converged)


# -- shared architecture --------------------------------------------------

def _top_eigvecs(D, k):
    _, vecs = np.linalg.eigh(D)
    return vecs[:, ::-1][:, :k]


def als_shared(H, K: int, cfg: SolverConfig = SolverConfig()) -> MimoResult:
    """ALS for the shared architecture.

    ``U`` is set to the top-``K`` eigenvectors of ``sum_p H_p V V^H H_p^H``
    and ``V`` to those of ``sum_p H_p^H U U^H H_p``; the objective is
    ``sum_p |U^H H_p V|_F^2``.  ``V`` starts at the top-``K`` right singular
    vectors of ``[H_1; H_2; ...]``.  On a matrix channel this is block power
    iteration for the dominant singular subspaces.
    """
    T = as_tensor(H)
    K = int(K)
    if not 1 <= K <= min(T.n, T.m):
        raise ValueError(f"stream count K={K} must satisfy 1 <= K <= min(N, M) = {min(T.n, T.m)}")
    Hs = T.slices
    V = top_singular_vectors(T.stacked_rows(), K)[1]
    U = None
    trace = []
    converged = False
    for _ in range(cfg.max_iterations):
        A = Hs @ V                                   # (P, N, K)
        D = np.einsum("pnk,pqk->nq", A, A.conj())
        U = _top_eigvecs(D, K)
        Bu = np.conj(U).T @ Hs                       # (P, K, M), U^H H_p
        E = np.einsum("pkm,pkq->mq", Bu.conj(), Bu)
        V = _top_eigvecs(E, K)
        X = np.conj(U).T @ Hs @ V
        trace.append(float(np.sum(np.abs(X) ** 2)))
        if _has_converged(trace, cfg.tolerance):
            converged = True
            break
    if not trace[-1] > 0:
        converged = False
    U = canonical_columns(U)
    V = canonical_columns(V)
    X = np.conj(U).T @ Hs @ V
    return _finish((U, V), X, trace, converged)


# -- split architecture ---------------------------------------------------

def build_det_matrix(blocks, v1, v2) -> np.ndarray:
    """Matrix ``A`` with ``det Xi = u1^H A u2*`` for fixed receive beams.

    ``blocks`` is ``(H11, H12, H21, H22)``, either matrices or ``(P, ., .)``
    stacks.  For stacks, ``A = A11 A22^T - A12 A21^T`` with
    ``Anm = [Hnm_1 vm, ..., Hnm_P vm]``, and ``u1^H A u2*`` equals the sum of
    the per-slice determinants.
    """
    H11, H12, H21, H22 = (np.asarray(b, dtype=complex) for b in blocks)
    if H11.ndim == 2:
        H11, H12, H21, H22 = (b[np.newaxis] for b in (H11, H12, H21, H22))
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    n1, m1 = H11.shape[1:]
    n2, m2 = H22.shape[1:]
    if H12.shape[1:] != (n1, m2) or H21.shape[1:] != (n2, m1):
        raise ValueError(
            f"inconsistent block shapes H11={H11.shape[1:]}, H12={H12.shape[1:]}, "
            f"H21={H21.shape[1:]}, H22={H22.shape[1:]}")
    if v1.shape != (m1,) or v2.shape != (m2,):
        raise ValueError(f"v1, v2 must have lengths {m1}, {m2}; got {v1.shape}, {v2.shape}")
    return (H11 @ v1).T @ (H22 @ v2) - (H12 @ v2).T @ (H21 @ v1)


def _build_det_matrix_v(blocks, u1, u2):
    # mirror of build_det_matrix: det = v1^T B v2
    H11, H12, H21, H22 = blocks
    B11 = np.conj(u1) @ H11
    B12 = np.conj(u1) @ H12
    B21 = np.conj(u2) @ H21
    B22 = np.conj(u2) @ H22
    return B11.T @ B22 - B21.T @ B12


def split_effective_channel(H, part: BlockPartition, beams: SplitBeamSet) -> np.ndarray:
    """The ``(P, 2, 2)`` beamformed channel; slice ``p`` is ``[[u1^H H11 v1, u1^H H12 v2], [u2^H H21 v1, u2^H H22 v2]]``."""
    T = as_tensor(H)
    H11, H12, H21, H22 = part.blocks(T.slices)
    u1c, u2c = np.conj(beams.u1), np.conj(beams.u2)
    X = np.empty((T.p, 2, 2), dtype=complex)
    X[:, 0, 0] = u1c @ H11 @ beams.v1
    X[:, 0, 1] = u1c @ H12 @ beams.v2
    X[:, 1, 0] = u2c @ H21 @ beams.v1
    X[:, 1, 1] = u2c @ H22 @ beams.v2
    return X


def _rank1_fit(A, x, iterations):
    """Maximize ``|a^H A x|`` over unit ``a, x`` by capped power steps from ``x``.

    Returns ``(a, x, value)``; ``value = |A^H a|`` never drops below
    ``|a0^H A x0|`` for any unit ``a0``.  ``iterations=None`` takes the
    exact top singular triplet.
    """
    if iterations is None:
        U, s, Vh = np.linalg.svd(A)
        if not s[0] > 0:
            return None
        return U[:, 0], Vh[0].conj(), float(s[0])
    G = A.conj().T @ A
    for _ in range(iterations):
        y = G @ x
        ny = np.linalg.norm(y)
        if not ny > 0:
            break
        y = y / ny
        if np.linalg.norm(y - x) < 1e-15:
            x = y
            break
        x = y
    a = A @ x
    na = np.linalg.norm(a)
    if not na > 0:
        return None
    a = a / na
    x = A.conj().T @ a
    val = np.linalg.norm(x)
    return a, x / val, float(val)


def _initial_x(A, prev):
    if prev is not None and np.linalg.norm(A @ prev) > 0:
        return prev
    i = int(np.argmax(np.linalg.norm(A, axis=1)))
    x = np.conj(A[i])
    return x / np.linalg.norm(x)


def _split_init(T, part):
    """Receive beams from the top-2 right singular vectors of ``[H_1; H_2; ...]``.

    Each vector is restricted to one receive block and renormalized; of the
    two ways to assign the vectors to blocks, the one with the larger
    attainable ``|det|`` is kept.  A block whose restriction vanishes falls
    back to the top right singular vector of its own column block.
    """
    stacked = T.stacked_rows()
    V = top_singular_vectors(stacked, min(2, T.m))[1]
    cols = [slice(0, part.m1), slice(part.m1, part.m)]
    fallback = [top_singular_vectors(stacked[:, c], 1)[1][:, 0] for c in cols]
    blocks = part.blocks(T.slices)
    best = None
    for order in ((0, 1), (1, 0)):
        vs = []
        for blk, j in enumerate(order):
            if j >= V.shape[1]:
                vs.append(fallback[blk])
                continue
            x = V[cols[blk], j]
            nx = np.linalg.norm(x)
            vs.append(x / nx if nx > 1e-12 else fallback[blk])
        score = np.linalg.svd(build_det_matrix(blocks, *vs), compute_uv=False)[0]
        if best is None or score > best[0]:
            best = (score, vs)
    return best[1]


def als_split_tensor(H, part: BlockPartition, cfg: SolverConfig = SolverConfig()) -> MimoResult:
    """ALS for the 2-stream split architecture on a tensor (or matrix) channel.

    With ``v1, v2`` fixed, ``u1`` and ``u2*`` are the rank-1 fit of the
    determinant matrix ``A``; with ``u1, u2`` fixed, ``v1*`` and ``v2`` are
    the rank-1 fit of its mirror ``B``.  The objective trace is
    ``|sum_p det X_p|``, which for one slice is ``sigma1 * sigma2`` of the
    beamformed ``2 x 2`` channel.
    """
    T = as_tensor(H)
    if not isinstance(part, BlockPartition):
        part = BlockPartition(*part)
    part.check(T.n, T.m)
    blocks = part.blocks(T.slices)
    v1, v2 = _split_init(T, part)
    u1 = np.full(part.n1, 1 / np.sqrt(part.n1), dtype=complex)
    u2 = np.full(part.n2, 1 / np.sqrt(part.n2), dtype=complex)
    inner = cfg.inner_iterations
    trace = []
    converged = False
    for _ in range(cfg.max_iterations):
        A = build_det_matrix(blocks, v1, v2)
        fit = _rank1_fit(A, _initial_x(A, None if not trace else np.conj(u2)), inner)
        if fit is None:
            break
        u1, x, _ = fit
        u2 = np.conj(x)

        B = _build_det_matrix_v(blocks, u1, u2)
        fit = _rank1_fit(B, _initial_x(B, v2), inner)
        if fit is None:
            break
        w, v2, lam = fit
        v1 = np.conj(w)
        trace.append(lam)
        if _has_converged(trace, cfg.tolerance):
            converged = True
            break
    beams = SplitBeamSet(canonical_phase(u1), canonical_phase(u2),
                         canonical_phase(v1), canonical_phase(v2))
    X = split_effective_channel(T, part, beams)
    return _finish(beams, X, trace, converged)


def als_split_matrix(H, part: BlockPartition, cfg: SolverConfig = SolverConfig()) -> MimoResult:
    """ALS for the 2-stream split architecture on a frequency-flat channel."""
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError(f"expected a channel matrix, got shape {H.shape}")
    return als_split_tensor(ChannelTensor(H), part, cfg)


# -- stream bookkeeping and metrics -----------------------------------------

def greedy_pairing(sigma):
    """Assign per-slice singular values to streams so stream powers balance.

    ``sigma`` has shape ``(P, K)``, each row descending.  Slices are taken in
    the given order; at each slice the largest value goes to the stream with
    the least power accumulated so far, the next value to the next weakest,
    and so on (ties by stream index).

    Returns ``(powers, assignment)`` where ``powers[k]`` is the summed
    ``sigma**2`` of stream ``k`` and ``assignment[p, j]`` is the stream that
    received ``sigma[p, j]``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2:
        raise ValueError(f"sigma must have shape (P, K), got {sigma.shape}")
    if np.any(sigma < 0):
        raise ValueError("singular values must be nonnegative")
    if np.any(np.diff(sigma, axis=1) > 0):
        raise ValueError("each slice's singular values must be in descending order")
    P, K = sigma.shape
    powers = np.zeros(K)
    assignment = np.empty((P, K), dtype=int)
    for p in range(P):
        order = np.argsort(powers, kind="stable")
        assignment[p] = order
        powers[order] += sigma[p] ** 2
    return powers, assignment


def capacity_proxy(sigma, chi: float) -> float:
    """Sum rate ``sum_k log2(1 + sigma_k^2 chi)`` in bits per channel use."""
    if not chi > 0:
        raise ValueError(f"chi must be > 0, got {chi}")
    s = np.asarray(sigma, dtype=float)
    return float(np.sum(np.log2(1 + s ** 2 * chi)))


def high_snr_capacity(sigma1: float, sigma2: float, chi: float) -> float:
    """``2 log2(sigma1 sigma2) + 2 log2(chi)``, the 2-stream high-SNR limit."""
    if not chi > 0:
        raise ValueError(f"chi must be > 0, got {chi}")
    return 2 * math.log2(sigma1 * sigma2) + 2 * math.log2(chi)


def ideal_gain_db(n: int, m: int) -> float:
    """Ideal array gain ``20 log10 N + 10 log10 M`` of an ``N x M`` link."""
    if n < 1 or m < 1:
        raise ValueError(f"antenna counts must be >= 1, got {n}, {m}")
    return 20 * math.log10(n) + 10 * math.log10(m)

