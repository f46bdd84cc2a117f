"""Single-stream beamforming: power method, ALS and HOPM.

All solvers maximize ``|u^H H v|`` (matrix channel) or the norm of the
beamformed FIR channel ``h[p] = u^H H_p v`` (tensor channel) over unit
vectors ``u`` and ``v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import (as_matrix, as_tensor, beamformed_fir, canonical_phase,
                      make_rng, top_singular_vectors)

__all__ = ["SolverConfig", "SisoResult", "power_method", "als_tensor", "hopm"]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls shared by every solver.

    ``tolerance`` is on the relative change of the objective between two
    outer iterations.  ``restarts`` adds that many random initializations
    (drawn from ``seed``) next to the deterministic one; the best result
    wins.

    ``inner_iterations`` controls the nested rank-1 fits of ALS: ``None``
    solves them exactly with a small Hermitian eigen-decomposition, an
    integer caps a warm-started power iteration instead.  The capped form
    keeps every stationary point of the objective as a fixed point, so it
    can stall on saddles.
    """

    max_iterations: int = 8
    tolerance: float = 1e-9
    restarts: int = 0
    inner_iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if int(self.restarts) < 0:
            raise ValueError(f"restarts must be >= 0, got {self.restarts}")
        if self.inner_iterations is not None and int(self.inner_iterations) < 1:
            raise ValueError(f"inner_iterations must be >= 1, got {self.inner_iterations}")


@dataclass
class SisoResult:
    u: np.ndarray
    v: np.ndarray
    sigma: float
    objective_trace: list = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "u": _cplx_list(self.u),
            "v": _cplx_list(self.v),
            "sigma": float(self.sigma),
            "objective_trace": [float(x) for x in self.objective_trace],
            "iterations_used": int(self.iterations_used),
            "converged": bool(self.converged),
        }


def _cplx_list(x):
    return [[float(z.real), float(z.imag)] for z in np.asarray(x).ravel()]


def _unit(x):
    nrm = np.linalg.norm(x)
    return x / nrm, nrm


def _has_converged(trace, tol):
    return len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * trace[-1]


def _random_unit(rng, n):
    z = rng.standard_normal((2, n))
    return _unit(z[0] + 1j * z[1])[0]


def _check_init(x, size, name):
    if x is None:
        return None
    x = np.asarray(x, dtype=complex)
    if x.shape != (size,):
        raise ValueError(f"{name} must have length {size}, got shape {x.shape}")
    nrm = np.linalg.norm(x)
    if not nrm > 0:
        raise ValueError(f"{name} must be nonzero")
    return x / nrm


def _best_of_restarts(run, cfg, init, draw):
    best = run(init)
    if cfg.restarts:
        rng = make_rng(cfg.seed)
        for _ in range(cfg.restarts):
            res = run(draw(rng))
            if res.sigma > best.sigma:
                best = res
    return best


def power_method(H, cfg: SolverConfig = SolverConfig(), v0=None) -> SisoResult:
    """Alternating power iteration on a matrix channel.

    Each iteration sets ``u = Hv / |Hv|`` and then ``v = H^H u / |H^H u|``;
    ``sigma`` is ``|H^H u|``.  Without ``v0`` the start is the normalized
    all-ones vector.
    """
    H = as_matrix(H)
    n, m = H.shape
    v0 = _check_init(v0, m, "v0")
    if v0 is None:
        v0 = np.full(m, 1 / np.sqrt(m), dtype=complex)

    def run(v):
        u = np.full(n, 1 / np.sqrt(n), dtype=complex)
        trace = []
        converged = False
        for _ in range(cfg.max_iterations):
            ut = H @ v
            if not np.linalg.norm(ut) > 0:
                return SisoResult(canonical_phase(u), canonical_phase(v), 0.0, trace, len(trace), False)
            u = _unit(ut)[0]
            v, sigma = _unit(H.conj().T @ u)
            trace.append(float(sigma))
            if _has_converged(trace, cfg.tolerance):
                converged = True
                break
        return SisoResult(canonical_phase(u), canonical_phase(v), trace[-1], trace, len(trace), converged)

    return _best_of_restarts(run, cfg, v0, lambda rng: _random_unit(rng, m))


def _gram_power(G, a, iterations):
    """Dominant eigenvector of a Hermitian PSD matrix.

    Exact when ``iterations`` is None, otherwise at most ``iterations``
    power steps warm-started at ``a``.
    """
    if iterations is None:
        return np.linalg.eigh(G)[1][:, -1].astype(complex)
    for _ in range(iterations):
        b = G @ a
        nb = np.linalg.norm(b)
        if not nb > 0:
            break
        b = b / nb
        if np.linalg.norm(b - a) < 1e-15:
            return b
        a = b
    return a


def _spectral_v0(T):
    return top_singular_vectors(T.stacked_rows(), 1)[1][:, 0]


def _spectral_u0(T):
    return top_singular_vectors(T.stacked_cols(), 1)[0][:, 0]


def als_tensor(H, cfg: SolverConfig = SolverConfig(), v0=None) -> SisoResult:
    """Alternating least squares for the rank-1 fit of a tensor channel.

    With ``v`` fixed, ``A = [H_1 v, ..., H_P v]`` is fit by ``sigma u a^H``;
    the tap weights ``a`` are the dominant eigenvector of the ``P x P`` Gram
    matrix (see ``SolverConfig.inner_iterations``), and
    ``u = A a / |A a|``.  The ``v`` half-step mirrors this with the rows
    ``u^H H_p``.  The reported ``sigma`` is the FIR norm ``|h|``.

    Without ``v0`` the start is the top right singular vector of the
    row-stacked matrix ``[H_1; H_2; ...]``.
    """
    T = as_tensor(H)
    Hs = T.slices
    v0 = _check_init(v0, T.m, "v0")
    if v0 is None:
        v0 = _spectral_v0(T)
    inner = cfg.inner_iterations

    def run(v):
        u = np.full(T.n, 1 / np.sqrt(T.n), dtype=complex)
        h = None
        trace = []
        converged = False
        for _ in range(cfg.max_iterations):
            A = Hs @ v                       # row p is H_p v
            G = A.conj() @ A.T
            if h is None:
                a = np.sqrt(np.real(np.diag(G))).astype(complex)
                if not np.linalg.norm(a) > 0:
                    return SisoResult(canonical_phase(u), canonical_phase(v), 0.0, trace, 0, False)
                a = a / np.linalg.norm(a)
            else:
                a = _unit(h.conj())[0]
            a = _gram_power(G, a, inner)
            ut = A.T @ a
            if not np.linalg.norm(ut) > 0:
                break
            u = _unit(ut)[0]

            B = np.conj(u) @ Hs              # row p is u^H H_p
            b = _unit(B @ v)[0]
            b = _gram_power(B @ B.conj().T, b, inner)
            vt = B.conj().T @ b
            if not np.linalg.norm(vt) > 0:
                break
            v = _unit(vt)[0]
            h = B @ v
            trace.append(float(np.linalg.norm(h)))
            if _has_converged(trace, cfg.tolerance):
                converged = True
                break
        sigma = trace[-1] if trace else 0.0
        return SisoResult(canonical_phase(u), canonical_phase(v), sigma, trace, len(trace), converged)

    return _best_of_restarts(run, cfg, v0, lambda rng: _random_unit(rng, T.m))


def hopm(H, cfg: SolverConfig = SolverConfig(), u0=None, v0=None) -> SisoResult:
    """Higher-order power method for a tensor channel.

    One iteration normalizes the current FIR channel to ``g = h / |h|``,
    then updates ``u`` proportional to ``sum_p H_p v conj(g_p)`` and ``v``
    proportional to the conjugate of ``sum_p (u^H H_p)^T conj(g_p)``.
    ``sigma`` is the norm of that last, unnormalized, vector.

    Default starts are the top left singular vector of ``[H_1, H_2, ...]``
    and the top right singular vector of ``[H_1; H_2; ...]``.
    """
    T = as_tensor(H)
    Hs = T.slices
    u0 = _check_init(u0, T.n, "u0")
    v0 = _check_init(v0, T.m, "v0")
    if u0 is None:
        u0 = _spectral_u0(T)
    if v0 is None:
        v0 = _spectral_v0(T)

    def run(init):
        u, v = init
        trace = []
        converged = False
        for _ in range(cfg.max_iterations):
            h = np.conj(u) @ Hs @ v
            nh = np.linalg.norm(h)
            if not nh > 0:
                break
            g = np.conj(h / nh)
            ut = (Hs @ v).T @ g
            if not np.linalg.norm(ut) > 0:
                break
            u = _unit(ut)[0]
            vt = (np.conj(u) @ Hs).T @ g
            sigma = np.linalg.norm(vt)
            if not sigma > 0:
                break
            v = np.conj(vt) / sigma
            trace.append(float(sigma))
            if _has_converged(trace, cfg.tolerance):
                converged = True
                break
        sigma = trace[-1] if trace else 0.0
        return SisoResult(canonical_phase(u), canonical_phase(v), sigma, trace, len(trace), converged)

    return _best_of_restarts(run, cfg, (u0, v0),
                             lambda rng: (_random_unit(rng, T.n), _random_unit(rng, T.m)))


def siso_sigma(H, u, v) -> float:
    """Equivalent singular value ``|h|`` of a beam pair."""
    return float(np.linalg.norm(beamformed_fir(H, u, v)))
