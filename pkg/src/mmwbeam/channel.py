"""Channel containers, mode products and random channel generation.

A frequency-flat channel is an ``N x M`` complex matrix (``N`` transmit
antennas, ``M`` receive antennas).  A frequency-selective channel is an
``N x M x P`` tensor with ``P`` timing (or frequency) indices.  Tensors are
stored slice-major, i.e. as a ``(P, N, M)`` array, because every solver
iterates over the slices ``H_p``.

The indices ``p`` are opaque labels; nothing here assumes that ``p`` and
``p + 1`` are adjacent samples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelTensor",
    "BlockPartition",
    "as_matrix",
    "as_tensor",
    "canonical_phase",
    "mode_multiply",
    "beamformed_fir",
    "random_gaussian_matrix",
    "random_gaussian_tensor",
    "make_rng",
    "svd_oracle",
    "tensor_to_json",
    "tensor_from_json",
    "FixtureError",
]

_SEED_LIMIT = 1 << 64


class FixtureError(ValueError):
    """Raised when a channel fixture does not follow the JSON schema."""


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} has non-finite entries")


def as_matrix(H) -> np.ndarray:
    """Validate ``H`` as an ``N x M`` channel matrix and return it as complex."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise ValueError(f"channel matrix must be 2-D, got shape {H.shape}")
    if min(H.shape) < 1:
        raise ValueError(f"channel matrix has an empty dimension: {H.shape}")
    _check_finite(H, "channel matrix")
    return H


class ChannelTensor:
    """Immutable ``N x M x P`` channel tensor stored as ``P`` slices.

    Parameters
    ----------
    slices : array_like, shape (P, N, M)
        ``slices[p]`` is the channel matrix ``H_p``.  A 2-D input is taken
        as a single-slice tensor.
    """

    __slots__ = ("_data",)

    def __init__(self, slices):
        data = np.array(slices, dtype=complex)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise ValueError(f"channel tensor must be 3-D (P, N, M), got shape {data.shape}")
        if min(data.shape) < 1:
            raise ValueError(f"channel tensor has an empty dimension: {data.shape}")
        _check_finite(data, "channel tensor")
        data.setflags(write=False)
        self._data = data

    @classmethod
    def from_nmp(cls, arr):
        """Build from an array indexed ``[n, m, p]``."""
        arr = np.asarray(arr)
        if arr.ndim != 3:
            raise ValueError(f"expected an (N, M, P) array, got shape {arr.shape}")
        return cls(np.moveaxis(arr, 2, 0))

    @property
    def slices(self) -> np.ndarray:
        """Read-only ``(P, N, M)`` view."""
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[1]

    @property
    def m(self) -> int:
        return self._data.shape[2]

    @property
    def p(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self):
        """Shape in ``(N, M, P)`` index order."""
        return (self.n, self.m, self.p)

    def slice(self, p: int) -> np.ndarray:
        """Channel matrix ``H_p`` (zero-based ``p``)."""
        return self._data[p]

    def to_nmp(self) -> np.ndarray:
        return np.moveaxis(self._data, 0, 2)

    def stacked_rows(self) -> np.ndarray:
        """The ``PN x M`` matrix ``[H_1; H_2; ...]``."""
        return self._data.reshape(self.p * self.n, self.m)

    def stacked_cols(self) -> np.ndarray:
        """The ``N x PM`` matrix ``[H_1, H_2, ...]``."""
        return np.transpose(self._data, (1, 0, 2)).reshape(self.n, self.p * self.m)

    def scaled(self, c) -> "ChannelTensor":
        return ChannelTensor(self._data * c)

    def __eq__(self, other):
        if not isinstance(other, ChannelTensor):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self._data.shape, self._data.tobytes()))

    def __repr__(self):
        return f"ChannelTensor(N={self.n}, M={self.m}, P={self.p})"


def as_tensor(H) -> ChannelTensor:
    """Accept a :class:`ChannelTensor`, a ``(P, N, M)`` array or a matrix."""
    if isinstance(H, ChannelTensor):
        return H
    return ChannelTensor(H)


@dataclass(frozen=True)
class BlockPartition:
    """Split of ``N = n1 + n2`` transmit and ``M = m1 + m2`` receive antennas."""

    n1: int
    n2: int
    m1: int
    m2: int

    def __post_init__(self):
        for name in ("n1", "n2", "m1", "m2"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"block partition part {name} must be >= 1, got {getattr(self, name)}")

    @classmethod
    def halves(cls, n: int, m: int) -> "BlockPartition":
        return cls(n // 2, n - n // 2, m // 2, m - m // 2)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    def check(self, n: int, m: int):
        if (self.n, self.m) != (n, m):
            raise ValueError(
                f"partition ({self.n1}+{self.n2}) x ({self.m1}+{self.m2}) "
                f"does not match channel size {n} x {m}")

    def blocks(self, H):
        """Return ``(H11, H12, H21, H22)``; works on matrices and on ``(P, N, M)`` stacks."""
        H = np.asarray(H)
        self.check(H.shape[-2], H.shape[-1])
        r, c = self.n1, self.m1
        return H[..., :r, :c], H[..., :r, c:], H[..., r:, :c], H[..., r:, c:]


def canonical_phase(x, normalize: bool = True) -> np.ndarray:
    """Apply the beam-vector phase convention.

    The vector is scaled to unit norm (if ``normalize``) and rotated so that
    its largest-magnitude entry is real and nonnegative; ties go to the
    lowest index.  A zero vector is returned unchanged.
    """
    x = np.asarray(x, dtype=complex)
    nrm = np.linalg.norm(x)
    if not nrm > 0:
        return x.copy()
    if normalize:
        x = x / nrm
    k = int(np.argmax(np.abs(x)))
    y = x * (np.conj(x[k]) / abs(x[k]))
    y[k] = abs(y[k])
    return y


def canonical_columns(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return np.stack([canonical_phase(X[:, k]) for k in range(X.shape[1])], axis=1)


def mode_multiply(tensor, operand, mode: int, squeeze: bool = True) -> np.ndarray:
    """Multiply a tensor by a matrix or vector along ``mode`` (1, 2 or 3).

    For ``mode=2`` and a matrix ``A`` of shape ``(M, K)`` the result is
    ``b[n, k, p] = sum_l h[n, l, p] * a[l, k]``; modes 1 and 3 contract the
    transmit and timing indices the same way.  A vector operand behaves like
    a one-column matrix.  The result is indexed ``[n, m, p]`` and, when
    ``squeeze`` is true, dimensions of length one are dropped.

    ``tensor`` may be a :class:`ChannelTensor`, a matrix (``P = 1``) or an
    unsqueezed result of a previous call (a 3-D array indexed ``[n, m, p]``).
    """
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    if isinstance(tensor, ChannelTensor):
        T = tensor.to_nmp()
    else:
        T = np.asarray(tensor, dtype=complex)
        if T.ndim == 2:
            T = T[:, :, np.newaxis]
        if T.ndim != 3:
            raise ValueError(f"tensor operand must be 2-D or 3-D, got shape {T.shape}")
    A = np.asarray(operand, dtype=complex)
    if A.ndim == 1:
        A = A[:, np.newaxis]
    if A.ndim != 2:
        raise ValueError(f"mode-{mode} operand must be a vector or matrix, got shape {A.shape}")
    axis = mode - 1
    if A.shape[0] != T.shape[axis]:
        raise ValueError(
            f"mode-{mode} product: operand has {A.shape[0]} rows but the tensor has "
            f"{T.shape[axis]} entries along mode {mode} (tensor shape {T.shape})")
    out = np.moveaxis(np.tensordot(T, A, axes=([axis], [0])), -1, axis)
    if squeeze:
        out = np.squeeze(out)
    return out


def beamformed_fir(tensor, u, v) -> np.ndarray:
    """FIR channel ``h[p] = u^H H_p v`` seen through transmit beam ``u`` and receive beam ``v``."""
    T = as_tensor(tensor)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != (T.n,):
        raise ValueError(f"transmit beam has length {u.shape}, channel has N={T.n}")
    if v.shape != (T.m,):
        raise ValueError(f"receive beam has length {v.shape}, channel has M={T.m}")
    return np.conj(u) @ T.slices @ v


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox-4x64) generator keyed by a 64-bit seed.

    Philox output and numpy's normal sampler are defined bit-exactly, so a
    given seed yields identical streams on every platform.
    """
    seed = int(seed)
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed))


def random_gaussian_tensor(n: int, m: int, p: int, seed: int) -> ChannelTensor:
    """I.i.d. circularly-symmetric complex Gaussian tensor, unit variance per entry.

    Slices are drawn in order, real part then imaginary part, so slice 0 of
    a tensor equals :func:`random_gaussian_matrix` with the same seed.
    """
    for name, val in (("n", n), ("m", m), ("p", p)):
        if int(val) < 1:
            raise ValueError(f"dimension {name} must be >= 1, got {val}")
    z = make_rng(seed).standard_normal((p, 2, n, m))
    return ChannelTensor((z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0))


def random_gaussian_matrix(n: int, m: int, seed: int) -> np.ndarray:
    return random_gaussian_tensor(n, m, 1, seed).slice(0).copy()


def svd_oracle(H):
    """Full SVD ``H = U diag(s) V^H`` used for initialization and tests.

    Returns ``(s, U, V)`` with ``s`` descending.
    """
    H = as_matrix(H)
    U, s, Vh = np.linalg.svd(H)
    return s, U, Vh.conj().T


def top_singular_vectors(H, k: int = 1):
    """Top-``k`` left and right singular vectors, columns phase-canonical."""
    _, U, V = svd_oracle(H)
    return canonical_columns(U[:, :k]), canonical_columns(V[:, :k])


# -- fixture I/O ----------------------------------------------------------

def tensor_to_json(tensor) -> str:
    """Serialize to ``{"n", "m", "p", "re", "im"}``.

    Flat index is ``n + N*m + N*M*p``: ``n`` runs fastest and slices are
    contiguous.
    """
    T = as_tensor(tensor)
    flat = np.transpose(T.slices, (0, 2, 1)).ravel()
    doc = {
        "n": T.n, "m": T.m, "p": T.p,
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }
    return json.dumps(doc)


def tensor_from_json(text: str) -> ChannelTensor:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FixtureError("fixture must be a JSON object")
    dims = {}
    for key in ("n", "m", "p"):
        if key not in doc:
            raise FixtureError(f"missing field '{key}'")
        val = doc[key]
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise FixtureError(f"field '{key}' must be a positive integer, got {val!r}")
        dims[key] = val
    size = dims["n"] * dims["m"] * dims["p"]
    parts = []
    for key in ("re", "im"):
        if key not in doc:
            raise FixtureError(f"missing field '{key}'")
        vals = doc[key]
        if not isinstance(vals, list):
            raise FixtureError(f"field '{key}' must be a list of numbers")
        if len(vals) != size:
            raise FixtureError(f"field '{key}' has {len(vals)} entries, expected n*m*p = {size}")
        for i, x in enumerate(vals):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise FixtureError(f"field '{key}' entry {i} is not a number: {x!r}")
        parts.append(np.asarray(vals, dtype=float))
    flat = parts[0] + 1j * parts[1]
    if not np.all(np.isfinite(flat)):
        raise FixtureError("fixture has non-finite entries")
    data = flat.reshape(dims["p"], dims["m"], dims["n"]).transpose(0, 2, 1)
    return ChannelTensor(data)
