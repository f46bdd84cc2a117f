"""Monte-Carlo ensembles, empirical statistics and brute-force grid oracles."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .channel import BlockPartition, as_tensor, canonical_phase, make_rng, random_gaussian_tensor
from .mimo import als_shared, als_split_tensor, build_det_matrix
from .siso import SolverConfig, als_tensor, hopm, power_method

__all__ = [
    "ExperimentSpec",
    "EnsembleStats",
    "GridOracleSpec",
    "GridTooLarge",
    "run_ensemble",
    "run_trial",
    "trial_seed",
    "compare_ensembles",
    "grid_oracle",
    "unit_vector_grid",
    "figure3_specs",
    "figure6_specs",
    "load_spec",
    "PERCENTILES",
    "MONOTONE_SLACK",
]

PERCENTILES = (1, 5, 25, 50, 75, 95, 99)
MONOTONE_SLACK = 1e-12
SCHEMA_VERSION = 1

ALGORITHMS = {
    "power": "siso",
    "als": "siso",
    "hopm": "siso",
    "als-shared": "shared",
    "als-split": "split",
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte-Carlo experiment: channel shape, solver and trial count.

    ``architecture`` follows from ``algorithm`` when left empty.  Split
    experiments divide both arrays into equal halves, one per stream.
    """

    channel: str = "matrix"
    n: int = 16
    m: int = 16
    p: int = 1
    algorithm: str = "power"
    architecture: str = ""
    k: int = 1
    trials: int = 10_000
    config: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        arch = ALGORITHMS[self.algorithm]
        if not self.architecture:
            object.__setattr__(self, "architecture", arch)
        elif self.architecture != arch:
            raise ValueError(f"algorithm {self.algorithm!r} belongs to the {arch!r} architecture, "
                             f"not {self.architecture!r}")
        if self.channel not in ("matrix", "tensor"):
            raise ValueError(f"channel must be 'matrix' or 'tensor', got {self.channel!r}")
        for name in ("n", "m", "p", "trials"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.channel == "matrix" and self.p != 1:
            raise ValueError(f"a matrix channel has p = 1, got p = {self.p}")
        if self.algorithm == "power" and self.channel != "matrix":
            raise ValueError("the power method needs a matrix channel")
        if arch == "siso" and self.k != 1:
            raise ValueError(f"single-stream algorithms use k = 1, got k = {self.k}")
        if arch == "shared" and not 1 <= self.k <= min(self.n, self.m):
            raise ValueError(f"k = {self.k} must lie in [1, min(n, m)] = [1, {min(self.n, self.m)}]")
        if arch == "split":
            if self.k != 2:
                raise ValueError(f"the split architecture supports k = 2 only, got k = {self.k}")
            if self.n % 2 or self.m % 2:
                raise ValueError(f"split needs even antenna counts for equal halves, got {self.n} x {self.m}")
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def quantities(self):
        return ("sigma",) if self.architecture == "siso" else ("stronger", "weaker")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        unknown = set(doc) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        cfg = doc.pop("config", None) or {}
        if not isinstance(cfg, dict):
            raise ValueError("'config' must be an object")
        bad = set(cfg) - set(SolverConfig.__dataclass_fields__)
        if bad:
            raise ValueError(f"unknown solver config fields: {sorted(bad)}")
        return cls(config=SolverConfig(**cfg), **doc)


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        return ExperimentSpec.from_dict(json.load(fh))


def trial_seed(base_seed: int, t: int) -> int:
    """Seed of trial ``t``; the Philox key schedule does the mixing."""
    return (int(base_seed) ^ int(t)) & ((1 << 64) - 1)


def _monotone_violations(trace):
    tr = np.asarray(trace, dtype=float)
    if tr.size < 2:
        return 0
    return int(np.sum(tr[1:] < tr[:-1] - MONOTONE_SLACK * np.abs(tr[:-1])))


def solve_channel(spec: ExperimentSpec, H):
    cfg = spec.config
    if spec.algorithm == "power":
        return power_method(as_tensor(H).slice(0), cfg)
    if spec.algorithm == "als":
        return als_tensor(H, cfg)
    if spec.algorithm == "hopm":
        return hopm(H, cfg)
    if spec.algorithm == "als-shared":
        return als_shared(H, spec.k, cfg)
    return als_split_tensor(H, BlockPartition.halves(spec.n, spec.m), cfg)


def run_trial(spec: ExperimentSpec, t: int) -> dict:
    """Draw the channel of trial ``t``, solve it and return the reported values."""
    H = random_gaussian_tensor(spec.n, spec.m, spec.p, trial_seed(spec.seed, t))
    res = solve_channel(spec, H)
    if spec.architecture == "siso":
        values = {"sigma": float(res.sigma)}
    else:
        s = res.stream_sigmas
        values = {"stronger": float(s[0]), "weaker": float(s[1]) if s.size > 1 else 0.0}
    return {
        "values": values,
        "converged": bool(res.converged),
        "violations": _monotone_violations(res.objective_trace),
        "iterations": int(res.iterations_used),
    }


@dataclass
class EnsembleStats:
    """Per-trial samples of an ensemble plus derived statistics.

    ``values[q]`` is in trial order; ``sorted(q)`` gives the ordered
    sample behind the empirical CDF.  Percentiles use the inverted-CDF rule,
    so every reported percentile is an actual sample.
    """

    spec: ExperimentSpec
    values: dict
    converged: np.ndarray
    violations: int

    @property
    def trials(self) -> int:
        return len(self.converged)

    @property
    def seed(self) -> int:
        return self.spec.seed

    @property
    def quantities(self):
        return tuple(self.values)

    def _get(self, quantity):
        if quantity is None:
            quantity = self.quantities[0]
        if quantity not in self.values:
            raise KeyError(f"quantity {quantity!r} not in ensemble (has {list(self.values)})")
        return self.values[quantity]

    def sorted(self, quantity=None) -> np.ndarray:
        return np.sort(self._get(quantity))

    def cdf(self, quantity=None):
        x = self.sorted(quantity)
        return x, np.arange(1, x.size + 1) / x.size

    def percentile(self, q, quantity=None) -> float:
        return float(np.percentile(self._get(quantity), q, method="inverted_cdf"))

    def median(self, quantity=None) -> float:
        return self.percentile(50, quantity)

    def percentiles(self, quantity=None) -> dict:
        return {q: self.percentile(q, quantity) for q in PERCENTILES}

    def mean(self, quantity=None) -> float:
        return float(np.mean(self._get(quantity)))

    def std(self, quantity=None) -> float:
        return float(np.std(self._get(quantity), ddof=1)) if self.trials > 1 else 0.0

    def summary(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "trials": self.trials,
            "converged": int(np.sum(self.converged)),
            "not_converged": int(self.trials - np.sum(self.converged)),
            "monotone_violations": int(self.violations),
            "quantities": {
                q: {
                    "mean": self.mean(q),
                    "std": self.std(q),
                    "percentiles": {str(k): v for k, v in self.percentiles(q).items()},
                }
                for q in self.quantities
            },
        }

    def csv_text(self, db: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value", "cdf"])
        for q in self.quantities:
            x, F = self.cdf(q)
            if db:
                with np.errstate(divide="ignore"):
                    x = 20 * np.log10(x)
            for xi, fi in zip(x, F):
                w.writerow([q, repr(float(xi)), repr(float(fi))])
        return buf.getvalue()

    def write(self, path, db: bool = False):
        """Write ``path`` (CSV) and ``path`` with a ``.json`` suffix (sidecar)."""
        path = str(path)
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text(db))
        side = path[:-4] + ".json" if path.endswith(".csv") else path + ".json"
        doc = self.summary()
        doc["db"] = bool(db)
        with open(side, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path, side


def run_ensemble(spec: ExperimentSpec, threads: int = 1) -> EnsembleStats:
    """Run ``spec.trials`` independent trials.

    Trial ``t`` depends only on ``(spec, t)``, so the result is the same for
    every thread count.  Solver non-convergence is counted, never raised.
    """
    threads = max(1, int(threads))
    job = partial(run_trial, spec)
    if threads == 1 or spec.trials < 2 * threads:
        records = [job(t) for t in range(spec.trials)]
    else:
        bounds = np.linspace(0, spec.trials, threads * 4 + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(lambda r: [job(t) for t in r], chunks)
            records = [rec for part in parts for rec in part]
    values = {q: np.array([r["values"][q] for r in records]) for q in spec.quantities}
    converged = np.array([r["converged"] for r in records], dtype=bool)
    violations = sum(r["violations"] for r in records)
    stats = EnsembleStats(spec, values, converged, violations)
    if spec.output:
        stats.write(spec.output)
    return stats


def compare_ensembles(a: EnsembleStats, b: EnsembleStats, quantity_a=None, quantity_b=None,
                      n_boot: int = 1000, seed: int = 0) -> dict:
    """Percentile-wise ``b - a`` differences and the median ordering.

    The bootstrap resamples both ensembles independently (seeded) and
    reports a 95% interval for the difference of medians.
    """
    if a.trials != b.trials:
        raise ValueError(f"ensembles differ in trial count: {a.trials} vs {b.trials}")
    xa = a._get(quantity_a)
    xb = b._get(quantity_b)
    pa = a.percentiles(quantity_a)
    pb = b.percentiles(quantity_b)
    ma, mb = pa[50], pb[50]
    rng = make_rng(seed)
    n = a.trials
    ia = rng.integers(0, n, size=(n_boot, n))
    ib = rng.integers(0, n, size=(n_boot, n))
    diff = (np.percentile(xb[ib], 50, axis=1, method="inverted_cdf")
            - np.percentile(xa[ia], 50, axis=1, method="inverted_cdf"))
    lo, hi = np.percentile(diff, [2.5, 97.5])
    return {
        "percentile_delta": {q: pb[q] - pa[q] for q in PERCENTILES},
        "median_a": ma,
        "median_b": mb,
        "median_order": "a<b" if ma < mb else ("a>b" if ma > mb else "equal"),
        "bootstrap_median_delta_95": (float(lo), float(hi)),
        "bootstrap_fraction_b_greater": float(np.mean(diff > 0)),
    }


# -- grid oracle ----------------------------------------------------------

class GridTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GridOracleSpec:
    """Brute-force search grid.

    Each unit vector is built from hyperspherical magnitude angles on
    ``magnitude_levels`` points of ``[0, pi/2]`` and relative phases on
    ``phase_levels`` points of ``[0, 2 pi)``; vectors equal up to a global
    phase are counted once.  ``objective`` is ``"siso"`` (``|h|``) or
    ``"det"`` (``|sum_p det X_p|`` for a split partition).
    """

    phase_levels: int = 16
    magnitude_levels: int = 5
    objective: str = "siso"
    partition: BlockPartition | None = None
    max_evaluations: int = 10 ** 8
    max_length: int = 3

    def __post_init__(self):
        if self.phase_levels < 1 or self.magnitude_levels < 2:
            raise ValueError("need phase_levels >= 1 and magnitude_levels >= 2")
        if self.objective not in ("siso", "det"):
            raise ValueError(f"objective must be 'siso' or 'det', got {self.objective!r}")


@dataclass
class GridOracleResult:
    best: float
    vectors: dict
    evaluations: int


def _grid_size_bound(length, spec):
    if length == 1:
        return 1
    return spec.magnitude_levels ** (length - 1) * spec.phase_levels ** (length - 1)


def unit_vector_grid(length: int, phase_levels: int = 16, magnitude_levels: int = 5) -> np.ndarray:
    """Rows are the distinct (up to global phase) grid unit vectors of ``length``."""
    if length == 1:
        return np.ones((1, 1), dtype=complex)
    thetas = np.linspace(0, np.pi / 2, magnitude_levels)
    phases = np.exp(2j * np.pi * np.arange(phase_levels) / phase_levels)
    rows = []
    for ang in np.array(np.meshgrid(*[thetas] * (length - 1), indexing="ij")).reshape(length - 1, -1).T:
        mag = np.empty(length)
        s = 1.0
        for i, a in enumerate(ang):
            mag[i] = s * np.cos(a)
            s *= np.sin(a)
        mag[-1] = s
        for ph in np.array(np.meshgrid(*[phases] * (length - 1), indexing="ij")).reshape(length - 1, -1).T:
            rows.append(canonical_phase(mag * np.concatenate(([1.0], ph))))
    rows = np.array(rows)
    key = np.round(np.concatenate([rows.real, rows.imag], axis=1), 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    return rows[np.sort(idx)]


def _oracle_dims(T, spec):
    if spec.objective == "siso":
        return {"u": T.n, "v": T.m}
    part = spec.partition
    if part is None:
        raise ValueError("the det objective needs a partition")
    part.check(T.n, T.m)
    return {"u1": part.n1, "u2": part.n2, "v1": part.m1, "v2": part.m2}


def grid_evaluations(channel, spec: GridOracleSpec) -> int:
    """Upper bound on the number of objective evaluations for ``channel``."""
    dims = _oracle_dims(as_tensor(channel), spec)
    return math.prod(_grid_size_bound(L, spec) for L in dims.values())


def grid_oracle(channel, spec: GridOracleSpec = GridOracleSpec()) -> GridOracleResult:
    """Exhaustive search of the objective over the grid; a lower bound on the optimum."""
    T = as_tensor(channel)
    dims = _oracle_dims(T, spec)
    too_long = {k: L for k, L in dims.items() if L > spec.max_length}
    if too_long:
        raise GridTooLarge(f"grid oracle handles vectors of length <= {spec.max_length}, got {too_long}")
    bound = grid_evaluations(T, spec)
    if bound > spec.max_evaluations:
        raise GridTooLarge(f"grid needs up to {bound:.3g} evaluations, above the guard of "
                           f"{spec.max_evaluations:.3g}")
    grids = {k: unit_vector_grid(L, spec.phase_levels, spec.magnitude_levels) for k, L in dims.items()}
    Hs = T.slices
    if spec.objective == "siso":
        Ug, Vg = grids["u"], grids["v"]
        W = Hs @ Vg.T                                    # (P, N, Gv)
        best, arg = -1.0, None
        for start in range(0, Ug.shape[0], 256):
            h = np.einsum("in,pnj->pij", Ug[start:start + 256].conj(), W)
            vals = np.sqrt(np.sum(np.abs(h) ** 2, axis=0))
            k = int(np.argmax(vals))
            if vals.flat[k] > best:
                i, j = np.unravel_index(k, vals.shape)
                best, arg = float(vals.flat[k]), (start + i, j)
        i, j = arg
        return GridOracleResult(best, {"u": Ug[i], "v": Vg[j]}, Ug.shape[0] * Vg.shape[0])

    H11, H12, H21, H22 = spec.partition.blocks(Hs)
    U1, U2, V1, V2 = grids["u1"], grids["u2"], grids["v1"], grids["v2"]
    a11 = H11 @ V1.T
    a21 = H21 @ V1.T
    a12 = H12 @ V2.T
    a22 = H22 @ V2.T
    best, arg = -1.0, None
    for g in range(V1.shape[0]):
        A = (np.einsum("pa,pbh->hab", a11[:, :, g], a22)
             - np.einsum("pah,pb->hab", a12, a21[:, :, g]))   # (G2, N1, N2)
        vals = np.abs(np.einsum("ia,hab,jb->hij", U1.conj(), A, U2.conj()))
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            h, i, j = np.unravel_index(k, vals.shape)
            best, arg = float(vals.flat[k]), (g, h, i, j)
    g, h, i, j = arg
    vectors = {"u1": U1[i], "u2": U2[j], "v1": V1[g], "v2": V2[h]}
    return GridOracleResult(best, vectors, U1.shape[0] * U2.shape[0] * V1.shape[0] * V2.shape[0])


def det_objective(channel, part: BlockPartition, u1, u2, v1, v2) -> float:
    """``|u1^H A u2*|`` with ``A`` built for the given receive beams."""
    T = as_tensor(channel)
    A = build_det_matrix(part.blocks(T.slices), v1, v2)
    return float(abs(np.conj(u1) @ A @ np.conj(u2)))


# -- figure presets -------------------------------------------------------

def figure3_specs(trials: int, seed: int, iterations: int = 8) -> dict:
    """SISO curves at 16 x 16 (x 2): matrix/power, tensor/ALS, tensor/HOPM."""
    cfg = SolverConfig(max_iterations=iterations)
    make = partial(ExperimentSpec, n=16, m=16, trials=trials, seed=seed, config=cfg)
    return {
        "matrix-power": make(channel="matrix", p=1, algorithm="power"),
        "tensor-als": make(channel="tensor", p=2, algorithm="als"),
        "tensor-hopm": make(channel="tensor", p=2, algorithm="hopm"),
    }


def figure6_specs(trials: int, seed: int, iterations: int = 8) -> dict:
    """2-stream curves with equal phase-shifter count: shared 16 x 16, split 32 x 32."""
    cfg = SolverConfig(max_iterations=iterations)
    make = partial(ExperimentSpec, k=2, trials=trials, seed=seed, config=cfg)
    return {
        "matrix-shared": make(channel="matrix", n=16, m=16, p=1, algorithm="als-shared"),
        "matrix-split": make(channel="matrix", n=32, m=32, p=1, algorithm="als-split"),
        "tensor-shared": make(channel="tensor", n=16, m=16, p=2, algorithm="als-shared"),
        "tensor-split": make(channel="tensor", n=32, m=32, p=2, algorithm="als-split"),
    }
