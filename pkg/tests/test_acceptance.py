"""Acceptance suite: one test (and one PASS/FAIL line) per criterion.

Every tolerance is pinned below.  Ensembles are shared between criteria
through module-scoped fixtures so each is computed once.
"""
import time

import numpy as np
import pytest

from mmwbeam.channel import BlockPartition, canonical_phase, random_gaussian_matrix, random_gaussian_tensor, svd_oracle
from mmwbeam.cli import main
from mmwbeam.harness import (ExperimentSpec, GridOracleSpec, compare_ensembles, det_objective,
                             figure3_specs, figure6_specs, grid_oracle, run_ensemble)
from mmwbeam.mimo import als_split_tensor, build_det_matrix, greedy_pairing
from mmwbeam.siso import SolverConfig, als_tensor, power_method
from oracles import explicit_xi, global_maxmin, leximin_oracle

pytestmark = pytest.mark.slow

SEED = 1

# criterion 1
ANCHOR = 2 * np.sqrt(16)
ANCHOR_REL = 0.05
ANCHOR_TRIALS = 10_000
ANCHOR_SECONDS = 60
# criterion 2
ORACLE_TRIALS = 1000
GAP_REL = 0.01
SVD_REL = 1e-8
SVD_CFG = SolverConfig(max_iterations=5000, tolerance=1e-14)
# criterion 3
AGREE_TRIALS = 1000
AGREE_ITERS = 100
AGREE_REL = 1e-6
# criteria 4 and 5
ORDER_TRIALS = 10_000
SPLIT_TRIALS = 5000
TENSOR_MEDIAN_REL = 0.10
# criterion 6
DET_TRIALS = 1000
DET_ABS = 1e-12
RANK_TOL = 1e-10
# criterion 7
MONOTONE_REL = 1e-12
# criterion 8
GRID_TRIALS = 100
GRID_SLACK = 0.02
GRID_REQUIRED = 99
# criterion 9
PAIRING_TRIALS = 1000
# criterion 10
DETERMINISM_TRIALS = 300

ELAPSED = {}


@pytest.fixture(scope="module")
def fig3():
    specs = figure3_specs(ORDER_TRIALS, SEED)
    out = {}
    for name, spec in specs.items():
        t0 = time.perf_counter()
        out[name] = run_ensemble(spec)
        ELAPSED[name] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def fig6():
    specs = figure6_specs(SPLIT_TRIALS, SEED)
    return {name: run_ensemble(spec) for name, spec in specs.items()}


@pytest.fixture(scope="module")
def agreement():
    cfg = SolverConfig(max_iterations=AGREE_ITERS, tolerance=1e-300)   # run every iteration
    make = lambda alg: ExperimentSpec(channel="tensor", n=16, m=16, p=2, algorithm=alg,
                                      trials=AGREE_TRIALS, seed=SEED, config=cfg)
    return run_ensemble(make("als")), run_ensemble(make("hopm"))


@pytest.fixture(scope="module")
def svd_runs():
    checked, worst, violations = 0, 0.0, 0
    seed = 0
    while checked < ORACLE_TRIALS:
        H = random_gaussian_matrix(8, 8, seed)
        seed += 1
        s = svd_oracle(H)[0]
        if s[0] - s[1] <= GAP_REL * s[0]:
            continue
        res = power_method(H, SVD_CFG)
        t = np.asarray(res.objective_trace)
        violations += int(np.sum(np.diff(t) < -MONOTONE_REL * t[1:]))
        worst = max(worst, abs(res.sigma - s[0]) / s[0])
        checked += 1
    return checked, worst, violations


def test_c1_random_matrix_anchor(report, fig3):
    stats = fig3["matrix-power"]
    med = stats.median()
    elapsed = ELAPSED["matrix-power"]
    ok = abs(med - ANCHOR) <= ANCHOR_REL * ANCHOR and elapsed < ANCHOR_SECONDS
    report("C1 random-matrix anchor", ok,
           f"median sigma1 = {med:.4f} over {ANCHOR_TRIALS} trials, required within "
           f"+-{ANCHOR_REL:.0%} of {ANCHOR:g} = [{ANCHOR * (1 - ANCHOR_REL):.2f}, {ANCHOR * (1 + ANCHOR_REL):.2f}]; "
           f"runtime {elapsed:.1f} s (target < {ANCHOR_SECONDS} s)")
    assert ok


def test_c2_svd_oracle(report, svd_runs):
    checked, worst, _ = svd_runs
    ok = worst <= SVD_REL
    report("C2 SVD-oracle equivalence", ok,
           f"{checked} gapped 8x8 matrices, worst relative error {worst:.2e} (tol {SVD_REL:g})")
    assert ok


def test_c3a_als_hopm_agree_at_100_iterations(report, agreement):
    als, hop = agreement
    rel = np.abs(als.values["sigma"] - hop.values["sigma"]) / als.values["sigma"]
    bad = int(np.sum(rel > AGREE_REL))
    ok = bad == 0
    report("C3a ALS/HOPM agreement", ok,
           f"{bad}/{AGREE_TRIALS} channels differ by more than {AGREE_REL:g} relative after "
           f"{AGREE_ITERS} iterations (median diff {np.median(rel):.1e}, max {rel.max():.2e})")
    assert ok


def test_c3b_hopm_mean_not_above_als(report, fig3):
    a = fig3["tensor-als"].mean()
    h = fig3["tensor-hopm"].mean()
    ok = h <= a
    report("C3b HOPM mean <= ALS mean at 8 iterations", ok, f"HOPM {h:.4f} vs ALS {a:.4f}")
    assert ok


def test_c4_tensor_beats_matrix(report, fig3):
    rep = compare_ensembles(fig3["matrix-power"], fig3["tensor-als"])
    ok = rep["median_b"] >= rep["median_a"]
    lo, hi = rep["bootstrap_median_delta_95"]
    report("C4 tensor vs matrix SISO", ok,
           f"tensor median {rep['median_b']:.4f} >= matrix median {rep['median_a']:.4f} "
           f"(bootstrap 95% delta [{lo:.3f}, {hi:.3f}])")
    assert ok


def test_c5a_split_beats_shared_matrix(report, fig6):
    rep = compare_ensembles(fig6["matrix-shared"], fig6["matrix-split"], "weaker", "weaker")
    ok = rep["median_b"] > rep["median_a"]
    report("C5a split vs shared (matrix)", ok,
           f"weaker-stream median split {rep['median_b']:.4f} > shared {rep['median_a']:.4f} "
           f"over {SPLIT_TRIALS} trials")
    assert ok


def test_c5b_tensor_shared_split_close(report, fig6):
    parts = []
    ok = True
    for q in ("stronger", "weaker"):
        a = fig6["tensor-shared"].median(q)
        b = fig6["tensor-split"].median(q)
        rel = abs(a - b) / max(a, b)
        ok &= rel <= TENSOR_MEDIAN_REL
        parts.append(f"{q} {a:.3f} vs {b:.3f} ({rel:.1%})")
    report("C5b shared vs split (tensor) within 10%", ok, "; ".join(parts))
    assert ok


def test_c6_determinant_identity(report):
    rng = np.random.default_rng(20240)
    worst, max_rank = 0.0, 0
    for _ in range(DET_TRIALS):
        n1, n2, m1, m2 = rng.integers(1, 9, size=4)
        part = BlockPartition(int(n1), int(n2), int(m1), int(m2))
        H = rng.standard_normal((part.n, part.m)) + 1j * rng.standard_normal((part.n, part.m))
        vecs = [canonical_phase(rng.standard_normal(k) + 1j * rng.standard_normal(k))
                for k in (part.n1, part.n2, part.m1, part.m2)]
        u1, u2, v1, v2 = vecs
        A = build_det_matrix(part.blocks(H), v1, v2)
        err = abs(np.conj(u1) @ A @ np.conj(u2) - np.linalg.det(explicit_xi(H, part, u1, u2, v1, v2)))
        worst = max(worst, err / np.linalg.norm(H) ** 2)
        s = np.linalg.svd(A, compute_uv=False)
        max_rank = max(max_rank, int(np.sum(s > RANK_TOL * s[0])))
    ok = worst <= DET_ABS and max_rank <= 2
    report("C6 determinant identity", ok,
           f"{DET_TRIALS} instances, worst error / |H|^2 = {worst:.2e} (tol {DET_ABS:g}), max rank {max_rank}")
    assert ok


def test_c7_monotonicity(report, fig3, fig6, agreement, svd_runs):
    counts = {f"fig3/{k}": v.violations for k, v in fig3.items()}
    counts.update({f"fig6/{k}": v.violations for k, v in fig6.items()})
    counts["als-100"] = agreement[0].violations
    counts["hopm-100"] = agreement[1].violations
    counts["svd-oracle power"] = svd_runs[2]
    total = sum(counts.values())
    ok = total == 0
    report("C7 monotonicity", ok,
           f"{total} decreases beyond {MONOTONE_REL:g} relative across {len(counts)} solver ensembles")
    assert ok


def test_c8a_grid_oracle_siso(report):
    hits = 0
    for seed in range(GRID_TRIALS):
        T = random_gaussian_tensor(2, 2, 2, seed)
        hits += als_tensor(T).sigma >= (1 - GRID_SLACK) * grid_oracle(T).best
    ok = hits >= GRID_REQUIRED
    report("C8a grid oracle (ALS, 2x2x2)", ok, f"{hits}/{GRID_TRIALS} within {GRID_SLACK:.0%} (need {GRID_REQUIRED})")
    assert ok


def test_c8b_grid_oracle_det(report):
    part = BlockPartition(2, 2, 2, 2)
    spec = GridOracleSpec(objective="det", partition=part)
    hits = 0
    for seed in range(GRID_TRIALS):
        H = random_gaussian_tensor(4, 4, 1, seed)
        res = als_split_tensor(H, part)
        b = res.beams
        assert abs(det_objective(H, part, b.u1, b.u2, b.v1, b.v2) - res.objective) < 1e-9 * res.objective
        hits += res.objective >= (1 - GRID_SLACK) * grid_oracle(H, spec).best
    ok = hits >= GRID_REQUIRED
    report("C8b grid oracle (split |det|, 2+2)", ok,
           f"{hits}/{GRID_TRIALS} within {GRID_SLACK:.0%} (need {GRID_REQUIRED})")
    assert ok


def test_c9_greedy_pairing(report):
    rng = np.random.default_rng(99)
    stated = mismatches = maxmin_bad = 0
    for i in range(PAIRING_TRIALS):
        P = int(rng.integers(1, 5))
        sigma = -np.sort(-rng.rayleigh(size=(P, 2)), axis=1)
        powers, _ = greedy_pairing(sigma)
        if not np.allclose(np.sort(powers), np.sort(leximin_oracle(sigma)), rtol=1e-12, atol=0):
            mismatches += 1
        if P == 2:
            expected = {sigma[0, 0] ** 2 + sigma[1, 1] ** 2, sigma[0, 1] ** 2 + sigma[1, 0] ** 2}
            stated += set(powers.tolist()) != expected
            maxmin_bad += abs(powers.min() - global_maxmin(sigma)) > 1e-12 * powers.sum()
    ok = stated == 0 and mismatches == 0 and maxmin_bad == 0
    report("C9 greedy pairing", ok,
           f"{PAIRING_TRIALS} K=2 cases (P<=4): {mismatches} oracle mismatches, "
           f"{stated} P=2 deviations from the stated pairing, {maxmin_bad} below the global max-min")
    assert ok


def test_c10_determinism(report, tmp_path, capsys):
    same = True
    for name, spec in figure6_specs(DETERMINISM_TRIALS, SEED).items():
        serial = run_ensemble(spec, threads=1)
        serial.write(tmp_path / f"{name}-1.csv")
        run_ensemble(spec, threads=4).write(tmp_path / f"{name}-4.csv")
        for ext in ("csv", "json"):
            same &= (tmp_path / f"{name}-1.{ext}").read_bytes() == (tmp_path / f"{name}-4.{ext}").read_bytes()
    dirs = []
    for threads in (1, 3):
        out = tmp_path / f"cli-{threads}"
        assert main(["reproduce", "fig3", "--trials", str(DETERMINISM_TRIALS), "--seed", "5",
                     "--out", str(out), "--threads", str(threads)]) == 0
        dirs.append(out)
    capsys.readouterr()
    files = sorted(p.name for p in dirs[0].iterdir())
    same &= files == sorted(p.name for p in dirs[1].iterdir()) and len(files) == 7
    for f in files:
        same &= (dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes()
    report("C10 determinism", same,
           f"fig6 ensembles and CLI fig3 outputs ({len(files)} files) byte-identical for 1 vs 3-4 threads")
    assert same
