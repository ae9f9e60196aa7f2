"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s``.  The Monte Carlo
criteria use master seed 0; thresholds were fixed before running them.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_orthogonal_batch
from instances import sym_instance
from kmeans_oracle import brute_miscluster, exhaustive_kmeans
from twoinf.bench.calibrate import run_calibration
from twoinf.bench.config import resolve
from twoinf.bench.experiment import run_experiment
from twoinf.bench.stats import mean_difference_interval, paired_sign_interval, wilson_interval
from twoinf.bounds import davis_kahan_bound, rank_r_sym_bound, sym_error_profile, sym_two_inf_bound
from twoinf.clustering import approx_kmeans, miscluster_count
from twoinf.linalg import (
    aligned_two_inf_error,
    hollow,
    leading_eigs,
    one_inf_norm,
    procrustes_align,
    random_orthonormal,
    sin_theta,
    spectral_norm,
    two_inf_norm,
)

MASTER_SEED = 0
TOL = 1e-9


def report(k, ok, detail, elapsed, limit):
    in_time = limit is None or elapsed < limit
    passed = bool(ok and in_time)
    budget = f" (limit {limit:.0f}s)" if limit is not None else ""
    line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} - {detail} [{elapsed:.1f}s{budget}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert in_time, line


def perturbed_pair(rng, n, r):
    U = random_orthonormal(n, r, rng)
    noise = 10 ** rng.uniform(-3, 0.5)
    Uh, _ = np.linalg.qr(U + noise * rng.standard_normal((n, r)))
    return U, Uh


def min_spectral_over(U, Uh, O):
    # ||Uh - U O||^2 = lambda_max(2I - M^T O - O^T M) with M = U^T Uh, since both bases are orthonormal
    M = U.T @ Uh
    r = M.shape[0]
    G = 2 * np.eye(r) - np.swapaxes(O, 1, 2) @ M - np.swapaxes(M.T @ O, 1, 2)
    top = np.linalg.eigvalsh(G)[:, -1]
    return math.sqrt(max(0.0, float(top.min())))


def test_criterion_1_metric_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    competitors = {r: random_orthogonal_batch(10_000, r, rng) for r in (1, 3, 5)}
    worst = 0.0
    failures = 0
    for i in range(1000):
        r = (1, 3, 5)[i % 3]
        U, Uh = perturbed_pair(rng, 50, r)
        M = U.T @ Uh
        s = np.linalg.svd(M, compute_uv=False)
        st = sin_theta(U, Uh)
        W = procrustes_align(U, Uh)
        aligned = np.linalg.norm(Uh - U @ W, 2)
        d_sp = min(min_spectral_over(U, Uh, competitors[r]), aligned)
        gaps = [
            abs(st - math.sqrt(max(0.0, 1 - s.min() ** 2))),
            abs(sin_theta(U, Uh, "frobenius") - math.sqrt(max(0.0, r - np.sum(s**2)))),
            abs(np.linalg.norm(Uh - U @ M, 2) - st),
            abs(np.linalg.norm(np.eye(r) - M.T @ M, 2) - st**2),
        ]
        slacks = [
            st - d_sp,
            d_sp - math.sqrt(2) * st,
            aligned - 2 * st,
            np.linalg.norm(M - W, 2) - st**2,
            aligned - math.sqrt(2) * st,
        ]
        worst = max(worst, max(gaps), max(slacks))
        failures += sum(g > TOL for g in gaps) + sum(v > TOL for v in slacks)
    report(1, failures == 0, f"1000 pairs, {failures} failed checks, worst excess {worst:.2e}",
           time.perf_counter() - t0, 30)


def test_criterion_2_procrustes_optimality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    failures = 0
    for i in range(200):
        r = 1 + i % 5
        U, Uh = perturbed_pair(rng, 50, r)
        best = np.linalg.norm(Uh - U @ procrustes_align(U, Uh))
        O = random_orthogonal_batch(10_000, r, rng)
        others = np.linalg.norm(Uh[None] - U[None] @ O, axis=(1, 2))
        failures += int(best > others.min() + TOL)
    report(2, failures == 0, f"200 pairs x 10^4 competitors, {failures} failures",
           time.perf_counter() - t0, 60)


def test_criterion_3_davis_kahan():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    violations, worst = 0, 0.0
    for i in range(1000):
        n, r = int(rng.integers(6, 40)), int(rng.integers(1, 5))
        Y, Yhat, _ = sym_instance(rng, n, r, tail_frac=0.95, max_delta0=2.0)
        p = sym_error_profile(Y, Yhat, r)
        bound = davis_kahan_bound(p).value
        st = sin_theta(leading_eigs(Y, r).basis, leading_eigs(Yhat, r).basis)
        violations += int(st > bound)
        worst = max(worst, st / bound)
    report(3, violations == 0, f"1000 instances, {violations} violations, max ratio {worst:.3f}",
           time.perf_counter() - t0, 60)


def test_criterion_4_explicit_two_inf_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    counts = {"thm2": [0, 0, 0.0], "rankR": [0, 0, 0.0]}  # evaluated, violations, max ratio
    for bound_id, rank_r in (("thm2", False), ("rankR", True)):
        c = counts[bound_id]
        while c[0] < 1000:
            n, r = int(rng.integers(8, 40)), int(rng.integers(1, 5))
            Y, Yhat, _ = sym_instance(rng, n, r, rank_r=rank_r)
            p = sym_error_profile(Y, Yhat, r)
            if not (p.delta0 <= 0.25 and p.cLam >= 0.5):
                continue
            rep = sym_two_inf_bound(p) if bound_id == "thm2" else rank_r_sym_bound(p)
            err = aligned_two_inf_error(leading_eigs(Y, r).basis, leading_eigs(Yhat, r).basis)
            c[0] += 1
            c[1] += int(err > rep.value)
            c[2] = max(c[2], err / rep.value if rep.value > 0 else 0.0)
    ok = counts["thm2"][1] == 0 and counts["rankR"][1] == 0
    detail = ", ".join(f"{b}: {v[1]}/{v[0]} violations (max ratio {v[2]:.3f})" for b, v in counts.items())
    report(4, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_5_hollowing():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    violations = 0
    for i in range(1000):
        n = int(rng.integers(1, 30))
        kind = i % 3
        if kind == 0:
            A = rng.standard_normal((n, n))
        elif kind == 1:
            A = rng.standard_normal((n, n))
            A = A + A.T + np.diag(rng.uniform(0, 50, n))
        else:
            A = (rng.random((n, n)) < 0.3).astype(float) * rng.standard_cauchy((n, n))
        H = hollow(A)
        violations += int(spectral_norm(H) > 2 * spectral_norm(A) * (1 + 1e-12))
        violations += int(one_inf_norm(H) > one_inf_norm(A))
        violations += int(two_inf_norm(H) > two_inf_norm(A))
    report(5, violations == 0, f"1000 matrices, {violations} violations", time.perf_counter() - t0, 10)


CALIBRATION_SCENARIOS = {
    # modes follow the hollowing rule: sigma^2 = d^2/m is a tie (no hollowing) for the
    # Gaussian point, while the block-model slice has sigma^2 >> d^2/m
    "gaussian": {"scenario": "gaussian", "modes": ["direct", "symmetrized"]},
    "sbm-slice": {"scenario": "sbm-slice", "modes": ["direct", "symmetrized-hollow"]},
}


def test_criterion_6_calibrated_bounds():
    t0 = time.perf_counter()
    parts, ok = [], True
    pooled = [0, 0]
    for name, over in CALIBRATION_SCENARIOS.items():
        cfg = resolve({**over, "master_seed": MASTER_SEED,
                       "bounds": ["thm3", "thm4", "thm5", "thm6"],
                       "calibration": {"enabled": True, "calib_seeds": [0, 100],
                                       "valid_seeds": [100, 300], "quantile": 0.99}})
        outcomes, _ = run_calibration(cfg)
        assert len(outcomes) == 4
        for o in outcomes:
            good = o.validated_on == 200 and o.violation_fraction <= 0.01
            ok &= good
            pooled[0] += o.violations
            pooled[1] += o.validated_on
            parts.append(f"{name}/{o.bound_id}/{o.mode} C={o.constant:.3g} "
                         f"{o.violations}/{o.validated_on}{'' if good else ' (!)'}")
    parts.append(f"pooled {pooled[0]}/{pooled[1]}")
    report(6, ok, "; ".join(parts), time.perf_counter() - t0, 600)


def test_criterion_7_kmeans_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    worst = 0.0
    for i in range(100):
        n, r = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        r = min(r, n)
        rows = rng.standard_normal((n, int(rng.integers(1, 4))))
        if i % 4 == 0:
            rows[: n // 2] += 5.0  # some instances with clear structure
        opt = exhaustive_kmeans(rows, r)
        got = approx_kmeans(rows, r, seed=i).objective
        worst = max(worst, got / opt if opt > 1e-12 else (1.0 if got <= 1e-12 else math.inf))
    mismatches = 0
    for _ in range(500):
        r = int(rng.integers(1, 6))
        n = int(rng.integers(1, 30))
        z, zh = rng.integers(0, r, n), rng.integers(0, r, n)
        mismatches += int(miscluster_count(zh, z, r) != brute_miscluster(zh, z, r))
    ok = worst <= 1.5 and mismatches == 0
    report(7, ok, f"worst objective ratio {worst:.4f} (<= 1.5), {mismatches}/500 count mismatches",
           time.perf_counter() - t0, 120)


def test_criterion_8_gaussian_perfect_clustering():
    t0 = time.perf_counter()
    cfg = resolve({"scenario": "gaussian", "master_seed": MASTER_SEED, "replicates": 100,
                   "gaussian": {"n": 400, "m": 400, "r": 3, "theta": 1.0, "sigma": 1.0},
                   "modes": ["direct"], "bounds": []})
    _, summary, _ = run_experiment(cfg)
    s = summary["direct"]
    ok = s["failed"] == 0 and s["perfect"] >= 95 and s["certificate_unsound"] == 0
    report(8, ok, f"perfect {s['perfect']}/100 (need >= 95), certificate fired "
                  f"{s['certificate_fired']}, unsound {s['certificate_unsound']}",
           time.perf_counter() - t0, 300)


def test_criterion_9_symmetrization_benefit():
    t0 = time.perf_counter()
    cfg = resolve({"scenario": "sbm-slice", "master_seed": MASTER_SEED, "replicates": 100,
                   "sbm_slice": {"n": 4096, "m": 64, "r": 2},
                   "modes": ["direct", "symmetrized-hollow"], "bounds": []})
    _, summary, rows = run_experiment(cfg)
    rate = {(r["replicate"], r["mode"]): r["miscluster_rate"] for r in rows if r["status"] == "ok"}
    diffs = [rate[(k, "direct")] - rate[(k, "symmetrized-hollow")]
             for k in range(100) if (k, "direct") in rate and (k, "symmetrized-hollow") in rate]
    pos, neg, (lo, hi) = paired_sign_interval(diffs)
    mean, mlo, mhi = mean_difference_interval(diffs)
    direct = summary["direct"]["mean_miscluster_rate"]
    hol = summary["symmetrized-hollow"]["mean_miscluster_rate"]
    ok = len(diffs) == 100 and hol < direct and lo > 0.5
    report(9, ok, f"mean rate direct {direct:.4f} vs hollow {hol:.4f}; hollow better in {pos}, "
                  f"worse in {neg} pairs, Wilson95 share [{lo:.3f}, {hi:.3f}] excludes 1/2; "
                  f"mean diff {mean:.4f} [{mlo:.4f}, {mhi:.4f}]",
           time.perf_counter() - t0, 600)


def test_criterion_10_multilayer():
    t0 = time.perf_counter()
    cfg = resolve({"scenario": "multilayer", "master_seed": MASTER_SEED, "replicates": 100,
                   "multilayer": {"n": 500, "L": 60, "M": 3, "K": [2, 2, 2], "rho": 0.2},
                   "modes": ["direct"], "bounds": []})
    _, summary, _ = run_experiment(cfg)
    s = summary["direct"]
    lo, hi = wilson_interval(s["perfect"], s["clustered"])
    ok = s["failed"] == 0 and s["perfect"] >= 95
    report(10, ok, f"perfect {s['perfect']}/100 (need >= 95), Wilson95 [{lo:.3f}, {hi:.3f}]",
           time.perf_counter() - t0, 600)


@pytest.mark.parametrize("scenario", ["gaussian", "sbm-slice", "multilayer"])
def test_criterion_11_determinism(tmp_path, scenario):
    t0 = time.perf_counter()
    params = {
        "gaussian": {"gaussian": {"n": 120, "m": 80, "r": 3}, "replicates": 8,
                     "modes": ["direct", "symmetrized", "symmetrized-hollow"],
                     "bounds": ["dk", "thm2", "thm3", "thm4", "thm5", "thm6"]},
        "sbm-slice": {"sbm_slice": {"n": 1024, "m": 32}, "replicates": 8,
                      "bounds": ["thm3", "thm4", "thm5", "thm6"]},
        "multilayer": {"multilayer": {"n": 120, "L": 12, "M": 3, "K": [2, 2, 2]}, "replicates": 4,
                       "modes": ["direct"], "bounds": ["thm4"]},
    }[scenario]
    cfg = resolve({"scenario": scenario, "master_seed": MASTER_SEED, **params})
    blobs = []
    for threads in (1, 8, 1, 8):
        path = tmp_path / f"out{len(blobs)}.csv"
        run_experiment(cfg, threads=threads, out_path=path)
        blobs.append(path.read_bytes())
    ok = all(b == blobs[0] for b in blobs)
    report(11, ok, f"{scenario}: 2 runs x (1, 8) threads, "
                   f"{'identical' if ok else 'different'} CSV bytes ({len(blobs[0])} B)",
           time.perf_counter() - t0, None)
