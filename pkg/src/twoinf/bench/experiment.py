"""Monte Carlo replicates: generate, cluster, evaluate bounds, write CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import bounds as B
from ..clustering import (
    ClusterModel,
    miscluster_count,
    perfect_clustering_certificate,
    spectral_cluster,
    spectral_embedding,
)
from ..errors import ApplicabilityError, GapError, TwoInfError
from ..generators import (
    GaussianScenario,
    MultilayerModel,
    SbmModel,
    gen_gaussian_mixture,
    gen_multilayer,
    gen_sbm_slice,
    multilayer_truth,
    replicate_seed,
)
from ..linalg import SpectralPair, aligned_two_inf_error, sin_theta, svd_r
from ..matrix_io import read_labels, read_matrix
from .config import BOUND_IDS, ExperimentConfig
from .stats import wilson_interval

# Term labels are part of the CSV schema; keep them in sync with bounds.py.
BOUND_TERMS: Dict[str, Sequence[str]] = {
    "dk": ("ratio",),
    "thm2": ("spectral", "rowwise", "eu"),
    "rankR": ("oneinf",),
    "thm3": ("eps0_epsU", "eps0_eps1", "epsEU", "tail"),
    "thm4": ("uv", "v2inf", "rowwise"),
    "thm5": ("xixiu", "xixu", "uu", "gap", "hollow"),
    "thm6": ("xixiu", "xixu", "uu", "hollow", "nohollow", "u_weighted"),
}
# thm4 concerns the singular vectors of Xhat, the rest the symmetrized estimate.
DIRECT_BOUNDS = {"thm4"}

BASE_COLUMNS = (
    "replicate", "seed", "mode", "status", "message", "n", "m", "r", "hollow_flag",
    "empirical_2inf_error", "sin_theta_spectral", "miscluster_count", "miscluster_rate",
    "certificate_fired", "certificate_margin",
)

# Rough per-replicate working-set budget used to cap concurrency.
MEMORY_BUDGET = 2 * 1024**3


def csv_columns(bound_ids: Sequence[str]) -> List[str]:
    cols = list(BASE_COLUMNS)
    for b in BOUND_IDS:
        if b not in bound_ids:
            continue
        cols += [f"bound.{b}.value", f"bound.{b}.preconditions_met", f"bound.{b}.ratio"]
        cols += [f"bound.{b}.term.{t}" for t in BOUND_TERMS[b]]
    return cols


# ------------------------------------------------------------- instances

@dataclass
class Truth:
    """Observation plus exact rank-r factorization of its signal."""

    X: np.ndarray
    Xhat: np.ndarray
    r: int
    basis: SpectralPair
    model: Optional[ClusterModel]
    knobs: B.AssumptionKnobs
    meta: dict = field(default_factory=dict)


def _gaussian_params(p) -> GaussianScenario:
    return GaussianScenario(
        n=p["n"], m=p["m"], r=p["r"], theta=float(p["theta"]), sigma=p["sigma"],
        gamma=p["gamma"], nu=p["nu"], c0=float(p["c0"]), c_sigma=float(p["c_sigma"]),
        balanced_exact=bool(p["balanced_exact"]),
    ).resolved()


def _sbm_params(p) -> SbmModel:
    return SbmModel(
        n=p["n"], r=p["r"], m=p["m"], rho=p["rho"], b=float(p["b"]), c0=float(p["c0"]),
        c_sigma=float(p["c_sigma"]), balanced_exact=bool(p["balanced_exact"]),
    )


def _multilayer_params(p) -> MultilayerModel:
    return MultilayerModel(
        n=p["n"], L=p["L"], M=p["M"], K=tuple(p["K"]), rho=float(p["rho"]),
        c_lambda=float(p["c_lambda"]),
    )


def _knobs(cfg: ExperimentConfig, default: B.AssumptionKnobs) -> B.AssumptionKnobs:
    over = cfg["knobs"] or {}
    base = {k: getattr(default, k) for k in ("eps1", "eps2", "t_eps1", "t_eps2")}
    base.update({k: float(v) for k, v in over.items()})
    return B.AssumptionKnobs(**base)


def estimate_memory(cfg: ExperimentConfig) -> int:
    sc, p = cfg.scenario, cfg.params
    if sc == "gaussian":
        g = _gaussian_params(p)
        return 8 * 8 * g.n * g.m
    if sc == "sbm-slice":
        return 8 * 4 * p["n"] ** 2
    if sc == "multilayer":
        return 8 * (4 * p["L"] * p["n"] ** 2 + 3 * p["n"] ** 2)
    return 0


def make_truth(cfg: ExperimentConfig, seed: int) -> Truth:
    """Instance for replicate ``seed`` drawn from the stream (master_seed, seed)."""
    sc, p = cfg.scenario, cfg.params
    ss = replicate_seed(cfg["master_seed"], seed)
    if sc == "gaussian":
        g = _gaussian_params(p)
        inst = gen_gaussian_mixture(g, ss)
        rates = B.gaussian_rate_profile(g.n, g.m, g.r, max(g.sigma, 1e-300), g.theta)
        default = B.AssumptionKnobs(eps1=rates.t_eps1, eps2=rates.t_eps2,
                                    t_eps1=rates.t_eps1, t_eps2=rates.t_eps2)
        sp = SpectralPair(inst.U, inst.D, 0.0, inst.V, "singular")
        return Truth(inst.X, inst.Xhat, g.r, sp, inst.model, _knobs(cfg, default),
                     {"n": g.n, "m": g.m})
    if sc == "sbm-slice":
        mdl = _sbm_params(p)
        inst = gen_sbm_slice(mdl, ss)
        sp = SpectralPair(inst.U, inst.D, 0.0, inst.V, "singular")
        v = mdl.sparsity * float(mdl.base_matrix().max())
        default = B.bernstein_knobs(v, 1.0, mdl.n, float(inst.D[-1]))
        default = B.AssumptionKnobs(eps1=default.t_eps1, eps2=default.t_eps2,
                                    t_eps1=default.t_eps1, t_eps2=default.t_eps2)
        return Truth(inst.X, inst.Xhat, mdl.r, sp, inst.model, _knobs(cfg, default),
                     {"n": inst.X.shape[0], "m": inst.X.shape[1]})
    if sc == "multilayer":
        mdl = _multilayer_params(p)
        inst = gen_multilayer(mdl, ss, keep_layers=False)
        U, D, V = multilayer_truth(inst)
        sp = SpectralPair(U, D, 0.0, V, "singular")
        return Truth(inst.X, inst.Xhat, mdl.M, sp, inst.model, _knobs(cfg, B.AssumptionKnobs()),
                     {"n": inst.X.shape[0], "m": inst.X.shape[1], "eigen_ordering": "magnitude"})
    if sc == "matrix-files":
        X = read_matrix(p["truth"])
        Xhat = read_matrix(p["observed"])
        r = int(p["r"])
        model = None
        if p.get("labels"):
            z = read_labels(p["labels"])
            model = ClusterModel(z, int(z.max()) + 1)
        return Truth(X, Xhat, r, svd_r(X, r), model, _knobs(cfg, B.AssumptionKnobs()),
                     {"n": X.shape[0], "m": X.shape[1]})
    raise ValueError(f"unknown scenario {sc!r}")


# ------------------------------------------------------------ evaluation

def evaluate_bounds(truth: Truth, mode: str, bound_ids, constants=None) -> Dict[str, B.BoundReport]:
    """BoundReports relevant to ``mode``; inapplicable bounds are omitted."""
    constants = constants or {}
    sp, r = truth.basis, truth.r
    out: Dict[str, B.BoundReport] = {}
    wanted = [b for b in bound_ids if (b in DIRECT_BOUNDS) == (mode == "direct")]
    if not wanted:
        return out

    def knobs_for(b):
        return B.AssumptionKnobs(truth.knobs.eps1, truth.knobs.eps2, truth.knobs.t_eps1,
                                 truth.knobs.t_eps2, float(constants.get(b, 1.0)))

    nsp = None
    if mode == "direct" or {"thm5", "thm6"} & set(wanted):
        nsp = B.nonsym_error_profile(truth.X, truth.Xhat, r, basis=sp)
    if mode == "direct":
        if "thm4" in wanted:
            out["thm4"] = B.nonsym_two_inf_bound(nsp, knobs_for("thm4"))
        return out
    h = int(mode == "symmetrized-hollow")
    sym_ids = {"dk", "thm2", "rankR", "thm3"} & set(wanted)
    if sym_ids:
        Y = truth.X @ truth.X.T
        Yhat = B.symmetrize_estimate(truth.Xhat, h)
        ysp = SpectralPair(sp.basis, sp.spectrum**2, sp.next_value**2, None, "algebraic")
        prof = B.sym_error_profile(Y, Yhat, r, basis=ysp)
        for b, fn in (("dk", B.davis_kahan_bound), ("thm2", B.sym_two_inf_bound),
                      ("rankR", B.rank_r_sym_bound)):
            if b in sym_ids:
                try:
                    out[b] = fn(prof)
                except (GapError, ApplicabilityError):
                    pass
        if "thm3" in sym_ids:
            out["thm3"] = B.sym_refined_bound(prof, knobs_for("thm3"), r)
    if {"thm5", "thm6"} & set(wanted):
        sprof = B.symmetrized_profile(truth.X, truth.Xhat, r, h, basis=sp)
        if "thm5" in wanted:
            out["thm5"] = B.symmetrized_two_inf_bound(sprof, nsp, knobs_for("thm5"))
        if "thm6" in wanted:
            try:
                out["thm6"] = B.symmetrized_refined_bound(sprof, nsp, knobs_for("thm6"), r)
            except ApplicabilityError:
                pass
    return out


@dataclass
class ReplicateResult:
    replicate: int
    seed: int
    rows: List[dict]
    seconds: float = 0.0


def _fail_row(base: dict, exc: BaseException) -> dict:
    row = dict(base)
    row["status"] = "failed"
    row["message"] = f"{type(exc).__name__}: {exc}"
    return row


def run_replicate(cfg: ExperimentConfig, index: int, seed: int, cluster: bool = True) -> ReplicateResult:
    t0 = time.perf_counter()
    modes = cfg["modes"]
    km = cfg["kmeans"]
    bounds_on = cfg["bounds"]
    rows: List[dict] = []
    try:
        truth = make_truth(cfg, seed)
    except Exception as exc:  # recorded, the sweep goes on
        for mode in modes:
            rows.append(_fail_row({"replicate": index, "seed": seed, "mode": mode}, exc))
        return ReplicateResult(index, seed, rows, time.perf_counter() - t0)
    kseed = np.random.SeedSequence(int(cfg["master_seed"]), spawn_key=(int(seed), 1))
    for mode in modes:
        base = {
            "replicate": index, "seed": seed, "mode": mode,
            "n": truth.X.shape[0], "m": truth.X.shape[1], "r": truth.r,
            "hollow_flag": int(mode == "symmetrized-hollow") if mode != "direct" else "",
        }
        try:
            rows.append(_evaluate_mode(truth, mode, base, km, kseed, bounds_on, cfg["constants"], cluster))
        except (TwoInfError, np.linalg.LinAlgError, ValueError, AssertionError) as exc:
            rows.append(_fail_row(base, exc))
    return ReplicateResult(index, seed, rows, time.perf_counter() - t0)


def _evaluate_mode(truth: Truth, mode, base, km, kseed, bound_ids, constants, cluster=True) -> dict:
    row = dict(base)
    U = truth.basis.basis
    Uhat = spectral_embedding(truth.Xhat, truth.r, mode)
    err = aligned_two_inf_error(U, Uhat)
    row["empirical_2inf_error"] = err
    st = sin_theta(U, Uhat, "spectral")
    row["sin_theta_spectral"] = st
    if cluster and truth.model is not None:
        res = spectral_cluster(truth.Xhat, truth.r, mode, km["restarts"], km["max_iters"], kseed,
                               embedding=Uhat)
        mc = miscluster_count(res.zhat, truth.model.z, truth.model.r)
        row["miscluster_count"] = mc
        row["miscluster_rate"] = mc / truth.model.n
        cert = perfect_clustering_certificate(Uhat, U, truth.model)
        row["certificate_fired"] = int(cert.fired)
        row["certificate_margin"] = cert.margin
    for b, rep in evaluate_bounds(truth, mode, bound_ids, constants).items():
        row.update(rep.as_record())
        emp = st if b == "dk" else err
        row[f"bound.{b}.ratio"] = emp / rep.value if rep.value > 0 else (0.0 if emp == 0 else math.inf)
    row["status"] = "ok"
    row["message"] = ""
    return row


# -------------------------------------------------------------- runners

def effective_workers(cfg: ExperimentConfig, threads: int) -> int:
    per = max(1, estimate_memory(cfg))
    return max(1, min(int(threads), MEMORY_BUDGET // per if per else threads))


def run_replicates(
    cfg: ExperimentConfig, seeds: Sequence[int], threads: int = 1, cluster: bool = True
) -> List[ReplicateResult]:
    """Run replicates for ``seeds``; output order is independent of scheduling."""
    jobs = list(enumerate(seeds))
    workers = effective_workers(cfg, threads)
    if workers <= 1:
        results = [run_replicate(cfg, i, s, cluster) for i, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda js: run_replicate(cfg, *js, cluster), jobs))
    return sorted(results, key=lambda rr: rr.replicate)


def sorted_rows(results: Sequence[ReplicateResult], modes: Sequence[str]) -> List[dict]:
    order = {m: i for i, m in enumerate(modes)}
    rows = [row for rr in results for row in rr.rows]
    return sorted(rows, key=lambda row: (row["replicate"], order[row["mode"]]))


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def summarize(rows: Sequence[dict], modes: Sequence[str], bound_ids: Sequence[str]) -> dict:
    out = {}
    for mode in modes:
        mine = [r for r in rows if r["mode"] == mode]
        ok = [r for r in mine if r["status"] == "ok"]
        errs = [r["empirical_2inf_error"] for r in ok]
        clustered = [r for r in ok if r.get("miscluster_count") not in (None, "")]
        perfect = sum(1 for r in clustered if r["miscluster_count"] == 0)
        fired = [r for r in clustered if r.get("certificate_fired") == 1]
        s = {
            "replicates": len(mine),
            "failed": len(mine) - len(ok),
            "mean_error": float(np.mean(errs)) if errs else None,
            "max_error": float(np.max(errs)) if errs else None,
            "perfect": perfect,
            "clustered": len(clustered),
            "perfect_frequency": perfect / len(clustered) if clustered else None,
            "perfect_wilson95": list(wilson_interval(perfect, len(clustered))) if clustered else None,
            "mean_miscluster_rate": float(np.mean([r["miscluster_rate"] for r in clustered])) if clustered else None,
            "certificate_fired": len(fired),
            "certificate_unsound": sum(1 for r in fired if r["miscluster_count"] > 0),
            "bounds": {},
        }
        for b in bound_ids:
            key = f"bound.{b}.value"
            ev = [r for r in ok if r.get(key) not in (None, "")]
            if not ev:
                continue
            met = [r for r in ev if r[f"bound.{b}.preconditions_met"] == 1]
            ratios = [r[f"bound.{b}.ratio"] for r in met]
            s["bounds"][b] = {
                "evaluated": len(ev),
                "preconditions_met": len(met),
                "violations": sum(1 for x in ratios if x > 1.0),
                "max_ratio": float(max(ratios)) if ratios else None,
            }
        out[mode] = s
    return out


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None, out_path=None):
    """Run all replicates, write the CSV (if ``out_path``) and return (csv_text, summary).

    A sidecar ``<out>.timings.json`` holds wall-clock times; they are kept
    out of the CSV so that it stays byte-reproducible.
    """
    threads = cfg["threads"] if threads is None else threads
    results = run_replicates(cfg, cfg.seeds, threads)
    rows = sorted_rows(results, cfg["modes"])
    text = rows_to_csv(rows, csv_columns(cfg["bounds"]))
    summary = summarize(rows, cfg["modes"], cfg["bounds"])
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(f"{out_path}.timings.json", "w", encoding="utf-8") as fh:
            json.dump({str(rr.seed): rr.seconds for rr in results}, fh, indent=1)
    return text, summary, rows
