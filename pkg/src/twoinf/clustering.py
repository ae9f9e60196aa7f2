"""k-means engine, misclustering metrics and spectral clustering.

Labels are 0-based integers internally; files use 1-based labels
(see :mod:`twoinf.matrix_io`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bounds import symmetrize_estimate
from .errors import DegenerateSeparationError, DimensionError, DomainError, InfeasibleError
from .linalg import as_matrix, leading_eigs, procrustes_rotation, svd_r, two_inf_norm

Mode = Literal["direct", "symmetrized", "symmetrized-hollow"]
MODES = ("direct", "symmetrized", "symmetrized-hollow")


@dataclass(frozen=True)
class ClusterModel:
    """Ground-truth partition of n items into r clusters.

    ``means`` optionally stores the r x m cluster means (Theta) or the
    block connectivity matrix.
    """

    z: np.ndarray
    r: int
    means: Optional[np.ndarray] = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=int)
        if z.ndim != 1 or z.size == 0:
            raise DimensionError("z must be a nonempty label vector")
        if z.min() < 0 or z.max() >= self.r:
            raise DomainError(f"labels must lie in [0, {self.r})")
        if np.unique(z).size != self.r:
            raise DomainError("every cluster must be nonempty")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.r)

    @property
    def n_max(self) -> int:
        return int(self.sizes.max())

    @property
    def n_min(self) -> int:
        return int(self.sizes.min())

    @property
    def balance(self) -> float:
        """Smallest c0 with n_max <= c0^2 n_min."""
        return math.sqrt(self.n_max / self.n_min)

    @property
    def Z(self) -> np.ndarray:
        """n x r membership matrix."""
        Z = np.zeros((self.n, self.r))
        Z[np.arange(self.n), self.z] = 1.0
        return Z

    def normalized_membership(self) -> np.ndarray:
        """Z D_z^{-1/2}, an orthonormal n x r matrix."""
        return self.Z / np.sqrt(self.sizes)


@dataclass(frozen=True)
class ClusterResult:
    zhat: np.ndarray
    centers: np.ndarray
    objective: float
    restarts_used: int
    mode: Optional[str] = None
    embedding: Optional[np.ndarray] = field(default=None, repr=False)


# ---------------------------------------------------------------- k-means

def kmeans_objective(rows: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    diff = rows - centers[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _sq_dists(rows, centers, row_sq):
    d = row_sq[:, None] - 2.0 * rows @ centers.T + np.einsum("ij,ij->i", centers, centers)[None, :]
    return np.maximum(d, 0.0)


def _plusplus(rows, r, rng, row_sq):
    n = rows.shape[0]
    idx = [int(rng.integers(n))]
    d2 = _sq_dists(rows, rows[idx], row_sq)[:, 0]
    for _ in range(1, r):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            choice = int(rng.integers(n))
        else:
            choice = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            choice = min(choice, n - 1)
        idx.append(choice)
        d2 = np.minimum(d2, _sq_dists(rows, rows[[choice]], row_sq)[:, 0])
    return rows[idx].copy()


def _means(rows, labels, r):
    counts = np.bincount(labels, minlength=r)
    sums = np.zeros((r, rows.shape[1]))
    np.add.at(sums, labels, rows)
    return sums / np.maximum(counts, 1)[:, None]


def _lloyd(rows, centers, max_iters, row_sq):
    n, r = rows.shape[0], centers.shape[0]
    labels = None
    prev_obj = math.inf
    for _ in range(max_iters):
        new = np.argmin(_sq_dists(rows, centers, row_sq), axis=1)
        counts = np.bincount(new, minlength=r)
        for j in np.flatnonzero(counts == 0):
            # move the point farthest from its center into the empty cluster
            diff = rows - centers[new]
            far = np.einsum("ij,ij->i", diff, diff)
            far[counts[new] <= 1] = -1.0
            i = int(np.argmax(far))
            counts[new[i]] -= 1
            new[i] = j
            counts[j] = 1
            centers[j] = rows[i]
        centers = _means(rows, new, r)
        obj = kmeans_objective(rows, new, centers)
        assert obj <= prev_obj * (1 + 1e-12) + 1e-12, "k-means objective increased"
        prev_obj = obj
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return labels if labels is not None else new, centers, prev_obj


def _restart_sequence(seed, i: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (i,))
    return np.random.SeedSequence(seed, spawn_key=(i,))


def approx_kmeans(
    rows,
    r: int,
    restarts: int = 20,
    max_iters: int = 300,
    seed=0,
) -> ClusterResult:
    """Best of ``restarts`` runs of k-means++ seeding followed by Lloyd iterations.

    Restart ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))`` (the key
    is appended when ``seed`` is itself a ``SeedSequence``), so the result
    does not depend on the order restarts are executed in.
    """
    rows = as_matrix(rows, "rows")
    n = rows.shape[0]
    if r < 1 or r > n:
        raise InfeasibleError(f"cannot form r={r} clusters from n={n} rows")
    if restarts < 1 or max_iters < 1:
        raise DomainError("restarts and max_iters must be positive")
    row_sq = np.einsum("ij,ij->i", rows, rows)
    best = None
    for i in range(restarts):
        rng = np.random.default_rng(_restart_sequence(seed, i))
        centers = _plusplus(rows, r, rng, row_sq)
        labels, centers, obj = _lloyd(rows, centers, max_iters, row_sq)
        if best is None or obj < best[2]:
            best = (labels, centers, obj)
    labels, centers, _ = best
    return ClusterResult(labels, centers, kmeans_objective(rows, labels, centers), restarts)


def miscluster_count(zhat, z, r: int) -> int:
    """Mismatches between label vectors, minimised over relabelings of ``zhat``."""
    zhat = np.asarray(zhat, dtype=int)
    z = np.asarray(z, dtype=int)
    if zhat.shape != z.shape or zhat.ndim != 1:
        raise DimensionError("label vectors must be 1-D with equal length")
    for v in (zhat, z):
        if v.size and (v.min() < 0 or v.max() >= r):
            raise DomainError(f"labels must lie in [0, {r})")
    C = np.zeros((r, r), dtype=np.int64)
    np.add.at(C, (zhat, z), 1)
    ri, ci = linear_sum_assignment(C, maximize=True)
    return int(z.size - C[ri, ci].sum())


def best_relabeling(zhat, z, r: int) -> np.ndarray:
    """Permutation ``phi`` (array) maximising agreement of ``phi[z]`` with ``zhat``."""
    C = np.zeros((r, r), dtype=np.int64)
    np.add.at(C, (np.asarray(z, dtype=int), np.asarray(zhat, dtype=int)), 1)
    ri, ci = linear_sum_assignment(C, maximize=True)
    phi = np.empty(r, dtype=int)
    phi[ri] = ci
    return phi


# ----------------------------------------------------- spectral pipeline

def spectral_embedding(Xhat, r: int, mode: Mode = "direct") -> np.ndarray:
    """Estimated left basis used by the clustering step."""
    if mode == "direct":
        return svd_r(Xhat, r).basis
    if mode in ("symmetrized", "symmetrized-hollow"):
        Y = symmetrize_estimate(Xhat, int(mode == "symmetrized-hollow"))
        return leading_eigs(Y, r).basis
    raise ValueError(f"unknown mode {mode!r}")


def spectral_cluster(
    Xhat,
    r: int,
    mode: Mode = "direct",
    restarts: int = 20,
    max_iters: int = 300,
    seed=0,
    embedding: Optional[np.ndarray] = None,
) -> ClusterResult:
    """Cluster the rows of the leading basis of ``Xhat`` (or of its Gram matrix)."""
    Xhat = as_matrix(Xhat, "Xhat")
    if not r < min(Xhat.shape):
        raise DimensionError(f"need r < min{Xhat.shape}")
    Uhat = spectral_embedding(Xhat, r, mode) if embedding is None else embedding
    res = approx_kmeans(Uhat, r, restarts, max_iters, seed)
    return ClusterResult(res.zhat, res.centers, res.objective, res.restarts_used, mode, Uhat)


# ---------------------------------------------------------------- audits

@dataclass(frozen=True)
class KMeansAudit:
    """Check of the approximate k-means mismatch bound on one instance.

    separation : smallest distance between distinct true (aligned) rows.
    delta : smallest slack for which the bound's hypothesis holds
        (``nan`` when no slack below s/2 works).
    objective : sum of squared distances of Uhat rows to their true rows.
    mismatch_bound : ``objective / (s/2 - delta)**2`` when feasible.
    mismatch_set : indices whose row lies at least ``s/2 - delta`` away
        from its true row; these contain every misclustered index.
    permutation : relabeling of true labels matching ``zhat`` (if given).
    realized : misclustering count of ``zhat`` (if given).
    """

    separation: float
    delta: float
    objective: float
    feasible: bool
    mismatch_bound: float
    mismatch_set: np.ndarray
    permutation: Optional[np.ndarray] = None
    realized: Optional[int] = None
    route: str = "direct"

    @property
    def conclusion_holds(self) -> Optional[bool]:
        if not self.feasible:
            return None
        ok = self.mismatch_set.size <= self.mismatch_bound + 1e-9
        if self.realized is not None:
            ok = ok and self.realized <= self.mismatch_bound + 1e-9
        return bool(ok)


def kmeans_mismatch_audit(
    Uhat,
    model: ClusterModel,
    U,
    a: float,
    zhat=None,
    route: Literal["direct", "sin_theta"] = "direct",
) -> KMeansAudit:
    """Audit of a (1+a)-approximate k-means solution against the truth.

    ``U`` is the true basis whose rows are constant on clusters.  It is
    aligned to ``Uhat`` with the Procrustes rotation before use.  With
    ``route="sin_theta"`` the objective is replaced by the looser
    ``4 r sin^2`` surrogate.
    """
    Uhat = as_matrix(Uhat, "Uhat")
    U = as_matrix(U, "U")
    if Uhat.shape != U.shape or U.shape[0] != model.n:
        raise DimensionError("Uhat, U and model must agree in size")
    if a <= 0:
        raise DomainError("a must be positive")
    r = model.r
    UW = U @ procrustes_rotation(U, Uhat)
    centers = np.vstack([UW[model.z == k].mean(axis=0) for k in range(r)])
    gaps = [np.linalg.norm(centers[j] - centers[k]) for j in range(r) for k in range(j + 1, r)]
    s = min(gaps) if gaps else math.inf
    if s <= 1e-12:
        raise DegenerateSeparationError("two clusters share the same true row")
    res = Uhat - centers[model.z]
    dist = np.sqrt(np.einsum("ij,ij->i", res, res))
    if route == "direct":
        L = float(np.sum(dist**2))
    elif route == "sin_theta":
        sv = np.linalg.svd(U.T @ Uhat, compute_uv=False)
        L = 4.0 * r * float(max(0.0, 1.0 - sv.min() ** 2))
    else:
        raise ValueError(f"unknown route {route!r}")
    delta = math.sqrt(L * r * (1.0 + math.sqrt(1.0 + a)) ** 2 / model.n_min)
    feasible = delta < s / 2.0
    if feasible:
        radius = s / 2.0 - delta
        bound = L / radius**2 if radius > 0 else math.inf
        mset = np.flatnonzero(dist >= radius)
    else:
        delta_out, bound, mset = math.nan, math.inf, np.arange(0)
    phi = realized = None
    if zhat is not None:
        phi = best_relabeling(zhat, model.z, r)
        realized = miscluster_count(zhat, model.z, r)
    return KMeansAudit(
        separation=float(s),
        delta=delta if feasible else delta_out,
        objective=L,
        feasible=feasible,
        mismatch_bound=bound,
        mismatch_set=mset,
        permutation=phi,
        realized=realized,
        route=route,
    )


@dataclass(frozen=True)
class Certificate:
    fired: bool
    margin: float
    threshold: float
    error: float
    separation_ok: bool


def perfect_clustering_certificate(Uhat, U, model: ClusterModel) -> Certificate:
    """Sufficient condition for perfect recovery by approximate k-means.

    Fires when ``||Uhat - U W_U||_{2,inf} <= eps_U / (2 sqrt(2) c0)`` with
    ``c0 = sqrt(n_max / n_min)``.  Also reports whether the true rows are
    separated by at least ``sqrt(2 / n_max)``, which the condition assumes.
    """
    Uhat = as_matrix(Uhat, "Uhat")
    U = as_matrix(U, "U")
    W = procrustes_rotation(U, Uhat)
    err = two_inf_norm(Uhat - U @ W)
    c0 = model.balance
    thr = two_inf_norm(U) / (2.0 * math.sqrt(2.0) * c0)
    centers = np.vstack([U[model.z == k].mean(axis=0) for k in range(model.r)])
    sep = min(
        (np.linalg.norm(centers[j] - centers[k]) for j in range(model.r) for k in range(j + 1, model.r)),
        default=math.inf,
    )
    sep_ok = sep >= math.sqrt(2.0 / model.n_max) - 1e-12
    return Certificate(bool(err <= thr), float(thr - err), float(thr), float(err), bool(sep_ok))
