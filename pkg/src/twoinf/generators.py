"""Seeded random instances with known ground truth.

Three scenarios:

* Gaussian mixture ``Xhat = Z Theta + Xi`` with iid N(0, sigma^2) noise;
* a sub-sampled stochastic block model, observed through the adjacency
  slice between a random node set S and its complement;
* a multilayer network whose layers share one of M block structures, with
  layers represented by their estimated eigenprojections.

``seed`` arguments accept an int, a ``numpy.random.SeedSequence`` or a
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .clustering import ClusterModel
from .errors import GenerationError
from .linalg import leading_eigs, svd_r

MAX_RETRIES = 100


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent stream for replicate ``index`` of a run with ``master_seed``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def _balanced_sizes(n: int, r: int, c0: float, rng, exact: bool) -> np.ndarray:
    if exact:
        sizes = np.full(r, n // r)
        sizes[: n % r] += 1
        return sizes
    for _ in range(MAX_RETRIES):
        sizes = rng.multinomial(n, np.full(r, 1.0 / r))
        if sizes.min() > 0 and sizes.max() <= c0**2 * sizes.min():
            return sizes
    raise GenerationError(f"could not draw cluster sizes with balance c0={c0}")


def _labels_from_sizes(sizes, rng) -> np.ndarray:
    z = np.repeat(np.arange(len(sizes)), sizes)
    return rng.permutation(z)


def _cond(A: np.ndarray) -> float:
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


# --------------------------------------------------------------- Gaussian

@dataclass(frozen=True)
class GaussianScenario:
    """Gaussian mixture parameters.

    Either give ``n`` and ``sigma`` directly, or give ``gamma``/``nu`` to
    derive ``n = round(m**gamma)`` and ``sigma = theta * m**nu``.
    """

    n: Optional[int] = 400
    m: int = 400
    r: int = 3
    theta: float = 1.0
    sigma: Optional[float] = 1.0
    gamma: Optional[float] = None
    nu: Optional[float] = None
    c0: float = 1.5
    c_sigma: float = 0.5
    balanced_exact: bool = True

    def resolved(self) -> "GaussianScenario":
        n = int(round(self.m**self.gamma)) if self.gamma is not None else self.n
        sigma = self.theta * self.m**self.nu if self.nu is not None else self.sigma
        if n is None or sigma is None:
            raise GenerationError("need n (or gamma) and sigma (or nu)")
        return GaussianScenario(n, self.m, self.r, self.theta, sigma, None, None,
                                self.c0, self.c_sigma, self.balanced_exact)


@dataclass(frozen=True)
class Instance:
    """Generated observation with its ground truth.

    ``U``/``D``/``V`` is the exact rank-r factorization of ``X``.
    """

    X: np.ndarray
    Xhat: np.ndarray
    model: ClusterModel
    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    next_value: float = 0.0
    extras: dict = field(default_factory=dict, repr=False)


def _draw_theta(r, m, theta, c_sigma, rng) -> np.ndarray:
    scale = math.sqrt(m) * theta
    for _ in range(MAX_RETRIES):
        T = rng.standard_normal((r, m))
        T *= scale / np.linalg.norm(T, axis=1, keepdims=True)
        if _cond(T) >= c_sigma:
            return T
        # blend toward the nearest row-orthogonal matrix with the same scale
        Ur, _, Vt = np.linalg.svd(T, full_matrices=False)
        O = scale * (Ur @ Vt)
        for w in np.linspace(0.1, 1.0, 10):
            B = (1 - w) * T + w * O
            B *= scale / np.linalg.norm(B, axis=1, keepdims=True)
            if _cond(B) >= c_sigma:
                return B
    raise GenerationError(f"could not draw Theta with sigma_r/sigma_1 >= {c_sigma}")


def _factor_mixture(model: ClusterModel, T: np.ndarray):
    """U, D, V of X = Z T through the normalized membership."""
    sizes = model.sizes
    Uz = model.normalized_membership()
    Ut, d, Vt = np.linalg.svd(np.sqrt(sizes)[:, None] * T, full_matrices=False)
    return Uz @ Ut, d, Vt.T


def gen_gaussian_mixture(s: GaussianScenario, seed) -> Instance:
    s = s.resolved()
    rng = as_generator(seed)
    if not 1 <= s.r < min(s.n, s.m):
        raise GenerationError(f"need 1 <= r < min(n, m); got r={s.r}, n={s.n}, m={s.m}")
    sizes = _balanced_sizes(s.n, s.r, s.c0, rng, s.balanced_exact)
    z = _labels_from_sizes(sizes, rng)
    T = _draw_theta(s.r, s.m, s.theta, s.c_sigma, rng)
    model = ClusterModel(z, s.r, T)
    X = T[z]
    Xhat = X + s.sigma * rng.standard_normal((s.n, s.m)) if s.sigma > 0 else X.copy()
    U, D, V = _factor_mixture(model, T)
    return Instance(X, Xhat, model, U, D, V, 0.0, {"sigma": s.sigma, "theta": s.theta})


# ------------------------------------------------------------------ SBM

@dataclass(frozen=True)
class SbmModel:
    """Block model ``P = rho Z Q0 Z^T`` observed through an m-node slice.

    ``Q0 = (1 - b) I + b 11^T`` unless ``Q0`` is given explicitly.
    """

    n: int = 4096
    r: int = 2
    m: int = 64
    rho: Optional[float] = None  # default n^{-1/2}
    b: float = 0.1
    Q0: Optional[np.ndarray] = None
    c0: float = 1.5
    c_sigma: float = 0.1
    balanced_exact: bool = True

    @property
    def sparsity(self) -> float:
        return self.rho if self.rho is not None else self.n ** -0.5

    def base_matrix(self) -> np.ndarray:
        if self.Q0 is not None:
            return np.asarray(self.Q0, dtype=float)
        return (1.0 - self.b) * np.eye(self.r) + self.b * np.ones((self.r, self.r))

    def validate(self) -> None:
        Q = self.base_matrix()
        if Q.shape != (self.r, self.r) or not np.allclose(Q, Q.T):
            raise GenerationError("Q0 must be symmetric r x r")
        if Q.min() < 0 or not math.isclose(Q.max(), 1.0):
            raise GenerationError("Q0 entries must lie in [0, 1] with maximum 1")
        if _cond(Q) < self.c_sigma:
            raise GenerationError(f"Q0 conditioning below c_sigma={self.c_sigma}")
        if not 0 < self.sparsity <= 1:
            raise GenerationError("rho must lie in (0, 1]")
        if not 0 < self.m < self.n:
            raise GenerationError("need 0 < m < n")


def sample_symmetric_bernoulli(P: np.ndarray, rng) -> np.ndarray:
    """Symmetric 0/1 matrix with zero diagonal and independent upper triangle."""
    n = P.shape[0]
    hit = np.triu(rng.random((n, n)) < P, 1)
    hit |= hit.T
    return hit.astype(float)


def gen_sbm_slice(model: SbmModel, seed) -> Instance:
    """Adjacency slice ``A[S, S^c]`` for a uniformly drawn node set S of size m.

    ``extras`` holds the full adjacency ``A``, the index sets ``S`` and
    ``Sc``, and the full-graph labels.
    """
    model.validate()
    rng = as_generator(seed)
    n, r, m = model.n, model.r, model.m
    sizes = _balanced_sizes(n, r, model.c0, rng, model.balanced_exact)
    z = _labels_from_sizes(sizes, rng)
    Q0 = model.base_matrix()
    rho = model.sparsity
    for _ in range(MAX_RETRIES):
        S = np.sort(rng.choice(n, size=m, replace=False))
        mask = np.ones(n, dtype=bool)
        mask[S] = False
        Sc = np.flatnonzero(mask)
        if np.unique(z[S]).size == r and np.unique(z[Sc]).size == r:
            break
    else:
        raise GenerationError("sampled node sets kept missing a community")
    A = sample_symmetric_bernoulli(rho * Q0[z][:, z], rng)
    zs, zc = z[S], z[Sc]
    X = rho * Q0[zs][:, zc]
    Xhat = A[np.ix_(S, Sc)]
    sub = ClusterModel(zs, r, Q0)
    comp = ClusterModel(zc, r, Q0)
    # X = U_S (D_S^{1/2} rho Q0 D_Sc^{1/2}) U_Sc^T
    core = np.sqrt(sub.sizes)[:, None] * (rho * Q0) * np.sqrt(comp.sizes)[None, :]
    Uq, d, Vqt = np.linalg.svd(core)
    U = sub.normalized_membership() @ Uq
    V = comp.normalized_membership() @ Vqt.T
    return Instance(X, Xhat, sub, U, d, V, 0.0, {"A": A, "S": S, "Sc": Sc, "z_full": z, "rho": rho})


# ----------------------------------------------------------- multilayer

@dataclass(frozen=True)
class MultilayerModel:
    """L layers on n nodes, each following one of M block structures.

    Group ``g`` partitions the nodes into ``K[g]`` communities with basis
    ``U_g = Z_g D_g^{-1/2}``; layer l in group g has
    ``P_l = U_g Q_l U_g^T`` with ``Q_l = D_g^{1/2} B_l D_g^{1/2}`` and
    ``B_l = rho * B0_l`` a random assortative block matrix.
    """

    n: int = 500
    L: int = 60
    M: int = 3
    K: Sequence[int] = (2, 2, 2)
    rho: float = 0.2
    c_lambda: float = 0.15
    within: tuple = (0.5, 1.0)
    between: tuple = (0.0, 0.25)

    def validate(self) -> None:
        if len(self.K) != self.M:
            raise GenerationError("K must list one rank per group")
        if not 0 < self.rho <= 1:
            raise GenerationError("rho must lie in (0, 1]")
        if self.L < self.M:
            raise GenerationError("need at least one layer per group")
        if max(self.within) > 1 or min(self.between) < 0:
            raise GenerationError("block probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class MultilayerInstance:
    layers: List[np.ndarray]
    Xhat: np.ndarray
    X: np.ndarray
    model: ClusterModel
    group_bases: List[np.ndarray]
    group_labels: List[np.ndarray]
    loadings: List[np.ndarray]

    @property
    def ranks(self) -> List[int]:
        return [self.group_bases[g].shape[1] for g in self.model.z]


def _block_matrix(K, model: MultilayerModel, rng, sizes) -> np.ndarray:
    for _ in range(MAX_RETRIES):
        B = rng.uniform(*model.between, size=(K, K))
        B = np.triu(B, 1)
        B = B + B.T + np.diag(rng.uniform(*model.within, size=K))
        Q = np.sqrt(sizes)[:, None] * B * np.sqrt(sizes)[None, :]
        ev = np.abs(np.linalg.eigvalsh(Q))
        if ev.min() / ev.max() >= model.c_lambda:
            return model.rho * B
    raise GenerationError(f"could not draw a layer loading with conditioning >= {model.c_lambda}")


def projector_rows(bases: Sequence[np.ndarray]) -> np.ndarray:
    """Stack ``vec(U U^T)`` of each basis as the rows of one matrix."""
    return np.vstack([(B @ B.T).ravel() for B in bases])


def gen_multilayer(
    model: MultilayerModel, seed, noiseless: bool = False, keep_layers: bool = True
) -> MultilayerInstance:
    """Draw group structures, layer loadings and adjacency matrices.

    With ``noiseless=True`` each layer is its probability matrix, so the
    embedding reproduces the truth rows.  ``keep_layers=False`` drops the
    adjacency matrices once embedded, to save memory.
    """
    model.validate()
    rng = as_generator(seed)
    n, L, M = model.n, model.L, model.M
    sizes_L = np.full(M, L // M)
    sizes_L[: L % M] += 1
    layer_z = rng.permutation(np.repeat(np.arange(M), sizes_L))
    bases, labels, counts = [], [], []
    for g in range(M):
        K = int(model.K[g])
        sz = _balanced_sizes(n, K, 1.5, rng, True)
        zg = _labels_from_sizes(sz, rng)
        cm = ClusterModel(zg, K)
        bases.append(cm.normalized_membership())
        labels.append(zg)
        counts.append(cm.sizes)
    layers, loadings, est = [], [], []
    for l in range(L):
        g = int(layer_z[l])
        B = _block_matrix(int(model.K[g]), model, rng, counts[g])
        P = B[labels[g]][:, labels[g]]
        loadings.append(B)
        A = P.copy() if noiseless else sample_symmetric_bernoulli(P, rng)
        if keep_layers:
            layers.append(A)
        est.append(leading_eigs(A, int(model.K[g]), "magnitude").basis)
    Xhat = projector_rows(est)
    X = projector_rows([bases[g] for g in layer_z])
    return MultilayerInstance(layers, Xhat, X, ClusterModel(layer_z, M), bases, labels, loadings)


def multilayer_truth(inst: MultilayerInstance):
    """Exact factorization ``X = U diag(D) V^T`` of the truth rows (rank M)."""
    T = projector_rows(inst.group_bases)
    return _factor_mixture(inst.model, T)
