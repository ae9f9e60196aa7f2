"""Error profiles and two-to-infinity perturbation bounds.

Three settings are covered:

* symmetric: ``Yhat = Y + E`` with ``Y`` symmetric, eigenvectors of ``Y``;
* rectangular: ``Xhat = X + Xi``, left singular vectors of ``X``;
* symmetrized: left singular vectors of ``X`` estimated from the eigenvectors
  of the (optionally hollowed) Gram matrix ``Xhat Xhat^T``.

Every profile stores the scaled error quantities that the bound evaluators
consume.  Quantities scaled by ``1/|lambda_r|`` live on the symmetric
profile, ``1/d_r`` on the rectangular one and ``1/d_r**2`` on the
symmetrized one.

Bounds whose constants are fully known (Davis-Kahan, the explicit symmetric
bound and its rank-r special case) report ``constant_explicit=True``.  The rest
carry an unspecified absolute constant, represented by
``AssumptionKnobs.generic_constant`` and fitted empirically downstream.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Literal, NamedTuple, Tuple

import numpy as np

from .errors import (
    ApplicabilityError,
    DegenerateSpectrumError,
    DimensionError,
    DomainError,
    GapError,
)
from .linalg import (
    as_matrix,
    check_symmetric,
    hollow,
    leading_eigs,
    one_inf_norm,
    spectral_norm,
    svd_r,
    two_inf_norm,
)

# Relative threshold under which a trailing eigen/singular value counts as zero.
ZERO_TAIL_TOL = 1e-10


# ------------------------------------------------------------------ types

@dataclass(frozen=True)
class BoundReport:
    """Value of a bound with its additive breakdown.

    ``terms`` already include the leading constant, so ``value`` equals
    their sum.
    """

    bound_id: str
    value: float
    terms: Tuple[Tuple[str, float], ...]
    constant_explicit: bool
    preconditions_met: bool
    notes: str = ""

    def term(self, label: str) -> float:
        return dict(self.terms)[label]

    def as_record(self) -> Dict[str, object]:
        """Flat key/value view with stable ``bound.<id>.*`` keys."""
        rec: Dict[str, object] = {
            f"bound.{self.bound_id}.value": self.value,
            f"bound.{self.bound_id}.preconditions_met": int(self.preconditions_met),
        }
        for label, val in self.terms:
            rec[f"bound.{self.bound_id}.term.{label}"] = val
        return rec


def _report(bound_id, terms, explicit, ok, notes="", constant=1.0) -> BoundReport:
    scaled = tuple((lab, float(constant * v)) for lab, v in terms)
    return BoundReport(
        bound_id=bound_id,
        value=float(math.fsum(v for _, v in scaled)),
        terms=scaled,
        constant_explicit=explicit,
        preconditions_met=bool(ok),
        notes=notes,
    )


@dataclass(frozen=True)
class AssumptionKnobs:
    """Distributional constants supplied by the caller, never estimated.

    eps1, eps2 : concentration constants for the symmetric leave-one-out bound.
    t_eps1, t_eps2 : their analogues for the symmetrized estimator.
    generic_constant : stand-in for the unspecified absolute constant.
    """

    eps1: float = 0.0
    eps2: float = 0.0
    t_eps1: float = 0.0
    t_eps2: float = 0.0
    generic_constant: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")


def bernstein_knobs(v: float, H: float, n: int, d_r: float, **kw) -> AssumptionKnobs:
    """Knobs for Bernoulli-type noise satisfying a (v, H) Bernstein condition."""
    if d_r <= 0:
        raise DomainError("d_r must be positive")
    logn = math.log(n)
    return AssumptionKnobs(
        t_eps1=math.sqrt(v * logn) / d_r, t_eps2=H * logn / d_r, **kw
    )


# ------------------------------------------------------ symmetric setting

@dataclass(frozen=True)
class SymErrorProfile:
    """Error quantities of ``Yhat = Y + E`` scaled by ``1/|lambda_r|``."""

    delta0: float
    delta1Inf: float
    delta2Inf: float
    deltaEU: float
    epsU: float
    lamR: float
    lamR1: float
    cLam: float
    r: int
    n: int

    @property
    def tail_ratio(self) -> float:
        """|lambda_{r+1}| / |lambda_r|."""
        return abs(self.lamR1) / abs(self.lamR)


def sym_error_profile(Y, Yhat, r: int, ordering="algebraic", basis=None) -> SymErrorProfile:
    """Profile of the symmetric perturbation ``E = Yhat - Y``.

    ``basis`` may pass a precomputed :class:`~twoinf.linalg.SpectralPair` of
    ``Y`` to avoid a second decomposition.
    """
    Y = as_matrix(Y, "Y")
    Yhat = as_matrix(Yhat, "Yhat")
    if Y.shape != Yhat.shape:
        raise DimensionError(f"shape mismatch {Y.shape} vs {Yhat.shape}")
    check_symmetric(Yhat, "Yhat")
    sp = basis if basis is not None else leading_eigs(Y, r, ordering)
    U = sp.basis
    lam_r, lam_r1 = float(sp.spectrum[-1]), float(sp.next_value)
    scale = max(abs(float(sp.spectrum[0])), 1e-300)
    if abs(lam_r) <= 1e-14 * scale or lam_r == 0.0:
        raise DegenerateSpectrumError("lambda_r(Y) is zero")
    E = Yhat - Y
    a = abs(lam_r)
    return SymErrorProfile(
        delta0=spectral_norm(E) / a,
        delta1Inf=one_inf_norm(E) / a,
        delta2Inf=two_inf_norm(E) / a,
        deltaEU=two_inf_norm(E @ U) / a,
        epsU=two_inf_norm(U),
        lamR=lam_r,
        lamR1=lam_r1,
        cLam=(lam_r - lam_r1) / a,
        r=U.shape[1],
        n=U.shape[0],
    )


def davis_kahan_bound(
    p: SymErrorProfile,
    norm_flavor: Literal["spectral", "frobenius"] = "spectral",
    err_norm: float | None = None,
) -> BoundReport:
    """``2 ||E|| / (lambda_r - lambda_{r+1})`` bound on the sin-theta distance.

    For the spectral flavor ``err_norm`` defaults to ``||E||`` recovered from
    the profile.  The Frobenius flavor needs ``||E||_F`` (or ``sqrt(r)||E||``)
    from the caller.
    """
    gap = p.lamR - p.lamR1
    if not gap > 0:
        raise GapError(f"lambda_r - lambda_(r+1) = {gap:g} is not positive")
    if err_norm is None:
        if norm_flavor != "spectral":
            raise ValueError("err_norm is required for the Frobenius flavor")
        err_norm = p.delta0 * abs(p.lamR)
    if err_norm < 0:
        raise DomainError("err_norm must be nonnegative")
    return _report(
        "dk", [("ratio", 2.0 * err_norm / gap)], True, True, notes=f"flavor={norm_flavor}"
    )


def sym_two_inf_bound(p: SymErrorProfile) -> BoundReport:
    """Explicit-constant bound on ``||Uhat - U W_U||_{2,inf}``, valid when delta0 <= 1/4."""
    c = p.cLam
    if not c > 0:
        raise GapError(f"gap constant c_lambda = {c:g} is not positive")
    d0 = p.delta0
    terms = [
        ("spectral", (4.0 / 3.0 + 2.0 / (3.0 * c) + 1.0 / c**2) * d0 * p.epsU),
        ("rowwise", (8.0 * d0 / (3.0 * c)) * (p.delta2Inf + p.tail_ratio)),
        ("eu", (4.0 / 3.0) * p.deltaEU),
    ]
    ok = d0 <= 0.25
    return _report("thm2", terms, True, ok, "" if ok else "delta0 > 1/4")


def rank_r_sym_bound(p: SymErrorProfile) -> BoundReport:
    """``7 eps_U Delta_{1,inf}`` bound for exactly rank-r ``Y``."""
    if p.tail_ratio > ZERO_TAIL_TOL:
        raise ApplicabilityError(
            f"Y is not rank r: |lambda_(r+1)|/|lambda_r| = {p.tail_ratio:g}"
        )
    if p.lamR <= 0:
        raise ApplicabilityError("rank-r bound needs lambda_r > 0 (c_lambda = 1)")
    ok = p.delta0 <= 0.25
    return _report(
        "rankR", [("oneinf", 7.0 * p.epsU * p.delta1Inf)], True, ok,
        "" if ok else "delta0 > 1/4",
    )


def sym_refined_bound(p: SymErrorProfile, k: AssumptionKnobs, r: int | None = None) -> BoundReport:
    """Leave-one-out bound ``C(e0 eU + e0 e1 sqrt(r) + eEU + tail e0)``.

    Here e0 and eEU are the profile's delta0 and deltaEU.  The vanishing
    conditions on e0, e1, e2 are checked as ``< 1`` and listed in notes.
    """
    r = p.r if r is None else r
    e0 = p.delta0
    terms = [
        ("eps0_epsU", e0 * p.epsU),
        ("eps0_eps1", e0 * k.eps1 * math.sqrt(r)),
        ("epsEU", p.deltaEU),
        ("tail", p.tail_ratio * e0),
    ]
    checks = {"eps0<1": e0 < 1, "eps1<1": k.eps1 < 1, "eps2<1": k.eps2 < 1}
    return _report("thm3", terms, False, all(checks.values()), _notes(checks), k.generic_constant)


def _notes(checks: Dict[str, bool]) -> str:
    return ";".join(f"{name}:{'ok' if v else 'fail'}" for name, v in checks.items())


# ---------------------------------------------------- rectangular setting

@dataclass(frozen=True)
class NonsymErrorProfile:
    """Error quantities of ``Xhat = X + Xi`` scaled by ``1/d_r``."""

    tDelta0: float
    tDelta1Inf: float
    tDelta2Inf: float
    tDelta1InfT: float
    tDelta2InfT: float
    tDeltaV1Inf: float
    tDeltaV2Inf: float
    tDeltaU0: float
    tDelta0V: float
    tDeltaUV0: float
    dR: float
    dR1: float
    epsU: float
    epsV: float
    r: int

    @property
    def tail_ratio(self) -> float:
        """d_{r+1} / d_r."""
        return self.dR1 / self.dR


def nonsym_error_profile(X, Xhat, r: int, basis=None) -> NonsymErrorProfile:
    X = as_matrix(X, "X")
    Xhat = as_matrix(Xhat, "Xhat")
    if X.shape != Xhat.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Xhat.shape}")
    sp = basis if basis is not None else svd_r(X, r)
    d_r = float(sp.spectrum[-1])
    if d_r <= 1e-14 * float(sp.spectrum[0]) or d_r == 0.0:
        raise DegenerateSpectrumError("d_r(X) is zero")
    U, V = sp.basis, sp.co_basis
    Xi = Xhat - X
    XiV = Xi @ V
    UtXi = U.T @ Xi
    return NonsymErrorProfile(
        tDelta0=spectral_norm(Xi) / d_r,
        tDelta1Inf=one_inf_norm(Xi) / d_r,
        tDelta2Inf=two_inf_norm(Xi) / d_r,
        tDelta1InfT=one_inf_norm(Xi.T) / d_r,
        tDelta2InfT=two_inf_norm(Xi.T) / d_r,
        tDeltaV1Inf=one_inf_norm(XiV) / d_r,
        tDeltaV2Inf=two_inf_norm(XiV) / d_r,
        tDeltaU0=spectral_norm(UtXi) / d_r,
        tDelta0V=spectral_norm(XiV) / d_r,
        tDeltaUV0=spectral_norm(UtXi @ V) / d_r,
        dR=d_r,
        dR1=float(sp.next_value),
        epsU=two_inf_norm(U),
        epsV=two_inf_norm(V),
        r=U.shape[1],
    )


def nonsym_two_inf_bound(p: NonsymErrorProfile, k: AssumptionKnobs) -> BoundReport:
    """Bound for left singular vectors of ``Xhat``, constant left generic."""
    terms = [
        ("uv", p.epsU * (p.tDeltaUV0 + p.tDelta0**2)),
        ("v2inf", p.tDeltaV2Inf),
        ("rowwise", p.tDelta0 * (p.tDelta2Inf + p.tail_ratio)),
    ]
    checks = {"tDelta0<=1/4": p.tDelta0 <= 0.25, "gap>0": p.dR > p.dR1}
    return _report("thm4", terms, False, all(checks.values()), _notes(checks), k.generic_constant)


# ---------------------------------------------------- symmetrized setting

def symmetrize_estimate(Xhat, hollow_flag: int) -> np.ndarray:
    """Gram estimate ``Xhat Xhat^T``, hollowed when ``hollow_flag`` is 1."""
    Xhat = as_matrix(Xhat, "Xhat")
    if hollow_flag not in (0, 1):
        raise DomainError("hollow_flag must be 0 or 1")
    G = Xhat @ Xhat.T
    # mirror the upper triangle so the result is exactly symmetric
    iu = np.triu_indices(G.shape[0], 1)
    G.T[iu] = G[iu]
    if hollow_flag:
        np.fill_diagonal(G, 0.0)
    return G


def hollow_decision(sigma_sq: float, d_sq: float, m: int) -> int:
    """1 when the noise variance exceeds ``d^2/m`` (strictly), else 0."""
    if not (sigma_sq > 0 and d_sq > 0 and m > 0):
        raise DomainError("sigma^2, d^2 and m must all be positive")
    return int(sigma_sq > d_sq / m)


class ErrorComponents(NamedTuple):
    """Additive split of ``Yhat - X X^T`` for the symmetrized estimator."""

    xixi: np.ndarray  # H(Xi Xi^T) or Xi Xi^T
    xix: np.ndarray  # Xi X^T
    xxi: np.ndarray  # X Xi^T
    diag: np.ndarray  # -h (diag(Y) + 2 diag(Xi X^T))

    def total(self) -> np.ndarray:
        return self.xixi + self.xix + self.xxi + self.diag


def error_components(X, Xhat, hollow_flag: int) -> ErrorComponents:
    X = as_matrix(X, "X")
    Xhat = as_matrix(Xhat, "Xhat")
    if X.shape != Xhat.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Xhat.shape}")
    Xi = Xhat - X
    XiXi = Xi @ Xi.T
    if hollow_flag:
        XiXi = hollow(XiXi)
    XiX = Xi @ X.T
    Ed = np.zeros_like(XiXi)
    if hollow_flag:
        np.fill_diagonal(Ed, -(np.einsum("ij,ij->i", X, X) + 2.0 * np.diag(XiX)))
    return ErrorComponents(XiXi, XiX, XiX.T.copy(), Ed)


@dataclass(frozen=True)
class SymmetrizedProfile:
    """Error quantities of the symmetrized estimator, scaled by ``1/d_r**2``."""

    hollowFlag: int
    tDeltaXiXi0: float
    tDeltaE0: float
    tDeltaEU0: float
    tDeltaXiXiU2Inf: float
    tDeltaXiXiU1Inf: float
    tDeltaXiX2Inf: float
    tDeltaXiX1Inf: float
    tDeltaXiXU2Inf: float
    tDeltaXiXU1Inf: float
    tDeltaE2Inf: float
    epsY: float
    tDeltaUU0: float
    epsU: float
    dR: float
    dR1: float
    r: int


def symmetrized_profile(X, Xhat, r: int, hollow_flag: int, basis=None) -> SymmetrizedProfile:
    X = as_matrix(X, "X")
    sp = basis if basis is not None else svd_r(X, r)
    d_r = float(sp.spectrum[-1])
    if d_r <= 1e-14 * float(sp.spectrum[0]) or d_r == 0.0:
        raise DegenerateSpectrumError("d_r(X) is zero")
    U = sp.basis
    comp = error_components(X, Xhat, hollow_flag)
    E = comp.total()
    s = d_r**2
    XiXiU = comp.xixi @ U
    XiXU = comp.xix @ U
    tE0 = spectral_norm(E) / s
    tEU0 = spectral_norm(E @ U) / s
    return SymmetrizedProfile(
        hollowFlag=int(hollow_flag),
        tDeltaXiXi0=spectral_norm(comp.xixi) / s,
        tDeltaE0=tE0,
        tDeltaEU0=tEU0,
        tDeltaXiXiU2Inf=two_inf_norm(XiXiU) / s,
        tDeltaXiXiU1Inf=one_inf_norm(XiXiU) / s,
        tDeltaXiX2Inf=two_inf_norm(comp.xix) / s,
        tDeltaXiX1Inf=one_inf_norm(comp.xix) / s,
        tDeltaXiXU2Inf=two_inf_norm(XiXU) / s,
        tDeltaXiXU1Inf=one_inf_norm(XiXU) / s,
        tDeltaE2Inf=two_inf_norm(comp.xixi + comp.xix) / s,
        epsY=float(np.max(np.einsum("ij,ij->i", X, X))) / s,
        tDeltaUU0=min(tE0, math.sqrt(U.shape[1]) * tEU0),
        epsU=two_inf_norm(U),
        dR=d_r,
        dR1=float(sp.next_value),
        r=U.shape[1],
    )


def symmetrized_two_inf_bound(
    p: SymmetrizedProfile, nsp: NonsymErrorProfile, k: AssumptionKnobs
) -> BoundReport:
    """Bound for eigenvectors of the symmetrized estimate, constant left generic."""
    h = p.hollowFlag
    t = p.dR1 / p.dR
    terms = [
        ("xixiu", p.tDeltaXiXiU2Inf),
        ("xixu", p.tDeltaXiXU2Inf),
        ("uu", p.tDeltaUU0 * (p.epsU + p.tDeltaE2Inf)),
        ("gap", t * (nsp.tDeltaU0 + p.tDeltaE0 * nsp.tDelta0 + t * p.tDeltaE0)),
        ("hollow", h * p.epsY * (p.epsU + p.tDeltaE0)),
    ]
    checks = {"h*epsY<=1/4": h * p.epsY <= 0.25, "tDeltaE0<=1/2": p.tDeltaE0 <= 0.5}
    return _report("thm5", terms, False, all(checks.values()), _notes(checks), k.generic_constant)


def symmetrized_refined_bound(
    p: SymmetrizedProfile, nsp: NonsymErrorProfile, k: AssumptionKnobs, r: int | None = None
) -> BoundReport:
    """Leave-one-out bound for the symmetrized estimate when X has rank r.

    The value is ``C (delta1 + eps_U * delta1U)``; terms list the five pieces
    of delta1 and the ``eps_U * delta1U`` product.
    """
    if p.dR1 > ZERO_TAIL_TOL * p.dR:
        raise ApplicabilityError(f"X is not rank r: d_(r+1)/d_r = {p.dR1 / p.dR:g}")
    r = p.r if r is None else r
    h = p.hollowFlag
    a1 = math.sqrt(r) * k.t_eps1 * (nsp.tDelta0 + 1.0)
    a2 = k.t_eps2 * (nsp.tDelta2InfT + nsp.epsV)
    delta1U = p.tDeltaUU0 + p.tDeltaE0 * (p.tDeltaE0 + k.t_eps1 * (nsp.tDelta0 + 1.0) + a2)
    terms = [
        ("xixiu", p.tDeltaXiXiU2Inf),
        ("xixu", p.tDeltaXiXU2Inf),
        ("uu", p.tDeltaUU0 * (a1 + a2)),
        ("hollow", h * p.epsY),
        ("nohollow", (1 - h) * nsp.tDelta2Inf**2),
        ("u_weighted", p.epsU * delta1U),
    ]
    checks = {
        "tDeltaE0<1": p.tDeltaE0 < 1,
        "sqrt(r)*teps1*(tDelta0+1)<1": a1 < 1,
        "teps2*(tDelta2InfT+epsV)<1": a2 < 1,
        "(1-h)*tDelta2Inf<1": (1 - h) * nsp.tDelta2Inf < 1,
    }
    return _report("thm6", terms, False, all(checks.values()), _notes(checks), k.generic_constant)


# --------------------------------------------------- auxiliary estimators

def aux_xix_two_inf_estimate(p: SymmetrizedProfile) -> float:
    """Upper estimate ``eps_U * tDeltaXiX1Inf`` of the scaled ``||Xi X^T||_{2,inf}``.

    This is a coarse, not always valid, substitute; it is never used inside
    the bound evaluators.
    """
    return p.epsU * p.tDeltaXiX1Inf


def aux_e0_estimate(p: SymmetrizedProfile, nsp: NonsymErrorProfile) -> float:
    """Unit-constant estimate of tDeltaE0 from the noise-only quantities.

    ``tDeltaXiXi0 + tDelta0V + (d_{r+1}/d_r) tDelta0 + h epsY``.  Up to an
    unknown constant only; never used inside the bound evaluators.
    """
    return p.tDeltaXiXi0 + nsp.tDelta0V + nsp.tail_ratio * nsp.tDelta0 + p.hollowFlag * p.epsY


# ------------------------------------------------------- Gaussian rates

@dataclass(frozen=True)
class GaussianRates:
    """Rate expressions for a Gaussian mixture with all constants set to 1."""

    eps0: float
    eps2Inf: float
    epsV2Inf: float
    epsY: float
    epsXiXiU2Inf: float
    epsE0: float
    epsXiXU2Inf: float
    epsE2Inf: float
    t_eps1: float
    t_eps2: float = 0.0
    warnings: Tuple[str, ...] = field(default=())

    def knobs(self, generic_constant: float = 1.0) -> AssumptionKnobs:
        return AssumptionKnobs(
            eps1=self.eps2Inf, t_eps1=self.t_eps1, t_eps2=self.t_eps2,
            generic_constant=generic_constant,
        )


def gaussian_rate_profile(n: int, m: int, r: int, sigma: float, theta: float, tau: float = 1.0) -> GaussianRates:
    """Evaluate the Gaussian-mixture rates (unit constants).

    ``tau`` is the exponent with ``m <= n**tau``; violating it (or
    ``log m`` being much larger than ``log n``) only adds a warning.
    """
    if min(n, m, r, sigma, theta, tau) <= 0:
        raise DomainError("all arguments must be positive")
    warn = []
    if m > n**tau:
        warn.append(f"m={m} exceeds n^tau={n**tau:.3g}")
    logn = math.log(n)
    if math.log(m) > 4 * max(logn, 1.0):
        warn.append("log m is large relative to log n")
    a = sigma * math.sqrt(r) / theta
    a2 = sigma**2 * r / theta**2
    mn = math.sqrt(m * n)
    return GaussianRates(
        eps0=a * (1 / math.sqrt(m) + 1 / math.sqrt(n)),
        eps2Inf=a * math.sqrt(logn) / math.sqrt(n),
        epsV2Inf=a * math.sqrt(r * logn) / mn,
        epsY=r / n,
        epsXiXiU2Inf=a2 * logn * math.sqrt(r) / (n * math.sqrt(m)),
        epsE0=a2 * logn / m + r / n,
        epsXiXU2Inf=a * logn * math.sqrt(r) / mn,
        epsE2Inf=a2 * logn / mn + a * math.sqrt(r * logn) / mn,
        t_eps1=a * math.sqrt(logn) / mn,
        t_eps2=0.0,
        warnings=tuple(warn),
    )
