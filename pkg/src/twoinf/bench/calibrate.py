"""Fitting the unspecified constants of the high-probability bounds.

A constant is fitted as an upper quantile of ``empirical / bound`` over a
calibration seed range and then checked on a disjoint validation range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import CalibrationError
from .config import ExperimentConfig
from .experiment import run_replicates, sorted_rows

# Bounds that carry an unknown constant.
GENERIC_BOUNDS = ("thm3", "thm4", "thm5", "thm6")
MIN_CALIBRATION = 50


def fit_constant(empirical: Sequence[float], values: Sequence[float], quantile: float = 0.99) -> float:
    """Upper ``quantile`` of the ratios ``empirical / values``.

    Uses the order statistic of rank ``ceil(quantile * (k + 1))`` (capped at
    k), which for exchangeable replicates makes a fresh ratio exceed the
    constant with probability at most ``1 - quantile``.

    Raises :class:`CalibrationError` with fewer than 50 replicates or when a
    bound is zero while the empirical error is not.
    """
    emp = np.asarray(empirical, dtype=float)
    val = np.asarray(values, dtype=float)
    k = emp.size
    if k < MIN_CALIBRATION:
        raise CalibrationError(f"need at least {MIN_CALIBRATION} calibration replicates, got {k}")
    bad = np.flatnonzero((val <= 0) & (emp > 0))
    if bad.size:
        raise CalibrationError(f"{bad.size} replicates have a zero bound but positive error")
    ratios = np.where(val > 0, emp / np.where(val > 0, val, 1.0), 0.0)
    rank = min(k, max(1, math.ceil(quantile * (k + 1))))
    return float(np.sort(ratios)[rank - 1])


@dataclass(frozen=True)
class CalibrationOutcome:
    bound_id: str
    mode: str
    constant: float
    calibrated_on: int
    validated_on: int
    violations: int
    skipped: int

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.validated_on if self.validated_on else math.nan


def _pairs(rows: List[dict], bound_id: str, mode: str) -> Tuple[List[float], List[float], int]:
    emp, val, skipped = [], [], 0
    for r in rows:
        if r["mode"] != mode:
            continue
        v = r.get(f"bound.{bound_id}.value")
        if r["status"] != "ok" or v in (None, ""):
            skipped += 1
            continue
        emp.append(r["empirical_2inf_error"])
        val.append(v)
    return emp, val, skipped


def calibrate_constant(
    cfg: ExperimentConfig, bound_id: str, mode: str, calib_seeds: Sequence[int],
    quantile: float = 0.99, threads: int = 1,
) -> float:
    """Fitted constant for one bound and mode over ``calib_seeds``."""
    if bound_id not in GENERIC_BOUNDS:
        raise CalibrationError(f"{bound_id} has explicit constants; nothing to fit")
    cfg = cfg.replace(bounds=[bound_id], modes=[mode], constants={})
    rows = sorted_rows(run_replicates(cfg, calib_seeds, threads, cluster=False), [mode])
    emp, val, _ = _pairs(rows, bound_id, mode)
    return fit_constant(emp, val, quantile)


def run_calibration(cfg: ExperimentConfig, threads: int = 1) -> Tuple[List[CalibrationOutcome], List[dict]]:
    """Fit and validate every generic bound listed in ``cfg`` for every mode.

    Bound values are computed constant-free; each (bound, mode) pair gets
    its own constant.  Returns the outcomes and the validation rows.
    """
    cal = cfg["calibration"]
    bound_ids = [b for b in cfg["bounds"] if b in GENERIC_BOUNDS]
    if not bound_ids:
        raise CalibrationError("no bound with an unspecified constant is selected")
    cfg = cfg.replace(bounds=bound_ids, constants={})
    c_seeds = range(*cal["calib_seeds"])
    v_seeds = range(*cal["valid_seeds"])
    c_rows = sorted_rows(run_replicates(cfg, c_seeds, threads, cluster=False), cfg["modes"])
    v_rows = sorted_rows(run_replicates(cfg, v_seeds, threads, cluster=False), cfg["modes"])
    outcomes = []
    for b in bound_ids:
        for mode in cfg["modes"]:
            emp, val, _ = _pairs(c_rows, b, mode)
            if not emp:
                continue  # bound not defined for this mode
            const = fit_constant(emp, val, cal["quantile"])
            vemp, vval, vskip = _pairs(v_rows, b, mode)
            viol = sum(1 for e, v in zip(vemp, vval) if e > const * v)
            outcomes.append(CalibrationOutcome(b, mode, const, len(emp), len(vemp), viol, vskip))
    return outcomes, v_rows


def outcomes_table(outcomes: Sequence[CalibrationOutcome]) -> List[Dict[str, object]]:
    return [
        {
            "bound": o.bound_id, "mode": o.mode, "constant": o.constant,
            "calibrated_on": o.calibrated_on, "validated_on": o.validated_on,
            "violations": o.violations, "violation_fraction": o.violation_fraction,
            "skipped": o.skipped,
        }
        for o in outcomes
    ]
