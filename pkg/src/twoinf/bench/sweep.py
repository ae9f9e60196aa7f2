"""Regime sweeps: perfect-clustering frequency over a two-parameter grid.

``gamma_nu`` (Gaussian mixture): ``n = m**gamma`` and ``sigma = theta * m**nu``
with ``m`` fixed by the base config.

``alpha_beta`` (block-model slice): ``rho = n**-alpha`` and ``m = n**beta``
with ``n`` fixed by the base config.
"""

from __future__ import annotations

from typing import Dict, List, Sequence

from ..errors import ConfigError
from .config import ExperimentConfig, resolve
from .experiment import rows_to_csv, run_replicates, sorted_rows
from .stats import intervals_disjoint, wilson_interval

SWEEP_COLUMNS = (
    "x_name", "x", "y_name", "y", "mode", "replicates", "failed", "perfect", "frequency",
    "wilson_lo", "wilson_hi", "mean_miscluster_rate", "trend_ok",
)


def _cell_config(base: ExperimentConfig, axes: str, x: float, y: float) -> ExperimentConfig:
    if axes == "gamma_nu":
        if base.scenario != "gaussian":
            raise ConfigError("gamma_nu sweeps need the gaussian scenario")
        over = {"gaussian": {**base["gaussian"], "gamma": float(x), "nu": float(y)}}
    else:
        if base.scenario != "sbm-slice":
            raise ConfigError("alpha_beta sweeps need the sbm-slice scenario")
        n = base["sbm_slice"]["n"]
        m = int(round(n ** float(y)))
        over = {"sbm_slice": {**base["sbm_slice"], "rho": n ** -float(x), "m": m}}
    raw = {**base.data, **over, "bounds": []}
    return resolve(raw)


def run_regime_sweep(
    base: ExperimentConfig, xs: Sequence[float], ys: Sequence[float], threads: int = 1,
    axes: str | None = None,
) -> List[Dict[str, object]]:
    """One row per (x, y, mode) with perfect-clustering frequency and trend flag.

    The trend flag is computed along ``y`` for fixed ``x`` and mode: a cell is
    flagged when its Wilson interval lies strictly on the wrong side of the
    previous cell's interval (frequency should fall as ``nu`` grows, and rise
    as ``beta`` grows).
    """
    axes = axes or base["sweep"]["axes"]
    if not xs or not ys:
        raise ConfigError("sweep grid is empty")
    names = ("gamma", "nu") if axes == "gamma_nu" else ("alpha", "beta")
    table: List[Dict[str, object]] = []
    for x in xs:
        for y in ys:
            cfg = _cell_config(base, axes, x, y)
            rows = sorted_rows(run_replicates(cfg, cfg.seeds, threads), cfg["modes"])
            for mode in cfg["modes"]:
                mine = [r for r in rows if r["mode"] == mode]
                ok = [r for r in mine if r["status"] == "ok" and r.get("miscluster_count") not in (None, "")]
                perfect = sum(1 for r in ok if r["miscluster_count"] == 0)
                lo, hi = wilson_interval(perfect, len(ok))
                table.append({
                    "x_name": names[0], "x": float(x), "y_name": names[1], "y": float(y),
                    "mode": mode, "replicates": len(mine), "failed": len(mine) - len(ok),
                    "perfect": perfect, "frequency": perfect / len(ok) if ok else None,
                    "wilson_lo": lo, "wilson_hi": hi,
                    "mean_miscluster_rate": (sum(r["miscluster_rate"] for r in ok) / len(ok)) if ok else None,
                })
    _flag_trends(table, increasing=(axes == "alpha_beta"))
    return table


def _flag_trends(table: List[Dict[str, object]], increasing: bool) -> None:
    groups: Dict[tuple, List[Dict[str, object]]] = {}
    for row in table:
        groups.setdefault((row["x"], row["mode"]), []).append(row)
    for rows in groups.values():
        rows.sort(key=lambda r: r["y"])
        rows[0]["trend_ok"] = 1
        for prev, cur in zip(rows, rows[1:]):
            a = (prev["wilson_lo"], prev["wilson_hi"])
            b = (cur["wilson_lo"], cur["wilson_hi"])
            wrong = (b[0] > a[1]) if not increasing else (b[1] < a[0])
            cur["trend_ok"] = int(not (wrong and intervals_disjoint(a, b)))


def sweep_csv(table: Sequence[Dict[str, object]]) -> str:
    return rows_to_csv(table, SWEEP_COLUMNS)
