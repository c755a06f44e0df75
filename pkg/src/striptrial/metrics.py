"""Scoring and aggregation of coefficient recovery across trials.

One trial yields one mean squared error per coefficient (average over all
plots of the squared gap between true and estimated local coefficients).
Aggregation mirrors the reporting conventions of the study: medians per
scenario cell with scaled slope columns, boxplot five-number summaries of
ln(MSE), and histograms of AICc-selected bandwidths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gwr import AICC_OPTIMAL, FIXED5, FIXED9, GwrFit
from .simulate import CoefficientField

#: column scaling applied to median tables, keyed by (response, coefficient)
TABLE_SCALE = {
    ("linear", 0): 1.0,
    ("linear", 1): 1e3,
    ("quadratic", 0): 1.0,
    ("quadratic", 1): 1e4,
    ("quadratic", 2): 1e8,
}

_POLICY_COLUMNS = {FIXED5: "bw5", FIXED9: "bw9", AICC_OPTIMAL: "bwAicc"}


class MetricsError(ValueError):
    """Raised for inconsistent scoring inputs."""


@dataclass(frozen=True)
class ScenarioResult:
    """Per-trial, per-policy recovery score with its factor labels."""

    design: str
    response: str
    covariance: str
    eta: float
    bandwidth_policy: str
    replicate: int
    seed: int
    mse: tuple  # per coefficient
    selected_bandwidth: float | None = None

    @property
    def ln_mse(self) -> tuple:
        return tuple(math.log(m) if m > 0 else -math.inf for m in self.mse)


def coefficient_mse(truth: CoefficientField, fit: GwrFit) -> np.ndarray:
    """Per-coefficient mean squared error over the field."""
    if truth.beta.shape != fit.beta_hat.shape:
        raise MetricsError(
            f"shape mismatch: truth {truth.beta.shape} vs fit {fit.beta_hat.shape}"
        )
    return np.mean((truth.beta - fit.beta_hat) ** 2, axis=0)


def _median(values) -> float:
    return float(np.median(np.asarray(values, float)))


def median_table(results, response: str):
    """Median MSE per (covariance, design, coefficient) scenario cell.

    Returns a list of row dicts with keys covariance, design, coefficient,
    bw5, bw9, bwAicc.  Slope columns carry the conventional scaling
    (beta1 x1e3 linear / x1e4 quadratic, beta2 x1e8).  Cells without any
    results are omitted entirely rather than filled with zeros.
    """
    selected = [r for r in results if r.response == response]
    if not selected:
        return []
    k = len(selected[0].mse)
    covariances = _ordered_unique(r.covariance for r in selected)
    designs = _ordered_unique(r.design for r in selected)
    rows = []
    for cov in covariances:
        for design in designs:
            for j in range(k):
                row = {"covariance": cov, "design": design, "coefficient": f"beta{j}"}
                scale = TABLE_SCALE.get((response, j), 1.0)
                any_cell = False
                for policy, col in _POLICY_COLUMNS.items():
                    cell = [
                        r.mse[j]
                        for r in selected
                        if r.covariance == cov
                        and r.design == design
                        and r.bandwidth_policy == policy
                    ]
                    if cell:
                        row[col] = _median(cell) * scale
                        any_cell = True
                if any_cell:
                    rows.append(row)
    return rows


def _ordered_unique(it):
    seen = {}
    for x in it:
        seen.setdefault(x, None)
    return list(seen)


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with 1.5 IQR whiskers."""

    label: str
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    outliers: tuple


def boxplot_stats(values, label: str = "") -> BoxplotStats:
    """Type-7 quartiles; whiskers at the most extreme points within 1.5 IQR."""
    v = np.sort(np.asarray(values, float))
    if v.size == 0:
        raise MetricsError("empty group")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])  # linear interpolation (type 7)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
    return BoxplotStats(
        label=label,
        minimum=float(inside.min()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        maximum=float(inside.max()),
        outliers=outliers,
    )


def bandwidth_histogram(results, lo: float = 1.0, hi: float = 93.0):
    """Unit-width bin counts of AICc-selected bandwidths.

    Bin b (integer, lo <= b <= hi) counts selections in [b, b+1), with the
    top boundary folded into the last bin.  Counts sum to the group size.
    """
    sel = [
        r.selected_bandwidth
        for r in results
        if r.bandwidth_policy == AICC_OPTIMAL and r.selected_bandwidth is not None
    ]
    edges_lo = int(math.floor(lo))
    edges_hi = int(math.floor(hi))
    counts = {}
    for s in sel:
        b = int(math.floor(s))
        b = min(max(b, edges_lo), edges_hi)
        counts[b] = counts.get(b, 0) + 1
    return dict(sorted(counts.items()))
