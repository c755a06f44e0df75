"""Fixed-effects factorial ANOVA over the simulation scores.

The response is per-replicate, per-coefficient ln(MSE).  Five crossed
factors (design, bandwidth policy, spatial covariance, coefficient index,
correlation level) enter with all second-order interactions.  Sums of
squares are sequential (type I) with treatment contrasts; the factor grid
produced by the simulation is balanced, which makes them order
independent.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

FACTOR_NAMES = ("Design", "Bandwidth", "Covariance", "Coefficients", "Correlation")

INTERACTIONS = (
    ("Design", "Bandwidth"),
    ("Design", "Covariance"),
    ("Design", "Coefficients"),
    ("Design", "Correlation"),
    ("Bandwidth", "Covariance"),
    ("Bandwidth", "Coefficients"),
    ("Bandwidth", "Correlation"),
    ("Covariance", "Coefficients"),
    ("Covariance", "Correlation"),
    ("Coefficients", "Correlation"),
)


class AnovaError(ValueError):
    """Raised for incomplete or unbalanced factor frames."""


@dataclass(frozen=True)
class FactorFrame:
    """Response vector plus integer-coded factor columns."""

    response: np.ndarray  # (nobs,)
    codes: dict  # factor name -> (nobs,) int level codes
    levels: dict  # factor name -> list of level labels

    @property
    def nobs(self) -> int:
        return self.response.size


@dataclass(frozen=True)
class AnovaRow:
    term: str
    df: int
    sum_sq: float
    mean_sq: float
    f: float
    p: float


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple  # term rows followed by the residual row

    def row(self, term: str) -> AnovaRow:
        for r in self.rows:
            if r.term == term:
                return r
        raise KeyError(term)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("term,df,sum_sq,pr_f\n")
        for r in self.rows:
            p = "" if r.term == "Residual" else repr(r.p)
            buf.write(f"{r.term},{r.df},{r.sum_sq!r},{p}\n")
        return buf.getvalue()


def build_frame(results, response_kind: str) -> FactorFrame:
    """Assemble the ANOVA frame for one response kind.

    One observation per (trial, policy, coefficient).  Rejects frames
    whose factor grid is incomplete, listing the missing cells.
    """
    selected = [r for r in results if r.response == response_kind]
    if not selected:
        raise AnovaError(f"no results for response kind {response_kind!r}")
    k = len(selected[0].mse)

    designs = sorted({r.design for r in selected})
    policies = sorted({r.bandwidth_policy for r in selected})
    covariances = sorted({r.covariance for r in selected})
    coefficients = [f"beta{j}" for j in range(k)]
    etas = sorted({r.eta for r in selected})

    levels = {
        "Design": designs,
        "Bandwidth": policies,
        "Covariance": covariances,
        "Coefficients": coefficients,
        "Correlation": etas,
    }

    response = []
    codes = {name: [] for name in FACTOR_NAMES}
    cell_counts = {}
    for r in selected:
        for j, ln in enumerate(r.ln_mse):
            response.append(ln)
            key = (
                designs.index(r.design),
                policies.index(r.bandwidth_policy),
                covariances.index(r.covariance),
                j,
                etas.index(r.eta),
            )
            for name, code in zip(FACTOR_NAMES, key):
                codes[name].append(code)
            cell_counts[key] = cell_counts.get(key, 0) + 1

    shape = tuple(len(levels[name]) for name in FACTOR_NAMES)
    missing = [
        cell
        for cell in np.ndindex(shape)
        if cell not in cell_counts
    ]
    if missing:
        labels = [
            tuple(levels[name][i] for name, i in zip(FACTOR_NAMES, cell))
            for cell in missing[:10]
        ]
        raise AnovaError(f"incomplete factor grid; missing cells include {labels}")

    return FactorFrame(
        response=np.asarray(response, float),
        codes={name: np.asarray(vals) for name, vals in codes.items()},
        levels=levels,
    )


def _dummies(frame: FactorFrame, name: str) -> np.ndarray:
    """Treatment-contrast indicator columns (first level dropped)."""
    code = frame.codes[name]
    n_levels = len(frame.levels[name])
    cols = [(code == lvl).astype(float) for lvl in range(1, n_levels)]
    return np.column_stack(cols) if cols else np.empty((frame.nobs, 0))


def anova_fit(frame: FactorFrame) -> AnovaTable:
    """Sequential-SS factorial ANOVA with all pairwise interactions."""
    counts = {}
    key_cols = np.column_stack([frame.codes[name] for name in FACTOR_NAMES])
    for row in map(tuple, key_cols):
        counts[row] = counts.get(row, 0) + 1
    if len(set(counts.values())) != 1:
        raise AnovaError("unbalanced factor frame (unequal replicates per cell)")

    y = frame.response
    nobs = frame.nobs
    blocks = [("Intercept", np.ones((nobs, 1)))]
    mains = {name: _dummies(frame, name) for name in FACTOR_NAMES}
    for name in FACTOR_NAMES:
        blocks.append((name, mains[name]))
    for a_name, b_name in INTERACTIONS:
        a, b = mains[a_name], mains[b_name]
        cols = [a[:, i] * b[:, j] for i in range(a.shape[1]) for j in range(b.shape[1])]
        inter = np.column_stack(cols) if cols else np.empty((nobs, 0))
        blocks.append((f"{a_name}:{b_name}", inter))

    x = np.concatenate([blk for _, blk in blocks], axis=1)
    q, r = np.linalg.qr(x)
    g = q.T @ y
    total = float(y @ y)
    rss = max(total - float(g @ g), 0.0)
    df_resid = nobs - x.shape[1]
    ms_resid = rss / df_resid if df_resid > 0 else 0.0

    rows = []
    col = 0
    for term, blk in blocks:
        width = blk.shape[1]
        ss = float(np.sum(g[col : col + width] ** 2))
        col += width
        if term == "Intercept" or width == 0:  # single-level factors carry no df
            continue
        df = width
        ms = ss / df
        if ms_resid > 0:
            f = ms / ms_resid
            p = f_upper_tail(f, df, df_resid)
        else:
            f, p = 0.0, 1.0
        rows.append(AnovaRow(term=term, df=df, sum_sq=ss, mean_sq=ms, f=f, p=p))
    rows.append(
        AnovaRow(term="Residual", df=df_resid, sum_sq=rss, mean_sq=ms_resid, f=math.nan, p=math.nan)
    )
    return AnovaTable(rows=tuple(rows))


_BETA_MAX_ITER = 200
_BETA_EPS = 1e-12


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise AnovaError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_upper_tail(f: float, d1: int, d2: int) -> float:
    """Upper-tail probability of the F(d1, d2) distribution."""
    if f < 0:
        raise AnovaError(f"F statistic must be nonnegative, got {f}")
    if d1 < 1 or d2 < 1:
        raise AnovaError("degrees of freedom must be >= 1")
    if f == 0.0:
        return 1.0
    x = d2 / (d2 + d1 * f)
    return betainc_reg(d2 / 2.0, d1 / 2.0, x)
