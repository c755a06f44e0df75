"""Geographically weighted regression on the field lattice.

Every plot is a query point: the local coefficients at plot i solve the
weighted least-squares problem with Gaussian kernel weights decaying in
Euclidean grid distance.  `local_fit` is the single-query reference path
(orthogonal decomposition of the root-weighted design); `gwr_fit` runs
all queries at once by assembling the weighted normal equations with 2-D
FFT convolutions over the lattice, which is exact up to roundoff because
kernel weights depend only on the (row, range) offset between plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .simulate import TrialData, response_basis

GAUSSIAN = "gaussian"

FIXED5 = "fixed5"
FIXED9 = "fixed9"
AICC_OPTIMAL = "aicc"
BANDWIDTH_POLICIES = (FIXED5, FIXED9, AICC_OPTIMAL)

AICC_STANDARD = "standard"
AICC_PAPER_LITERAL = "paper-literal"

_RANK_TOL = 1e-10


class GwrError(ValueError):
    """Raised for invalid GWR inputs."""


class SingularFitError(ArithmeticError):
    """A local weighted design was rank deficient.

    Carries the query index and, when known, the offending bandwidth.
    Typically the kernel window covers fewer distinct treatment levels
    than regression parameters.
    """

    def __init__(self, query_index, bandwidth=None):
        self.query_index = query_index
        self.bandwidth = bandwidth
        msg = f"singular local fit at query index {query_index}"
        if bandwidth is not None:
            msg += f" (bandwidth {bandwidth})"
        super().__init__(msg)


class BandwidthSelectionError(RuntimeError):
    """Every candidate bandwidth produced a singular fit."""


@dataclass(frozen=True)
class KernelSpec:
    kind: str = GAUSSIAN
    bandwidth: float = 5.0

    def __post_init__(self):
        if self.kind != GAUSSIAN:
            raise GwrError(f"unsupported kernel kind {self.kind!r}")
        if self.bandwidth <= 0:
            raise GwrError(f"bandwidth={self.bandwidth} must be positive")


@dataclass(frozen=True)
class GwrFit:
    """Local estimates and fit summaries for all plots of one trial."""

    beta_hat: np.ndarray  # (n, p)
    fitted: np.ndarray  # (n,)
    trace_s: float
    tau2: float
    aicc: float
    bandwidth: float
    bandwidth_policy: str


def gaussian_weights(query: np.ndarray, coords: np.ndarray, h: float) -> np.ndarray:
    """Kernel weights w_i = exp(-d_i^2 / (2 h^2)) for one query location."""
    if h <= 0:
        raise GwrError(f"bandwidth h={h} must be positive")
    d2 = np.sum((np.asarray(coords, float) - np.asarray(query, float)) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * h * h))


def local_fit(y: np.ndarray, z: np.ndarray, w: np.ndarray, query_index: int = 0):
    """Solve one local WLS problem; return (beta_hat, hat_value).

    Uses a QR factorization of the root-weighted design rather than the
    normal equations.  The hat value is the smoother diagonal entry for
    the observation at `query_index` (needed for tr(S)).
    """
    y = np.asarray(y, float)
    z = np.atleast_2d(np.asarray(z, float))
    w = np.asarray(w, float)
    n, p = z.shape
    if np.count_nonzero(w > 0) < p:
        raise SingularFitError(query_index)
    sw = np.sqrt(w)
    q, r = np.linalg.qr(sw[:, None] * z)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_TOL * max(diag.max(), 1.0):
        raise SingularFitError(query_index)
    beta = np.linalg.solve(r, q.T @ (sw * y))
    # S_qq = w_q * z_q (R^T R)^{-1} z_q^T via one triangular solve
    t = np.linalg.solve(r.T, z[query_index])
    hat = w[query_index] * float(t @ t)
    return beta, hat


def aicc_value(n: int, tau2: float, trace_s: float, formula: str = AICC_STANDARD) -> float:
    """Corrected AIC for a smoother with effective parameters tr(S).

    The standard form uses n*log(tau2); the literal printed variant with a
    leading 2n*log(tau2) is selectable for comparison.
    """
    if trace_s >= n - 2:
        return math.inf
    if tau2 <= 0:
        return -math.inf
    lead = n * math.log(tau2)
    if formula == AICC_PAPER_LITERAL:
        lead *= 2.0
    elif formula != AICC_STANDARD:
        raise GwrError(f"unknown AICc formula {formula!r}")
    return lead + n * math.log(2.0 * math.pi) + n * (n + trace_s) / (n - 2.0 - trace_s)


class LatticeGwrEngine:
    """Fits GWR at every plot of one trial for many bandwidths.

    The treatment basis is rescaled to [0, 1] powers before solving
    (rates up to 140 make raw normal equations badly conditioned) and the
    estimates are scaled back afterwards.  Per-bandwidth cost is a handful
    of small FFT convolutions, independent of repeated calls.
    """

    def __init__(self, grid, rates, y, basis_kind):
        self.grid = grid
        self.n = grid.n
        z_raw = response_basis(rates, basis_kind)
        self.p = z_raw.shape[1]
        rate_scale = float(np.max(np.abs(rates)))
        if rate_scale == 0:
            rate_scale = 1.0
        self.col_scale = rate_scale ** np.arange(self.p)
        self.z = z_raw / self.col_scale
        self.y = np.asarray(y, float)

        c, r = grid.n_ranges, grid.n_rows
        self.shape = (c, r)
        # stack the p(p+1)/2 design cross-products and p response products
        # as lattice fields; their kernel-weighted sums at every query are
        # the entries of Z^T W Z and Z^T W y
        self.pairs = [(j, l) for j in range(self.p) for l in range(j, self.p)]
        fields = [self.z[:, j] * self.z[:, l] for j, l in self.pairs]
        fields += [self.z[:, j] * self.y for j in range(self.p)]
        self.fields = np.stack([f.reshape(c, r) for f in fields])

        dc = np.arange(-(c - 1), c)
        dr = np.arange(-(r - 1), r)
        self.offset2 = dc[:, None] ** 2 + dr[None, :] ** 2

    def _convolve(self, h: float) -> np.ndarray:
        kern = np.exp(-self.offset2 / (2.0 * h * h))
        full = fftconvolve(self.fields, kern[None], axes=(1, 2))
        c, r = self.shape
        return full[:, c - 1 : 2 * c - 1, r - 1 : 2 * r - 1].reshape(len(self.fields), -1)

    def fit(self, h: float, bandwidth_policy: str, aicc_formula: str = AICC_STANDARD) -> GwrFit:
        if h <= 0:
            raise GwrError(f"bandwidth h={h} must be positive")
        sums = self._convolve(h)
        p, n = self.p, self.n
        a = np.empty((n, p, p))
        for idx, (j, l) in enumerate(self.pairs):
            a[:, j, l] = sums[idx]
            a[:, l, j] = sums[idx]
        b = sums[len(self.pairs) :].T  # (n, p)

        try:
            a_inv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            raise self._locate_singular(a, h)
        beta_s = np.einsum("nij,nj->ni", a_inv, b)
        hat = np.einsum("ni,nij,nj->n", self.z, a_inv, self.z)
        fitted = np.sum(self.z * beta_s, axis=1)
        if not (np.all(np.isfinite(beta_s)) and np.all(np.isfinite(hat))):
            raise self._locate_singular(a, h)
        if np.any(hat <= 0) or np.any(hat > 1.0 + 1e-6):
            raise self._locate_singular(a, h)

        resid = self.y - fitted
        rss = float(resid @ resid)
        tau2 = rss / n
        trace_s = float(np.sum(hat))
        return GwrFit(
            beta_hat=beta_s / self.col_scale,
            fitted=fitted,
            trace_s=trace_s,
            tau2=tau2,
            aicc=aicc_value(n, tau2, trace_s, aicc_formula),
            bandwidth=float(h),
            bandwidth_policy=bandwidth_policy,
        )

    def _locate_singular(self, a: np.ndarray, h: float) -> SingularFitError:
        # slow path, only reached on failure: find the first bad query
        for i in range(self.n):
            try:
                chol = np.linalg.cholesky(a[i])
            except np.linalg.LinAlgError:
                return SingularFitError(i, h)
            d = np.diag(chol)
            if d.min() <= math.sqrt(_RANK_TOL) * max(d.max(), 1.0):
                return SingularFitError(i, h)
        return SingularFitError(int(np.argmin(np.linalg.det(a))), h)


def gwr_fit(
    trial: TrialData,
    basis_kind: str,
    kernel: KernelSpec,
    bandwidth_policy: str = FIXED5,
    aicc_formula: str = AICC_STANDARD,
) -> GwrFit:
    """Fit local regressions at every plot of a trial."""
    engine = LatticeGwrEngine(trial.grid, trial.design.treatment, trial.yields, basis_kind)
    return engine.fit(kernel.bandwidth, bandwidth_policy, aicc_formula)


def gwr_fit_reference(trial: TrialData, basis_kind: str, kernel: KernelSpec) -> GwrFit:
    """Plot-by-plot fit via `local_fit`; slow, used as an independent check."""
    z = response_basis(trial.design.treatment, basis_kind)
    n, p = z.shape
    beta = np.empty((n, p))
    hat = np.empty(n)
    for i in range(n):
        w = gaussian_weights(trial.grid.coords[i], trial.grid.coords, kernel.bandwidth)
        beta[i], hat[i] = local_fit(trial.yields, z, w, query_index=i)
    fitted = np.sum(z * beta, axis=1)
    resid = trial.yields - fitted
    tau2 = float(resid @ resid) / n
    trace_s = float(np.sum(hat))
    return GwrFit(
        beta_hat=beta,
        fitted=fitted,
        trace_s=trace_s,
        tau2=tau2,
        aicc=aicc_value(n, tau2, trace_s),
        bandwidth=kernel.bandwidth,
        bandwidth_policy=FIXED5,
    )


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def select_bandwidth_aicc(
    trial: TrialData,
    basis_kind: str,
    search: tuple = (1.0, 93.0),
    aicc_formula: str = AICC_STANDARD,
    n_scan: int = 40,
    tol: float = 0.01,
) -> float:
    """Bandwidth minimising AICc on the search interval.

    A log-spaced scan locates the minimum and checks unimodality; a
    unimodal objective is refined by golden-section search to `tol` grid
    units, otherwise the best scan point is returned.  Bandwidths whose
    fit is singular score +inf.
    """
    engine = LatticeGwrEngine(trial.grid, trial.design.treatment, trial.yields, basis_kind)
    return select_bandwidth_on_engine(engine, search, aicc_formula, n_scan, tol)


def select_bandwidth_on_engine(
    engine: LatticeGwrEngine,
    search: tuple = (1.0, 93.0),
    aicc_formula: str = AICC_STANDARD,
    n_scan: int = 40,
    tol: float = 0.01,
) -> float:
    """AICc bandwidth selection reusing an already-built engine."""
    lo, hi = float(search[0]), float(search[1])
    if not (0 < lo < hi):
        raise GwrError(f"invalid search interval {search}")

    def objective(h: float) -> float:
        try:
            return engine.fit(h, AICC_OPTIMAL, aicc_formula).aicc
        except SingularFitError:
            return math.inf

    hs = np.geomspace(lo, hi, n_scan)
    vals = np.array([objective(h) for h in hs])
    if not np.any(np.isfinite(vals)):
        raise BandwidthSelectionError(
            f"all candidate bandwidths on [{lo}, {hi}] produced singular fits"
        )
    best = int(np.argmin(vals))

    # unimodal iff the scan decreases to the minimum then increases
    diffs = np.diff(vals)
    unimodal = np.all(diffs[:best] <= 0) and np.all(diffs[best:] >= 0)
    if not unimodal:
        return float(hs[best])
    if best == 0 and hi - lo > tol and vals[0] <= vals[1]:
        a, b = lo, float(hs[1])
    elif best == n_scan - 1:
        a, b = float(hs[-2]), hi
    else:
        a, b = float(hs[best - 1]), float(hs[best + 1])

    # golden-section refinement on the bracket
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = objective(x2)
    mid = 0.5 * (a + b)
    # refinement must never lose to the coarse scan (boundary brackets can
    # converge just inside an endpoint minimiser)
    if objective(mid) <= vals[best]:
        return mid
    return float(hs[best])
