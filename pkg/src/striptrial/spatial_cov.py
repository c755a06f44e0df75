"""Covariance construction and sampling for the coefficient field.

Two layers of correlation are combined through a Kronecker product:
a small within-plot covariance across the regression coefficients
(standard deviations times an LKJ-distributed correlation matrix) and a
between-plot spatial covariance over the whole lattice (identity,
separable AR1 in each lattice direction, or isotropic Matern).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid_design import FieldGrid

NO_SPATIAL = "ns"
AR1_AR1 = "ar1"
MATERN = "matern"
SPATIAL_KINDS = (NO_SPATIAL, AR1_AR1, MATERN)


class CovarianceError(ValueError):
    """Raised for invalid covariance parameters."""


class FactorizationError(ArithmeticError):
    """Raised when a Cholesky factorization fails (matrix not positive definite)."""


@dataclass(frozen=True)
class SpatialCovSpec:
    """Between-plot covariance over the lattice.

    rho_col / rho_row apply to the AR1 x AR1 kind; sigma2, range_scale and
    nu apply to the Matern kind.  Defaults follow the simulation study.
    """

    kind: str = NO_SPATIAL
    rho_col: float = 0.15
    rho_row: float = 0.5
    sigma2: float = 1.0
    range_scale: float = 1.0
    nu: float = 1.5

    def __post_init__(self):
        if self.kind not in SPATIAL_KINDS:
            raise CovarianceError(f"unknown spatial covariance kind {self.kind!r}")
        if self.kind == AR1_AR1:
            for name in ("rho_col", "rho_row"):
                rho = getattr(self, name)
                if not (0.0 <= rho < 1.0):
                    raise CovarianceError(f"{name}={rho} outside [0, 1)")
        if self.kind == MATERN:
            if self.sigma2 <= 0:
                raise CovarianceError(f"sigma2={self.sigma2} must be positive")
            if self.range_scale <= 0:
                raise CovarianceError(f"range_scale={self.range_scale} must be positive")
            if self.nu not in (0.5, 1.5, 2.5):
                raise CovarianceError(
                    f"nu={self.nu} unsupported; use a half-integer in {{1/2, 3/2, 5/2}}"
                )


@dataclass(frozen=True)
class WithinGridCovSpec:
    """Coefficient scales and the LKJ shape of their correlation."""

    sigma_u: tuple = (5.0, 0.01, 0.0001)
    eta: float = 1.0

    def __post_init__(self):
        su = tuple(float(x) for x in self.sigma_u)
        if any(s <= 0 for s in su):
            raise CovarianceError("all sigma_u must be positive")
        if self.eta <= 0:
            raise CovarianceError(f"eta={self.eta} must be positive")
        object.__setattr__(self, "sigma_u", su)


def ar1_matrix(rho: float, m: int) -> np.ndarray:
    """Dense AR1 correlation matrix, entry (i, j) = rho^|i-j|."""
    if not (0.0 <= rho < 1.0):
        raise CovarianceError(f"rho={rho} outside [0, 1)")
    if m < 1:
        raise CovarianceError(f"m={m} must be >= 1")
    idx = np.arange(m)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def matern_cov(d, spec: SpatialCovSpec):
    """Matern covariance at distance d, half-integer smoothness only.

    nu=1/2 is the exponential kernel; nu=3/2 and nu=5/2 use the usual
    polynomial-times-exponential closed forms.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise CovarianceError("distance must be nonnegative")
    s = d / spec.range_scale
    if spec.nu == 0.5:
        corr = np.exp(-s)
    elif spec.nu == 1.5:
        t = math.sqrt(3.0) * s
        corr = (1.0 + t) * np.exp(-t)
    elif spec.nu == 2.5:
        t = math.sqrt(5.0) * s
        corr = (1.0 + t + t * t / 3.0) * np.exp(-t)
    else:
        raise CovarianceError(f"unsupported nu={spec.nu}")
    out = spec.sigma2 * corr
    return float(out) if out.ndim == 0 else out


def build_vs(grid: FieldGrid, spec: SpatialCovSpec) -> np.ndarray:
    """Dense n x n between-plot covariance for the given lattice.

    The AR1 x AR1 form is AR1(rho_col) over ranges kron AR1(rho_row) over
    rows, which matches the rows-within-ranges plot ordering.
    """
    if spec.kind == NO_SPATIAL:
        return np.eye(grid.n)
    if spec.kind == AR1_AR1:
        return kron(
            ar1_matrix(spec.rho_col, grid.n_ranges),
            ar1_matrix(spec.rho_row, grid.n_rows),
        )
    dist = np.linalg.norm(grid.coords[:, None, :] - grid.coords[None, :, :], axis=-1)
    return matern_cov(dist, spec)


def sample_lkj(eta: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a k x k correlation matrix from the LKJ distribution.

    Onion construction: start from a 2 x 2 correlation with a
    Beta(b, b)-distributed entry (b = eta + (k - 2) / 2), then grow the
    matrix one row at a time with a Beta-distributed squared radius and a
    uniform direction on the sphere.
    """
    if eta <= 0:
        raise CovarianceError(f"eta={eta} must be positive")
    if k < 1:
        raise CovarianceError(f"k={k} must be >= 1")
    if k == 1:
        return np.ones((1, 1))

    # beta draws are clamped away from {0, 1}: low eta concentrates mass at
    # the endpoints and an exact 0/1 draw would make the matrix singular
    clamp = 1e-12
    beta = eta + (k - 2) / 2.0
    r12 = 2.0 * min(max(rng.beta(beta, beta), clamp), 1.0 - clamp) - 1.0
    corr = np.array([[1.0, r12], [r12, 1.0]])
    for m in range(2, k):
        beta -= 0.5
        y = min(max(rng.beta(m / 2.0, beta), clamp), 1.0 - clamp)
        z = rng.standard_normal(m)
        z /= np.linalg.norm(z)
        w = math.sqrt(y) * z
        col = chol_lower(corr) @ w
        new = np.empty((m + 1, m + 1))
        new[:m, :m] = corr
        new[:m, m] = col
        new[m, :m] = col
        new[m, m] = 1.0
        corr = new
    return corr


def within_grid_cov(spec: WithinGridCovSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the k x k within-plot covariance B(sigma_u) R B(sigma_u)."""
    if len(spec.sigma_u) < k:
        raise CovarianceError(f"need at least {k} sigma_u values, got {len(spec.sigma_u)}")
    b = np.asarray(spec.sigma_u[:k])
    corr = sample_lkj(spec.eta, k, rng)
    return corr * np.outer(b, b)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(np.asarray(a), np.asarray(b))


def chol_lower(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    m = np.asarray(m, dtype=float)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"matrix is not positive definite: {exc}") from exc
