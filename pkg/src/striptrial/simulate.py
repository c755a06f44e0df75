"""Simulation of spatially varying treatment responses on the field grid.

True plot-level coefficients are beta(s) = b + u(s) where u is a zero-mean
Gaussian field with covariance Vs kron Vu.  Yields follow the linear or
quadratic response in the treatment rate plus i.i.d. Gaussian noise.

Reproducibility: every random stream is a numpy PCG64 generator seeded
from ``SeedSequence(master_seed, spawn_key=...)``.  Spawn keys are
``(0, response_idx, eta_idx, spatial_idx, replicate)`` for the coefficient
field and ``(1, design_idx, response_idx, eta_idx, spatial_idx, replicate)``
for everything design-specific (randomised allocation and yield noise),
so the paired randomised/systematic trials of one replicate share an
identical coefficient field by construction while errors are redrawn.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .grid_design import (
    DesignPlan,
    FieldGrid,
    TreatmentLevels,
    allocate_treatments,
    build_grid,
)
from .spatial_cov import (
    AR1_AR1,
    MATERN,
    NO_SPATIAL,
    SpatialCovSpec,
    WithinGridCovSpec,
    ar1_matrix,
    build_vs,
    chol_lower,
    within_grid_cov,
)

LINEAR = "linear"
QUADRATIC = "quadratic"
RESPONSE_KINDS = (LINEAR, QUADRATIC)


class SimulationError(ValueError):
    """Raised for inconsistent simulation inputs."""


@dataclass(frozen=True)
class ResponseSpec:
    """Global response curve and error scale."""

    kind: str = QUADRATIC
    b: tuple = None
    sigma_e: float = 1.0

    def __post_init__(self):
        if self.kind not in RESPONSE_KINDS:
            raise SimulationError(f"unknown response kind {self.kind!r}")
        b = self.b
        if b is None:
            b = (65.0, 0.05) if self.kind == LINEAR else (65.0, 0.05, -0.0003)
        b = tuple(float(x) for x in b)
        k = 2 if self.kind == LINEAR else 3
        if len(b) != k:
            raise SimulationError(f"{self.kind} response needs {k} coefficients, got {len(b)}")
        if self.sigma_e <= 0:
            raise SimulationError(f"sigma_e={self.sigma_e} must be positive")
        object.__setattr__(self, "b", b)

    @property
    def k(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class CoefficientField:
    """True per-plot coefficients, one row per plot in plot order."""

    beta: np.ndarray  # (n, k)


@dataclass(frozen=True)
class TrialLabels:
    design: str
    response: str
    covariance: str
    eta: float
    replicate: int
    seed: int


@dataclass(frozen=True)
class TrialData:
    """One simulated trial: a design, its yields and the underlying truth."""

    grid: FieldGrid
    design: DesignPlan
    yields: np.ndarray  # (n,)
    truth: CoefficientField
    labels: TrialLabels


# Cholesky factors of the between-plot covariance are scenario constants;
# cache them per (grid dims, spec) so the dense Matern factorization runs
# once per process instead of once per replicate.
_SPATIAL_CHOL_CACHE: dict = {}


def _spatial_chol_factors(grid: FieldGrid, spec: SpatialCovSpec):
    """Return Cholesky factors of Vs in Kronecker-structured form.

    AR1 x AR1 keeps the two small factors (chol of a kron is the kron of
    the chols); identity needs none; Matern falls back to the dense factor.
    """
    key = (grid.n_rows, grid.n_ranges, spec)
    if key not in _SPATIAL_CHOL_CACHE:
        if spec.kind == NO_SPATIAL:
            val = ("identity",)
        elif spec.kind == AR1_AR1:
            val = (
                "kron",
                chol_lower(ar1_matrix(spec.rho_col, grid.n_ranges)),
                chol_lower(ar1_matrix(spec.rho_row, grid.n_rows)),
            )
        else:
            val = ("dense", chol_lower(build_vs(grid, spec)))
        _SPATIAL_CHOL_CACHE[key] = val
    return _SPATIAL_CHOL_CACHE[key]


def sample_coefficient_field(
    grid: FieldGrid,
    response: ResponseSpec,
    within: WithinGridCovSpec,
    spatial: SpatialCovSpec,
    rng: np.random.Generator,
) -> CoefficientField:
    """Draw beta = b + u with u ~ N(0, Vs kron Vu).

    Draw order is fixed: first the LKJ correlation for Vu, then one n x k
    block of standard normals.  u is formed as L z with the Kronecker
    Cholesky factor applied per axis, never materialising the nk x nk
    covariance.
    """
    k = response.k
    vu = within_grid_cov(within, k, rng)
    lu = chol_lower(vu)
    z = rng.standard_normal((grid.n_ranges, grid.n_rows, k))

    factors = _spatial_chol_factors(grid, spatial)
    u = z @ lu.T
    if factors[0] == "kron":
        lc, lr = factors[1], factors[2]
        u = np.einsum("ri,cik->crk", lr, u)
        u = np.einsum("dc,crk->drk", lc, u)
        u = u.reshape(grid.n, k)
    elif factors[0] == "dense":
        u = factors[1] @ u.reshape(grid.n, k)
    else:
        u = u.reshape(grid.n, k)

    beta = np.asarray(response.b) + u
    return CoefficientField(beta=beta)


def response_basis(rates: np.ndarray, kind: str) -> np.ndarray:
    """Design matrix [1, N] (linear) or [1, N, N^2] (quadratic)."""
    rates = np.asarray(rates, dtype=float)
    cols = [np.ones_like(rates), rates]
    if kind == QUADRATIC:
        cols.append(rates * rates)
    elif kind != LINEAR:
        raise SimulationError(f"unknown response kind {kind!r}")
    return np.column_stack(cols)


def simulate_yield(
    grid: FieldGrid,
    design: DesignPlan,
    truth: CoefficientField,
    response: ResponseSpec,
    rng: np.random.Generator,
    labels: TrialLabels | None = None,
) -> TrialData:
    """Generate yields y_i = sum_j beta_j(s_i) N_i^j + e_i."""
    if truth.beta.shape != (grid.n, response.k):
        raise SimulationError(
            f"truth shape {truth.beta.shape} does not match grid n={grid.n}, k={response.k}"
        )
    z = response_basis(design.treatment, response.kind)
    noise = response.sigma_e * rng.standard_normal(grid.n)
    y = np.sum(z * truth.beta, axis=1) + noise
    if labels is None:
        labels = TrialLabels(design.kind, response.kind, "?", float("nan"), 0, 0)
    return TrialData(grid=grid, design=design, yields=y, truth=truth, labels=labels)


def field_rng(master_seed, response_idx, eta_idx, spatial_idx, replicate):
    """Generator for the shared coefficient field of one replicate."""
    ss = np.random.SeedSequence(
        master_seed, spawn_key=(0, response_idx, eta_idx, spatial_idx, replicate)
    )
    return np.random.Generator(np.random.PCG64(ss))


def trial_rng(master_seed, design_idx, response_idx, eta_idx, spatial_idx, replicate):
    """Generator for design allocation and yield noise of one trial."""
    ss = np.random.SeedSequence(
        master_seed,
        spawn_key=(1, design_idx, response_idx, eta_idx, spatial_idx, replicate),
    )
    return np.random.Generator(np.random.PCG64(ss))


def make_trial(
    config,
    master_seed: int,
    design_idx: int,
    response_idx: int,
    eta_idx: int,
    spatial_idx: int,
    replicate: int,
) -> TrialData:
    """Build one trial of the factor grid deterministically from its indices."""
    grid = config.grid()
    response = config.response(response_idx)
    within = config.within(eta_idx)
    spatial = config.spatial(spatial_idx)
    design_kind = config.designs[design_idx]

    truth = sample_coefficient_field(
        grid,
        response,
        within,
        spatial,
        field_rng(master_seed, response_idx, eta_idx, spatial_idx, replicate),
    )
    rng = trial_rng(master_seed, design_idx, response_idx, eta_idx, spatial_idx, replicate)
    plan = allocate_treatments(grid, config.treatment_levels(), design_kind, rng)
    labels = TrialLabels(
        design=design_kind,
        response=response.kind,
        covariance=spatial.kind,
        eta=within.eta,
        replicate=replicate,
        seed=int(master_seed),
    )
    return simulate_yield(grid, plan, truth, response, rng, labels)


def scenario_batch(config, master_seed: int):
    """Stream every trial of the factor grid in (scenario, replicate) order.

    Scenario index enumerates design x response x eta x spatial in config
    order.  The randomised/systematic pair of a replicate shares one
    coefficient field because the field stream does not depend on design.
    """
    if config.replicates < 1:
        raise SimulationError("replicate count must be >= 1")
    for d_i in range(len(config.designs)):
        for r_i in range(len(config.responses)):
            for e_i in range(len(config.etas)):
                for s_i in range(len(config.spatials)):
                    for rep in range(config.replicates):
                        yield make_trial(config, master_seed, d_i, r_i, e_i, s_i, rep)


def trial_to_csv(trial: TrialData) -> str:
    """Serialise a trial as `row,range,rate,yield,beta0,beta1[,beta2]`."""
    k = trial.truth.beta.shape[1]
    header = "row,range,rate,yield," + ",".join(f"beta{j}" for j in range(k))
    buf = io.StringIO()
    buf.write(header + "\n")
    rows = trial.grid.row_index()
    rngs = trial.grid.range_index()
    for i in range(trial.grid.n):
        betas = ",".join(repr(float(b)) for b in trial.truth.beta[i])
        buf.write(
            f"{rows[i]},{rngs[i]},{float(trial.design.treatment[i])!r},"
            f"{float(trial.yields[i])!r},{betas}\n"
        )
    return buf.getvalue()


def trial_sidecar(trial: TrialData) -> str:
    """JSON sidecar with scenario labels and seed."""
    lb = trial.labels
    return json.dumps(
        {
            "design": lb.design,
            "response": lb.response,
            "covariance": lb.covariance,
            "eta": lb.eta,
            "replicate": lb.replicate,
            "seed": lb.seed,
            "n_rows": trial.grid.n_rows,
            "n_ranges": trial.grid.n_ranges,
        },
        indent=2,
        sort_keys=True,
    )
