"""Strip-trial design simulation and geographically weighted regression.

Simulates on-farm strip trials with spatially varying treatment
coefficients, fits GWR at every plot, and scores randomised against
systematic designs by coefficient-recovery MSE and factorial ANOVA.
"""

__version__ = "0.1.0"

from .anova import AnovaTable, FactorFrame, anova_fit, build_frame, f_upper_tail
from .config import ScenarioConfig, load_config
from .experiment import run_experiment
from .grid_design import (
    DesignPlan,
    FieldGrid,
    TreatmentLevels,
    allocate_treatments,
    build_grid,
)
from .gwr import (
    GwrFit,
    KernelSpec,
    gaussian_weights,
    gwr_fit,
    local_fit,
    select_bandwidth_aicc,
)
from .metrics import (
    BoxplotStats,
    ScenarioResult,
    bandwidth_histogram,
    boxplot_stats,
    coefficient_mse,
    median_table,
)
from .simulate import (
    CoefficientField,
    ResponseSpec,
    TrialData,
    sample_coefficient_field,
    scenario_batch,
    simulate_yield,
)
from .spatial_cov import (
    SpatialCovSpec,
    WithinGridCovSpec,
    ar1_matrix,
    build_vs,
    chol_lower,
    kron,
    matern_cov,
    sample_lkj,
)
