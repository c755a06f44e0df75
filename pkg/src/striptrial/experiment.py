"""In-memory experiment runner: simulate, fit and score the factor grid.

The unit of parallel work is one replicate of one (response, eta,
spatial) cell, which covers the paired randomised/systematic trials and
all bandwidth policies.  Every trial is a pure function of the master
seed and its factor indices, so results are identical for any worker
count; output ordering is fixed to (design, response, eta, spatial,
replicate, policy) regardless of execution order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

from .config import ScenarioConfig
from .gwr import (
    AICC_OPTIMAL,
    LatticeGwrEngine,
    select_bandwidth_on_engine,
)
from .metrics import ScenarioResult, coefficient_mse
from .simulate import make_trial


def run_cell(config: ScenarioConfig, response_idx: int, eta_idx: int, spatial_idx: int, replicate: int):
    """Score one replicate of one scenario cell for all designs and policies.

    Returns a dict keyed by (design_idx, policy_idx).
    """
    out = {}
    master_seed = config.seed
    for d_i in range(len(config.designs)):
        trial = make_trial(config, master_seed, d_i, response_idx, eta_idx, spatial_idx, replicate)
        engine = LatticeGwrEngine(
            trial.grid, trial.design.treatment, trial.yields, trial.labels.response
        )
        for p_i, policy in enumerate(config.bandwidth_policies):
            if policy == AICC_OPTIMAL:
                h = select_bandwidth_on_engine(
                    engine, config.bandwidth_search, config.aicc_formula
                )
                selected = float(h)
            else:
                h = config.fixed_bandwidth(policy)
                selected = None
            fit = engine.fit(h, policy, config.aicc_formula)
            mse = coefficient_mse(trial.truth, fit)
            out[(d_i, p_i)] = ScenarioResult(
                design=trial.labels.design,
                response=trial.labels.response,
                covariance=trial.labels.covariance,
                eta=trial.labels.eta,
                bandwidth_policy=policy,
                replicate=replicate,
                seed=master_seed,
                mse=tuple(float(m) for m in mse),
                selected_bandwidth=selected,
            )
    return out


def _run_cell_packed(args):
    raw, r_i, e_i, s_i, rep = args
    return (r_i, e_i, s_i, rep), run_cell(ScenarioConfig(raw=raw), r_i, e_i, s_i, rep)


def run_experiment(config: ScenarioConfig, threads: int = 1, progress=None):
    """Run the full factor grid; returns a list of ScenarioResult.

    `progress`, when given, is called with (done, total) after each cell.
    """
    cells = [
        (r_i, e_i, s_i, rep)
        for r_i in range(len(config.responses))
        for e_i in range(len(config.etas))
        for s_i in range(len(config.spatials))
        for rep in range(config.replicates)
    ]
    scored: dict = {}
    if threads <= 1:
        for i, cell in enumerate(cells):
            scored[cell] = run_cell(config, *cell)
            if progress:
                progress(i + 1, len(cells))
    else:
        packed = [(config.raw, *cell) for cell in cells]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, (cell, out) in enumerate(pool.map(_run_cell_packed, packed, chunksize=1)):
                scored[cell] = out
                if progress:
                    progress(i + 1, len(cells))

    results = []
    for d_i in range(len(config.designs)):
        for r_i in range(len(config.responses)):
            for e_i in range(len(config.etas)):
                for s_i in range(len(config.spatials)):
                    for rep in range(config.replicates):
                        cell = scored[(r_i, e_i, s_i, rep)]
                        for p_i in range(len(config.bandwidth_policies)):
                            results.append(cell[(d_i, p_i)])
    return results
