"""File-based pipeline stages: simulate -> fit -> score -> report.

Each stage consumes the previous stage's CSV/JSON artifacts, so the
stages compose to exactly the same bytes as `run_pipeline`, which simply
runs them in sequence.  All floats are serialised with `repr` (shortest
round trip), making reruns with the same config and seed byte identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .anova import AnovaError, anova_fit, build_frame
from .config import ScenarioConfig
from .figures import bandwidth_histogram_svg, ln_mse_boxplot_svg
from .grid_design import DesignPlan, build_grid
from .gwr import AICC_OPTIMAL, GwrFit, LatticeGwrEngine, select_bandwidth_on_engine
from .metrics import ScenarioResult, boxplot_stats, coefficient_mse, median_table
from .simulate import (
    CoefficientField,
    TrialData,
    TrialLabels,
    make_trial,
    trial_sidecar,
    trial_to_csv,
)


class PipelineError(RuntimeError):
    """Raised for missing inputs or schema mismatches between stages."""


def _require_dir(path):
    if not os.path.isdir(path):
        raise PipelineError(f"output directory does not exist: {path}")


def _cells(config: ScenarioConfig):
    for d_i in range(len(config.designs)):
        for r_i in range(len(config.responses)):
            for e_i in range(len(config.etas)):
                for s_i in range(len(config.spatials)):
                    for rep in range(config.replicates):
                        yield d_i, r_i, e_i, s_i, rep


def _trial_stem(d_i, r_i, e_i, s_i, rep):
    return f"trial_d{d_i}_r{r_i}_e{e_i}_s{s_i}_rep{rep:04d}"


# simulate ------------------------------------------------------------------


def stage_simulate(config: ScenarioConfig, out_dir, threads: int = 1):
    """Write one CSV + JSON sidecar per trial under out/trials/."""
    _require_dir(out_dir)
    trials_dir = os.path.join(out_dir, "trials")
    os.makedirs(trials_dir, exist_ok=True)
    for cell in _cells(config):
        trial = make_trial(config, config.seed, *cell)
        stem = os.path.join(trials_dir, _trial_stem(*cell))
        with open(stem + ".csv", "w") as fh:
            fh.write(trial_to_csv(trial))
        with open(stem + ".json", "w") as fh:
            fh.write(trial_sidecar(trial))
    return trials_dir


def _load_trial(stem) -> TrialData:
    """Rebuild a TrialData from its CSV and sidecar."""
    csv_path, json_path = stem + ".csv", stem + ".json"
    if not (os.path.exists(csv_path) and os.path.exists(json_path)):
        raise PipelineError(f"missing trial files for {stem}")
    with open(json_path) as fh:
        meta = json.load(fh)
    with open(csv_path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["row", "range", "rate", "yield"]
        if header[: len(expected)] != expected:
            bad = next((c for c, e in zip(header, expected) if c != e), header[0])
            raise PipelineError(f"trial CSV {csv_path}: unexpected column {bad!r}")
        body = np.array([[float(x) for x in row] for row in reader])
    grid = build_grid(meta["n_rows"], meta["n_ranges"])
    k = body.shape[1] - 4
    plan = DesignPlan(
        kind=meta["design"],
        treatment=body[:, 2],
        replicate_blocks=0,
        strips_per_block=0,
    )
    labels = TrialLabels(
        design=meta["design"],
        response=meta["response"],
        covariance=meta["covariance"],
        eta=meta["eta"],
        replicate=meta["replicate"],
        seed=meta["seed"],
    )
    return TrialData(
        grid=grid,
        design=plan,
        yields=body[:, 3],
        truth=CoefficientField(beta=body[:, 4 : 4 + k]),
        labels=labels,
    )


# fit -----------------------------------------------------------------------


def fit_to_csv(trial: TrialData, fit: GwrFit) -> str:
    k = fit.beta_hat.shape[1]
    header = "row,range," + ",".join(f"beta{j}_hat" for j in range(k)) + ",fitted"
    buf = io.StringIO()
    buf.write(header + "\n")
    rows = trial.grid.row_index()
    rngs = trial.grid.range_index()
    for i in range(trial.grid.n):
        betas = ",".join(repr(float(b)) for b in fit.beta_hat[i])
        buf.write(f"{rows[i]},{rngs[i]},{betas},{float(fit.fitted[i])!r}\n")
    return buf.getvalue()


def fit_summary_json(fit: GwrFit) -> str:
    return json.dumps(
        {
            "bandwidth": fit.bandwidth,
            "trace_s": fit.trace_s,
            "tau2": fit.tau2,
            "aicc": fit.aicc,
            "bandwidth_policy": fit.bandwidth_policy,
        },
        indent=2,
        sort_keys=True,
    )


def fit_one_trial(config: ScenarioConfig, trial: TrialData, policy: str) -> GwrFit:
    engine = LatticeGwrEngine(
        trial.grid, trial.design.treatment, trial.yields, trial.labels.response
    )
    if policy == AICC_OPTIMAL:
        h = select_bandwidth_on_engine(engine, config.bandwidth_search, config.aicc_formula)
    else:
        h = config.fixed_bandwidth(policy)
    return engine.fit(h, policy, config.aicc_formula)


def _fit_cell(args):
    raw, out_dir, cell = args
    config = ScenarioConfig(raw=raw)
    trials_dir = os.path.join(out_dir, "trials")
    fits_dir = os.path.join(out_dir, "fits")
    stem = _trial_stem(*cell)
    trial = _load_trial(os.path.join(trials_dir, stem))
    for policy in config.bandwidth_policies:
        fit = fit_one_trial(config, trial, policy)
        fstem = os.path.join(fits_dir, f"fit_{stem[6:]}_{policy}")
        with open(fstem + ".csv", "w") as fh:
            fh.write(fit_to_csv(trial, fit))
        with open(fstem + ".json", "w") as fh:
            fh.write(fit_summary_json(fit))
    return cell


def stage_fit(config: ScenarioConfig, out_dir, threads: int = 1):
    """Fit every stored trial under every bandwidth policy."""
    _require_dir(out_dir)
    if not os.path.isdir(os.path.join(out_dir, "trials")):
        raise PipelineError(f"no trials/ directory under {out_dir}; run simulate first")
    os.makedirs(os.path.join(out_dir, "fits"), exist_ok=True)
    jobs = [(config.raw, out_dir, cell) for cell in _cells(config)]
    if threads <= 1:
        for job in jobs:
            _fit_cell(job)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_fit_cell, jobs, chunksize=1))


# score ---------------------------------------------------------------------

SCORE_COLUMNS = [
    "design",
    "response",
    "covariance",
    "eta",
    "bandwidth_policy",
    "replicate",
    "seed",
    "mse0",
    "mse1",
    "mse2",
    "selected_bandwidth",
]


def stage_score(config: ScenarioConfig, out_dir):
    """Compute per-trial per-policy coefficient MSE into scores.csv."""
    _require_dir(out_dir)
    fits_dir = os.path.join(out_dir, "fits")
    if not os.path.isdir(fits_dir):
        raise PipelineError(f"no fits/ directory under {out_dir}; run fit first")
    rows = []
    for cell in _cells(config):
        stem = _trial_stem(*cell)
        trial = _load_trial(os.path.join(out_dir, "trials", stem))
        for policy in config.bandwidth_policies:
            fstem = os.path.join(fits_dir, f"fit_{stem[6:]}_{policy}")
            if not os.path.exists(fstem + ".csv"):
                raise PipelineError(f"missing fit file {fstem}.csv")
            with open(fstem + ".json") as fh:
                summary = json.load(fh)
            beta_hat = _read_fit_betas(fstem + ".csv", trial.truth.beta.shape[1])
            mse = np.mean((trial.truth.beta - beta_hat) ** 2, axis=0)
            rec = {
                "design": trial.labels.design,
                "response": trial.labels.response,
                "covariance": trial.labels.covariance,
                "eta": trial.labels.eta,
                "bandwidth_policy": policy,
                "replicate": trial.labels.replicate,
                "seed": trial.labels.seed,
                "mse0": float(mse[0]),
                "mse1": float(mse[1]),
                "mse2": float(mse[2]) if mse.size > 2 else "",
                "selected_bandwidth": summary["bandwidth"] if policy == AICC_OPTIMAL else "",
            }
            rows.append(rec)
    path = os.path.join(out_dir, "scores.csv")
    with open(path, "w") as fh:
        fh.write(",".join(SCORE_COLUMNS) + "\n")
        for rec in rows:
            fh.write(
                ",".join(
                    repr(rec[c]) if isinstance(rec[c], float) else str(rec[c])
                    for c in SCORE_COLUMNS
                )
                + "\n"
            )
    return path


def _read_fit_betas(path, k):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        want = [f"beta{j}_hat" for j in range(k)]
        if header[2 : 2 + k] != want:
            bad = next((c for c, e in zip(header[2:], want) if c != e), header[2])
            raise PipelineError(f"fit CSV {path}: unexpected column {bad!r}")
        body = np.array([[float(x) for x in row] for row in reader])
    return body[:, 2 : 2 + k]


def load_scores(path):
    """Read scores.csv back into ScenarioResult objects."""
    if not os.path.exists(path):
        raise PipelineError(f"missing scores file {path}")
    results = []
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SCORE_COLUMNS:
            raise PipelineError(
                f"scores CSV {path}: unexpected columns {reader.fieldnames}"
            )
        for rec in reader:
            mse = [float(rec["mse0"]), float(rec["mse1"])]
            if rec["mse2"]:
                mse.append(float(rec["mse2"]))
            results.append(
                ScenarioResult(
                    design=rec["design"],
                    response=rec["response"],
                    covariance=rec["covariance"],
                    eta=float(rec["eta"]),
                    bandwidth_policy=rec["bandwidth_policy"],
                    replicate=int(rec["replicate"]),
                    seed=int(rec["seed"]),
                    mse=tuple(mse),
                    selected_bandwidth=(
                        float(rec["selected_bandwidth"]) if rec["selected_bandwidth"] else None
                    ),
                )
            )
    if not results:
        raise PipelineError(f"scores file {path} contains no rows")
    return results


def results_to_scores_csv(results, path):
    """Write in-memory results in the scores.csv schema."""
    with open(path, "w") as fh:
        fh.write(",".join(SCORE_COLUMNS) + "\n")
        for r in results:
            rec = {
                "design": r.design,
                "response": r.response,
                "covariance": r.covariance,
                "eta": r.eta,
                "bandwidth_policy": r.bandwidth_policy,
                "replicate": r.replicate,
                "seed": r.seed,
                "mse0": r.mse[0],
                "mse1": r.mse[1],
                "mse2": r.mse[2] if len(r.mse) > 2 else "",
                "selected_bandwidth": (
                    r.selected_bandwidth if r.selected_bandwidth is not None else ""
                ),
            }
            fh.write(
                ",".join(
                    repr(rec[c]) if isinstance(rec[c], float) else str(rec[c])
                    for c in SCORE_COLUMNS
                )
                + "\n"
            )


# report --------------------------------------------------------------------


def _eta_label(eta: float) -> str:
    return repr(eta).replace(".", "p")


def stage_report(config: ScenarioConfig, out_dir):
    """Aggregate scores.csv into tables, figures and the manifest."""
    _require_dir(out_dir)
    results = load_scores(os.path.join(out_dir, "scores.csv"))
    tables_dir = os.path.join(out_dir, "tables")
    figures_dir = os.path.join(out_dir, "figures")
    os.makedirs(tables_dir, exist_ok=True)
    os.makedirs(figures_dir, exist_ok=True)
    artifacts = []

    responses = [r for r in config.responses if any(x.response == r for x in results)]
    etas = [e for e in config.etas if any(x.eta == e for x in results)]

    for response in responses:
        for eta in etas:
            sub = [r for r in results if r.eta == eta]
            rows = median_table(sub, response)
            if not rows:
                continue
            path = os.path.join(tables_dir, f"median_{response}_eta{_eta_label(eta)}.csv")
            with open(path, "w") as fh:
                fh.write("covariance,design,coefficient,bw5,bw9,bwAicc\n")
                for row in rows:
                    cells = [
                        repr(row[c]) if c in row else ""
                        for c in ("bw5", "bw9", "bwAicc")
                    ]
                    fh.write(
                        f"{row['covariance']},{row['design']},{row['coefficient']},"
                        + ",".join(cells)
                        + "\n"
                    )
            artifacts.append(path)

    # boxplot five-number summaries
    path = os.path.join(tables_dir, "boxplot_stats.csv")
    with open(path, "w") as fh:
        fh.write("response,eta,covariance,design,bandwidth_policy,coefficient,"
                 "min,q1,median,q3,max,n_outliers\n")
        for response in responses:
            sub0 = [r for r in results if r.response == response]
            k = len(sub0[0].mse)
            for eta in etas:
                for cov in sorted({r.covariance for r in sub0}):
                    for design in sorted({r.design for r in sub0}):
                        for policy in config.bandwidth_policies:
                            vals = [
                                r.ln_mse
                                for r in sub0
                                if r.eta == eta
                                and r.covariance == cov
                                and r.design == design
                                and r.bandwidth_policy == policy
                            ]
                            if not vals:
                                continue
                            for j in range(k):
                                st = boxplot_stats([v[j] for v in vals])
                                fh.write(
                                    f"{response},{eta!r},{cov},{design},{policy},beta{j},"
                                    f"{st.minimum!r},{st.q1!r},{st.median!r},{st.q3!r},"
                                    f"{st.maximum!r},{len(st.outliers)}\n"
                                )
    artifacts.append(path)

    for response in responses:
        try:
            table = anova_fit(build_frame(results, response))
        except AnovaError:
            continue
        path = os.path.join(tables_dir, f"anova_{response}.csv")
        with open(path, "w") as fh:
            fh.write(table.to_csv())
        artifacts.append(path)

    for response in responses:
        for eta in etas:
            if any(r.response == response and r.eta == eta for r in results):
                path = os.path.join(figures_dir, f"lnmse_{response}_eta{_eta_label(eta)}.svg")
                ln_mse_boxplot_svg(results, response, eta, path)
                artifacts.append(path)
        if any(
            r.response == response and r.bandwidth_policy == AICC_OPTIMAL for r in results
        ):
            path = os.path.join(figures_dir, f"bandwidth_hist_{response}.svg")
            bandwidth_histogram_svg(results, response, path)
            artifacts.append(path)

    manifest = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
        "config": config.raw,
        "config_sha256": config.digest(),
        "seed": config.seed,
        "seeding": {
            "field_spawn_key": "(0, response_idx, eta_idx, spatial_idx, replicate)",
            "trial_spawn_key": "(1, design_idx, response_idx, eta_idx, spatial_idx, replicate)",
            "bit_generator": "PCG64",
        },
        "artifacts": [os.path.relpath(a, out_dir) for a in artifacts],
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest_path


def run_pipeline(config: ScenarioConfig, out_dir, threads: int = 1, emit_trials: bool = False):
    """Full experiment through the staged file interfaces."""
    _require_dir(out_dir)
    stage_simulate(config, out_dir, threads)
    stage_fit(config, out_dir, threads)
    stage_score(config, out_dir)
    manifest = stage_report(config, out_dir)
    if not emit_trials:
        shutil.rmtree(os.path.join(out_dir, "trials"), ignore_errors=True)
        shutil.rmtree(os.path.join(out_dir, "fits"), ignore_errors=True)
    return manifest
