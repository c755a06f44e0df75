"""Standalone SVG figures: ln(MSE) boxplots and bandwidth histograms.

All figures use a fixed 800 x 600 canvas and embed no external assets.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "striptrial"  # stable element ids

import matplotlib.pyplot as plt

from .gwr import AICC_OPTIMAL, FIXED5, FIXED9
from .metrics import bandwidth_histogram, boxplot_stats

_POLICY_LABEL = {FIXED5: "5", FIXED9: "9", AICC_OPTIMAL: "AICc"}
_COV_LABEL = {"ns": "NS", "ar1": "AR1xAR1", "matern": "Matern"}


def _bxp_dict(stats):
    return {
        "label": stats.label,
        "whislo": stats.minimum,
        "q1": stats.q1,
        "med": stats.median,
        "q3": stats.q3,
        "whishi": stats.maximum,
        "fliers": list(stats.outliers),
    }


def ln_mse_boxplot_svg(results, response: str, eta: float, path):
    """Grouped boxplots of ln(MSE) per coefficient for one response/eta."""
    selected = [r for r in results if r.response == response and r.eta == eta]
    if not selected:
        raise ValueError(f"no results for response={response}, eta={eta}")
    k = len(selected[0].mse)
    covariances = sorted({r.covariance for r in selected})
    designs = sorted({r.design for r in selected})
    policies = [p for p in (FIXED5, FIXED9, AICC_OPTIMAL)
                if any(r.bandwidth_policy == p for r in selected)]

    fig, axes = plt.subplots(k, 1, figsize=(8, 6), dpi=100, sharex=True)
    if k == 1:
        axes = [axes]
    for j, ax in enumerate(axes):
        groups = []
        for cov in covariances:
            for pol in policies:
                for design in designs:
                    vals = [
                        r.ln_mse[j]
                        for r in selected
                        if r.covariance == cov
                        and r.bandwidth_policy == pol
                        and r.design == design
                    ]
                    if vals:
                        label = f"{_COV_LABEL.get(cov, cov)}\n{_POLICY_LABEL.get(pol, pol)}\n{design[:4]}"
                        groups.append(_bxp_dict(boxplot_stats(vals, label)))
        ax.bxp(groups, showfliers=True)
        ax.set_ylabel(f"ln MSE b{j}")
        ax.tick_params(axis="x", labelsize=6)
    fig.suptitle(f"{response} response, eta={eta}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def bandwidth_histogram_svg(results, response: str, path):
    """Histograms of AICc-selected bandwidths, one panel per covariance."""
    selected = [
        r
        for r in results
        if r.response == response
        and r.bandwidth_policy == AICC_OPTIMAL
        and r.selected_bandwidth is not None
    ]
    if not selected:
        raise ValueError(f"no AICc selections for response={response}")
    covariances = sorted({r.covariance for r in selected})

    fig, axes = plt.subplots(len(covariances), 1, figsize=(8, 6), dpi=100, sharex=True)
    if len(covariances) == 1:
        axes = [axes]
    for cov, ax in zip(covariances, axes):
        counts = bandwidth_histogram([r for r in selected if r.covariance == cov])
        ax.bar(list(counts.keys()), list(counts.values()), width=1.0, align="edge")
        ax.set_ylabel(_COV_LABEL.get(cov, cov))
    axes[-1].set_xlabel("selected bandwidth (grid units)")
    fig.suptitle(f"AICc bandwidth selections, {response} response")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
