"""Static figure rendering for experiment outputs.

Figures are summaries of the delimited outputs, rendered to PNG next to
them; the CSVs stay the primary artifact.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import aggregate_rows, eta_quantile_rows


def _eta_panel(ax, quantiles):
    its = [r["iteration"] for r in quantiles]
    ax.fill_between(
        its,
        [r["eta_q25"] for r in quantiles],
        [r["eta_q75"] for r in quantiles],
        alpha=0.3,
        label="interquartile",
    )
    ax.plot(its, [r["eta_median"] for r in quantiles], marker="o", ms=3, label="median")
    ax.plot(its, [r["eta_min"] for r in quantiles], ls=":", lw=0.8, color="gray")
    ax.plot(its, [r["eta_max"] for r in quantiles], ls=":", lw=0.8, color="gray")
    ax.set_xlabel("iteration")
    ax.set_ylabel("regularization exponent")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False)


def render_run_figures(config, replicates, out_dir):
    """Error (or accuracy) curve plus the exponent quantile band."""
    agg = aggregate_rows(config, replicates)
    quant = eta_quantile_rows(config, replicates)
    paths = []

    if config.kind == "blr":
        fig, ax = plt.subplots(figsize=(6, 4))
        its = [r["iteration"] for r in agg if r["mean_accuracy"] is not None]
        acc = [r["mean_accuracy"] for r in agg if r["mean_accuracy"] is not None]
        ax.plot(its, acc, marker="o", ms=3)
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean test accuracy")
        ax.set_title(config.label)
        fig.tight_layout()
        path = out_dir / "fig_accuracy.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    else:
        rows = [r for r in agg if r["mean_log_sq_error"] is not None]
        if rows:
            fig, ax = plt.subplots(figsize=(6, 4))
            its = np.array([r["iteration"] for r in rows])
            mean = np.array([r["mean_log_sq_error"] for r in rows])
            std = np.array(
                [r["std_log_sq_error"] if r["std_log_sq_error"] is not None else 0.0 for r in rows]
            )
            ax.plot(its, mean, marker="o", ms=3, label="mean log squared error")
            ax.fill_between(its, mean - std, mean + std, alpha=0.25, label="one std")
            ax.set_xlabel("iteration")
            ax.set_ylabel("log squared error")
            ax.set_title(config.label)
            ax.legend(frameon=False)
            fig.tight_layout()
            path = out_dir / "fig_error.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            paths.append(path)

    if quant:
        fig, ax = plt.subplots(figsize=(6, 4))
        _eta_panel(ax, quant)
        ax.set_title(config.label)
        fig.tight_layout()
        path = out_dir / "fig_eta.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def render_emd_figure(reports, out_dir):
    """Total variation against its contraction bound, per schedule."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, steps in reports.items():
        its = [r.step for r in steps]
        color = ax.semilogy(its, [r.tv for r in steps], marker="o", ms=3, label=f"{label} tv")[0].get_color()
        ax.semilogy(its, [r.bound for r in steps], ls="--", color=color, label=f"{label} bound")
    ax.set_xlabel("step")
    ax.set_ylabel("total variation")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = out_dir / "fig_tv_bound.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
