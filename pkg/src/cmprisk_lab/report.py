"""Figure rendering for bench outputs.

Everything draws through the Agg backend and writes PNG files next to the
delimited output; nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_cif_figure(trajectories, horizon, path):
    """Step plot of per-subject CIF trajectories up to the horizon."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for f in trajectories:
        ts = np.concatenate([[0.0], f.times, [max(horizon, f.times[-1])]]) \
            if len(f.times) else np.array([0.0, horizon])
        vs = np.concatenate([[f.value_before_first], f.values,
                             [f.values[-1]]]) if len(f.times) else \
            np.array([f.value_before_first] * 2)
        ax.step(ts, vs, where="post", alpha=0.6, linewidth=1.0)
    ax.set_xlim(0.0, horizon)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("time")
    ax.set_ylabel("cumulative incidence")
    ax.set_title("predicted cause-1 CIF (%d subjects)" % len(trajectories))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _metric_panel(ax, frame, metric, x_key, series_key):
    for name, sub in frame.groupby(series_key):
        sub = sub.sort_values(x_key)
        x = np.arange(len(sub))
        ax.errorbar(x, sub["%s_mean" % metric], yerr=sub["%s_se" % metric],
                    marker="o", capsize=3, label=str(name))
        ax.set_xticks(x)
        ax.set_xticklabels([str(v) for v in sub[x_key]])
    ax.set_xlabel(x_key)
    ax.set_ylabel(metric)


def save_summary_figures(summary, out_dir):
    """One PNG per metric from an aggregated summary table.

    Expects the canonical grouping (n, p, method): panels over n, the p
    grid on the x axis, one line per method.  With other groupings it
    falls back to a single panel over the row index.
    """
    import os

    paths = []
    metric_names = sorted({c[:-5] for c in summary.columns if c.endswith("_mean")})
    canonical = {"n", "p", "method"} <= set(summary.columns)
    for metric in metric_names:
        if summary["%s_mean" % metric].isna().all():
            continue
        if canonical:
            ns = sorted(summary["n"].unique())
            fig, axes = plt.subplots(1, len(ns), figsize=(4.0 * len(ns), 3.6),
                                     squeeze=False, sharey=True)
            for ax, n in zip(axes[0], ns):
                _metric_panel(ax, summary[summary["n"] == n], metric, "p",
                              "method")
                ax.set_title("n = %d" % n)
            axes[0][0].legend(fontsize=8)
        else:
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            ax.errorbar(np.arange(len(summary)), summary["%s_mean" % metric],
                        yerr=summary["%s_se" % metric], marker="o", capsize=3)
            ax.set_xlabel("group")
            ax.set_ylabel(metric)
        fig.suptitle(metric)
        fig.tight_layout()
        path = os.path.join(out_dir, "summary_%s.png" % metric)
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
