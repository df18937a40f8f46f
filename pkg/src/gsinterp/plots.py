"""Figure rendering for the benchmark commands.

Every report path of the CLI gets a PNG next to its CSV. Rendering is
headless (Agg) and file-only; nothing here opens a window.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def render_synth(result, path):
    """Mean reconstruction SNR against sparsity, one curve per sampling rate."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    by_p = {}
    for p, frac, ratio, db, n_inf, n_trials in result.aggregate:
        by_p.setdefault(p, []).append((frac, db))
    for p, pts in sorted(by_p.items()):
        pts.sort()
        xs = [100 * f for f, _ in pts]
        ys = [d for _, d in pts]
        ax.plot(xs, ys, marker="o", label=f"p = {p:g}")
    ax.set_xlabel("sparsity factor k/N (%)")
    ax.set_ylabel("mean reconstruction SNR (dB)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_lemma1(result, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    ax1.axhline(4.0, color="r", ls="--", lw=0.8)
    ax1.axhline(-4.0, color="r", ls="--", lw=0.8)
    ax1.plot(result.component, result.z_scores, ".", ms=4)
    ax1.set_xlabel("spectral component")
    ax1.set_ylabel("studentized mean deviation")
    ax2.bar(["empirical", "predicted"],
            [result.trace_variance, result.expected_trace_variance],
            color=["C0", "C2"])
    ax2.set_ylabel("trace variance of subsampled spectrum")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_contraction(result, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for case in result.cases:
        ks = np.arange(case.error_norms.shape[0])
        ax.semilogy(ks, case.error_norms, marker="o",
                    label=f"lam*p = {case.lam_p:g}")
        ax.semilogy(ks, case.error_norms[0] * np.abs(case.expected_ratio) ** ks,
                    ls="--", color=ax.lines[-1].get_color(), lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean-error norm (dashed: predicted ratio)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_variance(result, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ks = np.arange(1, result.mse.shape[0] + 1)
    ax.semilogy(ks, result.mse, marker="o", label="MSE")
    ax.fill_between(ks, np.maximum(result.mse - 2 * result.mse_stderr, 1e-12),
                    result.mse + 2 * result.mse_stderr, alpha=0.25)
    ax.semilogy(ks, np.maximum(result.sigma2, 1e-12), marker="s", label="trace variance")
    ax.semilogy(ks, result.thresholds, ls="--", label="threshold")
    ax.set_xlabel("iteration")
    ax.set_ylabel("value")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_recsys(report, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    folds = np.arange(report.fold_nrmse.shape[0])
    ax.bar(folds, report.fold_nrmse, color="C0", label="per fold")
    ax.axhline(report.mean, color="C3", ls="--",
               label=f"mean = {report.mean:.4f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("normalized RMSE")
    ax.set_title(f"{report.dataset} / {report.method}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
