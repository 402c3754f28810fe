"""Static figures for benchmark output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402


def plot_bench(records, path, fit=None):
    """Log-log chart of pooling time (left axis) and multiply count (right axis)."""
    ok = [r for r in records if r.ok]
    n = np.array([r.node_count for r in ok], dtype=float)
    t = np.array([r.mean_time_seconds for r in ok])
    s = np.array([r.std_time_seconds for r in ok])
    m = np.array([r.multiply_count for r in ok], dtype=float)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(n, t, yerr=s, marker="o", color="tab:blue", capsize=3, label="batch time")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("nodes per graph")
    ax.set_ylabel("seconds per batch", color="tab:blue")
    ax.grid(True, which="both", alpha=0.3)

    ax2 = ax.twinx()
    ax2.plot(n, m, marker="s", ls="--", color="tab:orange", label="multiplies")
    ax2.set_yscale("log")
    ax2.set_ylabel("multiplies per batch", color="tab:orange")

    title = f"HaarPool ({ok[0].method})" if ok else "HaarPool"
    if fit is not None:
        title += f", mults slope {fit.slope:.2f}"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)
    return path
