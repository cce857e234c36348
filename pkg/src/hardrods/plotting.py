"""Matplotlib figures written next to the tabular output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _style(ax):
    ax.tick_params(direction="in", top=True, right=True)
    for side in ("top", "right", "bottom", "left"):
        ax.spines[side].set_linewidth(0.8)


def plot_fan(times, x, path, title=None, kinks=None):
    """Superimposed centre-of-mass maps ``t -> x_i(t)``, time horizontal."""
    fig, ax = plt.subplots(figsize=(8, 6))
    ax.plot(times, x, color="k", lw=0.5)
    if kinks is not None and len(kinks):
        ax.plot(kinks[:, 0], kinks[:, 1], ".", color="tab:red", ms=2)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$x_i(t)$")
    ax.set_xlim(times[0], times[-1])
    if title:
        ax.set_title(title)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bench(rows, path):
    """Median query time against N, log-log."""
    n = np.array([r["n"] for r in rows], dtype=float)
    f = np.array([r["formula_median_s"] for r in rows], dtype=float)
    o = np.array([r["oracle_median_s"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(n, f, "o-", color="k", label="sorting formula")
    ok = np.isfinite(o)
    if ok.any():
        ax.loglog(n[ok], o[ok], "s--", color="tab:blue", label="event-driven replay")
    ax.set_xlabel("N")
    ax.set_ylabel("median time [s]")
    ax.legend(frameon=False)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
