"""Matplotlib rendering of the report outputs.

Figures are a convenience view of the delimited outputs (the CSV/JSON files
are the contract); each renderer takes the already-written data and saves a
PNG next to it.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_spectrum", "render_rmse_curves"]

_STYLE = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "axes.labelsize": 10,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
}

_METHOD_FMT = {
    "proposed": ("o-", "C0"),
    "ongrid-ablation": ("s--", "C1"),
    "single-snapshot-ablation": ("^:", "C2"),
}


def render_spectrum(path, angles_deg, amplitude, true_doas_deg=None, title=None):
    """Normalized spatial spectrum with optional true-DoA markers."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(angles_deg, amplitude, "-", color="C0", lw=1.2)
        if true_doas_deg is not None:
            for k, doa in enumerate(np.atleast_1d(true_doas_deg)):
                ax.axvline(doa, color="C3", ls="--", lw=0.9,
                           label="true DoA" if k == 0 else None)
            ax.legend(loc="upper right")
        ax.set_xlabel("angle (deg)")
        ax.set_ylabel("normalized amplitude")
        ax.set_ylim(-0.02, 1.05)
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_rmse_curves(path, summary_rows, title=None):
    """RMSE-versus-SNR curves, one line per method, log-scale RMSE axis."""
    methods = sorted({row["method"] for row in summary_rows})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for method in methods:
            rows = sorted((r for r in summary_rows if r["method"] == method),
                          key=lambda r: r["snr_db"])
            snr = [r["snr_db"] for r in rows]
            rmse = [r["rmse_mean"] for r in rows]
            lo = [r["rmse_ci95"][0] for r in rows]
            hi = [r["rmse_ci95"][1] for r in rows]
            fmt, color = _METHOD_FMT.get(method, ("d-.", "C4"))
            ax.plot(snr, rmse, fmt, color=color, label=method, ms=4)
            ax.fill_between(snr, lo, hi, color=color, alpha=0.15, lw=0)
        ax.set_yscale("log")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("RMSE (deg)")
        ax.legend()
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
