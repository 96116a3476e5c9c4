"""Figures for the CLI reports. Rendered off-screen with the Agg backend."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}
# no Software/date entries, so repeated runs give identical files
_PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)
    return path


def sweep_figure(rows: list[dict], path) -> Path:
    """Average fidelity and weighted purity against the polar angle, one line per azimuth."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7.0, 2.8), sharex=True)
        phis = sorted({r["phi_b"] for r in rows})
        for phi in phis:
            sel = sorted((r for r in rows if r["phi_b"] == phi), key=lambda r: r["theta_b"])
            th = np.array([r["theta_b"] for r in sel]) / math.pi
            f = np.array([r["f_avg"] for r in sel])
            pur = np.array([r["p_plus"] * r["purity_plus"] + r["p_minus"] * r["purity_minus"] for r in sel])
            label = f"phi_b = {phi / math.pi:.3g} pi"
            axes[0].plot(th, f, "o-", ms=3, label=label)
            axes[1].plot(th, pur, "o-", ms=3, label=label)
        axes[0].set_ylabel("average fidelity")
        axes[1].set_ylabel("purity (branch weighted)")
        for ax in axes:
            ax.set_xlabel(r"$\theta_b / \pi$")
            ax.grid(alpha=0.3)
        axes[0].legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def landscape_figure(landscape, phi_analytic: float, phi_star: float, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        arr = np.asarray(landscape, dtype=float)
        ax.plot(arr[:, 0], arr[:, 1], ".-", lw=1)
        ax.axvline(phi_analytic, color="0.5", ls="--", lw=1, label=f"analytic {phi_analytic:.4f}")
        ax.axvline(phi_star, color="C3", lw=1, label=f"optimum {phi_star:.4f}")
        ax.set_xlabel(r"compensation angle $\varphi$ [rad]")
        ax.set_ylabel("probe average fidelity")
        ax.legend(loc="lower right")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def wigner_figure(xs, ps, w, path, title: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.4))
        lim = float(np.abs(w).max()) or 1.0
        im = ax.pcolormesh(xs, ps, w, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="auto")
        fig.colorbar(im, ax=ax, label="W(x, p)")
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def wigner_pair_figure(xs, ps, grids: dict, path) -> Path:
    """Side-by-side Wigner maps sharing one colour scale."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(grids), figsize=(3.4 * len(grids), 3.2), squeeze=False)
        lim = max(float(np.abs(g).max()) for g in grids.values()) or 1.0
        for ax, (name, g) in zip(axes[0], grids.items()):
            im = ax.pcolormesh(xs, ps, g, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="auto")
            ax.set_aspect("equal")
            ax.set_title(name)
            ax.set_xlabel("x")
        axes[0][0].set_ylabel("p")
        fig.colorbar(im, ax=axes[0].tolist(), shrink=0.85)
        return _save(fig, path)


def modes_figure(phases, freqs, operating_phase: float, path) -> Path:
    """Mode frequencies against the junction phase, with the operating point marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        freqs = np.asarray(freqs)
        for n in range(freqs.shape[1]):
            ax.plot(phases, freqs[:, n] / (2 * math.pi), lw=1.2, label=f"mode {n}")
        ax.axvline(operating_phase, color="0.4", ls="--", lw=1)
        ax.set_xlabel("junction phase [rad]")
        ax.set_ylabel(r"$\omega_n / 2\pi$ [GHz]")
        ax.legend(loc="best")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)
