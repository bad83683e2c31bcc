"""Headless figure rendering for report output.

All functions write PNG files and return the path written.  Rendering uses
the Agg backend and fixed histogram binning so that a rerun with the same
inputs produces identical images.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import pyplot as plt

from .constants import TWO_PI

__all__ = [
    "plot_levels",
    "plot_field_map",
    "plot_simulation",
    "plot_zeta_histograms",
    "plot_posterior_snapshots",
    "plot_error_curves",
]

_PNG_METADATA = {"Software": "spindetect"}

_SPIN_COLOR = "#1f4e9e"
_NOSPIN_COLOR = "#555555"


def _save(fig, path):
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def plot_levels(sweep, path, title: str):
    """Energy-level diagram: E/h in GHz against field in mT."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    b_mt = np.asarray(sweep.b0_values) * 1e3
    n_levels = sweep.energies.shape[1]
    cmap = plt.get_cmap("viridis")
    for j in range(n_levels):
        color = cmap(j / max(n_levels - 1, 1))
        ax.plot(b_mt, sweep.energies[:, j] / TWO_PI / 1e9, lw=1.2, color=color)
        ax.annotate(
            sweep.labels[j],
            xy=(b_mt[-1], sweep.energies[-1, j] / TWO_PI / 1e9),
            xytext=(4, 0), textcoords="offset points",
            fontsize=6, va="center", color=color,
        )
    ax.set_xlabel("B$_0$ (mT)")
    ax.set_ylabel("E/h (GHz)")
    ax.set_title(title)
    return _save(fig, path)


def plot_field_map(geom, x_values, y_values, bx, by, path, spin_point=None):
    """Magnitude map of the wire's oscillating field over a cross-section."""
    fig, ax = plt.subplots(figsize=(6.4, 5.2), constrained_layout=True)
    mag = np.hypot(bx, by)
    mesh = ax.pcolormesh(
        np.asarray(x_values) * 1e9,
        np.asarray(y_values) * 1e9,
        mag * 1e6,
        shading="auto",
        cmap="magma",
    )
    fig.colorbar(mesh, ax=ax, label="|B| (µT)")
    half_w = geom.width / 2 * 1e9
    half_t = geom.thickness / 2 * 1e9
    ax.add_patch(plt.Rectangle(
        (-half_w, -half_t), 2 * half_w, 2 * half_t,
        facecolor="white", edgecolor="black", lw=0.8,
    ))
    if spin_point is not None:
        ax.plot(spin_point[0] * 1e9, spin_point[1] * 1e9, "x",
                color="#00d0ff", ms=8, mew=2)
    ax.set_xlabel("x (nm)")
    ax.set_ylabel("y (nm)")
    ax.set_aspect("equal")
    ax.set_title("Zero-point current field map")
    return _save(fig, path)


def plot_simulation(zeta_spin, zeta_nospin, mean_spin, mean_nospin,
                    post_spin, post_nospin, traj, tau_1, path):
    """Three-panel record summary: integrated signal, posterior, spin state."""
    fig, axes = plt.subplots(3, 1, figsize=(7.0, 8.5), sharex=True,
                             constrained_layout=True)

    ax = axes[0]
    ax.plot(zeta_spin.times / tau_1, zeta_spin.zeta, color=_SPIN_COLOR,
            lw=0.8, label="spin")
    ax.plot(zeta_nospin.times / tau_1, zeta_nospin.zeta, color=_NOSPIN_COLOR,
            lw=0.8, label="no spin")
    ax.plot(zeta_spin.times / tau_1, mean_spin, color=_SPIN_COLOR,
            ls=":", lw=1.4)
    ax.plot(zeta_nospin.times / tau_1, mean_nospin, color=_NOSPIN_COLOR,
            ls=":", lw=1.4)
    ax.set_ylabel(r"$\zeta(t)$")
    ax.legend(loc="upper left", frameon=False)

    ax = axes[1]
    ax.plot(post_spin.times / tau_1, post_spin.p_spin, color=_SPIN_COLOR,
            lw=0.9, label="spin record")
    ax.plot(post_nospin.times / tau_1, post_nospin.p_spin, color=_NOSPIN_COLOR,
            lw=0.9, label="no-spin record")
    ax.set_ylabel("P(spin | record)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="center right", frameon=False)

    ax = axes[2]
    ax.plot(traj.times / tau_1, traj.sigma_z, color=_SPIN_COLOR, lw=0.8)
    ax.set_ylabel(r"$\langle\sigma_z\rangle$")
    ax.set_xlabel(r"t / $\tau_1$")
    ax.set_ylim(-1.05, 1.05)
    return _save(fig, path)


def _gaussian(x, mu, sigma):
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


def plot_zeta_histograms(zeta_spin, zeta_nospin, threshold, eta, path):
    """Final-time distributions of the integrated signal with Gaussian fits."""
    fig, ax = plt.subplots(figsize=(6.8, 4.6), constrained_layout=True)
    both = np.concatenate([zeta_spin, zeta_nospin])
    lo, hi = both.min(), both.max()
    pad = 0.05 * (hi - lo if hi > lo else 1.0)
    bins = np.linspace(lo - pad, hi + pad, 61)
    grid = np.linspace(bins[0], bins[-1], 400)
    for values, color, label in (
        (zeta_spin, _SPIN_COLOR, "spin"),
        (zeta_nospin, _NOSPIN_COLOR, "no spin"),
    ):
        ax.hist(values, bins=bins, density=True, alpha=0.45, color=color,
                label=label)
        mu, sigma = float(np.mean(values)), float(np.std(values))
        if sigma > 0:
            ax.plot(grid, _gaussian(grid, mu, sigma), color=color, lw=1.5)
    ax.axvline(threshold, color="black", ls=":", lw=1.2)
    ax.set_xlabel(r"$\zeta$")
    ax.set_ylabel("density")
    ax.set_title(f"Integrated-signal distributions (η = {eta:g})")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_posterior_snapshots(snapshots, tau_1, eta, path):
    """Histogram grid of the posterior spin probability at snapshot times."""
    n = len(snapshots)
    if n == 0:
        raise ValueError("no snapshots to plot")
    cols = min(3, n)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3.1 * cols, 2.6 * rows),
                             constrained_layout=True, squeeze=False)
    bins = np.linspace(0.0, 1.0, 41)
    for k, snap in enumerate(snapshots):
        ax = axes[k // cols][k % cols]
        ax.hist(snap.posterior_spin, bins=bins, alpha=0.5, color=_SPIN_COLOR)
        ax.hist(snap.posterior_nospin, bins=bins, alpha=0.5, color=_NOSPIN_COLOR)
        ax.set_yscale("log")
        ax.set_title(f"t = {snap.time / tau_1:.2g} τ₁", fontsize=9)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].set_axis_off()
    fig.suptitle(f"Posterior spin probability (η = {eta:g})")
    return _save(fig, path)


def plot_error_curves(curves, path):
    """Semilog assignment-error curves per detector efficiency.

    ``curves`` is a list of dicts with keys ``eta``, ``times_tau1``,
    ``analytic``, ``threshold``, ``bayes``.
    """
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    cmap = plt.get_cmap("coolwarm")
    n = len(curves)
    floor = 1e-6
    for i, curve in enumerate(curves):
        color = cmap(0.15 + 0.7 * (i / max(n - 1, 1)))
        t = np.asarray(curve["times_tau1"])
        ax.semilogy(t, np.maximum(curve["analytic"], floor), color=color,
                    lw=1.8, label=f"η = {curve['eta']:g} (analytic)")
        ax.semilogy(t, np.maximum(curve["threshold"], floor), color=color,
                    lw=1.0, ls="--")
        ax.semilogy(t, np.maximum(curve["bayes"], floor), color=color,
                    lw=1.0, alpha=0.75)
    ax.set_xlabel(r"t / $\tau_1$")
    ax.set_ylabel("assignment error probability")
    ax.set_ylim(bottom=floor)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Threshold (dashed), Bayesian (solid, noisy), analytic (bold)")
    return _save(fig, path)
