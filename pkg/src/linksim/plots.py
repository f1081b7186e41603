"""Figure rendering for the CLI report path.

Every protocol that writes a CSV also gets a PNG next to it (unless
figures are disabled).  Rendering is file-only via the Agg backend.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .lattice import Lattice  # noqa: E402

FIG_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return str(path)


def plot_timeseries(path, times, series, xlabel="t (us)", ylabel="", title=""):
    """series: dict label -> array."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in series.items():
        ax.plot(times, ys, label=label, linewidth=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    return _save(fig, path)


def plot_scan(path, xs, series, xlabel, ylabel, title="", logy=False):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in series.items():
        ax.plot(xs, ys, label=label, linewidth=1.2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_spectrum(path, energies, title="energy levels"):
    fig, ax = plt.subplots(figsize=(4.0, 5.0))
    for e in energies:
        ax.hlines(e, 0.1, 0.9, linewidth=1.0)
    ax.set_ylabel("energy (MHz)")
    ax.set_xticks([])
    ax.set_title(title)
    return _save(fig, path)


def plot_fluxmap(path, lattice: Lattice, flux, title="electric flux"):
    """Draw links colored/thickened by |flux|, labels with signed flux."""
    fig, ax = plt.subplots(figsize=(1.2 * _extent(lattice, 0) + 1.5,
                                    1.2 * _extent(lattice, 1) + 1.5))
    amax = max(np.abs(flux).max(), 1e-9)
    cmap = plt.get_cmap("coolwarm")
    for l in lattice.links:
        if l.orientation == "h":
            xs = [(l.mx - 1) / 2, (l.mx + 1) / 2]
            ys = [l.my / 2, l.my / 2]
        else:
            xs = [l.mx / 2, l.mx / 2]
            ys = [(l.my - 1) / 2, (l.my + 1) / 2]
        f = flux[l.index]
        ax.plot(xs, ys, color=cmap(0.5 + 0.5 * f / amax),
                linewidth=1.0 + 6.0 * abs(f) / amax, solid_capstyle="round")
        ax.annotate(f"{f:+.2f}", (np.mean(xs), np.mean(ys)),
                    fontsize=6, ha="center", va="center")
    for v in lattice.vertices:
        ax.plot(v.x / 2, v.y / 2, "ko", markersize=3)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    return _save(fig, path)


def _extent(lattice, axis):
    vals = [(l.mx if axis == 0 else l.my) / 2 for l in lattice.links]
    return max(vals) - min(vals) + 1


def plot_tuning(path, rows, title="flux tuning"):
    xs = [r["flux"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(10.0, 3.2))
    axes[0].plot(xs, [r["mu_over_Omega"] for r in rows])
    axes[0].set_ylabel("mu / Omega")
    axes[1].plot(xs, [r["J_over_Omega"] for r in rows], label="J/Omega")
    axes[1].plot(xs, [r["V_over_Omega"] for r in rows], label="V/Omega")
    axes[1].legend(fontsize=8)
    axes[2].plot(xs, np.clip([r["J_over_V"] for r in rows], -50, 50))
    axes[2].set_ylabel("J / V (clipped)")
    for ax in axes:
        ax.set_xlabel("flux (phi_ext / Phi0)")
    fig.suptitle(title)
    return _save(fig, path)
