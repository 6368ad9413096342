"""Figures for the CLI report outputs (rendered off-screen to PNG)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Fixed metadata keeps repeated renders byte-identical.
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)


def line_plot(path, x, series, xlabel, ylabel, title=None, logy=False, logx=False):
    """One or more named curves sharing an x axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    _save(fig, path)


def map_plot(path, x, y, z, xlabel, ylabel, zlabel, title=None, logy=False):
    """Color map of z on (y rows, x columns)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(x, y, z, shading="auto")
    fig.colorbar(mesh, ax=ax, label=zlabel)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, path)


def density_matrix_plot(path, rho):
    """Bar chart of populations and the coherence magnitude."""
    fig, ax = plt.subplots(figsize=(4, 3.5))
    labels = ["rho_ee", "rho_gg", "|rho_eg|"]
    values = [rho[0, 0].real, rho[1, 1].real, abs(rho[0, 1])]
    ax.bar(labels, values)
    ax.set_yscale("log")
    ax.set_ylabel("value")
    _save(fig, path)


def fit_plot(path, axis, observed, model, xlabel, ylabel, groups=None):
    """Observed points against the fitted model, one trace per drive level."""
    fig, ax = plt.subplots(figsize=(6, 4))
    groups = np.zeros_like(axis) if groups is None else groups
    for level in np.unique(groups):
        rows = groups == level
        order = np.argsort(axis[rows])
        line = ax.plot(axis[rows][order], model[rows][order], label=f"{level:.3g}")[0]
        ax.plot(axis[rows][order], observed[rows][order], "o", ms=3, color=line.get_color())
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if np.unique(groups).size > 1:
        ax.legend(title="drive", fontsize="small")
    _save(fig, path)
