"""Matplotlib renderers for the report paths.  All figures are written to
files (Agg backend); nothing is shown interactively."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, fig_dir: str, name: str) -> str:
    os.makedirs(fig_dir, exist_ok=True)
    path = os.path.join(fig_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def certificate_figure(cert, fig_dir: str, name: str = "certificate.png") -> str:
    """log10 |u| and the potential word across the window."""
    sites = np.arange(cert.realization.n_min, cert.realization.n_max + 1)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(sites, cert.log_u / np.log(10.0), lw=1.0)
    ax1.set_ylabel("log10 u(n)")
    ax1.set_title(f"ground state at E = {cert.energy:.8f}")
    ax1.axvline(cert.transit_end, color="gray", ls="--", lw=0.8)
    ax2.step(sites, cert.realization.potential, where="mid", lw=0.8)
    ax2.set_ylabel("V(n)")
    ax2.set_xlabel("n")
    return _save(fig, fig_dir, name)


def sections_figure(att, rep, fig_dir: str, name: str = "sections.png") -> str:
    """Attracting / repelling invariant sections over the circle."""
    G = att.grid_size
    thetas = np.arange(G) / G
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(thetas, att.values, lw=1.0, label="attracting")
    ax.plot(thetas, rep.values, lw=1.0, label="repelling")
    ax.set_xlabel("theta")
    ax.set_ylabel("x")
    ax.legend()
    return _save(fig, fig_dir, name)


def spectrum_figure(report: dict, fig_dir: str, name: str = "spectrum.png") -> str:
    """Witnessed grid energies and the resulting interval estimate."""
    grid = np.array(report["grid"])
    found = np.array([s["found"] for s in report["stats"]])
    fig, ax = plt.subplots(figsize=(8, 2.5))
    ax.scatter(grid[found], np.zeros(found.sum()), s=4, label="witnessed")
    ax.scatter(grid[~found], np.full((~found).sum(), 0.3), s=4, label="no witness")
    for lo, hi in report["estimate"]:
        ax.plot([lo, hi], [-0.3, -0.3], lw=4)
    ax.set_yticks([])
    ax.set_xlabel("E")
    ax.legend(loc="upper right")
    return _save(fig, fig_dir, name)


def tree_figure(tree, fig_dir: str, name: str = "tree.png") -> str:
    """Branch counts per depth on a log2 axis."""
    rows = tree.stats_rows()
    depths = [d for d, _ in rows]
    counts = [c for _, c in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(depths, counts, "o-", base=2, ms=3)
    ax.set_xlabel("depth")
    ax.set_ylabel("branches")
    ax.set_title(f"N_observed = {tree.n_observed}")
    return _save(fig, fig_dir, name)


def mfunction_figure(scan: dict, fig_dir: str, name: str = "mfunction.png") -> str:
    """m(z) on the scan grid."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(scan["z"], scan["m"], lw=1.0)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("z")
    ax.set_ylabel("m(z)")
    return _save(fig, fig_dir, name)


def sweep_figure(report: dict, fig_dir: str, name: str = "sweep.png") -> str:
    """Residual and top-eigenvalue gap across a sweep's energy grid."""
    rows = [r for r in report["rows"] if r.get("ok")]
    if not rows:
        rows = report["rows"]
    a = [r["a"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.semilogy(a, [max(r.get("residual", np.nan), 1e-20) for r in rows], "o-", ms=3)
    ax1.set_ylabel("residual")
    ax2.plot(a, [r.get("top_gap", np.nan) for r in rows], "o-", ms=3)
    ax2.set_ylabel("top eigenvalue - E")
    ax2.set_xlabel("a")
    return _save(fig, fig_dir, name)
