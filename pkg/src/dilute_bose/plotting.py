"""PNG renderings of the CSV tables written by the command line."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def scattering_figure(r: np.ndarray, w: np.ndarray, p: np.ndarray, wp: np.ndarray, a: float, path: Path) -> Path:
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.6))
    left.plot(r, w, lw=1.5)
    tail = r > 0
    left.plot(r[tail], np.minimum(a / r[tail], 1.0), ls="--", lw=1, label="a / r")
    left.set_xlabel("r")
    left.set_ylabel("w(r)")
    left.legend()
    right.loglog(p, np.abs(wp), lw=1.5, label="|w_p|")
    right.loglog(p, 4 * np.pi * a / p ** 2, ls="--", lw=1, label="4 pi a / p^2")
    right.set_xlabel("p")
    right.legend()
    return _save(fig, path)


def delta_f_figure(rho: Sequence[float], delta_f: Sequence[float], a: float, path: Path) -> Path:
    rho = np.asarray(rho)
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.loglog(rho, delta_f, marker="o", lw=1.5, label="leading correction")
    ax.loglog(rho, 8 * np.pi * a * rho ** 2, ls="--", lw=1, label="8 pi a rho^2")
    ax.loglog(rho, 4 * np.pi * a * rho ** 2, ls=":", lw=1, label="4 pi a rho^2")
    ax.set_xlabel("rho")
    ax.legend()
    return _save(fig, path)


def bridge_figure(x: np.ndarray, q: np.ndarray, dq: np.ndarray, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.plot(x, q, label="q")
    ax.plot(x, dq, ls="--", label="q'")
    ax.set_xlabel("x")
    ax.legend()
    return _save(fig, path)


def sweep_figure(betas: Sequence[float], f_var: Sequence[float], f_exact: Sequence[float], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.plot(betas, f_var, marker="o", label="trial state")
    ax.plot(betas, f_exact, marker="s", label="exact")
    ax.set_xlabel("beta")
    ax.set_ylabel("free energy")
    ax.legend()
    return _save(fig, path)
