"""PNG figures for CLI runs, rendered off-screen with the Agg backend."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .landmarks import LOCALMAX, SADDLE  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def profile_plot(profiles, path, fits=None, title: str = "") -> Path:
    """Log-log radial profiles with error bars and optional fitted power laws."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    fits = fits or {}
    for p in profiles:
        ok = p.estimate > 0
        ax.errorbar(p.r[ok], p.estimate[ok], yerr=p.stderr[ok], fmt="o", ms=4, capsize=2,
                    label=p.label)
        f = fits.get(p.label)
        if f is not None:
            rr = np.geomspace(*f.fit_range, 20)
            ax.plot(rr, np.exp(f.intercept) * rr ** f.slope, "--", lw=1,
                    label=f"slope {f.slope:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("radius")
    ax.set_ylabel("estimate")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def landmark_plot(ls, path, evaluator=None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    if evaluator is not None:
        g = np.linspace(-ls.radius, ls.radius, 300)
        Z = ls.center + g[None, :] + 1j * g[:, None]
        inside = np.abs(Z - ls.center) <= ls.radius
        amp = np.full(Z.shape, np.nan)
        amp[inside] = np.abs(evaluator(Z[inside]).wG)
        ax.imshow(amp, extent=(g[0] + ls.center.real, g[-1] + ls.center.real,
                               g[0] + ls.center.imag, g[-1] + ls.center.imag),
                  origin="lower", cmap="gray")
    z = np.array([lm.position for lm in ls.zeros])
    sad = np.array([lm.position for lm in ls.criticals if lm.kind == SADDLE])
    mx = np.array([lm.position for lm in ls.criticals if lm.kind == LOCALMAX])
    for pts, mk, lab in ((z, "o", "zeros"), (sad, "x", "saddles"), (mx, "^", "maxima")):
        if len(pts):
            ax.plot(pts.real, pts.imag, mk, ms=4, ls="none", label=lab)
    ax.set_aspect("equal")
    ax.legend(fontsize=8, loc="upper right")
    return _save(fig, path)


def spectrogram_plot(sg, marks, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 5))
    ax.imshow(np.abs(sg.values), extent=(sg.x[0], sg.x[-1], sg.xi[0], sg.xi[-1]), origin="lower",
              cmap="viridis")
    for pts, mk, lab in ((marks.minima, "o", "minima"), (marks.saddles, "x", "saddles"),
                         (marks.maxima, "^", "maxima")):
        if len(pts):
            ax.plot(pts.real, pts.imag, mk, ms=3, ls="none", mfc="none", label=lab)
    ax.set_xlabel("x")
    ax.set_ylabel("xi")
    ax.legend(fontsize=8, loc="upper right")
    return _save(fig, path)


def matrix_plot(mat, labels, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4, 3.5))
    im = ax.imshow(np.abs(mat), cmap="magma")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_yticks(range(len(labels)), labels)
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    return _save(fig, path)
