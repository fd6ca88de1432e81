"""Figure rendering for the CLI report paths.

Every figure is written as a PNG next to the delimited output it
illustrates; the data products (CSV/JSON) remain the primary interface.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "fig_charfun",
    "fig_spectrum",
    "fig_asym_errors",
    "fig_oracle",
    "fig_verify",
]

_DPI = 130


def _finish(fig, path: str, manifest: str | None = None):
    fig.tight_layout()
    meta = {"Description": f"manifest: {manifest}"} if manifest else None
    fig.savefig(path, dpi=_DPI, metadata=meta)
    plt.close(fig)


def fig_charfun(s_values, log_magnitudes, path: str, x_eval: float,
                manifest: str | None = None):
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    ax.plot(s_values, log_magnitudes, lw=0.9)
    ax.set_xlabel("s")
    ax.set_ylabel("log |W(s^4)|")
    ax.set_title(f"characteristic function along the real s axis (x_eval={x_eval})")
    ax.grid(alpha=0.3)
    _finish(fig, path, manifest)


def fig_spectrum(records, grids, path: str, manifest: str | None = None):
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    s_real = [r.s.real for r in records
              if abs(r.lam.imag) <= 1e-8 * (1 + abs(r.lam)) and r.lam.real >= 0]
    neg = [r.lam.real for r in records
           if abs(r.lam.imag) <= 1e-8 * (1 + abs(r.lam)) and r.lam.real < 0]
    if grids:
        for family, grid in grids.items():
            style = dict(color="0.75", lw=0.8) if family == "prime" else \
                dict(color="0.85", lw=0.8, ls="--")
            for sv in grid.entries:
                if s_real and sv <= 1.1 * max(s_real):
                    ax.axvline(sv, **style)
    ax.plot(s_real, np.zeros(len(s_real)), "o", ms=5, label="computed s_n")
    ax.set_xlabel("s = lambda^(1/4)")
    ax.set_yticks([])
    title = f"{len(s_real)} nonnegative eigenvalues"
    if neg:
        title += f" (+{len(neg)} negative: min lambda = {min(neg):.4g})"
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    _finish(fig, path, manifest)


def fig_asym_errors(match_report, path: str, manifest: str | None = None):
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    errs = match_report.window_errors
    if errs:
        ax.semilogy(range(len(errs)), errs, "o-")
        med = match_report.median_error
        if med:
            ax.axhline(med, color="r", lw=0.8,
                       label=f"median {med:.3g}, tau {match_report.tau:+.2f}")
            ax.legend(fontsize=8)
    ax.set_xlabel("matched records in the index window, by s")
    ax.set_ylabel("relative error vs asymptotic grid")
    ax.grid(alpha=0.3)
    _finish(fig, path, manifest)


def fig_oracle(eigs, path: str, n_shown: int = 20, manifest: str | None = None):
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    w = np.asarray(eigs)[:n_shown]
    ax.plot(w.real, w.imag, "x")
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    ax.set_title("discrete-operator eigenvalues (smallest |lambda|)")
    ax.grid(alpha=0.3)
    _finish(fig, path, manifest)


def fig_verify(report: dict, path: str, manifest: str | None = None):
    checks = report["checks"]
    fig, ax = plt.subplots(figsize=(6.4, 0.42 * len(checks) + 1.2))
    ax.axis("off")
    ax.set_title("verification summary", loc="left")
    for i, (name, res) in enumerate(checks.items()):
        ok = res.get("passed", False)
        ax.text(0.02, 1.0 - (i + 1) / (len(checks) + 1), name,
                transform=ax.transAxes, fontsize=9, family="monospace")
        ax.text(0.78, 1.0 - (i + 1) / (len(checks) + 1),
                "PASS" if ok else "FAIL",
                transform=ax.transAxes, fontsize=9, family="monospace",
                color="green" if ok else "red")
    _finish(fig, path, manifest)
