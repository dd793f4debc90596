"""Figures for the CLI report paths.  Everything renders off-screen to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from mpmath import mp  # noqa: E402

from .numeric import to_mp  # noqa: E402


def _f(v) -> float:
    return float(mp.re(v)) if not isinstance(v, (int, float)) else float(v)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_weight_profile(ns, ws, path, bound=None) -> Path:
    """``w(n) / Gamma(n)`` style profile on a log scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ns, [float(abs(w)) for w in ws], "o-", ms=3, label="w(n)")
    if bound is not None:
        ax.semilogy(ns, [float(abs(b)) for b in bound], "--", label="bound")
        ax.legend()
    ax.set_xlabel("n")
    ax.set_ylabel("weight")
    ax.set_title("weight profile")
    return _save(fig, path)


def plot_stokes_report(report, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    radii = [float(abs(x)) for x, _, _ in report.samples]
    dev = [max(float(abs(e - report.C)), 1e-300) for _, _, e in report.samples]
    ax1.semilogy(radii, dev, "o-")
    ax1.set_xlabel("|x|")
    ax1.set_ylabel("|E - C|")
    ax1.set_title("remainder against the fitted constant")
    ex = report.extrapolants
    ax2.plot(range(len(ex)), [float(mp.re(v)) for v in ex], "s-", label="Re C")
    ax2.plot(range(len(ex)), [float(mp.im(v)) for v in ex], "^-", label="Im C")
    ax2.set_xlabel("window")
    ax2.set_title("extrapolants")
    ax2.legend()
    return _save(fig, path)


def plot_remainder_law(samples: dict, target, path) -> Path:
    """``sqrt(n) E_n(n)`` against its predicted limit."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = list(samples)
    ax.plot(ns, [_f(samples[n]) for n in ns], "o-", label="sqrt(n) E_n(n)")
    ax.axhline(_f(target), color="k", ls="--", label="limit")
    ax.set_xlabel("n")
    ax.legend()
    return _save(fig, path)


def plot_sup_profile(result, path, a_star=None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = sorted(result.profile)
    ax.plot(ks, [_f(result.profile[k]) for k in ks], lw=1)
    ax.axvline(result.n_x, color="grey", ls=":", label="n_x")
    ax.plot([result.argmax_K], [_f(result.value)], "ro", label="sup")
    if a_star is not None:
        ax.axhline(_f(a_star), color="k", ls="--", label="a*")
    ax.set_xlabel("K")
    ax.legend()
    return _save(fig, path)


def plot_coefficients(seq, path, scale=None) -> Path:
    """``|c_n|`` (optionally divided by ``scale(n)``) on a log scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns, vals = [], []
    for n, c in enumerate(seq):
        v = abs(to_mp(c))
        if scale is not None:
            v = v / scale(n)
        if v > 0:
            ns.append(n)
            vals.append(float(mp.log10(v)))
    ax.plot(ns, vals, ".")
    ax.set_xlabel("n")
    ax.set_ylabel("log10 |c_n|" if scale is None else "log10 |c_n| / scale")
    return _save(fig, path)


def plot_decomposition(d, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ns, vals = [], []
    for n, h in enumerate(d.H):
        v = abs(to_mp(h))
        if v > 0:
            ns.append(n)
            vals.append(float(mp.log10(v)))
    ax.plot(ns, vals, "o", ms=3)
    ax.set_xlabel("m")
    ax.set_ylabel("log10 |h_m|")
    ax.set_title("convergent part H")
    return _save(fig, path)
