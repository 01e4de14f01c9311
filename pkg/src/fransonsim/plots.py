"""Static figures for run directories (Agg backend, files only)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .materials import omega_to_nm  # noqa: E402


def _save(fig, path: Path, svg: bool) -> list[Path]:
    out = [path.with_suffix(".png")]
    fig.savefig(out[0], dpi=120, metadata={"Software": None})
    if svg:
        out.append(path.with_suffix(".svg"))
        fig.savefig(out[1], metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return out


def plot_cases(result, path, svg: bool = False, counts: Optional[dict] = None) -> list[Path]:
    """Stacked R(tau) panels, one per case, with centroid and half-height marks."""
    cases = list(result.cases.values())
    fig, axes = plt.subplots(len(cases), 1, figsize=(6, 1.6 * len(cases) + 0.6), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, c in zip(axes, cases):
        t, r = c.trace.tau, c.trace.rate
        ax.plot(t, r, lw=1.2, color="#2E86AB")
        noisy = (counts or {}).get(c.case.label)
        if noisy is not None:
            # expected = peak_rate * R + background, so both follow from the noiseless trace
            scale = np.ptp(noisy.expected) / np.ptp(r)
            base = noisy.expected.min() - scale * r.min()
            ax.errorbar(t[::8], (noisy.rate[::8] - base) / scale, yerr=noisy.error[::8] / scale,
                        fmt=".", ms=2, lw=0.5, color="0.4")
        m = c.metrics
        ax.axvline(m.centroid, ls="--", lw=0.8, color="#A23B72")
        ax.plot(m.half_points, [0.5 * m.height] * 2, "|", ms=8, color="#F18F01")
        ax.set_ylabel(f"({c.case.label})")
        ax.set_ylim(-0.05, 1.1)
    axes[-1].set_xlabel("tau (fs)")
    fig.suptitle(f"{result.name}: R(tau), normalized to zero-GDD peak", fontsize=10)
    fig.tight_layout()
    return _save(fig, Path(path), svg)


def plot_spectrum(pmf, path, svg: bool = False) -> list[Path]:
    lam = omega_to_nm(pmf.grid.omega)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(lam, pmf.squared, lw=1.2)
    ax.set_xlabel("signal wavelength (nm)")
    ax.set_ylabel("|Phi|^2")
    fig.tight_layout()
    return _save(fig, Path(path), svg)


def plot_bandwidth_study(rows: Sequence[dict], path, svg: bool = False) -> list[Path]:
    s = [r["scale"] for r in rows]
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(5, 4), sharex=True)
    a1.plot(s, [r["fwhm_fs"] for r in rows], "o-")
    a1.set_ylabel("FWHM (fs)")
    a2.plot(s, [r["skewness"] for r in rows], "o-")
    a2.plot(s, [r["control_skewness"] for r in rows], "s--", label="zero-phase control")
    a2.set_ylabel("skewness")
    a2.set_xlabel("bandwidth scale")
    a2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path), svg)
