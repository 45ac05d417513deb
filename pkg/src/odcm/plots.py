"""Static SVG panels for a sweep report: R versus E and spectral overlays."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns give identical files
SVG_RC = {"svg.hashsalt": "odcm", "svg.fonttype": "none"}
CURVES = (("normalized_opt", "optimal"), ("normalized_dd", "DD"),
          ("normalized_dd_refined", "DD + linearized"))


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def rate_vs_energy(report, path):
    """Normalized R against realized energy, one marker per sweep point and curve."""
    ok = [p for p in report.points if p.ok]
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for key, label in CURVES:
            src = key.replace("normalized_", "")
            pts = [(p.E_realized, p.details[src]["normalized"]) for p in ok
                   if src in p.details and p.details[src]["normalized"] is not None]
            if pts:
                x, y = zip(*pts)
                ax.plot(x, y, "o-", label=label)
        ax.axhline(1.0, color="0.6", lw=0.8, ls="--")
        ax.set_xlabel("energy E (realized)")
        ax.set_ylabel("R(T) / R_unmodulated")
        ax.set_title(report.scenario.name)
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def overlay(omega, point, path):
    """Dephasing spectrum and modulation spectra at one energy (G, F_opt, F_dd)."""
    ov = point.overlay
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(omega, ov["G"] / np.max(ov["G"]), color="k", label="G")
        for key, label in (("F_opt", "F_T opt"), ("F_dd", "F_T DD")):
            if key in ov:
                ax.plot(omega, ov[key] / max(np.max(ov[key]), 1e-300), label=label)
        ax.set_xlabel("omega")
        ax.set_ylabel("peak-normalized")
        ax.set_title(f"E = {point.E_realized:.4g}")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def emit_plots(report, out_dir):
    """Write ``rate_vs_energy.svg`` and one ``overlay_E<value>.svg`` per completed point.

    Plots are best effort; the CSV files carry the data.
    """
    written = []
    if not any(p.ok for p in report.points):
        return written
    path = os.path.join(out_dir, "rate_vs_energy.svg")
    rate_vs_energy(report, path)
    written.append(path)
    for p in report.points:
        if p.ok:
            path = os.path.join(out_dir, f"overlay_E{p.E_requested:g}.svg")
            overlay(report.omega, p, path)
            written.append(path)
    return written
