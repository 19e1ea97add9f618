"""Figure rendering for the report path.

Each function draws one figure and writes it to a file next to the
delimited outputs. Files are rendered with the Agg backend and fixed
metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=120, metadata={"Software": "arcdepth"})


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_environment_figure(env, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 4))
    ax1.plot(env.profile.speeds, env.profile.depths, "k-")
    ax1.invert_yaxis()
    ax1.set_xlabel("sound speed (m/s)")
    ax1.set_ylabel("depth (m)")
    ax1.grid(alpha=0.3)
    ax2.plot(env.bathymetry.ranges / 1e3, env.bathymetry.depths, "k-")
    ax2.fill_between(env.bathymetry.ranges / 1e3, env.bathymetry.depths,
                     env.bathymetry.depths.max() * 1.05, color="0.8")
    ax2.invert_yaxis()
    ax2.set_xlabel("range (km)")
    ax2.set_ylabel("water depth (m)")
    ax2.grid(alpha=0.3)
    return _finish(fig, path)


def save_signal_figure(sig, path, title=None):
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(sig.times, sig.samples, "k-", lw=0.4)
    ax.set_xlabel("time since emission (s)")
    ax.set_ylabel("amplitude")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_spectrogram_figure(spec, path, db_floor=-60.0):
    fig, ax = plt.subplots(figsize=(8, 4))
    mag = spec.magnitude.T
    ref = mag.max() if mag.max() > 0 else 1.0
    db = 20 * np.log10(np.maximum(mag / ref, 10 ** (db_floor / 20)))
    pcm = ax.pcolormesh(spec.times, spec.frequencies, db, shading="auto",
                        cmap="viridis", vmin=db_floor, vmax=0.0)
    fig.colorbar(pcm, ax=ax, label="dB re max")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    return _finish(fig, path)


def save_dispersion_figure(table, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, m in enumerate(table.mode_indices):
        sel = table.present[i] & np.isfinite(table.group_speeds[i])
        if np.any(sel):
            ax.plot(table.frequencies[sel], table.group_speeds[i, sel],
                    label=f"mode {m}")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("group speed (m/s)")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_cutoff_figure(curve, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for m in curve.mode_indices:
        freqs, depths = curve.curves[m]
        ax.plot(freqs, depths, label=f"mode {m}")
    ax.invert_yaxis()
    ax.set_xlabel("upper limit frequency (Hz)")
    ax.set_ylabel("max excitation depth (m)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_arrivals_figure(structure, path):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if len(structure):
        for a in structure:
            ax.vlines(a.time, 0, a.amplitude, color="k", lw=1)
            ax.annotate(a.end_tag, (a.time, a.amplitude), fontsize=7,
                        textcoords="offset points", xytext=(0, 2), ha="center")
    ax.set_xlabel("arrival time (s)")
    ax.set_ylabel("relative amplitude")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_mode_signals_figure(mode_signals, path):
    n = max(len(mode_signals), 1)
    fig, axes = plt.subplots(n, 1, figsize=(8, 1.6 * n), sharex=True)
    if n == 1:
        axes = [axes]
    for ax, ms in zip(axes, mode_signals):
        ax.plot(ms.signal.times, ms.signal.samples, "k-", lw=0.4)
        ax.set_ylabel(f"mode {ms.mode_index}", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("time since emission (s)")
    return _finish(fig, path)


def save_ambiguity_figure(surface, path, true_depth=None, method=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(surface.scores, surface.depths, "k-")
    ax.axhline(surface.argmax, color="r", ls="--", lw=0.8,
               label=f"estimate {surface.argmax:.0f} m")
    if true_depth is not None:
        ax.axhline(true_depth, color="b", ls=":", lw=0.8,
                   label=f"truth {true_depth:.0f} m")
    ax.invert_yaxis()
    ax.set_xlabel("match score")
    ax.set_ylabel("candidate depth (m)")
    if method:
        ax.set_title(method)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_ray_fan_figure(env, paths, path):
    fig, ax = plt.subplots(figsize=(9, 4))
    for ray in paths:
        ax.plot(ray.waypoints[:, 0] / 1e3, ray.waypoints[:, 1], lw=0.6)
    ax.plot(env.bathymetry.ranges / 1e3, env.bathymetry.depths, "k-", lw=1.5)
    ax.invert_yaxis()
    ax.set_xlabel("range (km)")
    ax.set_ylabel("depth (m)")
    ax.grid(alpha=0.3)
    return _finish(fig, path)
