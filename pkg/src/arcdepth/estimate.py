"""Source depth estimators and their ambiguity surfaces.

Three single-hydrophone methods:

* amplitude: match the per-frequency pattern of modal amplitudes against
  the mode functions evaluated at candidate depths;
* cutoff: invert observed per-mode upper frequency limits through the
  maximum-excitation-depth curve;
* tdoa: match the time gaps of the four-ray surface-reflection cluster
  against a ray forward model over candidate depths.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .exceptions import MethodInapplicableError, MissingClusterTagError
from .modes import solve_modes
from .rays import deep_angle_grid, find_eigenrays, four_ray_cluster, tdoa_signature

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmbiguitySurface:
    """Match score over the candidate depth grid, scores in [0, 1]."""

    depths: np.ndarray
    scores: np.ndarray
    argmax: float
    secondary_peaks: tuple  # (depth, score) local maxima below the global

    def __post_init__(self):
        if self.scores.min() < -1e-12 or self.scores.max() > 1 + 1e-12:
            raise ValueError("scores must lie in [0, 1]")
        best = self.scores[int(np.argmax(self.scores))]
        if abs(self.scores[np.searchsorted(self.depths, self.argmax)] - best) > 1e-12:
            raise ValueError("argmax must attain the maximum score")

    def rows(self):
        return list(zip(self.depths.tolist(), self.scores.tolist()))


@dataclass(frozen=True)
class DepthEstimate:
    depth: float
    method: str  # amplitude | cutoff | tdoa
    score: float
    ambiguity: AmbiguitySurface | None = None
    caveats: tuple = ()
    details: dict = field(default_factory=dict)


def _surface(depths, scores):
    depths = np.asarray(depths, dtype=float)
    scores = np.asarray(scores, dtype=float)
    best = int(np.argmax(scores))
    peaks, _ = sps.find_peaks(scores)
    secondary = tuple(
        (float(depths[i]), float(scores[i])) for i in peaks
        if scores[i] < scores[best]
    )
    return AmbiguitySurface(
        depths=depths, scores=scores, argmax=float(depths[best]),
        secondary_peaks=secondary,
    )


def estimate_depth_amplitude(measured, env, depth_grid, band, nz=1500):
    """Depth from the variation of modal amplitudes with frequency.

    For every candidate depth z the predicted amplitude vector across modes
    is |psi_m(z; f)|, normalized per frequency bin exactly like the
    measured matrix; the score is the mean over usable bins of the squared
    inner product between measured and predicted unit vectors. The unknown
    source spectrum and common propagation factors cancel in the
    normalization; mode-dependent propagation effects are not compensated,
    which draws a known ghost toward the receiver depth (reported via the
    secondary-peak list).
    """
    depth_grid = np.asarray(depth_grid, dtype=float)
    f_lo, f_hi = band
    usable = measured.usable & (measured.frequencies >= f_lo) & (measured.frequencies <= f_hi)
    if measured.mode_indices.size < 2:
        raise MethodInapplicableError("amplitude matching needs at least 2 modes")
    if usable.sum() < 5:
        raise MethodInapplicableError("amplitude matching needs at least 5 usable bins")
    depth_max = env.bathymetry.receiver_depth_of_water
    if depth_grid.min() < 0 or depth_grid.max() > depth_max:
        raise ValueError("depth grid outside the water column")

    n_modes = int(measured.mode_indices.max())
    meas = measured.amplitudes[:, usable]
    meas = meas / np.maximum(np.linalg.norm(meas, axis=0), 1e-300)

    pred = np.zeros((measured.mode_indices.size, int(usable.sum()), depth_grid.size))
    for j, f in enumerate(measured.frequencies[usable]):
        ms = solve_modes(env, f, nz=nz, max_modes=n_modes, group_speed_df=None)
        for mode in ms:
            rows = np.nonzero(measured.mode_indices == mode.index)[0]
            if rows.size:
                pred[rows[0], j, :] = np.abs(mode.psi_at(depth_grid))
    pred = pred / np.maximum(np.linalg.norm(pred, axis=0), 1e-300)

    scores = np.mean(np.einsum("mf,mfz->fz", meas, pred) ** 2, axis=0)
    surface = _surface(depth_grid, scores)
    return DepthEstimate(
        depth=surface.argmax,
        method="amplitude",
        score=float(scores.max()),
        ambiguity=surface,
        caveats=("mode-dependent attenuation over range not compensated",),
        details={"n_modes": int(measured.mode_indices.size),
                 "n_bins": int(usable.sum())},
    )


def estimate_depth_cutoff(upper_limits, curve, zr, combine_tol=50.0):
    """Depth from per-mode upper frequency limits via the excitation curve.

    ``upper_limits`` maps mode index to an UpperLimit. Finite limits invert
    to per-mode depth candidates combined by median; sentinel limits (at
    the band edge) only bound the depth from above and are reported in the
    details. Caveats flag cross-mode disagreement beyond ``combine_tol``
    and estimates at or above the receiver depth (when the receiver sits
    below the source the method floors at the receiver depth).
    """
    candidates, bounds = {}, {}
    for m, ul in upper_limits.items():
        if m not in curve.curves:
            continue
        if ul.at_band_edge:
            bounds[m] = curve.depth_for_limit(m, ul.frequency)
        else:
            candidates[m] = curve.depth_for_limit(m, ul.frequency)
    if not candidates:
        raise MethodInapplicableError(
            "all upper limits at the band edge; band insufficient for inversion"
        )
    vals = np.array(sorted(candidates.values()))
    depth = float(np.median(vals))
    caveats = []
    if vals.max() - vals.min() > combine_tol:
        caveats.append(
            f"per-mode candidates disagree by {vals.max() - vals.min():.0f} m "
            f"(tolerance {combine_tol:.0f} m); possible node at the receiver"
        )
    if depth <= zr:
        caveats.append(
            f"estimate {depth:.0f} m is not below the receiver ({zr:.0f} m); "
            "the method floors at the receiver depth"
        )
    spread = float(vals.max() - vals.min()) if vals.size > 1 else 0.0
    return DepthEstimate(
        depth=depth,
        method="cutoff",
        score=float(1.0 / (1.0 + spread / combine_tol)),
        ambiguity=None,
        caveats=tuple(caveats),
        details={
            "per_mode_depth_m": {int(m): float(v) for m, v in candidates.items()},
            "upper_bounds_m": {int(m): float(v) for m, v in bounds.items()},
        },
    )


def estimate_depth_tdoa(measured_gaps, env, zr, r_approx, depth_grid,
                        min_turning_depth=600.0, angle_grid_size=700,
                        max_bottom_bounces=0):
    """Depth from the four-ray cluster time gaps.

    Forward-models the cluster at every candidate depth and minimizes the
    squared gap residual. Candidates where the cluster is incomplete (deep
    path blocked or tags missing) are excluded and flagged; if no candidate
    yields a cluster the method is inapplicable for this geometry.
    """
    depth_grid = np.asarray(depth_grid, dtype=float)
    measured = np.asarray(measured_gaps, dtype=float)
    if measured.size != 3:
        raise ValueError("measured gaps must have exactly 3 entries")
    residual = np.full(depth_grid.size, np.nan)
    excluded = []
    for i, zs in enumerate(depth_grid):
        try:
            grid = deep_angle_grid(env, zs, min_turning_depth, n=angle_grid_size)
            arr = find_eigenrays(env, zs, zr, r_approx, grid,
                                 max_bottom_bounces=max_bottom_bounces)
            gaps = np.asarray(tdoa_signature(four_ray_cluster(arr)))
            residual[i] = float(np.sum((gaps - measured) ** 2))
        except (MissingClusterTagError, ValueError):
            excluded.append(float(zs))
    if not np.any(np.isfinite(residual)):
        raise MethodInapplicableError(
            "no candidate depth produces a complete four-ray cluster; "
            "deep ray path blocked by bathymetry"
        )
    finite = np.isfinite(residual)
    r_min = np.nanmin(residual)
    scores = np.zeros_like(residual)
    if r_min == 0.0:
        scores[finite] = (residual[finite] == 0.0).astype(float)
    else:
        scores[finite] = r_min / residual[finite]
    surface = _surface(depth_grid, scores)
    caveats = []
    if excluded:
        caveats.append(f"{len(excluded)} candidate depths lacked a complete cluster")
    return DepthEstimate(
        depth=surface.argmax,
        method="tdoa",
        score=float(scores.max()),
        ambiguity=surface,
        caveats=tuple(caveats),
        details={"residual_s2": {float(z): float(res) for z, res in
                                 zip(depth_grid[finite], residual[finite])},
                 "excluded_depths_m": excluded},
    )


@dataclass(frozen=True)
class ApplicabilityReport:
    """Which methods the geometry supports, with reasons."""

    ray_applicable: bool
    ray_reason: str
    modes_applicable: bool
    modes_reason: str
    cutoff_floor_flag: bool
    cutoff_reason: str

    def as_dict(self):
        return {
            "ray": {"applicable": self.ray_applicable, "reason": self.ray_reason},
            "modes": {"applicable": self.modes_applicable,
                      "reason": self.modes_reason},
            "cutoff_floor": {"flagged": self.cutoff_floor_flag,
                             "reason": self.cutoff_reason},
        }


def applicability_report(env, zs_range, zr, r, band=(20.0, 100.0),
                         min_turning_depth=600.0, nz=1000):
    """Check which estimation methods the geometry supports.

    Ray methods need the deep-inversion family to survive the bathymetry;
    mode methods need at least two trapped modes in band; the cutoff method
    floors at the receiver depth when the receiver sits below the
    hypothesized source depths.
    """
    zs_lo, zs_hi = min(zs_range), max(zs_range)
    zs_mid = 0.5 * (zs_lo + zs_hi)

    ray_ok, ray_reason = False, "no zero-bottom-bounce deep-inversion eigenrays"
    try:
        grid = deep_angle_grid(env, zs_mid, min_turning_depth, n=400)
        arr = find_eigenrays(env, zs_mid, zr, r, grid, max_bottom_bounces=0)
        deep = [a for a in arr if a.deep_inversions >= 1 and a.bottom_bounces == 0]
        if deep:
            ray_ok = True
            ray_reason = (f"{len(deep)} deep-inversion arrivals survive the "
                          f"bathymetry (earliest family: "
                          f"{min(deep, key=lambda a: a.time).deep_inversions} inversions)")
        else:
            ray_reason = "deep ray path blocked by the seabed topography"
    except ValueError as exc:
        ray_reason = str(exc)

    f_mid = math.sqrt(band[0] * band[1])
    n_modes = len(solve_modes(env, f_mid, nz=nz, max_modes=10, group_speed_df=None))
    modes_ok = n_modes >= 2
    modes_reason = f"{n_modes} trapped modes at {f_mid:.0f} Hz"

    floor = zr >= zs_lo
    cutoff_reason = (
        f"receiver ({zr:.0f} m) below some hypothesized source depths "
        f"(>= {zs_lo:.0f} m); estimates would floor at the receiver depth"
        if floor else
        f"receiver ({zr:.0f} m) above the hypothesized source depths"
    )
    return ApplicabilityReport(
        ray_applicable=ray_ok, ray_reason=ray_reason,
        modes_applicable=modes_ok, modes_reason=modes_reason,
        cutoff_floor_flag=floor, cutoff_reason=cutoff_reason,
    )
