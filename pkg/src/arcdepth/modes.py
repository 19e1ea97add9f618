"""Normal-mode solver and modal field synthesis.

Solves the depth-separated wave equation

    psi'' + (omega^2 / c(z)^2 - k^2) psi = 0,  psi(0) = psi(D) = 0

by second-order finite differences on a uniform grid, where D is the water
depth at the receiver end of the track (the modal model is range
independent). The resulting symmetric tridiagonal eigenproblem is solved by
LAPACK bisection plus inverse iteration, which stays robust when dual-duct
profiles produce near-degenerate mode pairs.

Trapped modes are those with phase speed between the column minimum and the
speed at the bottom of the column, i.e. modes that refract back up before
reaching the seabed. For a constant-speed column (no refraction possible)
every propagating mode of the pressure-release waveguide is kept instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .env import ssp_at
from .exceptions import ModeSolverError
from .sigproc import PulseSignal

DEFAULT_EXTENT_THRESHOLD = 1e-2  # -40 dB relative amplitude


@dataclass(frozen=True)
class Mode:
    """One trapped normal mode at a single frequency.

    The eigenfunction is sampled on the solver grid ``z`` and normalized so
    that the discrete integral of psi^2 / rho over depth equals 1. Sign
    convention: the first lobe below the surface is positive. group_speed
    is NaN when the mode is untrapped at a bracket frequency of the
    centered difference.
    """

    index: int
    frequency: float
    k: float
    z: np.ndarray
    psi: np.ndarray
    group_speed: float
    turning_depth: float

    def psi_at(self, depth):
        """Eigenfunction value at depth (m), linear interpolation on the grid."""
        return np.interp(depth, self.z, self.psi)

    @property
    def phase_speed(self):
        return 2.0 * np.pi * self.frequency / self.k


@dataclass(frozen=True)
class ModeSet:
    """All trapped modes at one frequency, ordered by decreasing wavenumber."""

    frequency: float
    modes: tuple
    grid: np.ndarray

    def __post_init__(self):
        ks = [m.k for m in self.modes]
        for i, m in enumerate(self.modes):
            if m.index != i + 1:
                raise ModeSolverError("mode indices must be consecutive from 1")
        if any(k2 >= k1 for k1, k2 in zip(ks, ks[1:])):
            raise ModeSolverError("wavenumbers must strictly decrease with index")

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]


def _column(env, nz):
    depth = env.bathymetry.receiver_depth_of_water
    z = np.linspace(0.0, depth, nz + 1)
    c = np.asarray(ssp_at(env.profile, z), dtype=float)
    return z, c


def _lambda_window(omega, c):
    """Eigenvalue (k^2) window selecting trapped modes."""
    c_min = float(c.min())
    c_bot = float(c[-1])
    lam_hi = (omega / c_min) ** 2
    if c.max() - c_min < 1e-9 * c_min:
        lam_lo = 0.0  # constant column: keep every propagating mode
    else:
        lam_lo = (omega / c_bot) ** 2
    return lam_lo, lam_hi


def _top_eigen(omega, z, c, max_modes, want_vectors):
    """Largest-k^2 eigenpairs of the interior FD operator, ascending order."""
    nz = z.size - 1
    h = z[1] - z[0]
    diag = (omega / c[1:-1]) ** 2 - 2.0 / h**2
    off = np.full(nz - 2, 1.0 / h**2)
    m = nz - 1
    kreq = min(max_modes, m)
    sel = (m - kreq, m - 1)
    if want_vectors:
        return eigh_tridiagonal(diag, off, select="i", select_range=sel)
    vals = eigh_tridiagonal(diag, off, select="i", select_range=sel, eigvals_only=True)
    return vals, None


def _trapped_wavenumbers(env, f, nz, max_modes):
    """Descending list of trapped-mode wavenumbers at frequency f."""
    omega = 2.0 * np.pi * f
    z, c = _column(env, nz)
    lam_lo, lam_hi = _lambda_window(omega, c)
    vals, _ = _top_eigen(omega, z, c, max_modes, want_vectors=False)
    keep = vals[(vals > lam_lo) & (vals > 0.0) & (vals < lam_hi)]
    return np.sqrt(keep[::-1])


def solve_modes(env, f, nz=2000, max_modes=50, group_speed_df=0.1):
    """Solve for the trapped modes of ``env`` at frequency f (Hz).

    Returns a ModeSet sorted by decreasing wavenumber, capped at
    ``max_modes``. An empty ModeSet means no mode is trapped (distinct from
    a solver failure, which raises ModeSolverError). Group speeds come from
    a centered difference over ``group_speed_df``; pass None to skip the
    extra eigenvalue solves when group speeds are not needed.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    if nz < 200:
        raise ValueError("nz must be at least 200")
    if max_modes < 1:
        raise ValueError("max_modes must be at least 1")

    omega = 2.0 * np.pi * f
    z, c = _column(env, nz)
    lam_lo, lam_hi = _lambda_window(omega, c)
    vals, vecs = _top_eigen(omega, z, c, max_modes, want_vectors=True)

    keep = np.nonzero((vals > lam_lo) & (vals > 0.0) & (vals < lam_hi))[0][::-1]
    if keep.size == 0:
        return ModeSet(frequency=f, modes=(), grid=z)

    group = np.full(keep.size, np.nan)
    if group_speed_df is not None and f - group_speed_df > 0:
        k_lo = _trapped_wavenumbers(env, f - group_speed_df, nz, max_modes)
        k_hi = _trapped_wavenumbers(env, f + group_speed_df, nz, max_modes)
        n_ok = min(k_lo.size, k_hi.size, keep.size)
        if n_ok:
            group[:n_ok] = (
                2.0 * np.pi * (2.0 * group_speed_df) / (k_hi[:n_ok] - k_lo[:n_ok])
            )

    rho = env.water_density
    modes = []
    for rank, j in enumerate(keep):
        psi = np.zeros(z.size)
        psi[1:-1] = vecs[:, j]
        norm = np.sqrt(np.trapz(psi**2, z) / rho)
        psi /= norm
        peak = np.abs(psi).max()
        first = np.nonzero(np.abs(psi) >= 0.1 * peak)[0][0]
        if psi[first] < 0:
            psi = -psi

        interior = psi[1:-1]
        sig = np.sign(interior[np.abs(interior) > 1e-8 * peak])
        crossings = int(np.sum(sig[1:] * sig[:-1] < 0))
        if crossings != rank:
            raise ModeSolverError(
                f"mode {rank + 1} at {f} Hz has {crossings} interior sign "
                f"changes, expected {rank}; increase nz"
            )

        mode = Mode(
            index=rank + 1,
            frequency=f,
            k=float(np.sqrt(vals[j])),
            z=z,
            psi=psi,
            group_speed=float(group[rank]),
            turning_depth=0.0,
        )
        object.__setattr__(
            mode, "turning_depth", eigenfunction_extent(mode, DEFAULT_EXTENT_THRESHOLD)
        )
        modes.append(mode)

    return ModeSet(frequency=f, modes=tuple(modes), grid=z)


def group_speed(env, mode_index, f, df=0.1, nz=2000):
    """Group speed (m/s) of one mode by centered difference in frequency.

    v_g = 2*pi*(2*df) / (k(f+df) - k(f-df)). Raises ValueError when the
    mode is untrapped at either bracket frequency.
    """
    if mode_index < 1:
        raise ValueError("mode_index is 1-based")
    if f - df <= 0:
        raise ValueError("f - df must stay positive")
    bracket = {}
    for fb in (f - df, f + df):
        ks = _trapped_wavenumbers(env, fb, nz, mode_index)
        if ks.size < mode_index:
            raise ValueError(f"mode {mode_index} not trapped at {fb} Hz")
        bracket[fb] = ks[mode_index - 1]
    return float(2.0 * np.pi * (2.0 * df) / (bracket[f + df] - bracket[f - df]))


@dataclass(frozen=True)
class DispersionTable:
    """Per (mode, frequency) wavenumber and group speed with presence flags."""

    frequencies: np.ndarray
    mode_indices: np.ndarray
    k: np.ndarray  # shape (modes, freqs), NaN where untrapped
    group_speeds: np.ndarray  # same shape, NaN where bracket untrapped
    present: np.ndarray  # bool, same shape

    def rows(self):
        """Plot-ready rows (mode, frequency_hz, k_rad_m, vg_mps)."""
        out = []
        for i, m in enumerate(self.mode_indices):
            for j, f in enumerate(self.frequencies):
                if self.present[i, j]:
                    out.append(
                        (int(m), float(f), float(self.k[i, j]), float(self.group_speeds[i, j]))
                    )
        return out


def dispersion_table(env, band, df, max_modes, nz=2000, group_speed_df=0.1):
    """Tabulate k and group speed over a frequency band.

    band is (f_lo, f_hi); the grid includes both endpoints. Presence flags
    mark (mode, frequency) cells where the mode is untrapped.
    """
    f_lo, f_hi = band
    if not (0 < f_lo < f_hi):
        raise ValueError("need 0 < f_lo < f_hi")
    if df <= 0:
        raise ValueError("df must be positive")
    n = int(round((f_hi - f_lo) / df))
    freqs = f_lo + df * np.arange(n + 1)

    k_cols, vg_cols = [], []
    for f in freqs:
        try:
            ks = _trapped_wavenumbers(env, f, nz, max_modes)
            vg = np.full(ks.size, np.nan)
            if f - group_speed_df > 0:
                k_m = _trapped_wavenumbers(env, f - group_speed_df, nz, max_modes)
                k_p = _trapped_wavenumbers(env, f + group_speed_df, nz, max_modes)
                n_ok = min(k_m.size, k_p.size, ks.size)
                vg[:n_ok] = 2 * np.pi * (2 * group_speed_df) / (k_p[:n_ok] - k_m[:n_ok])
        except Exception as exc:
            raise ModeSolverError(f"mode solve failed at {f} Hz: {exc}") from exc
        k_cols.append(ks)
        vg_cols.append(vg)

    n_modes = max((len(ks) for ks in k_cols), default=0)
    shape = (n_modes, freqs.size)
    k_arr = np.full(shape, np.nan)
    vg_arr = np.full(shape, np.nan)
    present = np.zeros(shape, dtype=bool)
    for j, (ks, vg) in enumerate(zip(k_cols, vg_cols)):
        k_arr[: ks.size, j] = ks
        vg_arr[: vg.size, j] = vg
        present[: ks.size, j] = True

    c_max = env.profile.max_speed
    finite = np.isfinite(vg_arr)
    if np.any(vg_arr[finite] <= 0) or np.any(vg_arr[finite] > c_max * (1 + 1e-6)):
        raise ModeSolverError("group speeds outside (0, max water speed]")

    return DispersionTable(
        frequencies=freqs,
        mode_indices=np.arange(1, n_modes + 1),
        k=k_arr,
        group_speeds=vg_arr,
        present=present,
    )


def warped_tone_guides(env, band, r, tr, n_modes, df=5.0, nz=1500):
    """Predicted warped-domain tone frequency per mode for a known channel.

    Under the reflective warp with reference time ``tr``, a component at
    frequency f arriving at t = r / v_g maps to f * sqrt(t^2 - tr^2) / t;
    the per-mode median over the band predicts where each mode's tone
    lands. Modes whose arrivals fall before tr are skipped (unwarpable
    with this reference).
    """
    tab = dispersion_table(env, band, df, n_modes, nz=nz)
    guides = {}
    for i, m in enumerate(tab.mode_indices):
        vals = []
        for j, f in enumerate(tab.frequencies):
            vg = tab.group_speeds[i, j]
            if tab.present[i, j] and np.isfinite(vg):
                t = r / vg
                if t > tr:
                    vals.append(f * np.sqrt(t**2 - tr**2) / t)
        if vals:
            guides[int(m)] = float(np.median(vals))
    return guides


def eigenfunction_extent(mode, threshold):
    """Deepest depth where |psi| is at least threshold times its maximum.

    This is the maximum source depth that can excite the mode at its
    frequency under a relative-amplitude thresholding convention.
    """
    if not (0 < threshold <= 1):
        raise ValueError("threshold must be in (0, 1]")
    mag = np.abs(mode.psi)
    idx = np.nonzero(mag >= threshold * mag.max())[0]
    return float(mode.z[idx[-1]])


@dataclass(frozen=True)
class CutoffCurve:
    """Per-mode maximum excitation depth versus frequency.

    Stored curves are median-smoothed and clamped non-increasing, so the
    inverse lookup (observed upper-limit frequency to source depth) is well
    defined. ``threshold`` records the relative amplitude used.
    """

    threshold: float
    curves: dict = field(default_factory=dict)  # mode -> (freqs, max_depth)

    @property
    def mode_indices(self):
        return sorted(self.curves)

    def max_excitation_depth(self, mode, f):
        freqs, depths = self.curves[mode]
        return float(np.interp(f, freqs, depths))

    def depth_for_limit(self, mode, f_limit):
        """Source depth whose upper-limit frequency for ``mode`` is f_limit."""
        return self.max_excitation_depth(mode, f_limit)

    def limit_for_depth(self, mode, depth):
        """Upper-limit frequency for a source at ``depth`` (band-clamped)."""
        freqs, depths = self.curves[mode]
        # depths are non-increasing in f; interpolate on the flipped axis
        return float(np.interp(-depth, -depths[::-1].copy(), freqs[::-1].copy()))

    def rows(self):
        out = []
        for m in self.mode_indices:
            freqs, depths = self.curves[m]
            out.extend((int(m), float(f), float(d)) for f, d in zip(freqs, depths))
        return out


def _median3(x, window):
    half = window // 2
    out = np.empty_like(x)
    for i in range(x.size):
        out[i] = np.median(x[max(0, i - half) : i + half + 1])
    return out


def cutoff_curve(env, band, df, modes, threshold=DEFAULT_EXTENT_THRESHOLD,
                 nz=2000, smooth_window=3, monotone_tol=5.0):
    """Maximum excitation depth versus frequency for the first ``modes`` modes.

    Raises ModeSolverError when a raw curve stays non-monotone beyond
    ``monotone_tol`` (meters) after median smoothing; a finer df usually
    fixes that.
    """
    f_lo, f_hi = band
    n = int(round((f_hi - f_lo) / df))
    freqs = f_lo + df * np.arange(n + 1)

    per_mode = {m: ([], []) for m in range(1, modes + 1)}
    for f in freqs:
        ms = solve_modes(env, f, nz=nz, max_modes=modes, group_speed_df=None)
        for mode in ms:
            per_mode[mode.index][0].append(f)
            per_mode[mode.index][1].append(eigenfunction_extent(mode, threshold))

    curves = {}
    for m, (fs, depths) in per_mode.items():
        if not fs:
            continue
        fs = np.asarray(fs)
        depths = _median3(np.asarray(depths), smooth_window)
        uptick = np.diff(depths)
        if uptick.size and uptick.max() > monotone_tol:
            j = int(np.argmax(uptick))
            raise ModeSolverError(
                f"mode {m} extent curve rises {uptick.max():.1f} m at "
                f"{fs[j]:.1f}->{fs[j + 1]:.1f} Hz after smoothing; use finer df"
            )
        curves[m] = (fs, np.minimum.accumulate(depths))
    return CutoffCurve(threshold=threshold, curves=curves)


def synthesize_field(env, zs, zr, r, spectrum_freqs, spectrum_values,
                     max_modes=20, sample_rate=None, nz=2000, solve_df=0.25,
                     onset_taper_hz=2.0, edge_taper_frac=0.05):
    """Broadband modal sum rendered as a time series.

    The source spectrum is given as complex values on a uniform frequency
    grid whose spacing df sets the output duration 1/df; grid points must
    sit on DFT bins of that duration. The per-frequency transfer function is

        H(f) = sum_m psi_m(zs) psi_m(zr) exp(i k_m r) / sqrt(k_m r)

    with the overall calibration constant set to 1. Modes are solved on a
    coarse grid (``solve_df``) and interpolated to the DFT bins; a cosine
    ramp of width ``onset_taper_hz`` softens modes that become trapped in
    mid band, and a cosine taper over ``edge_taper_frac`` of the band is
    applied at both band edges. The output time origin is the emission time.
    """
    freqs = np.asarray(spectrum_freqs, dtype=float)
    values = np.asarray(spectrum_values, dtype=complex)
    if freqs.size < 2 or freqs.size != values.size:
        raise ValueError("spectrum needs matching freq/value arrays, length >= 2")
    df_bin = freqs[1] - freqs[0]
    if not np.allclose(np.diff(freqs), df_bin, rtol=1e-9, atol=1e-12):
        raise ValueError("spectrum grid must be uniform")
    f_lo, f_hi = float(freqs[0]), float(freqs[-1])
    depth = env.bathymetry.receiver_depth_of_water
    if not (0 <= zs <= depth and 0 <= zr <= depth):
        raise ValueError("zs and zr must lie inside the water column")
    if r <= 0:
        raise ValueError("range must be positive")

    if sample_rate is None:
        n = 1 << int(np.ceil(np.log2(2.5 * f_hi / df_bin)))
        sample_rate = n * df_bin
    else:
        n = int(round(sample_rate / df_bin))
        if abs(n * df_bin - sample_rate) > 1e-6 * sample_rate:
            raise ValueError("sample_rate must be an integer multiple of the grid df")
    if sample_rate <= 2 * f_hi:
        raise ValueError("sample_rate must exceed twice the top band frequency")

    bins = np.round(freqs / df_bin).astype(int)
    if np.max(np.abs(bins * df_bin - freqs)) > 1e-6 * df_bin:
        raise ValueError("spectrum grid points must sit on DFT bins")

    n_solve = int(np.ceil((f_hi - f_lo) / solve_df))
    f_solve = np.linspace(f_lo, f_hi, n_solve + 1)
    k_sol = np.full((max_modes, f_solve.size), np.nan)
    a_sol = np.full((max_modes, f_solve.size), np.nan)
    for i, f in enumerate(f_solve):
        ms = solve_modes(env, f, nz=nz, max_modes=max_modes, group_speed_df=None)
        for mode in ms:
            k_sol[mode.index - 1, i] = mode.k
            a_sol[mode.index - 1, i] = mode.psi_at(zs) * mode.psi_at(zr)

    if not np.any(np.isfinite(k_sol)):
        raise ModeSolverError("no trapped modes anywhere in the band")

    transfer = np.zeros(freqs.size, dtype=complex)
    k_first = None
    for m in range(max_modes):
        ok = np.isfinite(k_sol[m])
        if ok.sum() < 2:
            continue
        f_m = f_solve[ok]
        if f_m.size >= 4:
            k_interp = CubicSpline(f_m, k_sol[m, ok])
        else:
            k_interp = lambda x, fm=f_m, km=k_sol[m, ok]: np.interp(x, fm, km)
        sel = freqs >= f_m[0]
        fq = freqs[sel]
        k_q = np.asarray(k_interp(fq))
        a_q = np.interp(fq, f_m, a_sol[m, ok])
        ramp = np.ones(fq.size)
        if f_m[0] > f_solve[0] + 1e-9 and onset_taper_hz > 0:
            x = np.clip((fq - f_m[0]) / onset_taper_hz, 0.0, 1.0)
            ramp = 0.5 * (1 - np.cos(np.pi * x))
        # numpy's irfft reconstructs with exp(+i omega t), so a positive
        # group delay r dk/domega needs the phase exp(-i k r)
        transfer[sel] += a_q * ramp * np.exp(-1j * k_q * r) / np.sqrt(k_q * r)
        if m == 0:
            k_first = float(np.interp(0.5 * (f_lo + f_hi), f_m, k_sol[m, ok]))

    if edge_taper_frac > 0:
        width = edge_taper_frac * (f_hi - f_lo)
        lo_ramp = np.clip((freqs - f_lo) / width, 0.0, 1.0)
        hi_ramp = np.clip((f_hi - freqs) / width, 0.0, 1.0)
        transfer *= 0.5 * (1 - np.cos(np.pi * lo_ramp))
        transfer *= 0.5 * (1 - np.cos(np.pi * hi_ramp))

    spec_full = np.zeros(n // 2 + 1, dtype=complex)
    spec_full[bins] = values * transfer
    samples = np.fft.irfft(spec_full, n)

    warnings = ()
    if k_first is not None and k_first * r < 10 * np.pi:
        warnings = (f"near-field geometry: k1*r = {k_first * r:.1f} < 10*pi",)
    return PulseSignal(samples=samples, sample_rate=float(sample_rate), t0=0.0,
                       warnings=warnings)
