"""Signal processing: pulses, spectrograms, warping, modal separation.

Time axes are absolute (seconds since emission); every signal carries its
own t0. Warping is implemented as the unitary deformation
y(t) = sqrt(|h'(t)|) x(h(t)) with two families,

    reflective:  h(t) = sqrt(t^2 + tr^2)
    exponential: h(t) = tr * exp(t / tr)

both parameterized by the reference time tr (typically range over a
reference speed). Resampling uses FFT oversampling followed by cubic
interpolation so that warp/unwarp round trips hold to better than 1e-6.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.interpolate import CubicSpline

from .exceptions import WarpDomainError

log = logging.getLogger(__name__)

_OVERSAMPLE = 32


@dataclass(frozen=True)
class PulseSignal:
    """Uniformly sampled real time series with absolute time origin t0."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    warnings: tuple = ()

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-d array with at least 2 points")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")

    @property
    def times(self):
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    @property
    def energy(self):
        return float(np.sum(self.samples**2) / self.sample_rate)


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude short-time Fourier transform, time by frequency."""

    times: np.ndarray
    frequencies: np.ndarray
    magnitude: np.ndarray  # shape (times, frequencies)
    window_spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.magnitude.shape != (self.times.size, self.frequencies.size):
            raise ValueError("spectrogram dimensions inconsistent")
        if not np.all(np.isfinite(self.magnitude)):
            raise ValueError("spectrogram magnitudes must be finite")


@dataclass(frozen=True)
class WarpingSpec:
    """Warping family and reference time tr = range / reference speed."""

    family: str
    tr: float
    resampling_rate: float

    def __post_init__(self):
        if self.family not in ("reflective", "exponential"):
            raise ValueError(f"unknown warping family {self.family!r}")
        if self.tr <= 0:
            raise ValueError("tr must be positive")
        if self.resampling_rate <= 0:
            raise ValueError("resampling rate must be positive")


@dataclass(frozen=True)
class ModeSignal:
    """Time-domain signal of one separated mode."""

    mode_index: int
    signal: PulseSignal


@dataclass(frozen=True)
class ModeAmplitudeMatrix:
    """Per (mode, frequency bin) spectral amplitude, unit-normalized per bin.

    Normalizing each frequency column across modes cancels the source
    spectrum and any propagation factor common to all modes. ``usable``
    flags columns with nonzero content; all-zero bins are excluded from
    matching.
    """

    mode_indices: np.ndarray
    frequencies: np.ndarray
    amplitudes: np.ndarray  # shape (modes, frequencies)
    usable: np.ndarray  # bool per frequency

    def __post_init__(self):
        if self.amplitudes.shape != (self.mode_indices.size, self.frequencies.size):
            raise ValueError("amplitude matrix dimensions inconsistent")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")
        if np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be non-negative")


@dataclass(frozen=True)
class UpperLimit:
    """Observed upper frequency limit of one mode.

    ``at_band_edge`` marks the sentinel case where the spectrum never drops
    below the threshold inside the band, so the limit is only known to be
    at or above ``frequency`` (the band edge).
    """

    frequency: float
    at_band_edge: bool = False


def make_pulse(kind, f_lo, f_hi, sample_rate, duration):
    """Unit-energy source pulse with at least 95 % of energy in [f_lo, f_hi].

    Kinds: "gaussian-modulated" (Gaussian envelope on a band-center
    carrier), "linear-chirp" (Tukey-tapered sweep across the band), and
    "band-limited impulse" (flat band spectrum with raised-cosine edges,
    compact in time). Pulses are zero-phase: t0 is negative so the energy
    peak sits at time 0, which keeps arrival times on the emission axis.
    """
    if not (0 < f_lo < f_hi < sample_rate / 2):
        raise ValueError("need 0 < f_lo < f_hi < sample_rate/2")
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    tc = (n // 2) / sample_rate
    bw = f_hi - f_lo

    if kind == "gaussian-modulated":
        sigma_t = 0.55 / bw
        fc = 0.5 * (f_lo + f_hi)
        x = np.exp(-0.5 * ((t - tc) / sigma_t) ** 2) * np.cos(2 * np.pi * fc * (t - tc))
    elif kind == "linear-chirp":
        x = sps.chirp(t, f0=f_lo, t1=duration, f1=f_hi)
        x *= sps.windows.tukey(n, 0.15)
    elif kind == "band-limited impulse":
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        edge = 0.1 * bw
        lo_ramp = np.clip((freqs - f_lo) / edge, 0.0, 1.0)
        hi_ramp = np.clip((f_hi - freqs) / edge, 0.0, 1.0)
        mask = 0.5 * (1 - np.cos(np.pi * lo_ramp)) * 0.5 * (1 - np.cos(np.pi * hi_ramp))
        mask[(freqs < f_lo) | (freqs > f_hi)] = 0.0
        x = np.fft.irfft(mask * np.exp(-2j * np.pi * freqs * tc), n)
    else:
        raise ValueError(f"unknown pulse kind {kind!r}")

    x = x / np.sqrt(np.sum(x**2) / sample_rate)
    return PulseSignal(samples=x, sample_rate=float(sample_rate), t0=-tc)


def pulse_spectrum(pulse, n_samples):
    """True complex spectrum of a pulse on an n-sample DFT grid.

    Accounts for the pulse's time origin so that a zero-phase pulse gets a
    real-valued spectrum; the returned values feed the field synthesizer.
    """
    freqs = np.fft.rfftfreq(n_samples, 1.0 / pulse.sample_rate)
    spec = np.fft.rfft(pulse.samples, n_samples)
    return freqs, spec * np.exp(-2j * np.pi * freqs * pulse.t0)


def stft_spectrogram(sig, window_length, hop):
    """Magnitude STFT with a periodic Hann window.

    Frame times are window centers referenced to the signal's t0.
    """
    fs = sig.sample_rate
    n_win = int(round(window_length * fs))
    n_hop = int(round(hop * fs))
    if n_win < 16:
        raise ValueError("window must span at least 16 samples")
    if n_hop < 1 or n_hop > n_win:
        raise ValueError("hop must be positive and no longer than the window")
    if n_win > sig.samples.size:
        raise ValueError("window longer than signal")

    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n_win) / n_win)
    frames = np.lib.stride_tricks.sliding_window_view(sig.samples, n_win)[::n_hop]
    spec = np.fft.rfft(frames * w, axis=1)
    starts = np.arange(frames.shape[0]) * n_hop
    return Spectrogram(
        times=sig.t0 + (starts + n_win / 2.0) / fs,
        frequencies=np.fft.rfftfreq(n_win, 1.0 / fs),
        magnitude=np.abs(spec),
        window_spec={
            "window": "hann",
            "length_s": n_win / fs,
            "hop_s": n_hop / fs,
            "nfft": n_win,
            "window_sumsq": float(np.sum(w**2)),
        },
    )


def spectrogram_energy(spec, sample_rate):
    """Signal energy estimated from window-compensated frame energies."""
    mag2 = spec.magnitude**2
    nfft = spec.window_spec["nfft"]
    wss = spec.window_spec["window_sumsq"]
    hop = spec.window_spec["hop_s"] * sample_rate
    inner = 2.0 * mag2.sum(axis=1) - mag2[:, 0]
    if nfft % 2 == 0:
        inner -= mag2[:, -1]
    return float(inner.sum() * hop / (wss * nfft * sample_rate))


# ---------------------------------------------------------------------------
# Warping


def _family_maps(spec):
    tr = spec.tr
    if spec.family == "reflective":
        return (
            lambda tau: np.sqrt(tau**2 + tr**2),
            lambda tau: tau / np.sqrt(tau**2 + tr**2),
            lambda t: np.sqrt(np.maximum(t**2 - tr**2, 0.0)),
            tr * (1 + 1e-12),
        )
    return (
        lambda tau: tr * np.exp(tau / tr),
        lambda tau: np.exp(tau / tr),
        lambda t: tr * np.log(t / tr),
        tr * 1e-9,
    )


def _fine_interpolator(sig):
    """Cubic interpolator over an FFT-oversampled copy of the signal."""
    n = sig.samples.size
    pad = max(64, n // 16)
    padded = np.concatenate([np.zeros(pad), sig.samples, np.zeros(pad)])
    n_fine = padded.size * _OVERSAMPLE
    fine = sps.resample(padded, n_fine)
    fs_fine = sig.sample_rate * _OVERSAMPLE
    t_start = sig.t0 - pad / sig.sample_rate
    spline = CubicSpline(t_start + np.arange(n_fine) / fs_fine, fine)
    lo = sig.t0
    hi = sig.t0 + (n - 1) / sig.sample_rate

    def interp(t):
        return np.where((t >= lo) & (t <= hi), spline(np.clip(t, lo, hi)), 0.0)

    return interp


def _support(sig, guard=8):
    """Absolute time bounds of the nonzero samples, with a small guard."""
    nz = np.nonzero(sig.samples)[0]
    if nz.size == 0:
        return sig.t0, sig.t0 + (sig.samples.size - 1) / sig.sample_rate
    lo = max(0, nz[0] - guard)
    hi = min(sig.samples.size - 1, nz[-1] + guard)
    return sig.t0 + lo / sig.sample_rate, sig.t0 + hi / sig.sample_rate


def warp(sig, spec):
    """Unitary time warping y(tau) = sqrt(h'(tau)) x(h(tau)).

    The output is uniformly resampled at ``spec.resampling_rate`` on the
    portion of the warped axis whose image lies inside both the signal
    support and the family domain (leading and trailing zeros are skipped,
    they carry no energy). Raises WarpDomainError when no part of the
    signal is reachable (for the reflective family the signal must cover
    times beyond tr).
    """
    h, hprime, hinv, t_min = _family_maps(spec)
    sup_lo, sup_hi = _support(sig)
    t_first = max(sup_lo, t_min)
    t_last = sup_hi
    if t_first >= t_last:
        raise WarpDomainError(
            f"signal support [{sig.t0:.3f}, {t_last:.3f}] s incompatible with "
            f"{spec.family} family domain (t > {t_min:.3f} s)"
        )
    fs_w = spec.resampling_rate
    k0 = int(np.ceil(hinv(t_first) * fs_w - 1e-9))
    k1 = int(np.floor(hinv(t_last) * fs_w + 1e-9))
    if k1 - k0 < 2:
        raise WarpDomainError("warped support too short at this resampling rate")
    tau = np.arange(k0, k1 + 1) / fs_w
    interp = _fine_interpolator(sig)
    y = np.sqrt(np.abs(hprime(tau))) * interp(h(tau))
    return PulseSignal(samples=y, sample_rate=fs_w, t0=k0 / fs_w)


def unwarp(sig, spec, sample_rate=None):
    """Inverse of :func:`warp` on its range.

    ``sample_rate`` sets the output grid (defaults to the spec's
    resampling rate); samples land on integer multiples of the sample
    period so that round trips align with the original grid.
    """
    h, hprime, hinv, _ = _family_maps(spec)
    fs = sample_rate if sample_rate is not None else spec.resampling_rate
    tau_first, tau_last = _support(sig)
    t_a, t_b = h(tau_first), h(tau_last)
    k0 = int(np.ceil(t_a * fs - 1e-9))
    k1 = int(np.floor(t_b * fs + 1e-9))
    if k1 - k0 < 2:
        raise WarpDomainError("unwarped support too short at this sample rate")
    t = np.arange(k0, k1 + 1) / fs
    interp = _fine_interpolator(sig)
    tau = hinv(t)
    x = interp(tau) / np.sqrt(np.abs(hprime(tau)))
    return PulseSignal(samples=x, sample_rate=float(fs), t0=k0 / fs)


# ---------------------------------------------------------------------------
# Modal separation and per-mode measurements


def separate_modes(sig, spec, n_modes, peak_snr_db=10.0, min_separation_bins=2,
                   smooth_bins=3, mask_taper_frac=0.1, tone_guides=None):
    """Split a dispersive multimode signal into per-mode time series.

    The warped-domain spectrum is peak-picked above a median noise floor
    (+``peak_snr_db``); the ``n_modes`` strongest tones are kept and mode
    indices are assigned in descending warped frequency, which is ascending
    mode order for surface-duct dispersion. Disjoint bandpass masks around
    each tone are inverted back to the time domain. Non-dispersive
    multipath energy does not concentrate into tones and is left out by
    the masks. Returns the resolvable subset (with a logged warning) when
    fewer than ``n_modes`` peaks stand above the floor.

    ``tone_guides`` (mode index -> expected warped-tone frequency, Hz)
    switches to model-guided masks: bands are centered on the guides and
    labels come from the guide keys. Use this when the environment is
    known; blind rank ordering cannot tell modes apart when some are
    weakly excited.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    warped = warp(sig, spec)
    spec_w = np.fft.rfft(warped.samples)
    mag = np.abs(spec_w)
    n_w = warped.samples.size
    freqs_w = np.fft.rfftfreq(n_w, 1.0 / warped.sample_rate)
    df_w = freqs_w[1] - freqs_w[0]

    if tone_guides:
        centers = sorted(tone_guides.items(), key=lambda kv: kv[1])
        vals = [v for _, v in centers]
        labeled = []
        for i, (m, v) in enumerate(centers):
            lo = vals[i - 1] + (v - vals[i - 1]) / 2 if i > 0 else max(0.4 * v, df_w)
            if i < len(vals) - 1:
                hi = v + (vals[i + 1] - v) / 2
            else:
                hi = v + (v - vals[i - 1]) / 2 if i > 0 else 1.6 * v
            labeled.append((m, int(max(1, np.floor(lo / df_w))),
                            int(min(mag.size - 1, np.ceil(hi / df_w)))))
    else:
        if smooth_bins > 1:
            kernel = np.ones(smooth_bins) / smooth_bins
            mag_s = np.convolve(mag, kernel, mode="same")
        else:
            mag_s = mag
        floor = np.median(mag_s[1:])
        height = floor * 10 ** (peak_snr_db / 20.0)
        peaks, _ = sps.find_peaks(mag_s, height=height, distance=min_separation_bins)
        if peaks.size == 0:
            log.warning("no resolvable warped-domain tones (requested %d)", n_modes)
            return []
        if peaks.size > n_modes:
            strongest = np.argsort(mag_s[peaks])[::-1][:n_modes]
            peaks = np.sort(peaks[strongest])
        if peaks.size < n_modes:
            log.warning("only %d of %d requested modes resolvable",
                        peaks.size, n_modes)
        edges = {}
        for i, p in enumerate(peaks):
            gap_lo = (p - peaks[i - 1]) / 2.0 if i > 0 else None
            gap_hi = (peaks[i + 1] - p) / 2.0 if i < peaks.size - 1 else None
            if gap_lo is None and gap_hi is None:
                gap_lo = gap_hi = max(5.0, 0.1 * p)
            gap_lo = gap_lo if gap_lo is not None else gap_hi
            gap_hi = gap_hi if gap_hi is not None else gap_lo
            edges[p] = (max(1, int(np.floor(p - gap_lo))),
                        min(mag.size - 1, int(np.ceil(p + gap_hi))))
        # descending warped frequency = ascending mode index
        labeled = [(rank, *edges[p])
                   for rank, p in enumerate(peaks[::-1], start=1)]

    out = []
    for m, lo, hi in labeled:
        mask = np.zeros(mag.size)
        mask[lo : hi + 1] = 1.0
        taper = max(1, int(mask_taper_frac * (hi - lo)))
        ramp = 0.5 * (1 - np.cos(np.pi * np.arange(1, taper + 1) / (taper + 1)))
        mask[lo : lo + taper] = ramp
        mask[hi - taper + 1 : hi + 1] = ramp[::-1]
        band_w = np.fft.irfft(spec_w * mask, n_w)
        masked = PulseSignal(band_w, warped.sample_rate, warped.t0)
        out.append(ModeSignal(m, unwarp(masked, spec, sample_rate=sig.sample_rate)))
    out.sort(key=lambda ms: ms.mode_index)
    return out


def extract_dispersion(mode_signals, band, window_length=1.0, hop=0.1,
                       floor_snr_db=10.0):
    """Per-mode dispersion curves (frequency, arrival time) by ridge picking.

    For each frequency bin in ``band`` the arrival time is the frame of
    maximum spectrogram energy; bins whose peak stays below the median
    noise floor are left out rather than interpolated.
    """
    f_lo, f_hi = band
    curves = {}
    for msig in mode_signals:
        spec = stft_spectrogram(msig.signal, window_length, hop)
        sel = np.nonzero((spec.frequencies >= f_lo) & (spec.frequencies <= f_hi))[0]
        floor = np.median(spec.magnitude) * 10 ** (floor_snr_db / 20.0)
        freqs, times = [], []
        for j in sel:
            col = spec.magnitude[:, j]
            if col.max() < floor:
                continue
            freqs.append(spec.frequencies[j])
            times.append(spec.times[int(np.argmax(col))])
        curves[msig.mode_index] = (np.asarray(freqs), np.asarray(times))
    return curves


def extract_mode_amplitudes(mode_signals, band, df):
    """Mode amplitude versus frequency, normalized per bin across modes.

    Amplitudes are RMS spectral magnitudes of each separated mode within
    df-wide bins; every frequency column is scaled to a unit vector across
    modes, which cancels the source spectrum and common propagation
    factors. All-zero bins are flagged unusable.
    """
    if len(mode_signals) < 2:
        raise ValueError("need at least 2 mode signals")
    f_lo, f_hi = band
    n_bins = int(round((f_hi - f_lo) / df))
    centers = f_lo + df * (np.arange(n_bins) + 0.5)

    rows = []
    for msig in mode_signals:
        x = msig.signal.samples
        spec = np.abs(np.fft.rfft(x))
        freqs = np.fft.rfftfreq(x.size, 1.0 / msig.signal.sample_rate)
        row = np.empty(n_bins)
        for j, c in enumerate(centers):
            sel = (freqs >= c - df / 2) & (freqs < c + df / 2)
            row[j] = np.sqrt(np.mean(spec[sel] ** 2)) if np.any(sel) else 0.0
        rows.append(row)

    amp = np.vstack(rows)
    norms = np.linalg.norm(amp, axis=0)
    usable = norms > 1e-12 * max(norms.max(), 1e-300)
    amp[:, usable] /= norms[usable]
    amp[:, ~usable] = 0.0
    return ModeAmplitudeMatrix(
        mode_indices=np.array([m.mode_index for m in mode_signals]),
        frequencies=centers,
        amplitudes=amp,
        usable=usable,
    )


def mode_upper_limit(mode_signal, band, drop_db=20.0, smooth_hz=0.5):
    """Highest in-band frequency within ``drop_db`` of the mode's peak.

    Returns an UpperLimit; the sentinel ``at_band_edge`` is set when the
    spectrum never falls below the threshold before the top of the band,
    in which case the limit is only a lower bound.
    """
    x = mode_signal.signal.samples
    fs = mode_signal.signal.sample_rate
    spec = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    df_bin = freqs[1] - freqs[0]
    width = max(1, int(round(smooth_hz / df_bin)))
    if width > 1:
        spec = np.convolve(spec, np.ones(width) / width, mode="same")
    f_lo, f_hi = band
    sel = np.nonzero((freqs >= f_lo) & (freqs <= f_hi))[0]
    if sel.size == 0 or spec[sel].max() == 0.0:
        raise ValueError("mode signal has no in-band energy")
    peak = spec[sel].max()
    above = sel[spec[sel] >= peak * 10 ** (-drop_db / 20.0)]
    last = above[-1]
    if last >= sel[-1]:
        return UpperLimit(frequency=float(f_hi), at_band_edge=True)
    return UpperLimit(frequency=float(freqs[last]), at_band_edge=False)


def detect_multipath(sig, template, max_arrivals, rel_threshold=0.1):
    """Matched-filter arrival detection.

    Correlates the signal with the template, envelopes the result, and
    picks peaks above ``rel_threshold`` of the strongest one, at least one
    template width apart (envelope full width at half maximum). Arrival
    times are sub-sample refined (parabolic) and reported on the emission
    time axis, ordered by time.
    """
    if abs(sig.sample_rate - template.sample_rate) > 1e-9:
        raise ValueError("signal and template sample rates must match")
    fs = sig.sample_rate
    corr = sps.correlate(sig.samples, template.samples, mode="full", method="fft")
    envelope = np.abs(sps.hilbert(corr))
    peak_env = envelope.max()
    if peak_env == 0.0:
        return []
    t_env = np.abs(sps.hilbert(template.samples))
    support = np.nonzero(t_env >= 0.5 * t_env.max())[0]
    width = max(1, int(support[-1] - support[0] + 1))
    idx, _ = sps.find_peaks(envelope, height=rel_threshold * peak_env, distance=width)
    if idx.size == 0:
        return []
    if idx.size > max_arrivals:
        idx = idx[np.argsort(envelope[idx])[::-1][:max_arrivals]]
        idx = np.sort(idx)
    out = []
    n_t = template.samples.size
    for i in idx:
        delta = 0.0
        if 0 < i < envelope.size - 1:
            a, b, c = envelope[i - 1], envelope[i], envelope[i + 1]
            denom = a - 2 * b + c
            if denom != 0:
                delta = 0.5 * (a - c) / denom
        t = sig.t0 - template.t0 + (i - (n_t - 1) + delta) / fs
        out.append((float(t), float(envelope[i] / peak_env)))
    return sorted(out)


def render_arrivals(arrivals, pulse, duration, signed=True):
    """Superpose copies of ``pulse`` at the arrival times and amplitudes.

    Delays are applied in the frequency domain (exact fractional delays).
    With ``signed`` each surface bounce flips the polarity, matching the
    -1 surface reflection coefficient.
    """
    fs = pulse.sample_rate
    n = int(round(duration * fs))
    if n < pulse.samples.size:
        raise ValueError("duration shorter than the pulse")
    spec = np.fft.rfft(pulse.samples, n)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    comb = np.zeros_like(spec)
    for arr in arrivals:
        amp = arr.amplitude
        if signed and arr.surface_bounces % 2 == 1:
            amp = -amp
        comb += amp * np.exp(-2j * np.pi * freqs * (arr.time + pulse.t0))
    return PulseSignal(np.fft.irfft(spec * comb, n), fs, t0=0.0)


# ---------------------------------------------------------------------------
# Signal file I/O: two-column text, or WAV with a JSON sidecar.


def write_signal(sig, path, band=None):
    path = Path(path)
    if path.suffix.lower() == ".wav":
        from scipy.io import wavfile

        wavfile.write(path, int(round(sig.sample_rate)),
                      sig.samples.astype(np.float32))
        meta = {"t0_s": sig.t0, "sample_rate_hz": sig.sample_rate}
        if band is not None:
            meta["band_hz"] = list(band)
        path.with_suffix(".meta.json").write_text(
            json.dumps(meta, sort_keys=True, indent=1) + "\n"
        )
    else:
        header = "time_s\tamplitude\n"
        rows = "\n".join(
            f"{t:.9f}\t{v:.12e}" for t, v in zip(sig.times, sig.samples)
        )
        path.write_text(header + rows + "\n")


def read_signal(path):
    path = Path(path)
    if path.suffix.lower() == ".wav":
        from scipy.io import wavfile

        rate, data = wavfile.read(path)
        meta_path = path.with_suffix(".meta.json")
        t0 = 0.0
        if meta_path.exists():
            t0 = json.loads(meta_path.read_text()).get("t0_s", 0.0)
        return PulseSignal(np.asarray(data, dtype=float), float(rate), t0)
    data = np.loadtxt(path, skiprows=1)
    times, vals = data[:, 0], data[:, 1]
    fs = 1.0 / np.median(np.diff(times))
    return PulseSignal(vals, fs, t0=float(times[0]))
