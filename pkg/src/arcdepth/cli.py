"""Command-line front end: simulate, analyze, estimate.

Every command reads a JSON scenario config (flags override the main
geometry fields), writes stage-named files into one output directory per
run, and renders matplotlib figures alongside the delimited output.
Given the same config and seed, runs are byte-identical; wall-clock
timings are only included with --timings since they break that guarantee.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import plotting
from .env import load_environment, ssp_at
from .estimate import (applicability_report, estimate_depth_amplitude,
                       estimate_depth_cutoff, estimate_depth_tdoa)
from .exceptions import MethodInapplicableError
from .modes import (cutoff_curve, dispersion_table, solve_modes,
                    synthesize_field, warped_tone_guides)
from .rays import deep_angle_grid, find_eigenrays, trace_ray
from .sigproc import (ModeAmplitudeMatrix, PulseSignal, UpperLimit, WarpingSpec,
                      detect_multipath, extract_dispersion,
                      extract_mode_amplitudes, make_pulse, mode_upper_limit,
                      pulse_spectrum, read_signal, render_arrivals,
                      separate_modes, stft_spectrogram, write_signal)
from .tabular import write_json, write_table

log = logging.getLogger("arcdepth")

DEFAULT_CONFIG = {
    "environment": None,
    "source_depth_m": 300.0,
    "receiver_depth_m": 342.0,
    "range_m": 105000.0,
    "band_hz": [20.0, 100.0],
    "sample_rate_hz": 256.0,
    "duration_s": None,  # null: range / min speed + 8 s
    "pulse": {"kind": "band-limited impulse", "duration_s": 1.0},
    "seed": 0,
    "noise_snr_db": None,
    "modes": {"max_modes": 10, "nz": 2000, "solve_df_hz": 0.25},
    "warping": {"family": "reflective", "c_ref_mps": None,
                "resampling_rate_hz": None, "n_separate": 8, "guided": True},
    "stft": {"window_s": 1.0, "hop_s": 0.1},
    "amplitude": {"df_hz": 2.0},
    "cutoff": {"threshold": 0.03, "drop_db": 24.0, "df_hz": 2.0,
               "n_modes": 4, "band_margin_hz": 5.0},
    "tdoa": {"min_turning_depth_m": 600.0, "angle_grid": 900,
             "max_bottom_bounces": 0, "rel_threshold": 0.15,
             "max_arrivals": 8},
    "grid": {"z_min_m": 10.0, "z_max_m": 600.0, "dz_m": 5.0},
    "ray_component": {"enabled": True, "scale": None},
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path, overrides=None):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        cfg = _merge(cfg, json.loads(Path(path).read_text()))
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    if not cfg.get("environment"):
        raise SystemExit("config error: 'environment' file is required")
    return cfg


def _prepare_out(out, overwrite):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    existing = [p for p in out.iterdir() if p.is_file()]
    if existing and not overwrite:
        raise SystemExit(
            f"output directory {out} is not empty; pass --overwrite to reuse it"
        )
    return out


def _scenario(cfg):
    env = load_environment(cfg["environment"])
    for warning in env.load_warnings:
        log.warning("environment: %s", warning)
    fs = float(cfg["sample_rate_hz"])
    band = tuple(float(b) for b in cfg["band_hz"])
    pulse = make_pulse(cfg["pulse"]["kind"], band[0], band[1], fs,
                       float(cfg["pulse"]["duration_s"]))
    duration = cfg.get("duration_s")
    if duration is None:
        duration = cfg["range_m"] / env.profile.min_speed + 8.0
    return env, fs, band, pulse, float(duration)


def _warping_spec(cfg, env, fs):
    wcfg = cfg["warping"]
    c_ref = wcfg.get("c_ref_mps") or env.profile.min_speed
    rate = wcfg.get("resampling_rate_hz") or 2.0 * fs
    return WarpingSpec(wcfg["family"], float(cfg["range_m"]) / float(c_ref),
                       float(rate))


def _ext(emit):
    return "tsv" if emit == "tsv" else "json"


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg, out, emit="tsv", figures=True, timings=False):
    t_start = time.perf_counter()
    written = []
    try:
        env, fs, band, pulse, duration = _scenario(cfg)
        zs = float(cfg["source_depth_m"])
        zr = float(cfg["receiver_depth_m"])
        r = float(cfg["range_m"])
        n = int(round(duration * fs))
        freqs, spec = pulse_spectrum(pulse, n)
        sel = (freqs >= band[0]) & (freqs <= band[1])

        mode_sig = synthesize_field(
            env, zs, zr, r, freqs[sel], spec[sel],
            max_modes=int(cfg["modes"]["max_modes"]),
            sample_rate=fs, nz=int(cfg["modes"]["nz"]),
            solve_df=float(cfg["modes"]["solve_df_hz"]),
        )
        samples = mode_sig.samples.copy()

        arrivals = None
        if cfg["ray_component"]["enabled"]:
            try:
                grid = deep_angle_grid(env, zs,
                                       float(cfg["tdoa"]["min_turning_depth_m"]),
                                       n=int(cfg["tdoa"]["angle_grid"]))
                arrivals = find_eigenrays(
                    env, zs, zr, r, grid,
                    max_bottom_bounces=int(cfg["tdoa"]["max_bottom_bounces"]),
                )
            except ValueError as exc:
                log.warning("ray component skipped: %s", exc)
        if arrivals and len(arrivals):
            ray_sig = render_arrivals(arrivals, pulse, duration)
            scale = cfg["ray_component"].get("scale")
            if scale is None:
                peak_m = np.abs(samples).max()
                peak_r = np.abs(ray_sig.samples).max()
                scale = peak_m / peak_r if peak_r > 0 else 1.0
            samples += float(scale) * ray_sig.samples

        if cfg.get("noise_snr_db") is not None:
            rng = np.random.default_rng(int(cfg["seed"]))
            active = np.abs(samples) > 1e-12 * np.abs(samples).max()
            rms = np.sqrt(np.mean(samples[active] ** 2)) if active.any() else 0.0
            noise = rng.standard_normal(samples.size)
            samples = samples + noise * rms * 10 ** (-float(cfg["noise_snr_db"]) / 20)

        signal = PulseSignal(samples, fs, t0=0.0, warnings=mode_sig.warnings)
        sig_path = out / "signal.tsv"
        write_signal(signal, sig_path, band=band)
        written.append(sig_path)

        arr_rows = arrivals.rows() if arrivals else []
        written.append(write_table(
            out / f"arrivals.{_ext(emit)}",
            ("time_s", "amplitude", "end_tag", "surface_bounces",
             "bottom_bounces", "deep_inversions"),
            arr_rows, emit))

        table = dispersion_table(env, band, 2.0,
                                 int(cfg["modes"]["max_modes"]),
                                 nz=int(cfg["modes"]["nz"]))
        written.append(write_table(
            out / f"dispersion.{_ext(emit)}",
            ("mode", "frequency_hz", "k_rad_m", "vg_mps"),
            table.rows(), emit))

        if figures:
            written.append(plotting.save_environment_figure(env, out / "environment.png"))
            written.append(plotting.save_signal_figure(signal, out / "signal.png"))
            if arrivals is not None:
                written.append(plotting.save_arrivals_figure(arrivals, out / "arrivals.png"))
                fan_angles = np.linspace(grid[0], grid[-1], 21)
                fan = [trace_ray(env, zs, a, r) for a in fan_angles if a != 0]
                written.append(plotting.save_ray_fan_figure(env, fan, out / "rays.png"))
            written.append(plotting.save_dispersion_figure(table, out / "dispersion.png"))

        report = {
            "config": cfg,
            "outputs": sorted(str(p.name) for p in written),
            "signal_warnings": list(signal.warnings),
            "n_ray_arrivals": len(arr_rows),
        }
        if timings:
            report["timings_s"] = {"total": time.perf_counter() - t_start}
        write_json(out / "report.json", report)
        return 0
    except Exception as exc:
        for p in written:
            Path(p).unlink(missing_ok=True)
        log.error("simulate failed: %s", exc)
        raise SystemExit(f"simulate: {exc}")


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(cfg, signal_path, out, emit="tsv", figures=True, timings=False):
    t_start = time.perf_counter()
    env, fs, band, pulse, _ = _scenario(cfg)
    sig = read_signal(signal_path)
    warnings = []

    spec = stft_spectrogram(sig, float(cfg["stft"]["window_s"]),
                            float(cfg["stft"]["hop_s"]))
    rows = [(t, f, m) for i, t in enumerate(spec.times)
            for f, m in zip(spec.frequencies, spec.magnitude[i])
            if band[0] <= f <= band[1]]
    write_table(out / f"spectrogram.{_ext(emit)}",
                ("time_s", "frequency_hz", "magnitude"), rows, emit)

    wspec = _warping_spec(cfg, env, sig.sample_rate)
    n_sep = int(cfg["warping"]["n_separate"])
    guides = None
    if cfg["warping"].get("guided", True):
        guides = warped_tone_guides(env, band, float(cfg["range_m"]),
                                    wspec.tr, n_sep,
                                    nz=min(int(cfg["modes"]["nz"]), 1500))
    mode_signals = separate_modes(sig, wspec, n_sep, tone_guides=guides)
    if len(mode_signals) < n_sep:
        warnings.append(f"only {len(mode_signals)} of {n_sep} modes resolvable")
    for ms in mode_signals:
        write_signal(ms.signal, out / f"mode_{ms.mode_index:02d}.tsv", band=band)

    curves = extract_dispersion(mode_signals, band,
                                window_length=float(cfg["stft"]["window_s"]),
                                hop=float(cfg["stft"]["hop_s"]))
    curve_rows = [(m, f, t) for m, (fr, tr_) in sorted(curves.items())
                  for f, t in zip(fr, tr_)]
    write_table(out / f"dispersion_curves.{_ext(emit)}",
                ("mode", "frequency_hz", "arrival_time_s"), curve_rows, emit)

    margin = float(cfg["cutoff"]["band_margin_hz"])
    band_an = (band[0], band[1] - margin)
    limit_rows = []
    if len(mode_signals) >= 2:
        mat = extract_mode_amplitudes(mode_signals, band,
                                      float(cfg["amplitude"]["df_hz"]))
        mat_rows = [(int(m), float(f), float(mat.amplitudes[i, j]))
                    for i, m in enumerate(mat.mode_indices)
                    for j, f in enumerate(mat.frequencies)]
        write_table(out / f"amplitude_matrix.{_ext(emit)}",
                    ("mode", "frequency_hz", "amplitude"), mat_rows, emit)
    else:
        warnings.append("fewer than 2 modes; amplitude matrix not written")
    for ms in mode_signals:
        try:
            ul = mode_upper_limit(ms, band_an,
                                  drop_db=float(cfg["cutoff"]["drop_db"]))
            limit_rows.append((ms.mode_index, ul.frequency,
                               int(ul.at_band_edge)))
        except ValueError:
            warnings.append(f"mode {ms.mode_index}: no in-band energy for "
                            "upper-limit detection")
    write_table(out / f"upper_limits.{_ext(emit)}",
                ("mode", "upper_limit_hz", "at_band_edge"), limit_rows, emit)

    detections = detect_multipath(sig, pulse,
                                  int(cfg["tdoa"]["max_arrivals"]),
                                  rel_threshold=float(cfg["tdoa"]["rel_threshold"]))
    write_table(out / f"detected_arrivals.{_ext(emit)}",
                ("time_s", "strength"), detections, emit)

    if figures:
        plotting.save_spectrogram_figure(spec, out / "spectrogram.png")
        if mode_signals:
            plotting.save_mode_signals_figure(mode_signals, out / "modes.png")

    report = {
        "config": cfg,
        "signal": str(signal_path),
        "warnings": warnings,
        "n_modes_separated": len(mode_signals),
        "n_detections": len(detections),
        "thresholds": {
            "warping_tr_s": wspec.tr,
            "warping_family": wspec.family,
            "warping_resampling_rate_hz": wspec.resampling_rate,
            "tone_guides_hz": guides,
            "upper_limit_drop_db": float(cfg["cutoff"]["drop_db"]),
            "upper_limit_band_hz": list(band_an),
            "detection_rel_threshold": float(cfg["tdoa"]["rel_threshold"]),
            "stft": cfg["stft"],
        },
    }
    if timings:
        report["timings_s"] = {"total": time.perf_counter() - t_start}
    write_json(out / "report.json", report)
    return 0


# ---------------------------------------------------------------------------
# estimate


def _read_table(path):
    lines = Path(path).read_text().strip().splitlines()
    if str(path).endswith(".json"):
        return json.loads("\n".join(lines))
    header = lines[0].split("\t")
    return [dict(zip(header, ln.split("\t"))) for ln in lines[1:]]


def _load_matrix(analysis_dir, emit):
    path = Path(analysis_dir) / f"amplitude_matrix.{_ext(emit)}"
    if not path.exists():
        raise MethodInapplicableError(f"missing {path.name} in analysis outputs")
    rows = _read_table(path)
    modes = sorted({int(float(r["mode"])) for r in rows})
    freqs = sorted({float(r["frequency_hz"]) for r in rows})
    amp = np.zeros((len(modes), len(freqs)))
    for row in rows:
        i = modes.index(int(float(row["mode"])))
        j = freqs.index(float(row["frequency_hz"]))
        amp[i, j] = float(row["amplitude"])
    norms = np.linalg.norm(amp, axis=0)
    return ModeAmplitudeMatrix(
        mode_indices=np.asarray(modes), frequencies=np.asarray(freqs),
        amplitudes=amp, usable=norms > 1e-12 * max(norms.max(), 1e-300),
    )


def cmd_estimate(cfg, analysis_dir, method, out, emit="tsv", figures=True,
                 timings=False):
    t_start = time.perf_counter()
    env, fs, band, pulse, _ = _scenario(cfg)
    zr = float(cfg["receiver_depth_m"])
    r = float(cfg["range_m"])
    gcfg = cfg["grid"]
    depth_grid = np.arange(float(gcfg["z_min_m"]),
                           float(gcfg["z_max_m"]) + 1e-9, float(gcfg["dz_m"]))
    methods = ("amplitude", "cutoff", "tdoa") if method == "all" else (method,)
    results = {}

    for name in methods:
        try:
            if name == "amplitude":
                mat = _load_matrix(analysis_dir, emit)
                est = estimate_depth_amplitude(mat, env, depth_grid, band,
                                               nz=min(int(cfg["modes"]["nz"]), 1500))
            elif name == "cutoff":
                path = Path(analysis_dir) / f"upper_limits.{_ext(emit)}"
                if not path.exists():
                    raise MethodInapplicableError(f"missing {path.name}")
                limits = {int(float(row["mode"])):
                          UpperLimit(float(row["upper_limit_hz"]),
                                     bool(int(float(row["at_band_edge"]))))
                          for row in _read_table(path)}
                if not limits:
                    raise MethodInapplicableError("no upper limits detected")
                curve = cutoff_curve(env, band, float(cfg["cutoff"]["df_hz"]),
                                     int(cfg["cutoff"]["n_modes"]),
                                     threshold=float(cfg["cutoff"]["threshold"]),
                                     nz=min(int(cfg["modes"]["nz"]), 1500))
                est = estimate_depth_cutoff(limits, curve, zr)
                if figures:
                    plotting.save_cutoff_figure(curve, out / "cutoff_curves.png")
            else:
                path = Path(analysis_dir) / f"detected_arrivals.{_ext(emit)}"
                if not path.exists():
                    raise MethodInapplicableError(f"missing {path.name}")
                rows = _read_table(path)
                times = sorted(float(row["time_s"]) for row in rows)[:4]
                if len(times) < 4:
                    raise MethodInapplicableError(
                        f"only {len(times)} arrivals detected; need 4 for the cluster"
                    )
                gaps = tuple(np.diff(times))
                est = estimate_depth_tdoa(
                    gaps, env, zr, r, depth_grid,
                    min_turning_depth=float(cfg["tdoa"]["min_turning_depth_m"]),
                    angle_grid_size=int(cfg["tdoa"]["angle_grid"]),
                    max_bottom_bounces=int(cfg["tdoa"]["max_bottom_bounces"]),
                )
            results[name] = {
                "applicable": True,
                "depth_m": est.depth,
                "score": est.score,
                "caveats": list(est.caveats),
                "details": est.details,
            }
            if est.ambiguity is not None:
                write_table(out / f"ambiguity_{name}.{_ext(emit)}",
                            ("depth_m", "score"), est.ambiguity.rows(), emit)
                results[name]["secondary_peaks"] = [
                    list(p) for p in est.ambiguity.secondary_peaks
                ]
                if figures:
                    plotting.save_ambiguity_figure(
                        est.ambiguity, out / f"ambiguity_{name}.png", method=name)
        except MethodInapplicableError as exc:
            results[name] = {"applicable": False, "reason": str(exc)}

    zs_range = (float(gcfg["z_min_m"]), float(gcfg["z_max_m"]))
    report_app = applicability_report(
        env, zs_range, zr, r, band,
        min_turning_depth=float(cfg["tdoa"]["min_turning_depth_m"]))

    report = {
        "config": cfg,
        "analysis_dir": str(analysis_dir),
        "estimates": results,
        "applicability": report_app.as_dict(),
    }
    if timings:
        report["timings_s"] = {"total": time.perf_counter() - t_start}
    write_json(out / "report.json", report)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _add_common(p):
    p.add_argument("--config", help="JSON scenario config")
    p.add_argument("--out", required=True, help="output directory for this run")
    p.add_argument("--emit", choices=("tsv", "json"), default="tsv",
                   help="format for tabular outputs")
    p.add_argument("--figures", dest="figures", action="store_true", default=True)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.add_argument("--overwrite", action="store_true",
                   help="allow writing into a non-empty output directory")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings in the report "
                        "(breaks byte-identical reruns)")
    p.add_argument("--environment", help="override environment file")
    p.add_argument("--source-depth-m", type=float, dest="source_depth_m")
    p.add_argument("--receiver-depth-m", type=float, dest="receiver_depth_m")
    p.add_argument("--range-m", type=float, dest="range_m")
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-snr-db", type=float, dest="noise_snr_db")


def main(argv=None):
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="arcdepth",
        description="Single-hydrophone source depth estimation in "
                    "surface-duct waveguides",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="synthesize signal, arrivals, dispersion")
    _add_common(p_sim)

    p_ana = sub.add_parser("analyze", help="run the signal-processing chain")
    _add_common(p_ana)
    p_ana.add_argument("--signal", required=True, help="signal file from simulate")

    p_est = sub.add_parser("estimate", help="run the depth estimators")
    _add_common(p_est)
    p_est.add_argument("--analysis", required=True,
                       help="analysis output directory")
    p_est.add_argument("--method", choices=("amplitude", "cutoff", "tdoa", "all"),
                       default="all")

    p_env = sub.add_parser("env-template",
                           help="write an example environment file")
    p_env.add_argument("--kind", choices=("half-channel", "dual-duct"),
                       default="dual-duct")
    p_env.add_argument("--out", required=True)

    args = parser.parse_args(argv)

    if args.command == "env-template":
        from .env import (Bathymetry, Environment, make_arctic_profile,
                          save_environment)

        profile = make_arctic_profile(args.kind)
        env = Environment(profile=profile,
                          bathymetry=Bathymetry(np.array([0.0]),
                                                np.array([2000.0])))
        save_environment(env, args.out)
        print(f"wrote {args.kind} environment to {args.out}")
        return 0

    overrides = {k: getattr(args, k, None) for k in
                 ("environment", "source_depth_m", "receiver_depth_m",
                  "range_m", "seed", "noise_snr_db")}
    cfg = load_config(args.config, overrides)
    out = _prepare_out(args.out, args.overwrite)

    if args.command == "simulate":
        return cmd_simulate(cfg, out, args.emit, args.figures, args.timings)
    if args.command == "analyze":
        return cmd_analyze(cfg, args.signal, out, args.emit, args.figures,
                           args.timings)
    return cmd_estimate(cfg, args.analysis, args.method, out, args.emit,
                        args.figures, args.timings)


if __name__ == "__main__":
    sys.exit(main())
