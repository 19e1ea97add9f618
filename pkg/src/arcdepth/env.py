"""Ocean environment: sound speed profile, bathymetry, bottom halfspace.

The environment is laid out along the propagation track: range 0 is the
source line and the last bathymetry sample marks the receiver line. Sound
speed is range independent; only the water depth varies with range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EnvironmentFileError

# Hard sanity window for water sound speeds (m/s). Catches unit mistakes
# such as km/s values; violations are load errors, not warnings.
SPEED_WINDOW = (1300.0, 1700.0)

DEFAULT_WATER_DENSITY = 1000.0


@dataclass(frozen=True)
class SoundSpeedProfile:
    """Depth-ordered sound speed samples, piecewise linear in depth.

    depths must be strictly increasing and start at 0; speeds must lie
    inside ``SPEED_WINDOW``. Below the deepest sample the profile is
    extrapolated as constant.
    """

    depths: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=float)
        speeds = np.asarray(self.speeds, dtype=float)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "speeds", speeds)
        if depths.ndim != 1 or speeds.ndim != 1 or depths.size != speeds.size:
            raise ValueError("profile depths and speeds must be 1-d and equal length")
        if depths.size < 2:
            raise ValueError("profile needs at least 2 samples")
        if depths[0] != 0.0:
            raise ValueError(f"first profile depth must be 0, got {depths[0]}")
        bad = np.nonzero(np.diff(depths) <= 0)[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                "profile depths must be strictly increasing; "
                f"sample {i} -> {i + 1} goes {depths[i]} -> {depths[i + 1]}"
            )
        lo, hi = SPEED_WINDOW
        if np.any(speeds < lo) or np.any(speeds > hi):
            j = int(np.nonzero((speeds < lo) | (speeds > hi))[0][0])
            raise ValueError(
                f"speed {speeds[j]} m/s at depth {depths[j]} m outside sanity "
                f"window [{lo}, {hi}]"
            )

    @property
    def max_depth(self):
        return float(self.depths[-1])

    @property
    def min_speed(self):
        return float(self.speeds.min())

    @property
    def max_speed(self):
        return float(self.speeds.max())


@dataclass(frozen=True)
class Bathymetry:
    """Water depth versus range, piecewise linear, constant beyond last sample."""

    ranges: np.ndarray
    depths: np.ndarray

    def __post_init__(self):
        ranges = np.asarray(self.ranges, dtype=float)
        depths = np.asarray(self.depths, dtype=float)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "depths", depths)
        if ranges.ndim != 1 or ranges.size != depths.size or ranges.size < 1:
            raise ValueError("bathymetry ranges and depths must be 1-d, equal length")
        if ranges[0] != 0.0:
            raise ValueError(f"first bathymetry range must be 0, got {ranges[0]}")
        if ranges.size > 1 and np.any(np.diff(ranges) <= 0):
            i = int(np.nonzero(np.diff(ranges) <= 0)[0][0])
            raise ValueError(
                "bathymetry ranges must be strictly increasing; "
                f"sample {i} -> {i + 1} goes {ranges[i]} -> {ranges[i + 1]}"
            )
        if np.any(depths <= 0):
            j = int(np.nonzero(depths <= 0)[0][0])
            raise ValueError(f"bathymetry depth must be positive, got {depths[j]}")

    def depth_at(self, r):
        """Water depth at range r (m); constant beyond the sampled track."""
        return np.interp(r, self.ranges, self.depths)

    @property
    def max_depth(self):
        return float(self.depths.max())

    @property
    def receiver_depth_of_water(self):
        """Water depth at the far (receiver) end of the track."""
        return float(self.depths[-1])


@dataclass(frozen=True)
class BottomHalfspace:
    """Fluid bottom halfspace parameters (used for reporting, not mode physics)."""

    speed: float = 1600.0
    density: float = 1800.0
    attenuation: float = 0.5  # dB per wavelength

    def __post_init__(self):
        if self.speed <= 0 or self.density <= 0 or self.attenuation < 0:
            raise ValueError("bottom halfspace parameters out of range")


@dataclass(frozen=True)
class Environment:
    """Validated waveguide description.

    The profile must cover the whole water column; ``load_environment``
    extends a short profile by constant extrapolation and records that in
    ``load_warnings``. Instances are immutable and safe to share across
    workers.
    """

    profile: SoundSpeedProfile
    bathymetry: Bathymetry
    bottom: BottomHalfspace = field(default_factory=BottomHalfspace)
    water_density: float = DEFAULT_WATER_DENSITY
    load_warnings: tuple = ()

    def __post_init__(self):
        if self.water_density <= 0:
            raise ValueError("water density must be positive")
        if self.profile.max_depth < self.bathymetry.max_depth:
            raise ValueError(
                f"profile ends at {self.profile.max_depth} m but bathymetry "
                f"reaches {self.bathymetry.max_depth} m; extend the profile"
            )


def ssp_at(profile, z):
    """Sound speed at depth z (m), scalar or array.

    Piecewise linear between samples, constant below the deepest sample.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("depth must be non-negative")
    out = np.interp(z, profile.depths, profile.speeds)
    return float(out) if out.ndim == 0 else out


def make_arctic_profile(kind, **params):
    """Build a canonical Arctic-type profile.

    kind "half-channel": speed increases monotonically from a surface
    minimum, ``c(z) = surface_speed + gradient * z``.

    kind "dual-duct": a warm intrusion raises the speed to a local crest at
    ``warm_layer_depth``; a secondary minimum sits at ``duct_depth``; below
    that the speed increases with ``gradient`` (optionally steepening to
    ``deep_gradient`` below ``knee_depth``). ``duct_depth = 0`` degenerates
    to the half-channel shape.

    All knots are validated against the speed sanity window.
    """
    if kind == "half-channel":
        c0 = float(params.pop("surface_speed", 1435.0))
        g = float(params.pop("gradient", 0.016))
        zmax = float(params.pop("max_depth", 2500.0))
        _reject_unknown(params)
        if g <= 0 or zmax <= 0:
            raise ValueError("half-channel needs positive gradient and max_depth")
        depths = [0.0, zmax]
        speeds = [c0, c0 + g * zmax]
    elif kind == "dual-duct":
        c0 = float(params.pop("surface_speed", 1435.0))
        z_warm = float(params.pop("warm_layer_depth", 60.0))
        dc_warm = float(params.pop("warm_layer_speed_offset", 0.6))
        z_duct = float(params.pop("duct_depth", 200.0))
        dc_duct = float(params.pop("duct_speed_offset", 0.2))
        g = float(params.pop("gradient", 0.016))
        z_knee = params.pop("knee_depth", None)
        g_deep = params.pop("deep_gradient", None)
        zmax = float(params.pop("max_depth", 2500.0))
        _reject_unknown(params)
        if z_duct == 0.0:
            return make_arctic_profile(
                "half-channel", surface_speed=c0, gradient=g, max_depth=zmax
            )
        if not (0.0 < z_warm < z_duct < zmax):
            raise ValueError("need 0 < warm_layer_depth < duct_depth < max_depth")
        if dc_warm <= dc_duct:
            raise ValueError(
                "warm_layer_speed_offset must exceed duct_speed_offset to form a duct"
            )
        if g <= 0:
            raise ValueError("gradient below the duct must be positive")
        depths = [0.0, z_warm, z_duct]
        speeds = [c0, c0 + dc_warm, c0 + dc_duct]
        c_duct = c0 + dc_duct
        if z_knee is not None:
            z_knee = float(z_knee)
            g_deep = float(g_deep if g_deep is not None else g)
            if not (z_duct < z_knee < zmax):
                raise ValueError("knee_depth must lie between duct_depth and max_depth")
            c_knee = c_duct + g * (z_knee - z_duct)
            depths += [z_knee, zmax]
            speeds += [c_knee, c_knee + g_deep * (zmax - z_knee)]
        else:
            depths.append(zmax)
            speeds.append(c_duct + g * (zmax - z_duct))
    else:
        raise ValueError(f"unknown profile kind: {kind!r}")

    lo, hi = SPEED_WINDOW
    speeds_arr = np.asarray(speeds)
    if speeds_arr.min() < lo or speeds_arr.max() > hi:
        raise ValueError(
            f"parameters produce non-physical speeds "
            f"({speeds_arr.min():.1f}..{speeds_arr.max():.1f} m/s)"
        )
    return SoundSpeedProfile(np.asarray(depths), speeds_arr)


def _reject_unknown(params):
    if params:
        raise TypeError(f"unknown profile parameters: {sorted(params)}")


# ---------------------------------------------------------------------------
# File I/O. Two interchangeable renderings of the same schema: a sectioned
# text format and JSON. See README for the documented layout.

_SECTION_NAMES = ("profile", "bathymetry", "bottom", "water")

_PROFILE_COLS = ("depth_m", "speed_mps")
_BATHY_COLS = ("range_m", "depth_m")


def load_environment(path):
    """Load and validate an environment file (text or JSON rendering).

    Raises EnvironmentFileError on parse failures and invariant violations,
    identifying the offending line where possible. If the profile stops
    above the deepest bathymetry it is constant-extrapolated down and the
    extension is recorded in the returned Environment's ``load_warnings``.
    """
    text = open(path, "r", encoding="utf-8").read()
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise EnvironmentFileError(f"invalid JSON: {exc}", line=exc.lineno)
        sections = _sections_from_json(raw)
    else:
        sections = _sections_from_text(text)
    return _build_environment(sections)


def save_environment(env, path):
    """Write the sectioned text rendering; round-trips samples bit-exactly."""
    lines = ["[profile]", f"{_PROFILE_COLS[0]}\t{_PROFILE_COLS[1]}"]
    for z, c in zip(env.profile.depths, env.profile.speeds):
        lines.append(f"{float(z)!r}\t{float(c)!r}")
    lines.append("")
    lines.append("[bathymetry]")
    lines.append(f"{_BATHY_COLS[0]}\t{_BATHY_COLS[1]}")
    for r, d in zip(env.bathymetry.ranges, env.bathymetry.depths):
        lines.append(f"{float(r)!r}\t{float(d)!r}")
    lines.append("")
    lines.append("[bottom]")
    lines.append(f"speed_mps\t{float(env.bottom.speed)!r}")
    lines.append(f"density_kgm3\t{float(env.bottom.density)!r}")
    lines.append(f"atten_dB_lambda\t{float(env.bottom.attenuation)!r}")
    lines.append("")
    lines.append("[water]")
    lines.append(f"density_kgm3\t{float(env.water_density)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _sections_from_text(text):
    sections = {}
    current = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTION_NAMES:
                raise EnvironmentFileError(f"unknown section [{name}]", line=lineno)
            current = name
            sections[name] = []
            continue
        if current is None:
            raise EnvironmentFileError("data before any section header", line=lineno)
        sections[current].append((lineno, line.split()))
    return sections


def _sections_from_json(raw):
    sections = {}
    for name in _SECTION_NAMES:
        if name not in raw:
            continue
        block = raw[name]
        rows = []
        if name == "profile":
            for pair in _json_pairs(block, _PROFILE_COLS, name):
                rows.append((None, [str(pair[0]), str(pair[1])]))
        elif name == "bathymetry":
            for pair in _json_pairs(block, _BATHY_COLS, name):
                rows.append((None, [str(pair[0]), str(pair[1])]))
        else:
            for key, val in block.items():
                rows.append((None, [str(key), str(val)]))
        sections[name] = rows
    return sections


def _json_pairs(block, cols, name):
    if isinstance(block, dict):
        try:
            a, b = block[cols[0]], block[cols[1]]
        except KeyError as exc:
            raise EnvironmentFileError(f"[{name}] JSON missing key {exc}")
        if len(a) != len(b):
            raise EnvironmentFileError(f"[{name}] JSON columns differ in length")
        return list(zip(a, b))
    # also accept a plain list of [x, y] pairs
    return [(row[0], row[1]) for row in block]


def _parse_table(rows, cols, section):
    out = []
    for lineno, fields in rows:
        if [f.lower() for f in fields] == list(cols):
            continue  # optional header row
        if len(fields) != 2:
            raise EnvironmentFileError(
                f"[{section}] expected 2 columns, got {len(fields)}", line=lineno
            )
        try:
            out.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise EnvironmentFileError(
                f"[{section}] non-numeric value in {fields}", line=lineno
            )
    if not out:
        raise EnvironmentFileError(f"[{section}] section is empty")
    return out


def _parse_keyvals(rows, section):
    out = {}
    for lineno, fields in rows:
        if len(fields) != 2:
            raise EnvironmentFileError(
                f"[{section}] expected 'key value' pairs", line=lineno
            )
        try:
            out[fields[0]] = float(fields[1])
        except ValueError:
            raise EnvironmentFileError(
                f"[{section}] non-numeric value for {fields[0]}", line=lineno
            )
    return out


def _build_environment(sections):
    if "profile" not in sections:
        raise EnvironmentFileError("missing [profile] section")
    if "bathymetry" not in sections:
        raise EnvironmentFileError("missing [bathymetry] section")

    prof_rows = _parse_table(sections["profile"], _PROFILE_COLS, "profile")
    bath_rows = _parse_table(sections["bathymetry"], _BATHY_COLS, "bathymetry")

    try:
        profile = SoundSpeedProfile(
            np.array([r[0] for r in prof_rows]), np.array([r[1] for r in prof_rows])
        )
        bathy = Bathymetry(
            np.array([r[0] for r in bath_rows]), np.array([r[1] for r in bath_rows])
        )
    except ValueError as exc:
        raise EnvironmentFileError(str(exc))

    warnings = []
    if profile.max_depth < bathy.max_depth:
        profile = SoundSpeedProfile(
            np.append(profile.depths, bathy.max_depth),
            np.append(profile.speeds, profile.speeds[-1]),
        )
        warnings.append(
            f"profile extended from {prof_rows[-1][0]:g} m to {bathy.max_depth:g} m "
            f"by constant extrapolation ({profile.speeds[-1]:g} m/s)"
        )

    bottom_kv = _parse_keyvals(sections.get("bottom", []), "bottom")
    bottom = BottomHalfspace(
        speed=bottom_kv.get("speed_mps", 1600.0),
        density=bottom_kv.get("density_kgm3", 1800.0),
        attenuation=bottom_kv.get("atten_dB_lambda", 0.5),
    )
    water_kv = _parse_keyvals(sections.get("water", []), "water")
    density = water_kv.get("density_kgm3", DEFAULT_WATER_DENSITY)

    try:
        return Environment(
            profile=profile,
            bathymetry=bathy,
            bottom=bottom,
            water_density=density,
            load_warnings=tuple(warnings),
        )
    except ValueError as exc:
        raise EnvironmentFileError(str(exc))
