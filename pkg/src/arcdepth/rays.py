"""Layered-media ray tracing, eigenray search, and the four-ray cluster.

Within each piecewise-linear profile layer the sound speed gradient is
constant, so ray segments are exact circular arcs with closed-form range
and travel-time increments; there is no step-size tuning. The Snell
invariant p = cos(theta)/c(z) is preserved across layer interfaces and
only changes at reflections from the (possibly sloped) bathymetry.

Depth is positive downward; launch angles are radians, positive downward
from horizontal. Range 0 is the source line.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .env import ssp_at
from .exceptions import MissingClusterTagError

log = logging.getLogger(__name__)

_FWD_EPS = 1e-9  # minimum forward progress (m) accepted for an intersection


@dataclass(frozen=True)
class RayPath:
    """A traced ray: event waypoints plus bounce and turning-point counts."""

    launch_angle: float
    waypoints: np.ndarray  # rows (range_m, depth_m, time_s)
    surface_bounces: int
    bottom_bounces: int
    deep_inversions: int
    upper_turns: int
    first_vertical_event: str  # "surface" | "turn" | "none"
    last_vertical_event: str
    bottom_loss: float  # accumulated |R| over bottom bounces
    terminated: str  # "range" | "backscatter" | "trapped"

    @property
    def final_range(self):
        return float(self.waypoints[-1, 0])

    @property
    def final_depth(self):
        return float(self.waypoints[-1, 1])

    @property
    def travel_time(self):
        return float(self.waypoints[-1, 2])


@dataclass(frozen=True)
class Arrival:
    """One eigenray arrival at the receiver."""

    time: float
    amplitude: float
    launch_angle: float
    surface_bounces: int
    bottom_bounces: int
    deep_inversions: int
    end_tag: str  # SR/RS/SS/RR: surface-reflected at source end, receiver end

    def __post_init__(self):
        if self.amplitude < 0 or self.time <= 0:
            raise ValueError("arrival needs amplitude >= 0 and time > 0")


@dataclass(frozen=True)
class ArrivalStructure:
    """Time-sorted arrivals for one source/receiver/range geometry."""

    arrivals: tuple
    source_depth: float
    receiver_depth: float
    range_m: float

    def __post_init__(self):
        times = [a.time for a in self.arrivals]
        if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("arrivals must be sorted by time")

    def __iter__(self):
        return iter(self.arrivals)

    def __len__(self):
        return len(self.arrivals)

    def rows(self):
        return [
            (a.time, a.amplitude, a.end_tag, a.surface_bounces,
             a.bottom_bounces, a.deep_inversions)
            for a in self.arrivals
        ]


class ClusterTimes(NamedTuple):
    rr: float
    sr: float
    rs: float
    ss: float


class _Layers:
    """Profile knots with per-layer gradients; constant below the last knot."""

    def __init__(self, profile):
        self.z = np.asarray(profile.depths, dtype=float)
        self.c = np.asarray(profile.speeds, dtype=float)
        self.g = np.zeros(self.z.size)  # gradient of layer starting at knot i
        self.g[:-1] = np.diff(self.c) / np.diff(self.z)

    def index(self, z, sgn):
        """Layer containing z for motion direction sgn (+1 down)."""
        i = bisect_right(self.z, z) - 1
        if i >= 0 and sgn < 0 and i > 0 and z == self.z[i]:
            i -= 1  # sitting on a knot and moving up: use the layer above
        return min(max(i, 0), self.z.size - 1)

    def speed(self, i, z):
        return self.c[i] + self.g[i] * (z - self.z[i])

    def bounds(self, i):
        top = self.z[i]
        bot = self.z[i + 1] if i + 1 < self.z.size else math.inf
        return top, bot


def _bottom_reflection_coefficient(env, grazing_sin, z):
    """Magnitude of the fluid-fluid Rayleigh coefficient at a bottom bounce."""
    c1 = float(ssp_at(env.profile, z))
    c2, rho2 = env.bottom.speed, env.bottom.density
    rho1 = env.water_density
    cos1 = math.sqrt(max(0.0, 1.0 - grazing_sin**2))
    cos2 = cos1 * c2 / c1
    if cos2 >= 1.0:
        return 1.0  # total internal reflection
    sin2 = math.sqrt(1.0 - cos2**2)
    z1 = rho1 * c1 / max(grazing_sin, 1e-12)
    z2 = rho2 * c2 / max(sin2, 1e-12)
    return abs((z2 - z1) / (z2 + z1))


def trace_ray(env, z0, angle, max_range, max_events=200000):
    """Trace one ray to ``max_range`` with exact constant-gradient arcs.

    Reflections are specular at the surface and at the local piecewise
    linear bathymetry facet. A reflection that would reverse the horizontal
    motion terminates the trace (flagged "backscatter"). A horizontal ray
    sitting at a speed minimum runs straight to ``max_range``.
    """
    if not (-math.pi / 2 < angle < math.pi / 2):
        raise ValueError("launch angle must satisfy |angle| < pi/2")
    depth0 = env.bathymetry.depth_at(0.0)
    if not (0.0 <= z0 <= depth0):
        raise ValueError("launch depth outside the water column")

    layers = _Layers(env.profile)
    rb = env.bathymetry.ranges
    db = env.bathymetry.depths

    c_launch = float(ssp_at(env.profile, z0))
    p = math.cos(angle) / c_launch
    sgn = 1 if angle > 0 else (-1 if angle < 0 else 0)

    r, z, t = 0.0, float(z0), 0.0
    waypoints = [(r, z, t)]
    surface_bounces = bottom_bounces = deep_inversions = upper_turns = 0
    first_event = last_event = "none"
    bottom_loss = 1.0
    terminated = "range"

    if sgn == 0:
        below = layers.g[layers.index(z, +1)]
        if below > 0:
            # lower turning point at launch: trapped at a minimum if the
            # water above also refracts back down (or we sit at the surface)
            above_g = layers.g[layers.index(z, -1)] if z > 0 else 0.0
            if z == 0.0 or above_g < 0 or z in layers.z:
                dt = max_range / c_launch
                waypoints.append((max_range, z, dt))
                return RayPath(angle, np.asarray(waypoints), 0, 0, 0, 0,
                               "none", "none", 1.0, "trapped")
            sgn = -1
        elif below < 0:
            sgn = 1
        else:
            dt = max_range / c_launch
            waypoints.append((max_range, z, dt))
            return RayPath(angle, np.asarray(waypoints), 0, 0, 0, 0,
                           "none", "none", 1.0, "trapped")

    for _ in range(max_events):
        li = layers.index(z, sgn)
        g = layers.g[li]
        top, bot = layers.bounds(li)
        c_cur = layers.speed(li, z)
        cos_cur = min(p * c_cur, 1.0)
        sin_cur = math.sqrt(max(0.0, 1.0 - cos_cur**2))

        # pick the in-layer target: boundary or refraction turning point
        event = "boundary"
        if sgn > 0:
            z_tgt = bot
            if g > 0:
                c_turn = 1.0 / p
                z_turn = layers.z[li] + (c_turn - layers.c[li]) / g
                if z_turn <= z_tgt:
                    z_tgt, event = z_turn, "turn"
        else:
            z_tgt = top
            if g < 0:
                c_turn = 1.0 / p
                z_turn = layers.z[li] + (c_turn - layers.c[li]) / g
                if z_turn >= z_tgt:
                    z_tgt, event = z_turn, "turn"
        if math.isinf(z_tgt):
            raise RuntimeError("ray escaped below the profile")
        if sgn < 0 and z_tgt == 0.0:
            event = "surface"

        c_tgt = layers.speed(li, z_tgt)
        cos_tgt = min(p * c_tgt, 1.0)
        sin_tgt = math.sqrt(max(0.0, 1.0 - cos_tgt**2))

        if g != 0.0:
            dr = sgn * (sin_cur - sin_tgt) / (p * g)
        else:
            dr = abs(z_tgt - z) * cos_cur / max(sin_cur, 1e-300)
        r_end = r + dr

        # circle geometry for bathymetry / range interpolation
        if g != 0.0:
            radius = 1.0 / (p * abs(g))
            z_center = layers.z[li] - layers.c[li] / g
            r_center = r + sgn * math.copysign(1.0, g) * radius * sin_cur
            branch = 1.0 if g > 0 else -1.0

            def z_of_r(rq):
                root = max(radius**2 - (rq - r_center) ** 2, 0.0)
                return z_center + branch * math.sqrt(root)
        else:
            def z_of_r(rq, r0=r, z0_=z, slope=sgn * sin_cur / max(cos_cur, 1e-300)):
                return z0_ + slope * (rq - r0)

        # earliest bathymetry intersection inside this step
        r_hit = None
        i_seg = max(bisect_right(rb, r) - 1, 0)
        while True:
            ra = rb[i_seg] if i_seg < rb.size else rb[-1]
            if ra > r_end:
                break
            if i_seg + 1 < rb.size:
                rb_end = rb[i_seg + 1]
                beta = (db[i_seg + 1] - db[i_seg]) / (rb_end - ra)
            else:
                rb_end = math.inf
                beta = 0.0
            alpha = db[min(i_seg, rb.size - 1)] - beta * ra
            lo = max(r + _FWD_EPS, ra)
            hi = min(r_end, rb_end, max_range)
            if lo < hi:
                if g != 0.0:
                    aa = 1.0 + beta**2
                    bb = 2.0 * (beta * (alpha - z_center) - r_center)
                    cc = r_center**2 + (alpha - z_center) ** 2 - radius**2
                    disc = bb * bb - 4 * aa * cc
                    if disc >= 0.0:
                        sq = math.sqrt(disc)
                        for root in sorted(((-bb - sq) / (2 * aa), (-bb + sq) / (2 * aa))):
                            if lo <= root <= hi and abs(z_of_r(root) - (alpha + beta * root)) < 1e-6:
                                r_hit = root
                                break
                else:
                    slope = sgn * sin_cur / max(cos_cur, 1e-300)
                    denom = slope - beta
                    if abs(denom) > 1e-15:
                        root = (alpha + beta * 0.0 - (z - slope * r)) / denom
                        if lo <= root <= hi:
                            r_hit = root
            if r_hit is not None or rb_end >= r_end:
                break
            i_seg += 1

        if r_hit is not None:
            event = "bottom"
            r_end = r_hit
            z_tgt = z_of_r(r_hit)
        elif r_end >= max_range:
            event = "range"
            r_end = max_range
            z_tgt = z_of_r(max_range)

        if event in ("bottom", "range"):
            c_tgt = layers.speed(li, min(max(z_tgt, top), bot if not math.isinf(bot) else z_tgt))
            cos_tgt = min(p * c_tgt, 1.0)
            sin_tgt = math.sqrt(max(0.0, 1.0 - cos_tgt**2))

        if g != 0.0:
            dt = sgn / g * math.log((c_tgt * (1.0 + sin_cur)) / (c_cur * (1.0 + sin_tgt)))
        else:
            dt = (r_end - r) / (c_cur * max(cos_cur, 1e-300)) if sin_cur < 1e-12 \
                else abs(z_tgt - z) / (c_cur * sin_cur)
        t += abs(dt)
        r, z = r_end, z_tgt
        waypoints.append((r, z, t))

        if event == "range":
            break
        if event == "turn":
            if sgn > 0:
                deep_inversions += 1
            else:
                upper_turns += 1
            if first_event == "none":
                first_event = "turn"
            last_event = "turn"
            sgn = -sgn
        elif event == "surface":
            z = 0.0
            surface_bounces += 1
            if first_event == "none":
                first_event = "surface"
            last_event = "surface"
            sgn = 1
        elif event == "bottom":
            i_seg2 = min(max(bisect_right(rb, r) - 1, 0), rb.size - 1)
            if i_seg2 + 1 < rb.size:
                beta = (db[i_seg2 + 1] - db[i_seg2]) / (rb[i_seg2 + 1] - rb[i_seg2])
            else:
                beta = 0.0
            nrm = math.hypot(beta, 1.0)
            n_r, n_z = beta / nrm, -1.0 / nrm  # upward facet normal
            c_here = float(ssp_at(env.profile, z))
            cos_i = min(p * c_here, 1.0)
            sin_i = math.sqrt(max(0.0, 1.0 - cos_i**2))
            u_r, u_z = cos_i, sgn * sin_i
            dot = u_r * n_r + u_z * n_z
            v_r, v_z = u_r - 2 * dot * n_r, u_z - 2 * dot * n_z
            bottom_bounces += 1
            bottom_loss *= _bottom_reflection_coefficient(env, abs(dot), z)
            last_event = "bottom"
            if v_r <= 1e-9:
                terminated = "backscatter"
                break
            p = v_r / c_here
            sgn = 1 if v_z > 0 else -1
    else:
        raise RuntimeError("ray stepping exceeded the event budget")

    return RayPath(
        launch_angle=angle,
        waypoints=np.asarray(waypoints),
        surface_bounces=surface_bounces,
        bottom_bounces=bottom_bounces,
        deep_inversions=deep_inversions,
        upper_turns=upper_turns,
        first_vertical_event=first_event,
        last_vertical_event=last_event,
        bottom_loss=bottom_loss,
        terminated=terminated,
    )


def snell_invariant_drift(env, path):
    """Max relative drift of cos(theta)/c along a path (diagnostic)."""
    # reconstructed from waypoint pairs; exact arcs keep this at rounding level
    vals = []
    for (r1, z1, t1), (r2, z2, t2) in zip(path.waypoints, path.waypoints[1:]):
        dr, dz = r2 - r1, z2 - z1
        if dr <= 0 and dz == 0:
            continue
        c_mid = float(ssp_at(env.profile, (z1 + z2) / 2))
        hyp = math.hypot(dr, dz)
        if hyp == 0:
            continue
        vals.append(abs(dr) / hyp / c_mid)
    if not vals:
        return 0.0
    vals = np.asarray(vals)
    return float((vals.max() - vals.min()) / vals.mean())


def _tag(path):
    src = "S" if path.first_vertical_event == "surface" else "R"
    rcv = "S" if path.last_vertical_event == "surface" else "R"
    return src + rcv


def find_eigenrays(env, zs, zr, r, angle_grid, max_bottom_bounces=0,
                   merge_tol=1e-4, depth_tol=0.05, max_iter=80):
    """Eigenrays connecting (0, zs) to (r, zr), bracket and bisect.

    The final-depth-at-range function is scanned over ``angle_grid``; sign
    changes are refined by bisection. Brackets that straddle a bounce-count
    discontinuity fail the convergence check and are skipped with a logged
    warning. Arrival amplitudes come from adjacent-ray tube spreading with
    bottom bounces attenuated by the Rayleigh coefficient and discarded
    entirely above ``max_bottom_bounces``. Arrivals closer than
    ``merge_tol`` seconds are merged with summed amplitude.
    """
    if r <= 0:
        raise ValueError("range must be positive")
    angles = np.asarray(angle_grid, dtype=float)
    paths = {}

    def final_depth(a):
        if a not in paths:
            paths[a] = trace_ray(env, zs, a, r)
        pth = paths[a]
        return pth.final_depth if pth.terminated in ("range", "trapped") else math.nan

    arrivals = []
    f_prev = final_depth(angles[0]) - zr
    for a_lo, a_hi in zip(angles[:-1], angles[1:]):
        f_lo = f_prev
        f_hi = final_depth(a_hi) - zr
        f_prev = f_hi
        if math.isnan(f_lo) or math.isnan(f_hi) or f_lo * f_hi > 0:
            continue
        lo, hi, flo = a_lo, a_hi, f_lo
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            fm = final_depth(mid) - zr
            if math.isnan(fm):
                break
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
            if hi - lo < 1e-12:
                break
        a_star = 0.5 * (lo + hi)
        path = paths.get(a_star) or trace_ray(env, zs, a_star, r)
        paths[a_star] = path
        if path.terminated != "range" or abs(path.final_depth - zr) > depth_tol:
            log.warning("bracket (%.6f, %.6f) rad did not converge, skipped",
                        a_lo, a_hi)
            continue
        if path.bottom_bounces > max_bottom_bounces:
            continue
        # tube spreading from a controlled secant around the eigenangle
        d_th = 1e-6
        z_lo = final_depth(a_star - d_th)
        z_hi = final_depth(a_star + d_th)
        if math.isnan(z_lo) or math.isnan(z_hi):
            dz_dtheta = 1e-12
        else:
            dz_dtheta = abs(z_hi - z_lo) / (2 * d_th)
        if not math.isfinite(dz_dtheta) or dz_dtheta < 1e-12:
            dz_dtheta = 1e-12
        c_r = float(ssp_at(env.profile, zr))
        c_s = float(ssp_at(env.profile, zs))
        p_star = math.cos(a_star) / c_s
        sin_r = math.sqrt(max(1e-12, 1.0 - min(p_star * c_r, 1.0) ** 2))
        amp = math.sqrt(math.cos(a_star) / (r * sin_r * dz_dtheta))
        amp *= path.bottom_loss
        arrivals.append(Arrival(
            time=path.travel_time,
            amplitude=amp,
            launch_angle=a_star,
            surface_bounces=path.surface_bounces,
            bottom_bounces=path.bottom_bounces,
            deep_inversions=path.deep_inversions,
            end_tag=_tag(path),
        ))

    arrivals.sort(key=lambda a: a.time)
    merged = []
    for arr in arrivals:
        if merged and arr.time - merged[-1].time < merge_tol:
            prev = merged[-1]
            keep = prev if prev.amplitude >= arr.amplitude else arr
            merged[-1] = Arrival(
                time=prev.time,
                amplitude=prev.amplitude + arr.amplitude,
                launch_angle=keep.launch_angle,
                surface_bounces=keep.surface_bounces,
                bottom_bounces=keep.bottom_bounces,
                deep_inversions=keep.deep_inversions,
                end_tag=keep.end_tag,
            )
        else:
            merged.append(arr)
    if not merged:
        log.warning("no eigenrays found for zs=%.1f zr=%.1f r=%.0f", zs, zr, r)
    return ArrivalStructure(
        arrivals=tuple(merged), source_depth=zs, receiver_depth=zr, range_m=r
    )


def four_ray_cluster(structure):
    """Times of the four surface-reflection variants in the earliest
    zero-bottom-bounce deep-inversion family.

    Raises MissingClusterTagError naming the absent tag(s) when the family
    is incomplete (for example when the deep path is blocked).
    """
    cands = [a for a in structure.arrivals
             if a.bottom_bounces == 0 and a.deep_inversions >= 1]
    if not cands:
        raise MissingClusterTagError(("RR", "SR", "RS", "SS"))
    family = min(cands, key=lambda a: a.time).deep_inversions
    fam = [a for a in cands if a.deep_inversions == family]
    times = {}
    for tag in ("RR", "SR", "RS", "SS"):
        tagged = [a for a in fam if a.end_tag == tag]
        if not tagged:
            missing = [tg for tg in ("RR", "SR", "RS", "SS")
                       if not any(a.end_tag == tg for a in fam)]
            raise MissingClusterTagError(missing, family=family)
        times[tag] = min(a.time for a in tagged)
    return ClusterTimes(rr=times["RR"], sr=times["SR"], rs=times["RS"],
                        ss=times["SS"])


def tdoa_signature(cluster):
    """The three gaps between the four cluster times, sorted by time."""
    times = sorted(cluster)
    return (times[1] - times[0], times[2] - times[1], times[3] - times[2])


def deep_angle_grid(env, zs, min_turning_depth, n=800, both_signs=True):
    """Launch-angle grid spanning the deep-inversion ray family.

    Angles are chosen so turning depths run from ``min_turning_depth`` down
    to the deepest bathymetry (with margin); ducted shallow-turning rays
    are excluded so the modal field is not double counted.
    """
    c_s = float(ssp_at(env.profile, zs))
    c_lo = float(ssp_at(env.profile, min_turning_depth))
    c_hi = float(ssp_at(env.profile, env.bathymetry.max_depth))
    if c_lo <= c_s:
        raise ValueError("min_turning_depth must lie below the source duct")
    th_lo = math.acos(min(1.0, c_s / c_lo))
    th_hi = min(math.acos(min(1.0, c_s / c_hi)) * 1.05, math.pi / 2 * 0.98)
    pos = np.linspace(th_lo, th_hi, n)
    if not both_signs:
        return pos
    return np.concatenate([-pos[::-1], pos])
