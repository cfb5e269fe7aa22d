"""Lap boundaries, cornering events, swim-phase labels, lap normalization.

Lap detection is threshold-based: a lap runs from a sustained rise of the
smoothed speed above ``v_start`` (with pitch oscillation present) to a
sustained fall below it. The cornering event is the peak of |normal
acceleration| inside the lap, and the turn window is bounded where that
signal drops to 55 % of the peak on either side (sub-sample crossings by
linear interpolation).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .energetics import PowerSeries, drag_work, thrust_work
from .ingest import moving_average
from .kinematics import KinematicState
from .localization import CircleFit, Track, fit_circle
from .params import AnimalParams

REST, TRANSIENT, CONSISTENT, GLIDE = 0, 1, 2, 3
PHASE_NAMES = {REST: "rest", TRANSIENT: "transient",
               CONSISTENT: "consistent_speed", GLIDE: "glide"}


@dataclass(frozen=True)
class SegmentationConfig:
    """Detection thresholds; defaults reproduce the documented behavior."""

    v_start: float = 0.5            # m/s, lap start/end speed threshold
    start_sustain_s: float = 1.0    # s above threshold to open a lap
    end_sustain_s: float = 2.0      # s below threshold to close a lap
    theta_osc: float = np.radians(5.0)   # rad, fluking pitch amplitude
    osc_window_s: float = 2.0       # s, sliding window for oscillation
    a_thresh: float = 0.2           # m/s^2, transient |a_t| threshold
    trans_sustain_s: float = 1.0    # s, sustain for transient labeling
    min_phase_s: float = 0.6        # s, shorter phases merge into neighbor
    turn_level: float = 0.55        # fraction of peak |a_n| bounding turn


@dataclass
class LapEvents:
    """Times (s) of one lap's boundary and cornering events."""

    t_s: float
    t_c: float
    t_e: float
    turn_start: float
    turn_end: float
    start_idx: int = 0
    corner_idx: int = 0
    end_idx: int = 0      # exclusive sample bound

    def __post_init__(self) -> None:
        if not (self.t_s < self.turn_start < self.t_c
                < self.turn_end < self.t_e):
            raise ValueError(
                f"lap events out of order: {self.t_s} / {self.turn_start} / "
                f"{self.t_c} / {self.turn_end} / {self.t_e}")

    @property
    def duration(self) -> float:
        return self.t_e - self.t_s

    @property
    def turn_duration(self) -> float:
        return self.turn_end - self.turn_start


def _true_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """[start, stop) bounds of each run of True."""
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.view(np.int8), [0]))))
    return list(zip(idx[0::2], idx[1::2]))


def _sustain(mask: np.ndarray, min_len: int) -> np.ndarray:
    """Drop True-runs shorter than ``min_len`` samples."""
    out = np.zeros_like(mask)
    for i0, i1 in _true_runs(mask):
        if i1 - i0 >= min_len:
            out[i0:i1] = True
    return out


def _rolling_extrema(values: np.ndarray, half: int) -> tuple[np.ndarray, np.ndarray]:
    padded = np.pad(values, half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * half + 1)
    return windows.max(axis=1), windows.min(axis=1)


def fluking_mask(states: KinematicState,
                 cfg: SegmentationConfig = SegmentationConfig()) -> np.ndarray:
    """True where the pitch channel oscillates hard enough to be fluking."""
    dt = states.dt
    half = max(1, int(round(cfg.osc_window_s / dt)) // 2)
    detrended = states.theta - moving_average(states.theta, cfg.osc_window_s, dt)
    hi, lo = _rolling_extrema(detrended, half)
    return np.maximum(hi, -lo) >= cfg.theta_osc


def detect_laps(states: KinematicState, power: PowerSeries | None = None,
                cfg: SegmentationConfig = SegmentationConfig()) -> list[LapEvents]:
    """Find all laps in a trial and their cornering events.

    Returns an empty list when the speed never rises. Ties in the normal
    acceleration peak resolve to the earliest sample with a warning.
    """
    t, v = states.t, states.v
    n = len(v)
    dt = states.dt
    start_n = max(1, int(round(cfg.start_sustain_s / dt)))
    end_n = max(1, int(round(cfg.end_sustain_s / dt)))
    above = v > cfg.v_start
    if not above.any():
        return []
    fluk = fluking_mask(states, cfg)

    runs = _true_runs(above)
    # Dips below threshold shorter than the end sustain do not close a lap.
    merged: list[list[int]] = []
    for i0, i1 in runs:
        if merged and i0 - merged[-1][1] < end_n:
            merged[-1][1] = i1
        else:
            merged.append([i0, i1])

    events = []
    for i0, i1 in merged:
        if i1 - i0 < start_n:
            continue
        if not fluk[i0:min(i0 + start_n, n)].any():
            continue
        t_s = float(t[i0])
        t_e = float(t[i1]) if i1 < n else float(t[-1])
        an = np.abs(states.a_n[i0:i1])
        peak = float(an.max())
        c_rel = int(np.argmax(an))
        if peak > 0.0 and np.count_nonzero(an >= peak * (1.0 - 1e-9)) > 1:
            warnings.warn(
                f"lap at t={t_s:.2f}: tied |a_n| maxima, using earliest",
                stacklevel=2)
        if peak == 0.0:
            warnings.warn(
                f"lap at t={t_s:.2f}: no cornering signal, event placed "
                "mid-lap", stacklevel=2)
            c_rel = (i1 - i0) // 2
        # The event needs interior samples on both sides for valid bounds.
        c_idx = int(np.clip(i0 + c_rel, i0 + 1, min(i1, n) - 2))
        t_c = float(t[c_idx])
        turn_start, turn_end = _turn_bounds(t, np.abs(states.a_n), i0, i1,
                                            c_idx, peak, cfg.turn_level, dt)
        events.append(LapEvents(
            t_s=t_s, t_c=t_c, t_e=t_e, turn_start=turn_start,
            turn_end=turn_end, start_idx=i0, corner_idx=c_idx,
            end_idx=min(i1, n)))
    return events


def _turn_bounds(t, an, i0, i1, c_idx, peak, level_frac, dt):
    if peak <= 0.0:
        return float(t[c_idx]) - dt / 2, float(t[c_idx]) + dt / 2
    level = level_frac * peak
    turn_start = float(t[i0])
    for k in range(c_idx - 1, i0 - 1, -1):
        if an[k] < level:
            frac = (level - an[k]) / (an[k + 1] - an[k])
            turn_start = float(t[k] + frac * dt)
            break
    turn_end = float(t[min(i1, len(t)) - 1])
    for k in range(c_idx + 1, min(i1, len(t))):
        if an[k] < level:
            frac = (an[k - 1] - level) / (an[k - 1] - an[k])
            turn_end = float(t[k - 1] + frac * dt)
            break
    # Keep strict event ordering even for degenerate peaks.
    t_c = float(t[c_idx])
    t_s = float(t[i0])
    t_e = float(t[min(i1, len(t)) - 1])
    turn_start = min(max(turn_start, t_s + 1e-9), t_c - 1e-9)
    turn_end = max(min(turn_end, t_e - 1e-9), t_c + 1e-9)
    return turn_start, turn_end


def classify_phases(states: KinematicState, events: list[LapEvents],
                    cfg: SegmentationConfig = SegmentationConfig()) -> np.ndarray:
    """Label every sample rest / transient / consistent_speed / glide.

    Samples outside all laps are rest. Inside a lap, fluking samples split
    into transient (|a_t| above threshold, sustained) and consistent
    speed; non-fluking lap samples are glide (a detected lap is in motion
    by construction). Phases shorter than the minimum duration merge into
    the preceding phase.
    """
    n = len(states)
    dt = states.dt
    labels = np.full(n, REST, dtype=np.int8)
    fluk = fluking_mask(states, cfg)
    trans_n = max(1, int(round(cfg.trans_sustain_s / dt)))
    min_n = max(1, int(round(cfg.min_phase_s / dt)))
    transient = _sustain(np.abs(states.a_t) >= cfg.a_thresh, trans_n)

    for ev in events:
        i0, i1 = ev.start_idx, ev.end_idx
        seg = np.where(fluk[i0:i1],
                       np.where(transient[i0:i1], TRANSIENT, CONSISTENT),
                       GLIDE).astype(np.int8)
        labels[i0:i1] = _merge_short_runs(seg, min_n)
    return labels


def _label_runs(seg: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = 0
    for i in range(1, len(seg) + 1):
        if i == len(seg) or seg[i] != seg[start]:
            runs.append((start, i))
            start = i
    return runs


def _merge_short_runs(seg: np.ndarray, min_n: int) -> np.ndarray:
    """Absorb label runs shorter than ``min_n`` into the preceding run."""
    out = seg.copy()
    changed = True
    while changed:
        changed = False
        runs = _label_runs(out)
        for k, (r0, r1) in enumerate(runs):
            if r1 - r0 < min_n and len(runs) > 1:
                target = runs[k - 1] if k > 0 else runs[k + 1]
                out[r0:r1] = out[target[0]]
                changed = True
                break
    return out


@dataclass
class NormalizedLap:
    """Lap channels resampled onto a uniform percentage-lap grid."""

    pct: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)


def pct_lap_time(t: np.ndarray | float, t_c: float, t_end: float):
    """Piecewise percentage-lap mapping of lap-relative time, in percent.

    Expands the pre-corner half onto [0, 50] and the post-corner half onto
    [50, 100]; continuous, strictly increasing, exactly 50 at ``t_c``.
    """
    if not 0.0 < t_c < t_end:
        raise ValueError("degenerate lap: need 0 < t_c < t_end")
    tt = np.asarray(t, dtype=float)
    # Division order keeps t = t_c at exactly one half before scaling.
    warped = np.where(
        tt <= t_c,
        t_end * (tt / (2.0 * t_c)),
        t_end - t_end * ((t_end - tt) / (2.0 * (t_end - t_c))))
    pct = 100.0 * (warped / t_end)
    return float(pct) if np.isscalar(t) else pct


def corner_circle_fits(track: Track, t: np.ndarray, events: LapEvents,
                       fractions: tuple[float, ...] = (20.0, 50.0, 80.0),
                       width_pct: float = 10.0
                       ) -> dict[float, CircleFit | None]:
    """Circle-of-best-fit over percentage-lap windows of the track.

    Fits a centered ``width_pct``-wide window at each requested lap
    fraction; straight (collinear) or too-short windows yield None.
    """
    sel = (t >= events.t_s) & (t <= events.t_e)
    pct = pct_lap_time(t[sel] - events.t_s, events.t_c - events.t_s,
                       events.t_e - events.t_s)
    xs, ys = track.x[sel], track.y[sel]
    out: dict[float, CircleFit | None] = {}
    for frac in fractions:
        m = (pct >= frac - width_pct / 2) & (pct <= frac + width_pct / 2)
        if np.count_nonzero(m) < 3:
            out[frac] = None
            continue
        try:
            out[frac] = fit_circle(np.column_stack([xs[m], ys[m]]))
        except ValueError:
            out[frac] = None
    return out


def normalize_lap(channels: dict[str, np.ndarray], t: np.ndarray,
                  events: LapEvents, grid_n: int = 201) -> NormalizedLap:
    """Resample lap channels onto ``grid_n`` uniform percentage points."""
    sel = (t >= events.t_s) & (t <= events.t_e)
    if np.count_nonzero(sel) < 2:
        raise ValueError("lap holds fewer than 2 samples")
    rel = t[sel] - events.t_s
    pct = pct_lap_time(rel, events.t_c - events.t_s, events.t_e - events.t_s)
    grid = np.linspace(0.0, 100.0, grid_n)
    out = {}
    for name, ch in channels.items():
        ch = np.asarray(ch, dtype=float)
        if len(ch) != len(t):
            raise ValueError(f"channel {name!r} not aligned to t")
        out[name] = np.interp(grid, pct, ch[sel])
    return NormalizedLap(pct=grid, channels=out)


def lap_metrics(states: KinematicState, power: PowerSeries, track: Track,
                events: LapEvents, labels: np.ndarray,
                params: AnimalParams) -> dict:
    """Summary record for one analyzed lap (durations, peaks, work, COT)."""
    dt = states.dt
    i0, i1 = events.start_idx, events.end_idx
    t = states.t
    lap = slice(i0, i1)
    lap_labels = labels[lap]
    out_mask = t[lap] < events.t_c
    turn_mask = (t >= events.turn_start) & (t <= events.turn_end)

    def phase_s(code: int, half: np.ndarray | None = None) -> float:
        m = lap_labels == code
        if half is not None:
            m = m & half
        return float(np.count_nonzero(m) * dt)

    def phase_work(code: int, rectify: bool) -> float:
        mask = lap_labels == code
        if not mask.any():
            return 0.0
        return thrust_work(power.p_thrust[lap], dt, window=mask,
                           rectify=rectify)

    work_rect = {code: phase_work(code, True)
                 for code in (TRANSIENT, CONSISTENT, GLIDE, REST)}
    work_signed = {code: phase_work(code, False)
                   for code in (TRANSIENT, CONSISTENT, GLIDE, REST)}

    finite_r = track.radius[turn_mask]
    finite_r = finite_r[np.isfinite(finite_r)]
    turn_pts = np.column_stack([track.x[turn_mask], track.y[turn_mask]])
    try:
        corner_fit_radius = fit_circle(turn_pts).radius
    except ValueError:
        corner_fit_radius = float("nan")
    # Kinematic radius v/|omega| at the event: immune to the second-
    # difference discretization bias of the track-based channel.
    omega_c = abs(states.omega[events.corner_idx])
    corner_radius = (float(states.v[events.corner_idx] / omega_c)
                     if omega_c > 0.0 else float("nan"))

    metrics = {
        "t_start": events.t_s,
        "t_corner": events.t_c,
        "t_end": events.t_e,
        "duration_s": events.duration,
        "turn_start": events.turn_start,
        "turn_end": events.turn_end,
        "turn_duration_s": events.turn_duration,
        "path_length_m": float(np.sum(states.v_xy[lap]) * dt),
        "peak_speed_ms": float(states.v[lap].max()),
        "mean_speed_ms": float(states.v[lap].mean()),
        "peak_power_w": float(power.p_thrust[lap].max()),
        "mean_power_w": float(power.p_thrust[lap].mean()),
        "peak_omega_rads": float(np.abs(states.omega[lap]).max()),
        "corner_radius_m": corner_radius,
        "mean_turn_radius_m": float(finite_r.mean()) if len(finite_r) else float("nan"),
        "corner_fit_radius_m": float(corner_fit_radius),
        "thrust_work_j": thrust_work(power.p_thrust[lap], dt),
        "thrust_work_signed_j": thrust_work(power.p_thrust[lap], dt,
                                            rectify=False),
        "drag_work_j": drag_work(power.p_drag[lap], dt),
        "thrust_work_nd": thrust_work(power.p_thrust[lap], dt)
        / params.norm_constant,
        "mean_cot": float(np.nanmean(power.cot[lap]))
        if np.isfinite(power.cot[lap]).any() else float("nan"),
        "transient_s": phase_s(TRANSIENT),
        "consistent_s": phase_s(CONSISTENT),
        "glide_s": phase_s(GLIDE),
        "active_fluking_s": phase_s(TRANSIENT) + phase_s(CONSISTENT),
        "out_transient_s": phase_s(TRANSIENT, out_mask),
        "out_consistent_s": phase_s(CONSISTENT, out_mask),
        "out_active_fluking_s": phase_s(TRANSIENT, out_mask)
        + phase_s(CONSISTENT, out_mask),
        "ret_transient_s": phase_s(TRANSIENT, ~out_mask),
        "ret_consistent_s": phase_s(CONSISTENT, ~out_mask),
        "ret_active_fluking_s": phase_s(TRANSIENT, ~out_mask)
        + phase_s(CONSISTENT, ~out_mask),
        "ret_glide_s": phase_s(GLIDE, ~out_mask),
        "work_transient_j": work_rect[TRANSIENT],
        "work_consistent_j": work_rect[CONSISTENT],
        "work_glide_j": work_rect[GLIDE],
        "work_rest_j": work_rect[REST],
        "work_af_j": work_rect[TRANSIENT] + work_rect[CONSISTENT],
        "work_signed_transient_j": work_signed[TRANSIENT],
        "work_signed_consistent_j": work_signed[CONSISTENT],
        "work_signed_glide_j": work_signed[GLIDE],
    }

    class_masks = {
        "af": (lap_labels == TRANSIENT) | (lap_labels == CONSISTENT),
        "cs": lap_labels == CONSISTENT,
        "trans": lap_labels == TRANSIENT,
    }
    for key, mask in class_masks.items():
        if mask.any():
            v = states.v[lap][mask]
            p = power.p_thrust[lap][mask]
            cot = power.cot[lap][mask]
            metrics[f"{key}_mean_speed_ms"] = float(v.mean())
            metrics[f"{key}_mean_speed_bl"] = float(v.mean() / params.length)
            metrics[f"{key}_mean_power_w"] = float(p.mean())
            metrics[f"{key}_mean_power_nd"] = float(p.mean() / params.norm_constant)
            metrics[f"{key}_mean_cot"] = (float(np.nanmean(cot))
                                          if np.isfinite(cot).any() else float("nan"))
        else:
            for suffix in ("mean_speed_ms", "mean_speed_bl", "mean_power_w",
                           "mean_power_nd", "mean_cot"):
                metrics[f"{key}_{suffix}"] = float("nan")
    return metrics
