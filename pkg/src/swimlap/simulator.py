"""Synthetic lap trials with exact ground truth for pipeline verification.

A trial is a sequence of motion phases (rest, accelerate, cruise, brake,
corner, glide) whose *planar* speed is piecewise smoothstep in time, so
planar distance has a closed form and the lap geometry (straight, 180-deg
arc, straight) is consumed exactly. Pitch is a pure fluking oscillation;
the body-frame speed the tag would measure is ``v_planar / cos(pitch)``.
All derivative channels (tangential acceleration, angular speed, normal
acceleration) are evaluated analytically, never by differencing.

Tag synthesis emits the 50 Hz inertial stream (gyro, specific force,
magnetic field in the body frame) and the 5 Hz depth/speed stream, with
independent seeded Gaussian noise per channel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ingest import TagSeries
from .localization import Track
from .params import AnimalParams, get_animal

MAG_INCLINATION = math.radians(40.0)
ENVELOPE_RAMP_S = 0.4


class ScenarioError(ValueError):
    """Raised when a scenario's speed profile cannot fit its geometry."""


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel Gaussian noise standard deviations (zero = noiseless)."""

    accel: float = 0.0   # m/s^2
    gyro: float = 0.0    # rad/s
    mag: float = 0.0     # unit field
    depth: float = 0.0   # m
    speed: float = 0.0   # m/s


@dataclass(frozen=True)
class LapScenario:
    """Parameters of one simulated lap-swimming trial."""

    animal: AnimalParams
    straight_length: float = 30.0   # m, each leg
    corner_radius: float = 1.5      # m
    cruise_speed: float = 4.0       # m/s, planar
    corner_speed: float = 3.0       # m/s, planar, held through the arc
    accel: float = 0.8              # m/s^2, peak during speed transitions
    glide_decel: float = 1.2        # m/s^2, peak during the final glide
    corner_buffer_s: float = 0.8    # s at corner speed on both arc sides
    fluke_freq: float = 1.5         # Hz
    fluke_amp: float = math.radians(10.0)  # rad, pitch oscillation
    depth_station: float = 0.5      # m
    depth_out: float = 1.5          # m, outgoing leg
    depth_corner: float = 1.0       # m
    depth_return: float = 1.6       # m
    n_laps: int = 1
    speed_jitter: float = 0.0       # fractional lap-to-lap speed variation
    lead_in_s: float = 4.0          # s of rest before the first lap
    station_pause_s: float = 6.0    # s of rest (with turn-around) after laps
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    imu_rate: float = 50.0          # Hz
    slow_rate: float = 5.0          # Hz
    p0: tuple[float, float] = (0.0, 0.0)
    heading0: float = 0.0           # rad

    def __post_init__(self) -> None:
        positive = ("straight_length", "corner_radius", "cruise_speed",
                    "corner_speed", "accel", "glide_decel", "fluke_freq",
                    "imu_rate", "slow_rate")
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ScenarioError(f"infeasible profile: {name} must be > 0")
        if self.corner_speed > self.cruise_speed:
            raise ScenarioError(
                "infeasible profile: corner_speed exceeds cruise_speed")
        if self.n_laps < 1:
            raise ScenarioError("n_laps must be >= 1")
        for name in ("depth_station", "depth_out", "depth_corner",
                     "depth_return"):
            if getattr(self, name) < 0.0:
                raise ScenarioError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Phase:
    """One motion phase: planar speed v0 -> v1 over ``duration`` seconds."""

    duration: float
    v0: float
    v1: float
    fluking: bool
    depth0: float
    depth1: float
    yaw_turn: float = 0.0   # heading change while stationary, rad
    t0: float = 0.0         # absolute start time, filled at assembly
    s0: float = 0.0         # cumulative planar distance at start

    @property
    def distance(self) -> float:
        return 0.5 * (self.v0 + self.v1) * self.duration


@dataclass
class TruthLap:
    """Ground-truth event times for one simulated lap."""

    index: int
    t_motion_start: float
    t_apex: float
    t_motion_end: float
    turn_sign: float


@dataclass
class GroundTruth:
    """Analytic trial state sampled on the master (5 Hz) timeline."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v_meas: np.ndarray
    v_xy: np.ndarray
    psi: np.ndarray
    theta: np.ndarray
    depth: np.ndarray
    a_t: np.ndarray
    omega: np.ndarray
    a_n: np.ndarray
    laps: list[TruthLap] = field(default_factory=list)
    path_length: float = 0.0
    scenario: LapScenario | None = None
    phases: list[Phase] = field(default_factory=list)


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _smoothstep_d(x: np.ndarray) -> np.ndarray:
    xc = np.clip(x, 0.0, 1.0)
    inside = (x >= 0.0) & (x <= 1.0)
    return np.where(inside, 6.0 * xc * (1.0 - xc), 0.0)


def _smoothstep_dd(x: np.ndarray) -> np.ndarray:
    xc = np.clip(x, 0.0, 1.0)
    inside = (x >= 0.0) & (x <= 1.0)
    return np.where(inside, 6.0 - 12.0 * xc, 0.0)


def _one_lap_phases(scn: LapScenario, v_c: float, v_t: float) -> list[Phase]:
    s_len = scn.straight_length
    t_accel = 1.5 * v_c / scn.accel
    t_brake = 1.5 * (v_c - v_t) / scn.accel if v_c > v_t else 0.0
    t_glide = 1.5 * v_c / scn.glide_decel
    arc_len = math.pi * scn.corner_radius

    d_accel = 0.5 * v_c * t_accel
    d_brake = 0.5 * (v_c + v_t) * t_brake
    d_buffer = v_t * scn.corner_buffer_s
    d_glide = 0.5 * v_c * t_glide

    d_out_cruise = s_len - d_accel - d_brake - d_buffer
    if d_out_cruise < -1e-9:
        raise ScenarioError(
            f"infeasible profile: outgoing leg needs "
            f"{d_accel + d_brake + d_buffer:.2f} m "
            f"but straight_length is {s_len:.2f} m")
    d_ret_cruise = s_len - d_buffer - d_brake - d_glide
    if d_ret_cruise < -1e-9:
        raise ScenarioError(
            f"infeasible profile: return leg needs "
            f"{d_buffer + d_brake + d_glide:.2f} m "
            f"but straight_length is {s_len:.2f} m")

    ds, do, dc, dr = (scn.depth_station, scn.depth_out, scn.depth_corner,
                      scn.depth_return)
    lap: list[Phase] = [
        Phase(t_accel, 0.0, v_c, True, ds, do),
        Phase(max(d_out_cruise, 0.0) / v_c, v_c, v_c, True, do, do),
        Phase(t_brake, v_c, v_t, True, do, dc),
        Phase(scn.corner_buffer_s, v_t, v_t, True, dc, dc),
        Phase(arc_len / v_t, v_t, v_t, True, dc, dc),
        Phase(scn.corner_buffer_s, v_t, v_t, True, dc, dc),
        Phase(t_brake, v_t, v_c, True, dc, dr),
        Phase(max(d_ret_cruise, 0.0) / v_c, v_c, v_c, True, dr, dr),
        Phase(t_glide, v_c, 0.0, False, dr, ds),
    ]
    return [ph for ph in lap if ph.duration > 0.0]


def build_lap_phases(scn: LapScenario) -> list[Phase]:
    """Assemble the trial's phase list; raises on infeasible geometry."""
    ds = scn.depth_station
    factors = np.ones(scn.n_laps)
    if scn.speed_jitter > 0.0:
        rng = np.random.default_rng(scn.seed)
        factors += scn.speed_jitter * rng.uniform(-1.0, 1.0, scn.n_laps)

    phases: list[Phase] = [Phase(scn.lead_in_s, 0.0, 0.0, False, ds, ds)]
    sign = 1.0
    for k in range(scn.n_laps):
        phases.extend(_one_lap_phases(scn, scn.cruise_speed * factors[k],
                                      scn.corner_speed * factors[k]))
        phases.append(Phase(scn.station_pause_s, 0.0, 0.0, False, ds, ds,
                            yaw_turn=sign * math.pi))
        sign = -sign

    t_cum = s_cum = 0.0
    stamped = []
    for ph in phases:
        stamped.append(replace(ph, t0=t_cum, s0=s_cum))
        t_cum += ph.duration
        s_cum += ph.distance
    return stamped


def _fluking_intervals(phases: list[Phase]) -> list[tuple[float, float]]:
    spans = []
    for ph in phases:
        if not ph.fluking:
            continue
        t1 = ph.t0 + ph.duration
        if spans and abs(spans[-1][1] - ph.t0) < 1e-9:
            spans[-1][1] = t1
        else:
            spans.append([ph.t0, t1])
    return [(a, b) for a, b in spans]


class _TrialState:
    """Vectorized analytic evaluation of the trial at arbitrary times."""

    def __init__(self, scn: LapScenario, phases: list[Phase]):
        self.scn = scn
        self.phases = phases
        self.t_starts = np.array([ph.t0 for ph in phases])
        self.t_total = phases[-1].t0 + phases[-1].duration
        self.fluke_spans = _fluking_intervals(phases)
        self.arc_len = math.pi * scn.corner_radius
        self.lap_planar = 2.0 * scn.straight_length + self.arc_len

        # Per-lap anchors: start position, outgoing heading, turn sign,
        # planar distance at lap start; a terminal anchor pins the state
        # after the last lap.
        self.lap_anchor = []
        pos = np.array(scn.p0, dtype=float)
        heading = scn.heading0
        sign = 1.0
        for k in range(scn.n_laps):
            self.lap_anchor.append((pos.copy(), heading, sign,
                                    k * self.lap_planar))
            normal = np.array([-math.sin(heading), math.cos(heading)])
            pos = pos + 2.0 * scn.corner_radius * sign * normal
            heading = heading + 2.0 * sign * math.pi
            sign = -sign
        self.lap_anchor.append((pos.copy(), heading, 1.0,
                                scn.n_laps * self.lap_planar))

    def _phase_index(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.t_starts, t, side="right") - 1
        return np.clip(idx, 0, len(self.phases) - 1)

    def evaluate(self, t: np.ndarray) -> dict[str, np.ndarray]:
        t = np.asarray(t, dtype=float)
        idx = self._phase_index(t)
        dur = np.array([ph.duration for ph in self.phases])[idx]
        v0 = np.array([ph.v0 for ph in self.phases])[idx]
        v1 = np.array([ph.v1 for ph in self.phases])[idx]
        d0 = np.array([ph.depth0 for ph in self.phases])[idx]
        d1 = np.array([ph.depth1 for ph in self.phases])[idx]
        yawt = np.array([ph.yaw_turn for ph in self.phases])[idx]
        t0 = self.t_starts[idx]
        s0 = np.array([ph.s0 for ph in self.phases])[idx]

        with np.errstate(invalid="ignore", divide="ignore"):
            x = np.where(dur > 0.0, (t - t0) / dur, 1.0)
        x = np.clip(x, 0.0, 1.0)
        ss, ssd, ssdd = _smoothstep(x), _smoothstep_d(x), _smoothstep_dd(x)
        v_xy = v0 + (v1 - v0) * ss
        with np.errstate(invalid="ignore", divide="ignore"):
            dv_xy = np.where(dur > 0.0, (v1 - v0) * ssd / dur, 0.0)
        # Closed-form planar distance within the phase.
        s_local = dur * (v0 * x + (v1 - v0) * (x ** 3 - 0.5 * x ** 4))
        s = s0 + s_local
        depth = d0 + (d1 - d0) * ss
        with np.errstate(invalid="ignore", divide="ignore"):
            ddepth = np.where(dur > 0.0, (d1 - d0) * ssd / dur, 0.0)
            dddepth = np.where(dur > 0.0, (d1 - d0) * ssdd / dur ** 2, 0.0)

        theta, dtheta = self._pitch(t)
        cos_t = np.cos(theta)
        v_meas = v_xy / cos_t
        a_t = dv_xy / cos_t + v_xy * dtheta * np.sin(theta) / cos_t ** 2

        psi, omega, px, py = self._geometry(t, s, v_xy, yawt, x, ssd, dur, t0)
        return {
            "t": t, "x": px, "y": py, "v_meas": v_meas, "v_xy": v_xy,
            "psi": psi, "theta": theta, "dtheta": dtheta, "depth": depth,
            "ddepth": ddepth, "dddepth": dddepth, "a_t": a_t,
            "omega": omega, "a_n": omega * v_meas, "dv_xy": dv_xy,
        }

    def _pitch(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        amp = self.scn.fluke_amp
        freq = self.scn.fluke_freq
        theta = np.zeros_like(t)
        dtheta = np.zeros_like(t)
        if amp == 0.0:
            return theta, dtheta
        ramp = ENVELOPE_RAMP_S
        for t_on, t_off in self.fluke_spans:
            m = (t >= t_on) & (t <= t_off)
            if not m.any():
                continue
            tt = t[m]
            r = min(ramp, 0.5 * (t_off - t_on))
            eu = _smoothstep((tt - t_on) / r)
            eu_d = _smoothstep_d((tt - t_on) / r) / r
            ed = _smoothstep((t_off - tt) / r)
            ed_d = -_smoothstep_d((t_off - tt) / r) / r
            env = eu * ed
            env_d = eu_d * ed + eu * ed_d
            phase = 2.0 * math.pi * freq * (tt - t_on)
            theta[m] = amp * env * np.sin(phase)
            dtheta[m] = amp * (env_d * np.sin(phase)
                               + env * 2.0 * math.pi * freq * np.cos(phase))
        return theta, dtheta

    def _geometry(self, t, s, v_xy, yaw_turn, x, ssd, dur, t0):
        scn = self.scn
        s_len, radius = scn.straight_length, scn.corner_radius
        psi = np.empty_like(t)
        omega = np.zeros_like(t)
        px = np.empty_like(t)
        py = np.empty_like(t)

        lap_of_t = np.clip(
            np.searchsorted(
                [a[3] for a in self.lap_anchor], s, side="right") - 1,
            0, len(self.lap_anchor) - 1)
        # Stationary phases: position pinned to the surrounding lap anchors.
        for k, (pos, heading, sign, s_lap0) in enumerate(self.lap_anchor):
            m = lap_of_t == k
            if not m.any():
                continue
            sl = np.clip(s[m] - s_lap0, 0.0, self.lap_planar)
            direc = np.array([math.cos(heading), math.sin(heading)])
            normal = np.array([-math.sin(heading), math.cos(heading)])
            entry = pos + s_len * direc
            center = entry + radius * sign * normal

            p = np.empty((len(sl), 2))
            h = np.empty(len(sl))
            w = np.zeros(len(sl))

            straight1 = sl < s_len
            arc = (sl >= s_len) & (sl < s_len + self.arc_len)
            straight2 = sl >= s_len + self.arc_len

            p[straight1] = pos + np.outer(sl[straight1], direc)
            h[straight1] = heading

            phi = (sl[arc] - s_len) / radius
            ang0 = math.atan2(entry[1] - center[1], entry[0] - center[0])
            ang = ang0 + sign * phi
            p[arc, 0] = center[0] + radius * np.cos(ang)
            p[arc, 1] = center[1] + radius * np.sin(ang)
            h[arc] = heading + sign * phi
            w[arc] = sign * v_xy[m][arc] / radius

            back = heading + sign * math.pi
            exit_pt = 2.0 * center - entry
            bdir = np.array([math.cos(back), math.sin(back)])
            p[straight2] = exit_pt + np.outer(
                sl[straight2] - s_len - self.arc_len, bdir)
            h[straight2] = back

            px[m], py[m] = p[:, 0], p[:, 1]
            psi[m] = h
            omega[m] = w

        # Station turn-around: yaw sweeps into the next lap's heading while
        # the position holds (geometry already reports the post-turn value).
        hold = yaw_turn != 0.0
        if hold.any():
            psi[hold] = psi[hold] + yaw_turn[hold] * (_smoothstep(x[hold]) - 1.0)
            omega[hold] = yaw_turn[hold] * ssd[hold] / dur[hold]
        return psi, omega, px, py


def generate_truth(scenario: LapScenario) -> GroundTruth:
    """Evaluate the scenario's exact state on the 5 Hz master timeline."""
    phases = build_lap_phases(scenario)
    state = _TrialState(scenario, phases)
    dt = 1.0 / scenario.slow_rate
    n = int(math.floor(state.t_total / dt)) + 1
    t = np.arange(n) * dt
    ch = state.evaluate(t)

    laps = []
    motion = [ph for ph in phases if not (ph.v0 == ph.v1 == 0.0)]
    per_lap = len(motion) // scenario.n_laps
    for k in range(scenario.n_laps):
        lap_phases = motion[k * per_lap:(k + 1) * per_lap]
        arc_phase = next(
            ph for ph in lap_phases
            if abs(ph.s0 - (k * state.lap_planar + scenario.straight_length))
            < 1e-6 and ph.v0 == ph.v1)
        t_apex = arc_phase.t0 + (0.5 * state.arc_len) / arc_phase.v0
        laps.append(TruthLap(
            index=k,
            t_motion_start=lap_phases[0].t0,
            t_apex=t_apex,
            t_motion_end=lap_phases[-1].t0 + lap_phases[-1].duration,
            turn_sign=state.lap_anchor[k][2],
        ))

    return GroundTruth(
        t=t, x=ch["x"], y=ch["y"], v_meas=ch["v_meas"], v_xy=ch["v_xy"],
        psi=ch["psi"], theta=ch["theta"], depth=ch["depth"], a_t=ch["a_t"],
        omega=ch["omega"], a_n=ch["a_n"], laps=laps,
        path_length=scenario.n_laps * state.lap_planar,
        scenario=scenario, phases=phases,
    )


def synthesize_tag(truth: GroundTruth, scenario: LapScenario | None = None) -> TagSeries:
    """Emit the raw tag channels (50 Hz IMU + 5 Hz depth/speed) for a trial.

    Deterministic for a fixed scenario seed; noise is independent Gaussian
    per channel.
    """
    scn = scenario or truth.scenario
    if scn is None:
        raise ValueError("scenario required")
    state = _TrialState(scn, truth.phases or build_lap_phases(scn))
    rng = np.random.default_rng(scn.seed)

    dt_imu = 1.0 / scn.imu_rate
    n_imu = int(math.floor(state.t_total / dt_imu)) + 1
    t_imu = np.arange(n_imu) * dt_imu
    ch = state.evaluate(t_imu)

    theta, psi = ch["theta"], ch["psi"]
    dpsi = ch["omega"]
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    gyro = np.column_stack([
        dpsi * sin_t,
        -ch["dtheta"],
        dpsi * cos_t,
    ])

    # World-frame specific force = rigid-body acceleration + gravity (up).
    v_xy, dv_xy = ch["v_xy"], ch["dv_xy"]
    sin_p, cos_p = np.sin(psi), np.cos(psi)
    a_wx = dv_xy * cos_p - v_xy * dpsi * sin_p
    a_wy = dv_xy * sin_p + v_xy * dpsi * cos_p
    a_wz = -ch["dddepth"]
    f_wx, f_wy, f_wz = a_wx, a_wy, a_wz + scn.animal.g
    # Body frame: undo yaw, then pitch (roll is zero throughout).
    w1x = cos_p * f_wx + sin_p * f_wy
    w1y = -sin_p * f_wx + cos_p * f_wy
    accel = np.column_stack([
        cos_t * w1x + sin_t * f_wz,
        w1y,
        -sin_t * w1x + cos_t * f_wz,
    ])

    m_w = np.array([math.cos(MAG_INCLINATION), 0.0,
                    -math.sin(MAG_INCLINATION)])
    m1x = cos_p * m_w[0] + sin_p * m_w[1]
    m1y = -sin_p * m_w[0] + cos_p * m_w[1]
    mag = np.column_stack([
        cos_t * m1x + sin_t * m_w[2],
        m1y,
        -sin_t * m1x + cos_t * m_w[2],
    ])

    if scn.noise.accel > 0.0:
        accel = accel + rng.normal(0.0, scn.noise.accel, accel.shape)
    if scn.noise.gyro > 0.0:
        gyro = gyro + rng.normal(0.0, scn.noise.gyro, gyro.shape)
    if scn.noise.mag > 0.0:
        mag = mag + rng.normal(0.0, scn.noise.mag, mag.shape)

    dt_slow = 1.0 / scn.slow_rate
    n_slow = int(math.floor(state.t_total / dt_slow)) + 1
    t_slow = np.arange(n_slow) * dt_slow
    slow = state.evaluate(t_slow)
    depth = slow["depth"]
    speed = slow["v_meas"]
    if scn.noise.depth > 0.0:
        depth = depth + rng.normal(0.0, scn.noise.depth, depth.shape)
    if scn.noise.speed > 0.0:
        speed = speed + rng.normal(0.0, scn.noise.speed, speed.shape)
    depth = np.maximum(depth, 0.0)
    speed = np.maximum(speed, 0.0)

    return TagSeries(
        t_imu=t_imu, accel=accel, gyro=gyro, mag=mag,
        t_slow=t_slow, depth=depth, speed=speed,
    )


def simulate(scenario: LapScenario) -> tuple[GroundTruth, TagSeries]:
    truth = generate_truth(scenario)
    return truth, synthesize_tag(truth)


def ellipse_track(a: float, b: float, n: int, dt: float,
                  speed: float = 1.0) -> tuple[Track, np.ndarray]:
    """Constant-parameter-rate ellipse with its analytic radius channel.

    A curvature-estimator stress fixture: radius varies continuously
    between ``b^2/a`` and ``a^2/b`` along the path.
    """
    tau = np.arange(n) * dt * speed
    x = a * np.cos(tau)
    y = b * np.sin(tau)
    num = (a ** 2 * np.sin(tau) ** 2 + b ** 2 * np.cos(tau) ** 2) ** 1.5
    radius_true = num / (a * b)
    track = Track(t=np.arange(n) * dt, x=x, y=y)
    return track, radius_true


# Preset trials approximating each study animal's observed lap style
# (cruise/corner speeds, cornering radius, accelerations, glide length).
_PRESETS = {
    "TT01": dict(cruise_speed=2.9, corner_speed=2.63, corner_radius=1.3,
                 accel=0.35, glide_decel=0.55, straight_length=34.0,
                 n_laps=8, speed_jitter=0.03),
    "TT02": dict(cruise_speed=5.2, corner_speed=3.53, corner_radius=1.8,
                 accel=1.1, glide_decel=1.0, straight_length=36.0,
                 n_laps=8, speed_jitter=0.03),
    "TT03": dict(cruise_speed=4.2, corner_speed=2.30, corner_radius=1.1,
                 accel=0.85, glide_decel=1.5, straight_length=33.0,
                 n_laps=8, speed_jitter=0.03),
}


def preset_scenario(name: str, **overrides) -> LapScenario:
    """Scenario tuned to one of the study animals (TT01, TT02, TT03)."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    kwargs = dict(_PRESETS[name])
    kwargs.update(overrides)
    return LapScenario(animal=get_animal(name), **kwargs)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


CSV_HEADER = ("t", "ax", "ay", "az", "gx", "gy", "gz",
              "mx", "my", "mz", "depth", "speed", "temp")

TRUTH_COLUMNS = ("t", "x", "y", "v_meas", "v_xy", "psi", "theta",
                 "depth", "a_t", "omega", "a_n")


def write_tag_csv(tag: TagSeries, path: str | Path) -> None:
    """Write the standard ingest-schema CSV (empty cells off-rate)."""
    rows = {}
    for i, t in enumerate(tag.t_imu):
        key = round(float(t), 6)
        rows[key] = {"t": _fmt(t),
                     "ax": _fmt(tag.accel[i, 0]), "ay": _fmt(tag.accel[i, 1]),
                     "az": _fmt(tag.accel[i, 2]),
                     "gx": _fmt(tag.gyro[i, 0]), "gy": _fmt(tag.gyro[i, 1]),
                     "gz": _fmt(tag.gyro[i, 2])}
        if tag.mag is not None:
            rows[key].update({"mx": _fmt(tag.mag[i, 0]),
                              "my": _fmt(tag.mag[i, 1]),
                              "mz": _fmt(tag.mag[i, 2])})
    for i, t in enumerate(tag.t_slow):
        key = round(float(t), 6)
        row = rows.setdefault(key, {"t": _fmt(t)})
        row["depth"] = _fmt(tag.depth[i])
        row["speed"] = _fmt(tag.speed[i])
        if tag.temp is not None:
            row["temp"] = _fmt(tag.temp[i])

    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_HEADER))
        writer.writeheader()
        for key in sorted(rows):
            writer.writerow(rows[key])


def write_truth_csv(truth: GroundTruth, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_COLUMNS)
        for i in range(len(truth.t)):
            writer.writerow([_fmt(getattr(truth, c)[i]) for c in TRUTH_COLUMNS])


def write_truth_laps_csv(truth: GroundTruth, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lap", "t_motion_start", "t_apex", "t_motion_end",
                         "turn_sign"])
        for lap in truth.laps:
            writer.writerow([lap.index, _fmt(lap.t_motion_start),
                             _fmt(lap.t_apex), _fmt(lap.t_motion_end),
                             _fmt(lap.turn_sign)])
