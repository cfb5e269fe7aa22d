"""Rigid-body hydrodynamic model: drag, thrust power, work, and COT.

Sign conventions: positive force and power act along the swimming
direction, so drag force and drag power are always <= 0 and the thrust
power decomposes exactly into an inertial term plus the drag magnitude
term. Gliding samples can carry negative thrust power; work aggregation
exposes both the rectified ("propulsive output") and the raw signed sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import AnimalParams

# Near-surface drag augmentation vs submergence depth over body diameter:
# 2.5x at h/d <= 0.5 easing linearly to 1.0 at h/d >= 3.0.
DEFAULT_GAMMA_TABLE = ((0.5, 2.5), (3.0, 1.0))

# Below this speed the COT denominator is considered degenerate.
V_MIN_COT = 0.05


class UndefinedCOTError(ValueError):
    """Raised when COT is requested at a speed below the guard threshold."""


@dataclass
class PowerSeries:
    """Per-sample force and power channels of the hydrodynamic model."""

    t: np.ndarray
    v: np.ndarray
    gamma: np.ndarray
    f_drag: np.ndarray
    f_thrust: np.ndarray
    p_inertial: np.ndarray
    p_drag: np.ndarray
    p_thrust: np.ndarray
    p_thrust_nd: np.ndarray
    cot: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def wave_drag_factor(depth: float | np.ndarray, body_diameter: float,
                     table: tuple = DEFAULT_GAMMA_TABLE) -> np.ndarray:
    """Depth-dependent drag multiplier gamma >= 1.

    Piecewise-linear in the submergence ratio h/d with clamped ends;
    ``table`` is ((h/d, gamma), ...) sorted by h/d.
    """
    if body_diameter <= 0.0:
        raise ValueError("body_diameter must be positive")
    ratio = np.asarray(depth, dtype=float) / body_diameter
    if np.any(ratio < 0.0):
        raise ValueError("depth must be non-negative")
    hd = np.array([row[0] for row in table], dtype=float)
    g = np.array([row[1] for row in table], dtype=float)
    return np.interp(ratio, hd, g)


def drag_force(v: float | np.ndarray, depth: float | np.ndarray,
               params: AnimalParams,
               gamma_table: tuple = DEFAULT_GAMMA_TABLE) -> np.ndarray:
    """Opposing drag force (<= 0) at body speed ``v`` and depth, N.

    Quadratic drag with Reynolds-dependent coefficient:
    ``-0.5 rho A_s C_D(Re) gamma v^2`` where ``A_s = 0.08 m^0.65`` and
    ``C_D = 16.99 Re^-0.47``. Zero speed short-circuits to zero force.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ValueError("speed must be non-negative")
    gamma = wave_drag_factor(depth, params.body_diameter, gamma_table)
    with np.errstate(divide="ignore"):
        re = v * params.length / params.nu
        cd = np.where(re > 0.0, 16.99 * re ** -0.47, 0.0)
    return -0.5 * params.rho * params.surface_area * cd * gamma * v ** 2


def thrust_power(t: np.ndarray, v: np.ndarray, a_t: np.ndarray,
                 depth: np.ndarray, params: AnimalParams,
                 gamma_table: tuple = DEFAULT_GAMMA_TABLE,
                 v_min_cot: float = V_MIN_COT) -> PowerSeries:
    """Evaluate the thrust-power balance over aligned channels.

    ``p_thrust = (m + 0.4 rho V) a_t v + 0.5 rho A_s C_D gamma v^3``;
    the returned series carries the force/power decomposition, the
    non-dimensional power, and COT (NaN below the speed guard).
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    a_t = np.asarray(a_t, dtype=float)
    depth = np.asarray(depth, dtype=float)
    gamma = wave_drag_factor(depth, params.body_diameter, gamma_table)
    f_drag = drag_force(v, depth, params, gamma_table)
    p_inertial = params.effective_mass * a_t * v
    p_drag = f_drag * v
    p_thrust = p_inertial - p_drag
    f_thrust = params.effective_mass * a_t - f_drag
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.where(
            v > v_min_cot,
            (p_thrust / (params.eta_ms * params.eta_sp) + params.p_rmr)
            / (params.mass * v),
            np.nan)
    return PowerSeries(
        t=t, v=v, gamma=gamma, f_drag=f_drag, f_thrust=f_thrust,
        p_inertial=p_inertial, p_drag=p_drag, p_thrust=p_thrust,
        p_thrust_nd=p_thrust / params.norm_constant, cot=cot,
    )


def cost_of_transport(p_thrust: float, v: float, params: AnimalParams,
                      v_min: float = V_MIN_COT,
                      eta_sp_fn=None) -> float:
    """Metabolic cost of transport, J/(kg m).

    ``(P/(eta_ms * eta_sp) + P_RMR) / (m v)``. Speeds at or below
    ``v_min`` raise :class:`UndefinedCOTError` rather than clamping.
    ``eta_sp_fn`` optionally supplies a speed-dependent propulsive
    efficiency in place of the constant.
    """
    if v <= v_min:
        raise UndefinedCOTError(f"undefined-COT: v={v:g} <= {v_min:g} m/s")
    eta_sp = eta_sp_fn(v) if eta_sp_fn is not None else params.eta_sp
    return (p_thrust / (params.eta_ms * eta_sp) + params.p_rmr) \
        / (params.mass * v)


def nondimensionalize(value: float | np.ndarray,
                      params: AnimalParams) -> float | np.ndarray:
    """Scale power (W) or work (J) by the constant m g^1.5 L^0.5."""
    return value / params.norm_constant


def thrust_work(p_thrust: np.ndarray, dt: float,
                window: slice | np.ndarray | None = None,
                rectify: bool = True) -> float:
    """Rectangle-rule work over ``window`` (default: all samples), J.

    ``rectify=True`` integrates max(P, 0) (propulsive output only);
    ``rectify=False`` returns the raw signed sum.
    """
    p = np.asarray(p_thrust, dtype=float)
    if window is not None:
        p = p[window]
    if p.size == 0:
        raise ValueError("empty work window")
    if rectify:
        p = np.maximum(p, 0.0)
    return float(np.sum(p) * dt)


def drag_work(p_drag: np.ndarray, dt: float,
              window: slice | np.ndarray | None = None) -> float:
    """Signed (non-positive) drag work over ``window``, J."""
    p = np.asarray(p_drag, dtype=float)
    if window is not None:
        p = p[window]
    if p.size == 0:
        raise ValueError("empty work window")
    return float(np.sum(p) * dt)


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of P = coeff * v^exponent."""

    coeff: float
    exponent: float
    rms: float
    nondimensional: bool = False

    def __call__(self, v: float | np.ndarray) -> float | np.ndarray:
        return self.coeff * np.asarray(v, dtype=float) ** self.exponent


def fit_power_law(v: np.ndarray, p: np.ndarray,
                  nondimensional: bool = False,
                  max_iter: int = 200, tol: float = 1e-14) -> PowerLawFit:
    """Fit ``p = c * v**e`` by damped Gauss-Newton on squared residuals.

    Seeded with the exact log-log linear solution; deterministic for a
    given input. All speeds and powers must be positive and at least 3
    points are required.
    """
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    if v.shape != p.shape or v.ndim != 1 or len(v) < 3:
        raise ValueError("need >= 3 paired (v, p) samples")
    if np.any(v <= 0.0) or np.any(p <= 0.0):
        raise ValueError("power-law fit requires positive v and p")

    lv, lp = np.log(v), np.log(p)
    det = len(v) * np.sum(lv * lv) - np.sum(lv) ** 2
    if abs(det) < 1e-12 * max(1.0, np.sum(lv * lv)) * len(v):
        raise ValueError("singular normal equations: speeds too clustered")
    e = (len(v) * np.sum(lv * lp) - np.sum(lv) * np.sum(lp)) / det
    c = math.exp((np.sum(lp) - e * np.sum(lv)) / len(v))

    lam = 1e-10
    sse_prev = float(np.sum((p - c * v ** e) ** 2))
    for _ in range(max_iter):
        model = c * v ** e
        r = p - model
        j1 = v ** e
        j2 = model * lv
        g = np.array([np.sum(j1 * r), np.sum(j2 * r)])
        h = np.array([[np.sum(j1 * j1), np.sum(j1 * j2)],
                      [np.sum(j1 * j2), np.sum(j2 * j2)]])
        step_ok = False
        for _ in range(60):
            try:
                delta = np.linalg.solve(h + lam * np.diag(np.diag(h)), g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            c_new, e_new = c + delta[0], e + delta[1]
            if c_new <= 0.0:
                lam *= 10.0
                continue
            sse_new = float(np.sum((p - c_new * v ** e_new) ** 2))
            if sse_new <= sse_prev:
                step_ok = True
                break
            lam *= 10.0
        if not step_ok:
            break
        c, e = c_new, e_new
        lam = max(lam * 0.25, 1e-12)
        if sse_prev - sse_new <= tol * (sse_prev + 1e-300):
            sse_prev = sse_new
            break
        sse_prev = sse_new

    rms = math.sqrt(sse_prev / len(v))
    return PowerLawFit(coeff=float(c), exponent=float(e), rms=rms,
                       nondimensional=nondimensional)


def cot_curve_minimum(fit: PowerLawFit, params: AnimalParams,
                      v_max: float, n_grid: int = 2000) -> float:
    """Speed minimizing predicted COT with the fitted power law, m/s.

    Raises if the minimum sits on the grid boundary (no interior U-shape).
    """
    v = np.linspace(V_MIN_COT * 2, v_max, n_grid)
    cot = (fit(v) / (params.eta_ms * params.eta_sp) + params.p_rmr) \
        / (params.mass * v)
    k = int(np.argmin(cot))
    if k in (0, n_grid - 1):
        raise ValueError("no interior COT minimum in (0, v_max)")
    return float(v[k])
