"""Quaternion attitude estimation from the 50 Hz inertial stream.

Conventions (used consistently by the simulator and the tag pipeline):
  * world frame: x east, y north, z up
  * body frame: x forward, y left, z up
  * quaternion (w, x, y, z) rotates body vectors into the world frame
  * Euler angles: yaw about world z, then pitch (positive nose-up), then
    roll about the body x axis; a level accelerometer reads (0, 0, +g).

The fusion step is the standard gradient-descent AHRS update: gyroscope
integration corrected toward the accelerometer gravity direction (and,
when available, the magnetometer field direction) at rate ``beta``. With
``beta = 0`` it reduces to pure gyro integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import TagSeries


@dataclass
class OrientationSeries:
    """Euler angles per IMU sample; yaw is unwrapped (no +-pi jumps)."""

    t: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray
    yaw: np.ndarray


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    norm = math.sqrt(float(np.dot(q, q)))
    if norm == 0.0:
        raise ValueError("zero-norm quaternion")
    return q / norm


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate body vector ``v`` into the world frame."""
    p = np.array([0.0, v[0], v[1], v[2]])
    return quat_multiply(quat_multiply(q, p), quat_conj(q))[1:]


def euler_to_quat(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Compose q = qz(yaw) * qy(-pitch) * qx(roll) (pitch positive nose-up)."""
    qz = np.array([math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2)])
    qy = np.array([math.cos(pitch / 2), 0.0, -math.sin(pitch / 2), 0.0])
    qx = np.array([math.cos(roll / 2), math.sin(roll / 2), 0.0, 0.0])
    return quat_multiply(quat_multiply(qz, qy), qx)


def quat_to_euler(q: np.ndarray) -> tuple[float, float, float]:
    """Return (roll, pitch, yaw); pitch is clamped at the +-pi/2 gimbal."""
    w, x, y, z = quat_normalize(q)
    s = 2.0 * (x * z - w * y)
    s = max(-1.0, min(1.0, s))
    pitch = math.asin(s)
    roll = math.atan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y))
    yaw = math.atan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z))
    return roll, pitch, yaw


def ahrs_update(q: np.ndarray, gyro: np.ndarray, accel: np.ndarray,
                mag: np.ndarray | None, beta: float, dt: float) -> np.ndarray:
    """Advance the attitude quaternion by one IMU sample.

    gyro in rad/s, accel in m/s^2 (any scale: only its direction is used),
    mag in any consistent units or None for gyro+accel-only fusion.
    Returns a unit quaternion.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    a_norm = math.sqrt(accel[0] ** 2 + accel[1] ** 2 + accel[2] ** 2)
    if a_norm == 0.0:
        raise ValueError("zero-norm accelerometer vector")
    w, x, y, z = q
    gx, gy, gz = gyro

    q_dot = 0.5 * np.array([
        -x * gx - y * gy - z * gz,
        w * gx + y * gz - z * gy,
        w * gy - x * gz + z * gx,
        w * gz + x * gy - y * gx,
    ])

    if beta > 0.0:
        ax, ay, az = accel[0] / a_norm, accel[1] / a_norm, accel[2] / a_norm

        # Gravity objective: predicted body-frame up minus measurement.
        f1 = 2.0 * (x * z - w * y) - ax
        f2 = 2.0 * (w * x + y * z) - ay
        f3 = 1.0 - 2.0 * (x * x + y * y) - az
        s_w = -2.0 * y * f1 + 2.0 * x * f2
        s_x = 2.0 * z * f1 + 2.0 * w * f2 - 4.0 * x * f3
        s_y = -2.0 * w * f1 + 2.0 * z * f2 - 4.0 * y * f3
        s_z = 2.0 * x * f1 + 2.0 * y * f2

        m_norm = 0.0
        if mag is not None:
            m_norm = math.sqrt(mag[0] ** 2 + mag[1] ** 2 + mag[2] ** 2)
        if m_norm > 0.0:
            mx, my, mz = mag[0] / m_norm, mag[1] / m_norm, mag[2] / m_norm
            # Earth-field reference: horizontal component along world +x.
            h = quat_rotate(np.array([w, x, y, z]), np.array([mx, my, mz]))
            bx = math.sqrt(h[0] ** 2 + h[1] ** 2)
            bz = h[2]
            # Predicted body-frame field for reference (bx, 0, bz).
            p1 = bx * (1.0 - 2.0 * (y * y + z * z)) + bz * 2.0 * (x * z - w * y) - mx
            p2 = bx * 2.0 * (x * y - w * z) + bz * 2.0 * (w * x + y * z) - my
            p3 = bx * 2.0 * (x * z + w * y) + bz * (1.0 - 2.0 * (x * x + y * y)) - mz
            s_w += (-2.0 * bz * y) * p1 + (-2.0 * bx * z + 2.0 * bz * x) * p2 \
                + (2.0 * bx * y) * p3
            s_x += (2.0 * bz * z) * p1 + (2.0 * bx * y + 2.0 * bz * w) * p2 \
                + (2.0 * bx * z - 4.0 * bz * x) * p3
            s_y += (-4.0 * bx * y - 2.0 * bz * w) * p1 \
                + (2.0 * bx * x + 2.0 * bz * z) * p2 \
                + (2.0 * bx * w - 4.0 * bz * y) * p3
            s_z += (-4.0 * bx * z + 2.0 * bz * x) * p1 \
                + (-2.0 * bx * w + 2.0 * bz * y) * p2 + (2.0 * bx * x) * p3

        s_norm = math.sqrt(s_w ** 2 + s_x ** 2 + s_y ** 2 + s_z ** 2)
        if s_norm > 0.0:
            q_dot -= beta * np.array([s_w, s_x, s_y, s_z]) / s_norm

    return quat_normalize(np.array([w, x, y, z]) + q_dot * dt)


def pose_from_measurements(accel: np.ndarray, mag: np.ndarray | None,
                           fallback_heading: float = 0.0
                           ) -> tuple[float, float, float]:
    """Static (roll, pitch, yaw) implied by one accel (+ mag) sample.

    Yaw is referenced to the horizontal field direction when a
    magnetometer sample is given, otherwise ``fallback_heading``.
    """
    a = np.asarray(accel, dtype=float)
    norm = math.sqrt(float(np.dot(a, a)))
    if norm == 0.0:
        raise ValueError("zero-norm accelerometer vector")
    ax, ay, az = a / norm
    pitch = math.asin(max(-1.0, min(1.0, ax)))
    roll = math.atan2(ay, az)
    yaw = fallback_heading
    if mag is not None:
        cp, sp = math.cos(pitch), math.sin(pitch)
        cr, sr = math.cos(roll), math.sin(roll)
        mx, my, mz = np.asarray(mag, dtype=float)
        # De-rotate the field into the level frame, then take its bearing.
        lx = cp * mx - sp * (sr * my + cr * mz)
        ly = cr * my - sr * mz
        yaw = math.atan2(-ly, lx)
    return roll, pitch, yaw


def estimate_orientation(tag: TagSeries, beta: float = 0.1,
                         initial_heading: float = 0.0,
                         use_mag: bool = True,
                         settle_s: float = 1.0) -> OrientationSeries:
    """Run the AHRS over the full IMU stream of ``tag``.

    The filter is seeded from the first accel/mag sample (heading falls
    back to ``initial_heading`` without a magnetometer) and pre-settled
    with ``settle_s`` worth of virtual updates so the series starts
    converged.
    """
    n = tag.n_imu
    if n < 2:
        raise ValueError("need at least 2 IMU samples")
    t = tag.t_imu
    mag_series = tag.mag if (use_mag and tag.mag is not None) else None

    mag0 = mag_series[0] if mag_series is not None else None
    q = euler_to_quat(*pose_from_measurements(tag.accel[0], mag0,
                                              initial_heading))
    dt0 = float(t[1] - t[0])
    n_settle = int(round(settle_s / dt0)) if beta > 0.0 else 0
    for _ in range(n_settle):
        q = ahrs_update(q, np.zeros(3), tag.accel[0], mag0, beta, dt0)

    pitch = np.empty(n)
    roll = np.empty(n)
    yaw = np.empty(n)
    roll[0], pitch[0], yaw[0] = quat_to_euler(q)
    for i in range(1, n):
        dt = float(t[i] - t[i - 1])
        mag_i = mag_series[i] if mag_series is not None else None
        q = ahrs_update(q, tag.gyro[i], tag.accel[i], mag_i, beta, dt)
        roll[i], pitch[i], yaw[i] = quat_to_euler(q)

    return OrientationSeries(t=t, pitch=pitch, roll=roll,
                             yaw=np.unwrap(yaw))
