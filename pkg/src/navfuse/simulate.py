"""Deterministic trajectory and sensor-stream generation.

Truth kinematics are closed-form per profile.  The ideal IMU stream is
increment-consistent with the fusion loop's zero-order-hold convention
(sample k drives the step from t_{k-1} to t_k): sample k carries the
exact attitude increment over the step divided by dt, and the exact
velocity increment resolved in the start-of-step body frame with the
gravity reaction restored.  This is what an incremental (delta-velocity)
IMU reports, and it makes strapdown re-integration of the ideal stream
reproduce the truth to second order in dt.

All randomness comes from numpy's PCG64 generator seeded with the 64-bit
run seed; the draw order is fixed (gyro white noise, accel white noise,
gyro bias steps, accel bias steps, GNSS noise), so identical seeds and
configs yield bit-identical streams.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownProfileKind
from .geodesy import GeodeticCoord, LocalEnu, ecef_to_geodetic, enu_to_ecef
from .gnss import GnssFix, GnssNoise
from .strapdown import GRAVITY, ImuNoiseParams, ImuSample

#: Fixed geodetic anchor of simulated scenarios, so generated GNSS data
#: exercises the full geodetic conversion path.
SCENARIO_ORIGIN = GeodeticCoord(math.radians(49.0), math.radians(8.43), 115.0)

PROFILE_KINDS = ("stationary", "straight-constant-accel", "circular", "figure-eight")


@dataclass(frozen=True)
class TrajectoryProfile:
    """Shape and rates of a synthetic run.

    Default kinematics describe a slow desk-scale loop (3 m/s around a
    20 m radius) where the zero-velocity initial filter state is only a
    mild inconsistency.
    """

    kind: str
    duration: float
    imu_rate: float = 100.0
    gnss_rate: float = 1.0
    speed: float = 3.0
    radius: float = 20.0
    accel: float = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.imu_rate <= 0 or self.gnss_rate <= 0:
            raise ValueError("rates must be > 0")
        if self.imu_rate < self.gnss_rate:
            raise ValueError("imu_rate must be >= gnss_rate")


@dataclass(frozen=True)
class TruthPose:
    t: float
    position: LocalEnu
    velocity: np.ndarray
    orientation: np.ndarray


@dataclass(frozen=True)
class SensorCorruption:
    """Noise/bias/outage configuration; the seed is mandatory."""

    seed: int
    imu: ImuNoiseParams = field(default_factory=ImuNoiseParams)
    gnss: GnssNoise = field(default_factory=GnssNoise)
    outages: tuple = ()


def _kinematics(profile, t):
    """Closed-form planar kinematics at times ``t``.

    Returns (pos (n,3), vel (n,3), acc (n,3), yaw (n,), yaw_rate (n,)).
    """
    n = t.shape[0]
    pos = np.zeros((n, 3))
    vel = np.zeros((n, 3))
    acc = np.zeros((n, 3))
    yaw = np.zeros(n)
    yaw_rate = np.zeros(n)

    if profile.kind == "stationary":
        pass
    elif profile.kind == "straight-constant-accel":
        a = profile.accel
        pos[:, 0] = 0.5 * a * t**2
        vel[:, 0] = a * t
        acc[:, 0] = a
    elif profile.kind == "circular":
        r, v = profile.radius, profile.speed
        w = v / r
        pos[:, 0] = r * np.sin(w * t)
        pos[:, 1] = r * (1.0 - np.cos(w * t))
        vel[:, 0] = v * np.cos(w * t)
        vel[:, 1] = v * np.sin(w * t)
        acc[:, 0] = -v * w * np.sin(w * t)
        acc[:, 1] = v * w * np.cos(w * t)
        yaw[:] = w * t
        yaw_rate[:] = w
    elif profile.kind == "figure-eight":
        # 1:2 Lissajous: east amplitude = radius, north amplitude = radius/2,
        # rigidly rotated so the vehicle starts heading east (the raw curve
        # leaves the origin at 45 degrees).
        a_e, a_n = profile.radius, profile.radius / 2.0
        w = profile.speed / profile.radius
        pos[:, 0] = a_e * np.sin(w * t)
        pos[:, 1] = a_n * np.sin(2.0 * w * t)
        vel[:, 0] = a_e * w * np.cos(w * t)
        vel[:, 1] = 2.0 * a_n * w * np.cos(2.0 * w * t)
        acc[:, 0] = -a_e * w**2 * np.sin(w * t)
        acc[:, 1] = -4.0 * a_n * w**2 * np.sin(2.0 * w * t)
        yaw0 = math.atan2(vel[0, 1], vel[0, 0])
        c0, s0 = math.cos(-yaw0), math.sin(-yaw0)
        for arr in (pos, vel, acc):
            east = c0 * arr[:, 0] - s0 * arr[:, 1]
            north = s0 * arr[:, 0] + c0 * arr[:, 1]
            arr[:, 0], arr[:, 1] = east, north
        yaw = np.arctan2(vel[:, 1], vel[:, 0])
        speed2 = vel[:, 0] ** 2 + vel[:, 1] ** 2
        yaw_rate = (vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0]) / speed2
    else:
        raise UnknownProfileKind(
            f"unknown profile kind {profile.kind!r}; expected one of {PROFILE_KINDS}"
        )
    return pos, vel, acc, yaw, yaw_rate


def generate_truth(profile):
    """Generate (truth poses, ideal IMU stream) at the IMU rate.

    The vehicle heads along the track with level attitude (yaw only), so
    the ideal gyro is a pure z rate and the ideal accelerometer reads the
    body-frame specific force including the gravity reaction.  Sample k
    (k >= 1) carries the step increments over [t_{k-1}, t_k]: gyro =
    wrapped yaw change / dt, accel = velocity change / dt minus gravity,
    resolved in the body frame at t_{k-1}.  Sample 0 carries the
    instantaneous values at t = 0 (the fusion loop never integrates it).
    """
    dt = 1.0 / profile.imu_rate
    n = int(round(profile.duration * profile.imu_rate))
    t = np.arange(n) * dt

    pos, vel, acc, yaw, yaw_rate = _kinematics(profile, t)
    half = np.array([np.cos(yaw / 2.0), np.sin(yaw / 2.0)])
    truth = [
        TruthPose(
            float(t[k]),
            LocalEnu(*pos[k]),
            vel[k],
            np.array([half[0, k], 0.0, 0.0, half[1, k]]),
        )
        for k in range(n)
    ]

    rate_z = np.empty(n)
    rate_z[0] = yaw_rate[0]
    dyaw = np.diff(yaw)
    rate_z[1:] = (np.mod(dyaw + np.pi, 2.0 * np.pi) - np.pi) / dt

    a_nav = np.empty((n, 3))
    a_nav[0] = acc[0]
    a_nav[1:] = np.diff(vel, axis=0) / dt
    yaw_ref = np.empty(n)
    yaw_ref[0] = yaw[0]
    yaw_ref[1:] = yaw[:-1]
    cos_y, sin_y = np.cos(yaw_ref), np.sin(yaw_ref)
    f_forward = cos_y * a_nav[:, 0] + sin_y * a_nav[:, 1]
    f_lateral = -sin_y * a_nav[:, 0] + cos_y * a_nav[:, 1]
    f_up = a_nav[:, 2] + GRAVITY
    ideal = [
        ImuSample(
            float(t[k]),
            np.array([0.0, 0.0, rate_z[k]]),
            np.array([f_forward[k], f_lateral[k], f_up[k]]),
        )
        for k in range(n)
    ]
    return truth, ideal


def _decimate_indices(times, rate):
    """Indices of the first sample in each 1/rate time bucket."""
    buckets = np.floor(times * rate).astype(np.int64)
    keep = np.ones(times.shape[0], dtype=bool)
    keep[1:] = buckets[1:] != buckets[:-1]
    return np.nonzero(keep)[0]


def _in_outage(t, outages):
    return any(start <= t < end for start, end in outages)


def corrupt(truth, ideal_imu, corruption, gnss_rate=1.0, origin=SCENARIO_ORIGIN):
    """Produce noisy IMU and GNSS streams from truth.

    IMU readings get additive white noise plus a per-axis bias random
    walk b_k = b_{k-1} + rw * sqrt(dt_k) * eta.  GNSS fixes are truth
    positions decimated to ``gnss_rate``, perturbed per ENU axis, mapped
    to geodetic about ``origin``, and dropped inside the half-open
    outage windows [start, end).  Outage filtering happens after all
    noise draws, so the surviving fixes are identical across outage
    configurations at the same seed.
    """
    rng = np.random.default_rng(corruption.seed)
    n = len(ideal_imu)
    times = np.array([s.t for s in ideal_imu])
    dts = np.diff(times, prepend=times[0])

    imu_cfg = corruption.imu
    gyro_white = rng.standard_normal((n, 3)) * imu_cfg.gyro_std
    accel_white = rng.standard_normal((n, 3)) * imu_cfg.accel_std
    gyro_steps = rng.standard_normal((n, 3)) * (imu_cfg.gyro_bias_rw * np.sqrt(dts)[:, None])
    accel_steps = rng.standard_normal((n, 3)) * (imu_cfg.accel_bias_rw * np.sqrt(dts)[:, None])
    gyro_steps[0] = 0.0
    accel_steps[0] = 0.0
    gyro_bias = np.cumsum(gyro_steps, axis=0)
    accel_bias = np.cumsum(accel_steps, axis=0)

    imu_out = [
        ImuSample(
            s.t,
            s.gyro + gyro_bias[k] + gyro_white[k],
            s.accel + accel_bias[k] + accel_white[k],
        )
        for k, s in enumerate(ideal_imu)
    ]

    truth_times = np.array([p.t for p in truth])
    fix_idx = _decimate_indices(truth_times, gnss_rate)
    sigmas = np.array([corruption.gnss.sigma_e, corruption.gnss.sigma_n, corruption.gnss.sigma_u])
    noise = rng.standard_normal((fix_idx.shape[0], 3)) * sigmas

    gnss_out = []
    for j, k in enumerate(fix_idx):
        t = float(truth_times[k])
        if _in_outage(t, corruption.outages):
            continue
        enu = LocalEnu(*(truth[k].position.as_array() + noise[j]))
        g = ecef_to_geodetic(enu_to_ecef(enu, origin))
        gnss_out.append(GnssFix(t, g.lat, g.lon, g.height))
    return imu_out, gnss_out
