"""Loosely-coupled GNSS/IMU fusion loop.

Every IMU sample drives one sigma-point prediction of the 16-component
nominal state with its 15x15 error covariance; every GNSS fix is applied
as a position update at the last IMU timestamp at or before the fix (no
interpolation).  GNSS gaps of any length degrade gracefully to dead
reckoning.  The local frame is anchored at the first valid fix of the
run; position and velocity start at zero in that frame.

The prediction step draws sigma perturbations from the error covariance,
retracts them onto the nominal state, propagates each through the
strapdown equations, and recovers the mean with iterative rotation-vector
averaging.  The measurement update runs entirely in error coordinates,
where the position measurement is exactly linear, so it delegates to the
generic vector-state machinery in :mod:`navfuse.ukf`.
"""

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyImuStream, EmptyStream, NonMonotonicTime
from .geodesy import LocalEnu
from .gnss import GnssNoise, cov_for_fix, fix_to_local
from .strapdown import (
    ERROR_DIM,
    ImuNoiseParams,
    apply_state_delta,
    process_noise_cov,
    propagate_batch,
    quat_identity,
    state_delta,
    weighted_state_mean,
)
from .ukf import (
    GaussianBelief,
    SigmaParams,
    apply_measurement,
    cholesky_sqrt,
    compute_weights,
    innovation_nis,
    unscented_measurement,
)


@dataclass(frozen=True)
class FusionConfig:
    """Filter tuning: sigma scaling, sensor noise, and initial uncertainty.

    The initial-uncertainty defaults describe a run that starts from a
    completed coarse alignment with an unknown vehicle-scale velocity:
    attitude known to ~0.6 deg, velocity unknown at the few-m/s level,
    and bias priors consistent with the navigation-grade random-walk
    intensities of :class:`ImuNoiseParams`.
    """

    alpha: float = 1.0
    beta: float = 2.0
    gamma: float = 1.0
    imu_noise: ImuNoiseParams = field(default_factory=ImuNoiseParams)
    gnss_noise: GnssNoise = field(default_factory=GnssNoise)
    init_position_std: float = 10.0
    init_velocity_std: float = 3.0
    init_attitude_std: float = 0.01
    init_gyro_bias_std: float = 1e-4
    init_accel_bias_std: float = 1e-3
    initial_orientation: np.ndarray = field(default_factory=quat_identity)
    gnss_gate: float | None = None
    trace_ceiling: float = 1e9

    def __post_init__(self):
        for name in (
            "init_position_std",
            "init_velocity_std",
            "init_attitude_std",
            "init_gyro_bias_std",
            "init_accel_bias_std",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def initial_covariance(self):
        stds = [
            self.init_position_std,
            self.init_velocity_std,
            self.init_attitude_std,
            self.init_gyro_bias_std,
            self.init_accel_bias_std,
        ]
        return np.diag(np.repeat(np.square(stds), 3))

    def sigma_params(self):
        return SigmaParams(ERROR_DIM, self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class PoseEstimate:
    """Filter output at one IMU timestamp."""

    t: float
    position: LocalEnu
    velocity: np.ndarray
    orientation: np.ndarray
    cov_diag: np.ndarray
    nis: float | None = None
    diverged: bool = False


@dataclass(frozen=True)
class UpdateEvent:
    """Diagnostics of one GNSS update attempt."""

    t: float
    imu_index: int
    nis: float
    accepted: bool
    trace_before: float
    trace_after: float
    innovation: np.ndarray
    cov_min_eig: float
    cov_asymmetry: float


@dataclass(frozen=True)
class FusionResult:
    """Run output: estimates plus the run metadata (frame origin and
    per-update diagnostics)."""

    estimates: list
    origin: object
    updates: list


def _check_times(samples, label, strict):
    last = None
    for i, s in enumerate(samples):
        if last is not None and (s.t < last or (strict and s.t == last)):
            raise NonMonotonicTime(f"{label} timestamps regress: {last} -> {s.t}", i)
        last = s.t


def _predict(state, cov, sample, dt, params, w_mean, w_cov, q_cov):
    # Same sigma construction as ukf.generate_sigma_points, minus the
    # re-validation of a covariance this loop just produced.
    spread = math.sqrt(params.n + params.kappa) * cholesky_sqrt(cov)
    deltas = np.empty((2 * ERROR_DIM + 1, ERROR_DIM))
    deltas[0] = 0.0
    deltas[1 : ERROR_DIM + 1] = spread.T
    deltas[ERROR_DIM + 1 :] = -spread.T
    sigma_states = apply_state_delta(state[None, :], deltas)
    propagated = propagate_batch(sigma_states, sample.gyro, sample.accel, dt)
    mean = weighted_state_mean(propagated, w_mean)
    dev = state_delta(propagated, mean)
    new_cov = (dev * w_cov[:, None]).T @ dev + q_cov
    return mean, 0.5 * (new_cov + new_cov.T)


def run_fusion(imu, gnss, cfg):
    """Run the filter over time-ordered IMU and GNSS streams.

    Returns a :class:`FusionResult` whose ``estimates`` hold one
    :class:`PoseEstimate` per IMU sample, timestamped exactly at the IMU
    times.  Covariance growth past ``cfg.trace_ceiling`` flags estimates
    as diverged instead of raising.
    """
    imu = list(imu)
    gnss = list(gnss)
    if not imu:
        raise EmptyImuStream("at least one IMU sample is required")
    _check_times(imu, "IMU", strict=True)
    _check_times(gnss, "GNSS", strict=False)

    origin = gnss[0].geodetic() if gnss else None
    imu_times = [s.t for s in imu]
    fixes_at = {}
    for fix in gnss:
        idx = bisect.bisect_right(imu_times, fix.t) - 1
        if idx < 0:
            continue  # fix predates the first IMU sample; nothing to anchor it to
        fixes_at.setdefault(idx, []).append(fix)

    params = cfg.sigma_params()
    w_mean, w_cov = compute_weights(params)
    state = np.concatenate(
        [np.zeros(6), np.asarray(cfg.initial_orientation, dtype=float), np.zeros(6)]
    )
    cov = cfg.initial_covariance()

    estimates = []
    updates = []
    q_cache = {}
    for i, sample in enumerate(imu):
        if i > 0:
            dt = sample.t - imu_times[i - 1]
            q_cov = q_cache.get(dt)
            if q_cov is None:
                q_cov = q_cache[dt] = process_noise_cov(cfg.imu_noise, dt)
            state, cov = _predict(state, cov, sample, dt, params, w_mean, w_cov, q_cov)

        nis_here = None
        for fix in fixes_at.get(i, ()):
            y = fix_to_local(fix, origin).as_array()
            belief = GaussianBelief(np.zeros(ERROR_DIM), cov)
            position = state[0:3]
            prediction = unscented_measurement(
                belief,
                lambda delta: position + delta[0:3],
                cov_for_fix(fix, cfg.gnss_noise),
                params,
            )
            nis_here = innovation_nis(prediction, y)
            accepted = cfg.gnss_gate is None or nis_here <= cfg.gnss_gate
            trace_before = float(np.trace(cov))
            if accepted:
                posterior, innovation = apply_measurement(belief, prediction, y)
                state = apply_state_delta(state, posterior.mean)
                cov = posterior.cov
            else:
                innovation = y - prediction.mean
            updates.append(
                UpdateEvent(
                    t=sample.t,
                    imu_index=i,
                    nis=nis_here,
                    accepted=accepted,
                    trace_before=trace_before,
                    trace_after=float(np.trace(cov)),
                    innovation=innovation,
                    cov_min_eig=float(np.linalg.eigvalsh(cov)[0]),
                    cov_asymmetry=float(np.max(np.abs(cov - cov.T))),
                )
            )

        estimates.append(
            PoseEstimate(
                t=sample.t,
                position=LocalEnu(*state[0:3]),
                velocity=state[3:6].copy(),
                orientation=state[6:10].copy(),
                cov_diag=np.diag(cov).copy(),
                nis=nis_here,
                diverged=bool(np.trace(cov) > cfg.trace_ceiling),
            )
        )
    return FusionResult(estimates, origin, updates)


def run_gnss_only(gnss, origin):
    """Map raw fixes into the local frame as a no-filter baseline.

    Velocity is zeroed and orientation set to the identity rotation;
    covariance diagonals are zero (raw measurements carry no filter
    uncertainty).
    """
    gnss = list(gnss)
    if not gnss:
        raise EmptyStream("GNSS stream is empty")
    return [
        PoseEstimate(
            t=fix.t,
            position=fix_to_local(fix, origin),
            velocity=np.zeros(3),
            orientation=quat_identity(),
            cov_diag=np.zeros(ERROR_DIM),
        )
        for fix in gnss
    ]
