"""navfuse: loosely-coupled GNSS/IMU fusion with an unscented Kalman filter."""

__version__ = "0.1.0"

from .errors import NavFuseError
from .fusion import FusionConfig, FusionResult, PoseEstimate, run_fusion, run_gnss_only
from .geodesy import (
    WGS84,
    EcefCoord,
    GeodeticCoord,
    LocalEnu,
    Wgs84Constants,
    ecef_to_enu,
    ecef_to_geodetic,
    enu_to_ecef,
    geodetic_to_ecef,
    normal_radius,
)
from .gnss import GnssFix, GnssNoise, fix_to_local, measurement_cov, measurement_fn
from .simulate import SensorCorruption, TrajectoryProfile, corrupt, generate_truth
from .strapdown import ImuNoiseParams, ImuSample, NavState, process_noise_cov, propagate
from .ukf import (
    GaussianBelief,
    NoiseCov,
    SigmaParams,
    SigmaSet,
    compute_weights,
    generate_sigma_points,
    unscented_predict,
    unscented_update,
)

__all__ = [
    "__version__",
    "NavFuseError",
    "FusionConfig",
    "FusionResult",
    "PoseEstimate",
    "run_fusion",
    "run_gnss_only",
    "WGS84",
    "EcefCoord",
    "GeodeticCoord",
    "LocalEnu",
    "Wgs84Constants",
    "ecef_to_enu",
    "ecef_to_geodetic",
    "enu_to_ecef",
    "geodetic_to_ecef",
    "normal_radius",
    "GnssFix",
    "GnssNoise",
    "fix_to_local",
    "measurement_cov",
    "measurement_fn",
    "SensorCorruption",
    "TrajectoryProfile",
    "corrupt",
    "generate_truth",
    "ImuNoiseParams",
    "ImuSample",
    "NavState",
    "process_noise_cov",
    "propagate",
    "GaussianBelief",
    "NoiseCov",
    "SigmaParams",
    "SigmaSet",
    "compute_weights",
    "generate_sigma_points",
    "unscented_predict",
    "unscented_update",
]
