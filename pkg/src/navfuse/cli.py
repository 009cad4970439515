"""Command-line interface: simulate, fuse, kitti-convert.

Stream schemas (headers are fixed):

* ``imu.csv``   -- ``t,wx,wy,wz,ax,ay,az`` (body frame, rad/s, m/s^2)
* ``gnss.csv``  -- ``t,lat_deg,lon_deg,alt_m``
* ``truth.csv`` -- ``t,lat_deg,lon_deg,alt_m`` (geodetic ground truth)

Exit codes: 0 success, 1 runtime/data error, 2 usage error.  Flags
override an optional ``key=value`` config file (``--config``); defaults
apply last.  Every command writes a ``manifest`` echoing the resolved
configuration, sufficient to reproduce the run byte for byte.
"""

import argparse
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NavFuseError
from .evaluate import (
    align_and_diff,
    atomic_write_text,
    export_errors_csv,
    export_rmse_csv,
    export_track_csv,
    rmse,
)
from .fusion import FusionConfig, run_fusion, run_gnss_only
from .geodesy import ecef_to_geodetic, enu_to_ecef
from .gnss import GnssFix, GnssNoise, fix_to_local
from .kitti import load_sequence
from .simulate import (
    PROFILE_KINDS,
    SCENARIO_ORIGIN,
    SensorCorruption,
    TrajectoryProfile,
    corrupt,
    generate_truth,
)
from .strapdown import ImuNoiseParams, ImuSample, quat_identity


class _UsageError(Exception):
    pass


def _fmt(value):
    return format(float(value), ".17g")


def _parse_outage(text):
    try:
        start, end = text.split(":")
        start, end = float(start), float(end)
    except ValueError:
        raise _UsageError(f"bad outage window {text!r}; expected START:END") from None
    if not start < end:
        raise _UsageError(f"outage window {text!r} must have START < END")
    return (start, end)


def _read_config_file(path):
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"bad config line {raw!r}; expected key=value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


class _Resolver:
    """Flags > config file > defaults, recording resolved values."""

    def __init__(self, args):
        self.args = args
        self.file = _read_config_file(args.config) if getattr(args, "config", None) else {}
        self.resolved = {}

    def get(self, key, default, cast=float):
        value = getattr(self.args, key, None)
        if value is None and key in self.file:
            value = cast(self.file[key])
        if value is None:
            value = default
        self.resolved[key] = value
        return value


def _defaults_of(cls):
    return {f.name: f.default for f in fields(cls)}


_PROFILE_DEFAULTS = _defaults_of(TrajectoryProfile)
_IMU_NOISE_DEFAULTS = _defaults_of(ImuNoiseParams)
_FUSION_DEFAULTS = _defaults_of(FusionConfig)
_GNSS_SIGMA_DEFAULT = _defaults_of(GnssNoise)["sigma_e"]


# ---------------------------------------------------------------------------
# CSV I/O for the internal stream schemas
# ---------------------------------------------------------------------------

def _read_rows(path, header):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise NavFuseError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != header:
        raise NavFuseError(f"{path}: expected header {header!r}")
    rows = []
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rows.append([float(cell) for cell in line.split(",")])
        except ValueError:
            raise NavFuseError(f"{path}:{k}: non-numeric row {line!r}") from None
    return rows


def read_imu_csv(path):
    rows = _read_rows(path, "t,wx,wy,wz,ax,ay,az")
    return [ImuSample(r[0], np.array(r[1:4]), np.array(r[4:7])) for r in rows]


def read_gnss_csv(path):
    rows = _read_rows(path, "t,lat_deg,lon_deg,alt_m")
    return [
        GnssFix(r[0], math.radians(r[1]), math.radians(r[2]), r[3]) for r in rows
    ]


def read_truth_csv(path):
    rows = _read_rows(path, "t,lat_deg,lon_deg,alt_m")
    return [
        GnssFix(r[0], math.radians(r[1]), math.radians(r[2]), r[3]) for r in rows
    ]


def write_imu_csv(samples, path):
    lines = ["t,wx,wy,wz,ax,ay,az"]
    for s in samples:
        cells = [s.t, *s.gyro, *s.accel]
        lines.append(",".join(_fmt(c) for c in cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_gnss_csv(fixes, path):
    lines = ["t,lat_deg,lon_deg,alt_m"]
    for f in fixes:
        lines.append(
            ",".join(
                [_fmt(f.t), _fmt(math.degrees(f.lat)), _fmt(math.degrees(f.lon)), _fmt(f.alt)]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_truth_csv(truth, origin, path):
    lines = ["t,lat_deg,lon_deg,alt_m"]
    for pose in truth:
        g = ecef_to_geodetic(enu_to_ecef(pose.position, origin))
        lines.append(
            ",".join(
                [_fmt(pose.t), _fmt(math.degrees(g.lat)), _fmt(math.degrees(g.lon)), _fmt(g.height)]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


_ESTIMATE_HEADER = (
    "t,e,n,u,ve,vn,vu,qw,qx,qy,qz,"
    "var_pe,var_pn,var_pu,var_ve,var_vn,var_vu,var_re,var_rn,var_ru,"
    "var_bgx,var_bgy,var_bgz,var_bax,var_bay,var_baz,nis,diverged"
)


def write_estimates_csv(estimates, path):
    lines = [_ESTIMATE_HEADER]
    for e in estimates:
        cells = [
            _fmt(e.t),
            *(_fmt(v) for v in e.position.as_array()),
            *(_fmt(v) for v in e.velocity),
            *(_fmt(v) for v in e.orientation),
            *(_fmt(v) for v in e.cov_diag),
            "" if e.nis is None else _fmt(e.nis),
            "1" if e.diverged else "0",
        ]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _write_manifest(out_dir, entries):
    lines = [f"{key}={value}" for key, value in sorted(entries.items())]
    atomic_write_text(Path(out_dir) / "manifest", "\n".join(lines) + "\n")


def _manifest_value(value):
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, (tuple, list)):
        return ";".join(_manifest_value(v) for v in value)
    return str(value)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_simulate(args):
    res = _Resolver(args)
    profile_kind = res.get("profile", None, str)
    duration = res.get("duration", None, float)
    seed = res.get("seed", None, int)
    if profile_kind is None or duration is None or seed is None:
        raise _UsageError("--profile, --duration, and --seed are required")
    try:
        profile = TrajectoryProfile(
            kind=profile_kind,
            duration=duration,
            imu_rate=res.get("imu_rate", _PROFILE_DEFAULTS["imu_rate"]),
            gnss_rate=res.get("gnss_rate", _PROFILE_DEFAULTS["gnss_rate"]),
            speed=res.get("speed", _PROFILE_DEFAULTS["speed"]),
            radius=res.get("radius", _PROFILE_DEFAULTS["radius"]),
            accel=res.get("accel", _PROFILE_DEFAULTS["accel"]),
        )
        corruption = SensorCorruption(
            seed=int(seed),
            imu=_imu_noise(res),
            gnss=GnssNoise(*(3 * [res.get("gnss_sigma", _GNSS_SIGMA_DEFAULT)])),
            outages=tuple(_parse_outage(o) for o in (args.gnss_outage or [])),
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc

    truth, ideal = generate_truth(profile)
    imu, gnss = corrupt(truth, ideal, corruption, gnss_rate=profile.gnss_rate)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_truth_csv(truth, SCENARIO_ORIGIN, out / "truth.csv")
    write_imu_csv(imu, out / "imu.csv")
    write_gnss_csv(gnss, out / "gnss.csv")

    entries = {key: _manifest_value(v) for key, v in res.resolved.items()}
    entries.update(
        command="simulate",
        tool_version=__version__,
        gnss_outage=";".join(f"{s}:{e}" for s, e in corruption.outages),
        origin_lat_deg=_fmt(math.degrees(SCENARIO_ORIGIN.lat)),
        origin_lon_deg=_fmt(math.degrees(SCENARIO_ORIGIN.lon)),
        origin_alt_m=_fmt(SCENARIO_ORIGIN.height),
    )
    _write_manifest(out, entries)
    return 0


def _imu_noise(res):
    return ImuNoiseParams(
        gyro_std=res.get("gyro_std", _IMU_NOISE_DEFAULTS["gyro_std"]),
        accel_std=res.get("accel_std", _IMU_NOISE_DEFAULTS["accel_std"]),
        gyro_bias_rw=res.get("gyro_bias_rw", _IMU_NOISE_DEFAULTS["gyro_bias_rw"]),
        accel_bias_rw=res.get("accel_bias_rw", _IMU_NOISE_DEFAULTS["accel_bias_rw"]),
    )


def _fusion_config(res):
    d = _FUSION_DEFAULTS
    return FusionConfig(
        alpha=res.get("alpha", d["alpha"]),
        beta=res.get("beta", d["beta"]),
        gamma=res.get("gamma", d["gamma"]),
        imu_noise=_imu_noise(res),
        gnss_noise=GnssNoise(*(3 * [res.get("gnss_sigma", _GNSS_SIGMA_DEFAULT)])),
        init_position_std=res.get("init_position_std", d["init_position_std"]),
        init_velocity_std=res.get("init_velocity_std", d["init_velocity_std"]),
        init_attitude_std=res.get("init_attitude_std", d["init_attitude_std"]),
        init_gyro_bias_std=res.get("init_gyro_bias_std", d["init_gyro_bias_std"]),
        init_accel_bias_std=res.get("init_accel_bias_std", d["init_accel_bias_std"]),
        initial_orientation=quat_identity(),
        gnss_gate=res.get("gate", None),
        trace_ceiling=res.get("trace_ceiling", d["trace_ceiling"]),
    )


def _cmd_fuse(args):
    if bool(args.kitti) == bool(args.imu or args.gnss):
        raise _UsageError("provide either --kitti DIR or both --imu and --gnss")
    res = _Resolver(args)
    cfg = _fusion_config(res)

    if args.kitti:
        imu, gnss = load_sequence(args.kitti, gnss_rate=res.get("gnss_rate", 1.0))
        inputs = {"kitti": args.kitti}
    else:
        if not (args.imu and args.gnss):
            raise _UsageError("--imu and --gnss must be given together")
        imu = read_imu_csv(args.imu)
        gnss = read_gnss_csv(args.gnss)
        inputs = {"imu": args.imu, "gnss": args.gnss}

    outages = [_parse_outage(o) for o in (args.gnss_outage or [])]
    if outages:
        gnss = [f for f in gnss if not any(s <= f.t < e for s, e in outages)]

    result = run_fusion(imu, gnss, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_estimates_csv(result.estimates, out / "estimate.csv")

    if args.truth:
        truth_fixes = read_truth_csv(args.truth)
        origin = result.origin or truth_fixes[0].geodetic()
        truth_local = run_gnss_only(truth_fixes, origin)
        fused_err = align_and_diff(result.estimates, truth_local)
        export_errors_csv(fused_err, out / "errors.csv")

        reports = []
        if gnss:
            baseline = run_gnss_only(gnss, origin)
            reports.append(rmse(align_and_diff(baseline, truth_local), "GNSS"))
        reports.append(rmse(fused_err, "GNSS-IMU"))
        export_rmse_csv(reports, out / "rmse.csv")

        t = np.array([e.t for e in result.estimates])
        est = np.array([e.position.as_array() for e in result.estimates])
        truth_interp = est - np.column_stack([fused_err.ex, fused_err.ey, fused_err.ez])
        gnss_cells = np.full((len(t), 3), np.nan)
        for fix in gnss:
            idx = int(np.searchsorted(t, fix.t, side="right")) - 1
            if idx >= 0:
                gnss_cells[idx] = fix_to_local(fix, origin).as_array()
        export_track_csv(t, est, truth_interp, gnss_cells, out / "track.csv")

    entries = {key: _manifest_value(v) for key, v in res.resolved.items()}
    entries.update({f"input_{k}": v for k, v in inputs.items()})
    entries.update(
        command="fuse",
        tool_version=__version__,
        truth=args.truth or "",
        gnss_outage=";".join(f"{s}:{e}" for s, e in outages),
    )
    if result.origin is not None:
        entries.update(
            origin_lat_deg=_fmt(math.degrees(result.origin.lat)),
            origin_lon_deg=_fmt(math.degrees(result.origin.lon)),
            origin_alt_m=_fmt(result.origin.height),
        )
    _write_manifest(out, entries)
    return 0


def _cmd_kitti_convert(args):
    res = _Resolver(args)
    imu, gnss = load_sequence(args.kitti, gnss_rate=res.get("gnss_rate", 1.0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_imu_csv(imu, out / "imu.csv")
    write_gnss_csv(gnss, out / "gnss.csv")
    entries = {key: _manifest_value(v) for key, v in res.resolved.items()}
    entries.update(command="kitti-convert", tool_version=__version__, input_kitti=args.kitti)
    _write_manifest(out, entries)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_noise_flags(p):
    p.add_argument("--gyro-std", dest="gyro_std", type=float,
                   help="gyro white noise (rad/s)")
    p.add_argument("--accel-std", dest="accel_std", type=float,
                   help="accelerometer white noise (m/s^2)")
    p.add_argument("--gyro-bias-walk", dest="gyro_bias_rw", type=float,
                   help="gyro bias random-walk intensity (rad/s^2)")
    p.add_argument("--accel-bias-walk", dest="accel_bias_rw", type=float,
                   help="accelerometer bias random-walk intensity (m/s^3)")
    p.add_argument("--gnss-sigma", dest="gnss_sigma", type=float,
                   help="per-axis GNSS position noise (m)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="navfuse", description="GNSS/IMU fusion toolkit"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate truth and corrupted sensor streams")
    sim.add_argument("--profile", choices=PROFILE_KINDS, help="trajectory shape")
    sim.add_argument("--duration", type=float, help="run length (s)")
    sim.add_argument("--imu-rate", dest="imu_rate", type=float, help="IMU rate (Hz)")
    sim.add_argument("--gnss-rate", dest="gnss_rate", type=float, help="GNSS rate (Hz)")
    sim.add_argument("--speed", type=float, help="profile speed (m/s)")
    sim.add_argument("--radius", type=float, help="profile radius (m)")
    sim.add_argument("--accel", type=float, help="straight-profile acceleration (m/s^2)")
    sim.add_argument("--seed", type=int, required=True, help="64-bit RNG seed")
    sim.add_argument("--gnss-outage", action="append", metavar="START:END",
                     help="drop fixes in [START, END); repeatable")
    _add_noise_flags(sim)
    sim.add_argument("--config", help="key=value config file (flags take precedence)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    fuse = sub.add_parser("fuse", help="run the filter over sensor streams")
    fuse.add_argument("--imu", help="imu.csv path")
    fuse.add_argument("--gnss", help="gnss.csv path")
    fuse.add_argument("--kitti", help="KITTI drive directory (alternative input)")
    fuse.add_argument("--truth", help="truth.csv path; enables errors/rmse/track outputs")
    fuse.add_argument("--gnss-rate", dest="gnss_rate", type=float,
                      help="GNSS decimation rate for --kitti input (Hz)")
    fuse.add_argument("--gnss-outage", action="append", metavar="START:END",
                      help="drop input fixes in [START, END); repeatable")
    fuse.add_argument("--gate", type=float,
                      help="chi-square innovation gate (e.g. 16.27); off by default")
    fuse.add_argument("--trace-ceiling", dest="trace_ceiling", type=float,
                      help="covariance trace above which estimates are flagged diverged")
    fuse.add_argument("--alpha", type=float, help="sigma-point spread")
    fuse.add_argument("--beta", type=float, help="prior-knowledge covariance weight")
    fuse.add_argument("--gamma", type=float, help="secondary scaling factor")
    _add_noise_flags(fuse)
    fuse.add_argument("--init-position-std", dest="init_position_std", type=float)
    fuse.add_argument("--init-velocity-std", dest="init_velocity_std", type=float)
    fuse.add_argument("--init-attitude-std", dest="init_attitude_std", type=float)
    fuse.add_argument("--init-gyro-bias-std", dest="init_gyro_bias_std", type=float)
    fuse.add_argument("--init-accel-bias-std", dest="init_accel_bias_std", type=float)
    fuse.add_argument("--config", help="key=value config file (flags take precedence)")
    fuse.add_argument("--out", required=True, help="output directory")
    fuse.set_defaults(func=_cmd_fuse)

    conv = sub.add_parser("kitti-convert", help="convert a KITTI drive to stream CSVs")
    conv.add_argument("--kitti", required=True, help="KITTI drive directory")
    conv.add_argument("--gnss-rate", dest="gnss_rate", type=float,
                      help="GNSS decimation rate (Hz)")
    conv.add_argument("--config", help="key=value config file (flags take precedence)")
    conv.add_argument("--out", required=True, help="output directory")
    conv.set_defaults(func=_cmd_kitti_convert)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (NavFuseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(main())
