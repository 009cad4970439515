"""KITTI raw-data OXTS ingestion.

A drive directory holds ``oxts/timestamps.txt`` (one ISO datetime with a
nanosecond fraction per line) and ``oxts/data/NNNNNNNNNN.txt`` (one
30-field whitespace-separated record per frame).  Parsing transcribes
the file faithfully: angles stay in the recorded units (degrees for
lat/lon) and are converted at the domain boundary in
:func:`load_sequence`.
"""

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import (
    MalformedRecord,
    MissingTimestamps,
    NonMonotonicTime,
    RecordCountMismatch,
)
from .gnss import GnssFix
from .strapdown import ImuSample

#: OXTS record layout, in file order.
OXTS_FIELDS = (
    "lat", "lon", "alt",
    "roll", "pitch", "yaw",
    "vn", "ve", "vf", "vl", "vu",
    "ax", "ay", "az", "af", "al", "au",
    "wx", "wy", "wz", "wf", "wl", "wu",
    "pos_accuracy", "vel_accuracy",
    "navstat", "numsats", "posmode", "velmode", "orimode",
)
_INT_FIELDS = {"navstat", "numsats", "posmode", "velmode", "orimode"}


@dataclass(frozen=True)
class OxtsRecord:
    lat: float
    lon: float
    alt: float
    roll: float
    pitch: float
    yaw: float
    vn: float
    ve: float
    vf: float
    vl: float
    vu: float
    ax: float
    ay: float
    az: float
    af: float
    al: float
    au: float
    wx: float
    wy: float
    wz: float
    wf: float
    wl: float
    wu: float
    pos_accuracy: float
    vel_accuracy: float
    navstat: int
    numsats: int
    posmode: int
    velmode: int
    orimode: int


def parse_oxts_record(line, context=""):
    """Parse one 30-field OXTS line into an :class:`OxtsRecord`.

    Raises :class:`MalformedRecord` on a wrong field count or a
    non-numeric token, naming the offending line.
    """
    where = f" in {context}" if context else ""
    tokens = line.split()
    if len(tokens) != len(OXTS_FIELDS):
        raise MalformedRecord(
            f"expected {len(OXTS_FIELDS)} fields, got {len(tokens)}{where}: {line!r}"
        )
    values = {}
    for name, token in zip(OXTS_FIELDS, tokens):
        try:
            number = float(token)
        except ValueError:
            raise MalformedRecord(f"non-numeric field {name}={token!r}{where}") from None
        values[name] = int(number) if name in _INT_FIELDS else number
    record = OxtsRecord(**values)
    if not (-90.0 <= record.lat <= 90.0 and -180.0 <= record.lon <= 180.0):
        raise MalformedRecord(
            f"lat/lon ({record.lat}, {record.lon}) outside geodetic bounds{where}"
        )
    return record


def parse_timestamp(line):
    """Split an ISO timestamp into (whole-second datetime, fractional s)."""
    text = line.strip()
    try:
        if "." in text:
            whole, frac = text.split(".", 1)
            return datetime.fromisoformat(whole.replace(" ", "T")), float("0." + frac)
        return datetime.fromisoformat(text.replace(" ", "T")), 0.0
    except ValueError:
        raise MalformedRecord(f"bad timestamp line {text!r}") from None


def load_sequence(drive_dir, gnss_rate=1.0):
    """Load a KITTI drive into (IMU stream, GNSS stream).

    IMU samples take the body-frame channels (wf, wl, wu) and
    (af, al, au) at the full recording rate; GNSS fixes take (lat, lon,
    alt), converted to radians, decimated to ``gnss_rate`` by keeping
    the first record of each time bucket.  Timestamps become seconds
    relative to the first record.
    """
    drive_dir = Path(drive_dir)
    ts_path = drive_dir / "oxts" / "timestamps.txt"
    data_dir = drive_dir / "oxts" / "data"
    if not ts_path.is_file():
        raise MissingTimestamps(f"missing {ts_path}")
    ts_lines = [line for line in ts_path.read_text().splitlines() if line.strip()]
    data_files = sorted(data_dir.glob("*.txt")) if data_dir.is_dir() else []
    if not data_files or len(data_files) != len(ts_lines):
        raise RecordCountMismatch(
            f"{len(data_files)} data files vs {len(ts_lines)} timestamp lines in {drive_dir}"
        )

    base_dt, base_frac = parse_timestamp(ts_lines[0])
    times = []
    for line in ts_lines:
        stamp, frac = parse_timestamp(line)
        times.append((stamp - base_dt).total_seconds() + (frac - base_frac))

    imu = []
    records = []
    for k, path in enumerate(data_files):
        record = parse_oxts_record(path.read_text().strip(), context=path.name)
        t = times[k]
        if k > 0 and t <= times[k - 1]:
            raise NonMonotonicTime(f"timestamps regress: {times[k - 1]} -> {t}", k)
        records.append(record)
        imu.append(
            ImuSample(
                t,
                np.array([record.wf, record.wl, record.wu]),
                np.array([record.af, record.al, record.au]),
            )
        )

    gnss = []
    last_bucket = None
    for k, record in enumerate(records):
        bucket = math.floor(times[k] * gnss_rate)
        if bucket == last_bucket:
            continue
        last_bucket = bucket
        std = None
        if record.pos_accuracy > 0:
            std = (record.pos_accuracy, record.pos_accuracy, record.pos_accuracy)
        gnss.append(
            GnssFix(
                times[k],
                math.radians(record.lat),
                math.radians(record.lon),
                record.alt,
                std=std,
            )
        )
    return imu, gnss
