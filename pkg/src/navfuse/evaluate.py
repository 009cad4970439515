"""Position-error metrics and plot-ready CSV artifacts.

CSV files are written atomically (temp file + rename) with 17
significant digits and a '.' decimal separator regardless of locale, so
floats round-trip exactly and runs diff cleanly.
"""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySeries, TimeSpanMismatch


@dataclass(frozen=True)
class ErrorSeries:
    """Per-axis position errors (estimate - truth) over time."""

    t: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.ex) == len(self.ey) == len(self.ez) == n):
            raise ValueError("series columns must have equal length")
        if n > 1 and np.any(np.diff(self.t) < 0):
            raise ValueError("timestamps must be non-decreasing")


@dataclass(frozen=True)
class RmseReport:
    """Per-axis RMSE of one method."""

    method: str
    rmse_x: float
    rmse_y: float
    rmse_z: float


def _positions(sequence):
    return np.array([p.position.as_array() for p in sequence])


def align_and_diff(estimates, truth):
    """Interpolate truth to the estimate timestamps and subtract.

    Truth interpolation is linear per axis; both sequences need ``t``
    and ``position`` attributes.  Raises :class:`TimeSpanMismatch` when
    an estimate timestamp falls outside the truth span.
    """
    if not len(estimates) or not len(truth):
        raise EmptySeries("estimates and truth must be non-empty")
    et = np.array([e.t for e in estimates])
    tt = np.array([p.t for p in truth])
    if et.min() < tt[0] - 1e-9 or et.max() > tt[-1] + 1e-9:
        raise TimeSpanMismatch(
            f"estimates span [{et.min()}, {et.max()}] but truth spans [{tt[0]}, {tt[-1]}]"
        )
    est = _positions(estimates)
    tru = _positions(truth)
    diffs = [est[:, i] - np.interp(et, tt, tru[:, i]) for i in range(3)]
    return ErrorSeries(et, *diffs)


def rmse(series, method):
    """Root-mean-square error per axis."""
    if len(series.t) == 0:
        raise EmptySeries("cannot compute RMSE of an empty series")
    return RmseReport(
        method,
        float(np.sqrt(np.mean(series.ex**2))),
        float(np.sqrt(np.mean(series.ey**2))),
        float(np.sqrt(np.mean(series.ez**2))),
    )


def _fmt(value):
    return format(float(value), ".17g")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc}") from exc


def export_errors_csv(series, path):
    """Write an error series as ``t,ex,ey,ez`` rows."""
    lines = ["t,ex,ey,ez"]
    for k in range(len(series.t)):
        lines.append(
            f"{_fmt(series.t[k])},{_fmt(series.ex[k])},{_fmt(series.ey[k])},{_fmt(series.ez[k])}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def export_rmse_csv(reports, path):
    """Write RMSE rows as ``method,rmse_x,rmse_y,rmse_z``."""
    lines = ["method,rmse_x,rmse_y,rmse_z"]
    for r in reports:
        lines.append(f"{r.method},{_fmt(r.rmse_x)},{_fmt(r.rmse_y)},{_fmt(r.rmse_z)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def export_track_csv(t, est, truth, gnss, path):
    """Write the XY-track table.

    ``gnss`` rows are NaN where no fix was applied at that timestamp and
    are emitted as empty cells.
    """
    lines = ["t,est_e,est_n,est_u,truth_e,truth_n,truth_u,gnss_e,gnss_n,gnss_u"]
    for k in range(len(t)):
        cells = [_fmt(t[k])]
        cells += [_fmt(v) for v in est[k]]
        cells += [_fmt(v) for v in truth[k]]
        if np.isnan(gnss[k]).any():
            cells += ["", "", ""]
        else:
            cells += [_fmt(v) for v in gnss[k]]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
