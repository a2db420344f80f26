"""CSV / JSON writers shared by the command-line entry points.

Floats are rendered with ``%.17g`` (round-trip exact for doubles) and rows
use ``\\n`` line endings regardless of platform, so a re-run with the same
flags produces byte-identical CSV bodies.  Timestamps and wall-clock fields
belong in the JSON sidecars only, never in a CSV.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError

FLOAT_FMT = "%.17g"


def fmt_float(value) -> str:
    return FLOAT_FMT % float(value)


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return fmt_float(value)


def write_csv(path, header, rows) -> None:
    """Write rows of mixed int/float/str cells under a simple comma header."""
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        cells = [_fmt_cell(v) for v in row]
        if len(cells) != width:
            raise ValidationError(
                f"row width {len(cells)} does not match header width {width}")
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_csv(path):
    """Read a CSV written by :func:`write_csv`; returns (header, float array).

    Rows that contain non-numeric cells are rejected -- the command outputs
    this module produces are purely numeric.
    """
    with open(path, "r", newline="") as fh:
        raw = [line.rstrip("\n").rstrip("\r") for line in fh if line.strip()]
    if not raw:
        raise ValidationError(f"empty CSV file: {path}")
    header = raw[0].split(",")
    data = np.zeros((len(raw) - 1, len(header)))
    for i, line in enumerate(raw[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValidationError(f"{path}: row {i + 2} has {len(cells)} cells, "
                                  f"expected {len(header)}")
        try:
            data[i] = [float(c) for c in cells]
        except ValueError as err:
            raise ValidationError(f"{path}: row {i + 2}: {err}") from None
    return header, data


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sample_header(k: int, n: int):
    return ([f"theta_{i}" for i in range(k)] + [f"x_{j}" for j in range(n)]
            + ["objective", "gamma_gap"])


def write_samples_csv(path, thetas, xs, objectives, gamma_gaps) -> None:
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    rows = [list(thetas[i]) + list(xs[i]) + [objectives[i], gamma_gaps[i]]
            for i in range(thetas.shape[0])]
    write_csv(path, sample_header(thetas.shape[1], xs.shape[1]), rows)


def read_samples_csv(path):
    """Parse a sample CSV back into (thetas, xs, objectives, gamma_gaps)."""
    header, data = read_csv(path)
    k = sum(1 for h in header if h.startswith("theta_"))
    n = sum(1 for h in header if h.startswith("x_"))
    if k == 0 or n == 0 or header[:k + n] != sample_header(k, n)[:k + n]:
        raise ValidationError(f"{path}: not a sample CSV (header {header[:4]}...)")
    return data[:, :k], data[:, k:k + n], data[:, k + n], data[:, k + n + 1]


def report_header(k: int, n: int):
    return ([f"theta_{i}" for i in range(k)] + [f"xhat_{j}" for j in range(n)]
            + ["infeas_dist", "subopt_gap"])


def write_report_csv(path, report) -> None:
    """Per-theta policy evaluation rows from a metrics report."""
    rows = [list(report.thetas[i]) + list(report.xhat[i])
            + [report.infeas[i], report.subopt[i]]
            for i in range(report.num_evaluated)]
    write_csv(path, report_header(report.thetas.shape[1], report.xhat.shape[1]), rows)
