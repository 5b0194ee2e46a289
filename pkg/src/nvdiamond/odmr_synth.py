"""Synthetic ODMR maps built from transition lines."""

import csv
from dataclasses import dataclass

import numpy as np

DEFAULT_LINEWIDTH_HZ = 10e6


@dataclass
class OdmrMap:
    f_axis: np.ndarray  # Hz
    B_axis: np.ndarray  # tesla
    signal: np.ndarray  # shape (len(B_axis), len(f_axis)), values in [0, 1]


def lorentzian(detuning, linewidth):
    """Unit-height Lorentzian with full width ``linewidth`` at half maximum."""
    return 1.0 / (1.0 + (2.0 * np.asarray(detuning) / linewidth) ** 2)


def _line_key(line):
    return (line.family, line.axis, float(np.sum(line.f)), float(np.sum(line.strength)), float(np.sum(line.B)))


def synthesize_map(lines, f_grid, B_grid, linewidth_hz=DEFAULT_LINEWIDTH_HZ):
    """Strength-weighted Lorentzians summed over lines and clipped to [0, 1].

    Line frequency and strength at each field are linearly interpolated
    from the line's sampled points.
    """
    if not linewidth_hz > 0:
        raise ValueError("linewidth must be positive")
    f_grid = np.asarray(f_grid, dtype=float)
    B_grid = np.asarray(B_grid, dtype=float)
    total = np.zeros((B_grid.size, f_grid.size))
    # sort for a reproducible summation order independent of the input order
    for line in sorted(lines, key=_line_key):
        f_line = np.interp(B_grid, line.B, line.f)
        s_line = np.interp(B_grid, line.B, line.strength)
        total += s_line[:, None] * lorentzian(f_grid[None, :] - f_line[:, None], linewidth_hz)
    return OdmrMap(f_grid, B_grid, np.clip(total, 0.0, 1.0))


def write_map_csv(m, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["B_tesla/f_hz"] + [repr(float(f)) for f in m.f_axis])
        for b, row in zip(m.B_axis, m.signal):
            w.writerow([repr(float(b))] + [repr(float(x)) for x in row])


def read_map_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    f_axis = np.array([float(x) for x in rows[0][1:]])
    body = np.array([[float(x) for x in r] for r in rows[1:] if r])
    return OdmrMap(f_axis, body[:, 0], body[:, 1:])


def to_pgm(m):
    """8-bit binary PGM bytes; rows are fields ascending, columns frequencies."""
    pixels = np.round(255.0 * m.signal).astype(np.uint8)
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes(order="C")


def write_map_pgm(m, path):
    with open(path, "wb") as fh:
        fh.write(to_pgm(m))


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5":
        raise ValueError("not a binary PGM file")
    width, height = (int(x) for x in dims.split())
    return np.frombuffer(rest, dtype=np.uint8, count=width * height).reshape(height, width)
