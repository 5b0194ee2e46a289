"""Field sweeps, adiabatic level tracking and transition-line families."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .hamiltonians import (
    FieldConfig,
    NvParams,
    SystemParams,
    defect_axes,
    electron_drive,
    hamiltonian,
    nv_hamiltonian,
)
from .spin_algebra import axis_to_z_rotation, eigh

TWO_PI = 2.0 * np.pi
MIN_OVERLAP = 0.5
DEGENERACY_RTOL = 1e-10

# branch index -> label: NV branches are numbered by ascending energy at low
# field, i.e. (0, -1, +1); the -1 branch is the one that descends to the GSLAC
NV_FAMILIES = (
    ("NV_0_to_plus1", 0, 2),
    ("NV_0_to_minus1", 0, 1),
    ("NV_plus1_to_minus1", 2, 1),
)

# P1 states 1..6 numbered by ascending energy at the high-field end
P1_FAMILIES = tuple(
    (f"P1_{kind}_{a}_{b}", a - 1, b - 1)
    for kind, pairs in (
        ("electronic", ((6, 1), (5, 2), (4, 3))),
        ("nuclear", ((6, 5), (5, 4), (3, 2), (2, 1))),
        ("mixed", ((6, 3), (5, 3))),
    )
    for a, b in pairs
)

C13_FAMILIES = tuple(
    (f"C13_branch_{k}", a, b)
    for k, (b, a) in enumerate((b, a) for b in range(6) for a in range(b + 1, 6))
)

FAMILIES = {"NV": NV_FAMILIES, "P1": P1_FAMILIES, "NV_C13": C13_FAMILIES}


class AmbiguousAssignmentError(ValueError):
    """Raised when successive eigenvectors overlap too little to continue a branch."""


@dataclass(frozen=True)
class SweepGrid:
    B_start: float = 0.0
    B_stop: float = 0.15
    n_points: int = 1000

    def __post_init__(self):
        if not self.B_start < self.B_stop:
            raise ValueError("SweepGrid needs B_start < B_stop")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError("SweepGrid needs an integer n_points >= 2")

    @property
    def fields(self):
        return np.linspace(self.B_start, self.B_stop, int(self.n_points))


@dataclass
class Branches:
    """Eigenvalues ``(N, n)`` and eigenvectors ``(N, n, n)`` with columns in branch order."""

    fields: np.ndarray
    values: np.ndarray
    vectors: np.ndarray


@dataclass
class TransitionLine:
    family: str
    axis: int
    B: np.ndarray
    f: np.ndarray
    strength: np.ndarray

    def frequency_at(self, b):
        return np.interp(b, self.B, self.f)


def _as_fields(grid):
    if isinstance(grid, SweepGrid):
        return grid.fields
    fields = np.asarray(grid, dtype=float)
    if fields.ndim != 1 or fields.size < 2 or np.any(np.diff(fields) <= 0):
        raise ValueError("fields must be a strictly increasing 1-D array of length >= 2")
    return fields


def _clusters(values, tol):
    groups = [[0]]
    for j in range(1, len(values)):
        if values[j] - values[j - 1] <= tol:
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def _continue_branches(prev_vecs, new_vals, new_vecs, tol):
    """Assign the eigenpairs of the next step to the branches of the previous one."""
    overlap = np.abs(prev_vecs.conj().T @ new_vecs)
    groups = _clusters(new_vals, tol)
    for g in groups:
        if len(g) > 1:
            overlap[:, g] = np.sqrt(np.sum(overlap[:, g] ** 2, axis=1))[:, None]
    rows, cols = linear_sum_assignment(-overlap)
    worst = overlap[rows, cols].min()
    vals = new_vals[cols]
    vecs = new_vecs[:, cols].copy()
    for g in groups:
        if len(g) == 1:
            continue
        members = [k for k in range(len(cols)) if cols[k] in g]
        basis = new_vecs[:, g]
        proj = basis.conj().T @ prev_vecs[:, members]
        u, _, vh = np.linalg.svd(proj)
        vecs[:, members] = basis @ (u @ vh)
    return vals, vecs, worst


def track_levels(builder, grid, anchor="end", min_overlap=MIN_OVERLAP):
    """Follow eigenvalue branches across a field sweep by eigenvector overlap.

    Parameters
    ----------
    builder : callable
        Maps a 1-D array of field values to a stack of Hermitian matrices.
    grid : SweepGrid or array_like
        Field values, strictly increasing.
    anchor : {"end", "start", "first_nondegenerate"} or int
        Step at which branches are numbered by ascending energy; the
        continuation runs outward from there in both directions.

    Raises
    ------
    AmbiguousAssignmentError
        If some branch overlaps its successor by less than ``min_overlap``.
    """
    fields = _as_fields(grid)
    values, vectors = eigh(builder(fields))
    npts, n = values.shape
    scale = np.max(np.abs(values), axis=1)
    tol = DEGENERACY_RTOL * np.where(scale > 0, scale, 1.0)

    if anchor == "end":
        a = npts - 1
    elif anchor == "start":
        a = 0
    elif anchor == "first_nondegenerate":
        gaps = np.diff(values, axis=1).min(axis=1) if n > 1 else np.full(npts, np.inf)
        ok = np.nonzero(gaps > tol)[0]
        a = int(ok[0]) if ok.size else 0
    else:
        a = int(anchor)

    out_vals = np.empty_like(values)
    out_vecs = np.empty_like(vectors)
    out_vals[a] = values[a]
    out_vecs[a] = vectors[a]
    steps = [(i, i + 1) for i in range(a, npts - 1)] + [(i, i - 1) for i in range(a, 0, -1)]
    for i, j in steps:
        vals, vecs, worst = _continue_branches(out_vecs[i], values[j], vectors[j], tol[j])
        if worst < min_overlap:
            raise AmbiguousAssignmentError(
                f"eigenvector overlap {worst:.3f} < {min_overlap} between B={fields[i]:.6g} T "
                f"and B={fields[j]:.6g} T; refine the grid"
            )
        out_vals[j] = vals
        out_vecs[j] = vecs
    return Branches(fields, out_vals, out_vecs)


def transition_strength(vectors, i, j, drive):
    """``|<v_i| drive |v_j>|^2`` for eigenvector columns ``i`` and ``j``."""
    if i == j:
        raise ValueError("transition needs two distinct levels")
    vectors = np.asarray(vectors)
    vi = vectors[..., :, i]
    vj = vectors[..., :, j]
    amp = np.einsum("...a,ab,...b->...", vi.conj(), drive, vj)
    return np.abs(amp) ** 2


def _orientation(cfg):
    if isinstance(cfg, FieldConfig):
        return cfg.theta_MA, cfg.phi_MA
    theta, phi = cfg
    return float(theta), float(phi)


def _direction_in_defect_frame(cfg, axis):
    theta, phi = _orientation(cfg)
    return axis_to_z_rotation(axis) @ FieldConfig(1.0, theta, phi).n_MA


def _low_field_padding(fields):
    if fields[0] <= 0:
        return fields, 0
    step = fields[1] - fields[0]
    m = int(min(np.ceil(fields[0] / step), 2000))
    pad = np.linspace(0.0, fields[0], m, endpoint=False)
    return np.concatenate([pad, fields]), m


def track_axis(system, cfg, axis, grid, params=None):
    """Branches of ``system`` for one defect ``axis`` along the field sweep."""
    params = params or SystemParams()
    fields = _as_fields(grid)
    direction = _direction_in_defect_frame(cfg, axis)

    def builder(b):
        return hamiltonian(system, params, b[:, None] * direction)

    if system == "NV":
        padded, m = _low_field_padding(fields)
        br = track_levels(builder, padded, anchor="first_nondegenerate")
        return Branches(fields, br.values[m:], br.vectors[m:])
    return track_levels(builder, fields, anchor="end")


def lines_over_sweep(system, cfg, grid, params=None, frame="nv", axes=None):
    """Transition lines of ``system`` for every defect axis.

    Frequencies are ``|lambda_a - lambda_b| / 2 pi`` in Hz along adiabatically
    tracked branches; strengths use the electronic Sx drive.
    """
    if system not in FAMILIES:
        raise ValueError(f"unknown system {system!r}")
    fields = _as_fields(grid)
    drive = electron_drive(system)
    all_axes = defect_axes(frame)
    lines = []
    for k in range(len(all_axes)) if axes is None else axes:
        br = track_axis(system, cfg, all_axes[k], fields, params)
        for family, a, b in FAMILIES[system]:
            f = np.abs(br.values[:, a] - br.values[:, b]) / TWO_PI
            strength = transition_strength(br.vectors, a, b, drive)
            lines.append(TransitionLine(family, k, fields.copy(), f, strength))
    return lines


def near_parallel_axis(cfg, frame="nv"):
    """Index of the defect axis closest to the field direction."""
    theta, phi = _orientation(cfg)
    n = FieldConfig(1.0, theta, phi).n_MA
    return int(np.argmax(np.abs(defect_axes(frame) @ n)))


def nv_lowest_gap(p, direction, b):
    """Gap between the two lowest NV levels (rad/s) at field ``b`` along ``direction``."""
    w, _ = eigh(nv_hamiltonian(p, np.multiply.outer(np.atleast_1d(b), direction)))
    return w[:, 1] - w[:, 0]


def gslac_field(p, axis, cfg, tol=1e-8, max_angle=20.0):
    """Field (tesla) at which the two lowest NV levels come closest.

    A coarse scan around ``D / gamma_e`` is refined by golden-section search.
    """
    direction = _direction_in_defect_frame(cfg, axis)
    angle = np.degrees(np.arccos(min(1.0, abs(direction[2]))))
    if angle >= max_angle:
        raise ValueError(f"axis is {angle:.1f} deg from the field; gslac_field needs < {max_angle} deg")
    b0 = p.D / p.gamma_e
    scan = np.linspace(0.5 * b0, 1.5 * b0, 401)
    gaps = nv_lowest_gap(p, direction, scan)
    i = int(np.argmin(gaps))
    if i == 0 or i == len(scan) - 1:
        raise ValueError("no gap minimum inside the search range")
    lo, hi = scan[i - 1], scan[i + 1]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    gc, gd = nv_lowest_gap(p, direction, [c, d])
    while hi - lo > tol:
        if gc < gd:
            hi, d, gd = d, c, gc
            c = hi - invphi * (hi - lo)
            gc = nv_lowest_gap(p, direction, c)[0]
        else:
            lo, c, gc = c, d, gd
            d = lo + invphi * (hi - lo)
            gd = nv_lowest_gap(p, direction, d)[0]
    return 0.5 * (lo + hi)


def unidentified_line(F_s, nv_line):
    """Empirical line ``F_s - F_NV / 3`` built from an NV 0 <-> -1 line.

    Points where the relation gives a negative frequency are dropped.
    """
    f = F_s - np.asarray(nv_line.f) / 3.0
    keep = f >= 0
    return TransitionLine(
        "UNIDENTIFIED", nv_line.axis, np.asarray(nv_line.B)[keep], f[keep], np.ones(int(keep.sum()))
    )


LINE_COLUMNS = ("family", "axis", "B_tesla", "f_hz", "strength")


def write_lines_csv(lines, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LINE_COLUMNS)
        for line in lines:
            for b, f, s in zip(line.B, line.f, line.strength):
                w.writerow((line.family, line.axis, repr(float(b)), repr(float(f)), repr(float(s))))


def read_lines_csv(path):
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != LINE_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(LINE_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                key = (row[0], int(row[1]))
                rows.setdefault(key, []).append((float(row[2]), float(row[3]), float(row[4])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad line record {row!r}") from exc
    lines = []
    for (family, axis), pts in rows.items():
        arr = np.array(sorted(pts))
        lines.append(TransitionLine(family, axis, arr[:, 0], arr[:, 1], arr[:, 2]))
    return lines
