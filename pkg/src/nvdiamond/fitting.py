"""Orientation fitting from measured resonance points.

The objective sums weighted squared distances from each measured point to
the nearest predicted transition frequency at the same field. It is
minimised with a Nelder-Mead simplex followed by one restart from the
best vertex with a ten times smaller simplex.
"""

import csv
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .hamiltonians import FieldConfig, SystemParams, defect_axes, hamiltonian
from .spectra import FAMILIES, lines_over_sweep
from .spin_algebra import axis_to_z_rotation, eigh

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ResonancePoint:
    B: float
    f: float
    family_hint: str | None = None
    weight: float = 1.0

    def __post_init__(self):
        if self.B < 0 or not self.f > 0 or not self.weight > 0:
            raise ValueError(f"invalid resonance point {self!r}")


@dataclass
class FitResult:
    theta_MA: float
    phi_MA: float
    D: float
    E: float
    rms_residual: float
    n_iterations: int
    converged: bool
    free_DE: bool = False


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_iterations: int
    converged: bool


def nelder_mead(fun, x0, step, converged, max_iter=2000):
    """Minimise ``fun`` with the Nelder-Mead simplex.

    ``step`` sets the initial simplex edge along each coordinate.
    ``converged(simplex, values)`` decides termination; vertices are kept
    sorted by value with ties broken by vertex index, so results do not
    depend on evaluation order.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    simplex = np.vstack([x0] + [x0 + step[k] * np.eye(n)[k] for k in range(n)])
    values = np.array([fun(x) for x in simplex])

    it = 0
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if converged(simplex, values):
            return SimplexResult(simplex[0].copy(), float(values[0]), it, True)
        if it >= max_iter:
            return SimplexResult(simplex[0].copy(), float(values[0]), it, False)
        it += 1

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = fun(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = fun(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = fun(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [fun(x) for x in simplex[1:]]


def _point_arrays(points):
    B = np.array([p.B for p in points], dtype=float)
    f = np.array([p.f for p in points], dtype=float)
    w = np.array([p.weight for p in points], dtype=float)
    hints = [p.family_hint for p in points]
    return B, f, w, hints


def predicted_frequencies(B, orientation, params=None, include_p1=False, frame="nv", labeled=False):
    """Candidate transition frequencies (Hz) at each field in ``B``.

    Returns an array of shape ``(len(B), n_candidates)`` and a list of
    family names per candidate column (``None`` when ``labeled`` is false
    and the NV candidates come from unlabeled pairwise level differences).
    """
    params = params or SystemParams()
    B = np.asarray(B, dtype=float)
    theta, phi = orientation
    n_ma = FieldConfig(1.0, theta, phi).n_MA
    axes = defect_axes(frame)
    cols, names = [], []

    if labeled or include_p1:
        uniq = np.unique(np.concatenate([B, np.linspace(0.0, max(B.max(), 1e-3), 256)]))
        systems = ["NV"] + (["P1"] if include_p1 else [])
        for system in systems:
            if system == "NV" and not labeled:
                continue
            for line in lines_over_sweep(system, (theta, phi), uniq, params=params, frame=frame):
                cols.append(np.interp(B, line.B, line.f))
                names.append(line.family)
    if not labeled:
        dirs = np.array([axis_to_z_rotation(a) @ n_ma for a in axes])
        fields = B[:, None, None] * dirs[None, :, :]
        w, _ = eigh(hamiltonian("NV", params, fields))
        for a, b in itertools.combinations(range(3), 2):
            diff = np.abs(w[:, :, b] - w[:, :, a]) / TWO_PI
            for k in range(len(axes)):
                cols.append(diff[:, k])
                names.append(None)
    return np.column_stack(cols), names


def objective(points, orientation, params=None, include_p1=False, frame="nv"):
    """Weighted sum of squared distances to the nearest predicted line (Hz^2)."""
    if len(points) < 1:
        raise ValueError("objective needs at least one point")
    B, f, w, hints = _point_arrays(points)
    labeled = any(h is not None for h in hints)
    pred, names = predicted_frequencies(B, orientation, params, include_p1, frame, labeled)
    dist = np.abs(pred - f[:, None])
    if labeled:
        names = np.array(names, dtype=object)
        for i, h in enumerate(hints):
            if h is not None:
                mask = names == h
                if not mask.any():
                    raise ValueError(f"unknown family hint {h!r}")
                dist[i, ~mask] = np.inf
    return float(np.sum(w * dist.min(axis=1) ** 2))


def _symmetry_ops(frame):
    """Orthogonal maps that permute the defect axis lines of ``frame``."""
    cubic = [
        np.diag(signs)[list(perm)]
        for perm in itertools.permutations(range(3))
        for signs in itertools.product((1.0, -1.0), repeat=3)
    ]
    if frame == "cubic":
        return cubic
    src, dst = defect_axes("cubic"), defect_axes(frame)
    u, _, vh = np.linalg.svd(dst.T @ src)
    to_frame = u @ vh
    return [to_frame @ m @ to_frame.T for m in cubic]


def _angle_distance(a, b):
    dth = a[0] - b[0]
    dph = (a[1] - b[1] + 180.0) % 360.0 - 180.0
    return np.hypot(dth, dph)


def equivalent_orientations(theta, phi, frame="nv"):
    """All (theta, phi) pairs, in degrees, related by a symmetry of the axis set."""
    n = FieldConfig(1.0, theta, phi).n_MA
    out = []
    for m in _symmetry_ops(frame):
        v = m @ n
        th = np.degrees(np.arccos(np.clip(v[2], -1.0, 1.0)))
        ph = np.degrees(np.arctan2(v[1], v[0]))
        out.append((th, ph % 360.0))
        out.append((-th, (ph + 180.0) % 360.0))
    return out


def canonical_orientation(theta, phi, reference, frame="nv"):
    """Symmetry image of (theta, phi) closest to ``reference`` in angle space."""
    best = min(equivalent_orientations(theta, phi, frame), key=lambda o: _angle_distance(o, reference))
    ph = best[1]
    # keep phi in the same 360 window as the reference
    ph = reference[1] + ((ph - reference[1] + 180.0) % 360.0 - 180.0)
    return float(best[0]), float(ph)


def fit_orientation(
    points,
    initial=(0.0, 90.0),
    params=None,
    free_DE=False,
    include_p1=False,
    frame="nv",
    max_iter=2000,
    initial_step=5.0,
    f_tol=1e3,
    x_tol=1e-4,
):
    """Fit the field orientation (and optionally D, E) to resonance points.

    Returns angles in the symmetry-equivalent representation closest to
    ``initial``. Exceeding ``max_iter`` is reported via ``converged=False``.
    """
    params = params or SystemParams()
    points = list(points)
    if len(points) < 1:
        raise ValueError("need at least one resonance point")
    wsum = sum(p.weight for p in points)
    nv0 = params.nv

    def unpack(x):
        if not free_DE:
            return params
        nv = replace(nv0, D=TWO_PI * x[2] * 1e9, E=TWO_PI * abs(x[3]) * 1e6)
        return replace(params, nv=nv)

    def fun(x):
        return objective(points, (x[0], x[1]), unpack(x), include_p1, frame)

    def converged(simplex, values):
        rms = np.sqrt(np.maximum(values, 0.0) / wsum)
        if rms.max() - rms.min() < f_tol:
            return True
        return np.max(np.abs(simplex[1:, :2] - simplex[0, :2])) < x_tol

    x0 = [initial[0], initial[1]]
    step = [initial_step, initial_step]
    if free_DE:
        x0 += [nv0.D / TWO_PI / 1e9, nv0.E / TWO_PI / 1e6]
        step += [0.01, 1.0]
    first = nelder_mead(fun, x0, step, converged, max_iter)
    second = nelder_mead(fun, first.x, np.asarray(step) / 10.0, converged, max(max_iter - first.n_iterations, 0))
    best = second if second.fun <= first.fun else first
    theta, phi = canonical_orientation(best.x[0], best.x[1], initial, frame)
    final = unpack(best.x).nv
    return FitResult(
        theta_MA=theta,
        phi_MA=phi,
        D=final.D,
        E=final.E,
        rms_residual=float(np.sqrt(best.fun / wsum)),
        n_iterations=first.n_iterations + second.n_iterations,
        converged=bool(first.converged and second.converged),
        free_DE=free_DE,
    )


def synthetic_points(orientation, fields, families=("NV_0_to_plus1", "NV_0_to_minus1"), params=None,
                     noise_hz=0.0, rng=None, frame="nv", f_min=0.1e9, label=False):
    """Resonance points sampled from computed NV lines, optionally with Gaussian noise.

    ``label=True`` stores each point's family as its ``family_hint``.
    """
    lines = lines_over_sweep("NV", orientation, fields, params=params, frame=frame)
    pts = []
    for line in lines:
        if line.family not in families:
            continue
        for b, f in zip(line.B, line.f):
            if f < f_min:
                continue
            if noise_hz:
                f = f + rng.normal(0.0, noise_hz)
            pts.append(ResonancePoint(float(b), float(f), line.family if label else None))
    return pts


POINT_COLUMNS = ("B_tesla", "f_hz", "weight")
FIT_COLUMNS = ("theta_deg", "phi_deg", "D_hz", "E_hz", "rms_hz", "converged")


def read_points_csv(path):
    known = {name for fam in FAMILIES.values() for name, _, _ in fam}
    pts = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if tuple(header[:3]) != POINT_COLUMNS or len(header) not in (3, 4) or (
            len(header) == 4 and header[3] != "family"
        ):
            raise ValueError(f"{path}: expected header B_tesla,f_hz,weight[,family]")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                hint = row[3].strip() or None if len(row) > 3 else None
                if hint is not None and hint not in known:
                    raise ValueError(f"unknown family {hint!r}")
                pts.append(ResonancePoint(float(row[0]), float(row[1]), hint, float(row[2])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not pts:
        raise ValueError(f"{path}: no resonance points")
    return pts


def write_points_csv(points, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POINT_COLUMNS + ("family",))
        for p in points:
            w.writerow((repr(p.B), repr(p.f), repr(p.weight), p.family_hint or ""))


def write_fit_csv(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_COLUMNS)
        w.writerow((
            repr(result.theta_MA), repr(result.phi_MA), repr(result.D / TWO_PI),
            repr(result.E / TWO_PI), repr(result.rms_residual), str(result.converged).lower(),
        ))
