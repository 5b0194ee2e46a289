"""Command-line entry point: ``nvdiamond <command> [options]``.

Exit codes: 0 success, 2 bad configuration or input file, 3 numeric failure.
"""

import argparse
import csv
import sys
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cavity, config, dynamics, fitting, odmr_synth, spectra
from .spin_algebra import EigenConvergenceError

TWO_PI = 2.0 * np.pi


class InputError(Exception):
    """Unreadable or malformed input file (exit 2)."""


class NumericFailure(Exception):
    """Computation failed or produced non-finite output (exit 3)."""


def _read(reader, path):
    try:
        return reader(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a, dtype=complex))):
            raise NumericFailure("computation produced non-finite values")


def _sweep_fields(cfg, n_points=None):
    grid = spectra.SweepGrid(cfg["sweep.B_start_t"], cfg["sweep.B_stop_t"], n_points or cfg["sweep.n_points"])
    return grid.fields


def compute_lines(cfg, system, threads=1):
    """Lines for every defect axis; axes may run on worker threads."""
    params = config.system_params(cfg)
    orient = config.orientation(cfg)
    frame = cfg["orientation.frame"]
    fields = _sweep_fields(cfg)
    n_axes = len(spectra.defect_axes(frame))

    def one(k):
        return spectra.lines_over_sweep(system, orient, fields, params=params, frame=frame, axes=[k])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_axes)))
    else:
        parts = [one(k) for k in range(n_axes)]
    # results are collected in axis order, so threading never changes the output
    return [line for part in parts for line in part]


def cmd_spectrum(cfg, args):
    lines = compute_lines(cfg, args.system, args.threads)
    if args.unidentified_ghz is not None:
        if args.system != "NV":
            raise config.ConfigError("--unidentified-ghz needs --system NV")
        k = spectra.near_parallel_axis(config.orientation(cfg), cfg["orientation.frame"])
        base = next(ln for ln in lines if ln.axis == k and ln.family == "NV_0_to_minus1")
        lines.append(spectra.unidentified_line(args.unidentified_ghz * 1e9, base))
    for ln in lines:
        _finite(ln.f, ln.strength)
    spectra.write_lines_csv(lines, args.out)


def cmd_map(cfg, args):
    lines = _read(spectra.read_lines_csv, args.lines)
    f_grid = np.linspace(cfg["map.f_start_ghz"] * 1e9, cfg["map.f_stop_ghz"] * 1e9, cfg["map.f_points"])
    B_grid = _sweep_fields(cfg, cfg["map.B_points"])
    m = odmr_synth.synthesize_map(lines, f_grid, B_grid, cfg["map.linewidth_mhz"] * 1e6)
    _finite(m.signal)
    if args.format == "pgm":
        odmr_synth.write_map_pgm(m, args.out)
    else:
        odmr_synth.write_map_csv(m, args.out)


def cmd_fit_orientation(cfg, args):
    points = _read(fitting.read_points_csv, args.points)
    result = fitting.fit_orientation(
        points,
        initial=(cfg["fit.theta0_deg"], cfg["fit.phi0_deg"]),
        params=config.system_params(cfg),
        free_DE=cfg["fit.free_DE"],
        include_p1=cfg["fit.include_p1"],
        frame=cfg["orientation.frame"],
        max_iter=cfg["fit.max_iter"],
    )
    _finite([result.theta_MA, result.phi_MA, result.rms_residual])
    fitting.write_fit_csv(result, args.out)


def _field_sweep_rows(cfg):
    """Steady state along the field sweep for the axis nearest the field.

    Level splittings follow the NV 0 <-> -1 and central P1 electronic lines;
    the optical target keeps the magnitude of ``rates.P_zO_NV`` and flips
    sign above the ground-state level anticrossing.
    """
    params = config.system_params(cfg)
    orient = config.orientation(cfg)
    frame = cfg["orientation.frame"]
    fields = _sweep_fields(cfg)
    k = spectra.near_parallel_axis(orient, frame)
    nv = {ln.family: ln for ln in spectra.lines_over_sweep("NV", orient, fields, params, frame, axes=[k])}
    p1 = {ln.family: ln for ln in spectra.lines_over_sweep("P1", orient, fields, params, frame, axes=[k])}
    b_gslac = spectra.gslac_field(params.nv, spectra.defect_axes(frame)[k], orient)
    omega_nv = TWO_PI * nv["NV_0_to_minus1"].f
    omega_p1 = TWO_PI * p1["P1_electronic_5_2"].f
    if np.any(omega_nv <= 0) or np.any(omega_p1 <= 0):
        raise NumericFailure("a level splitting vanishes on the sweep grid; shift the grid")
    target = abs(cfg["rates.P_zO_NV"]) * dynamics.oisp_target(fields, b_gslac)
    base = config.rate_params(cfg)
    rows, previous = [], None
    for b, w_nv, w_p1, p_o in zip(fields, omega_nv, omega_p1, target):
        p = replace(base, omega_NV=float(w_nv), omega_P1=float(w_p1), P_zO_NV=float(p_o))
        previous = dynamics.steady_state(p, initial=previous)
        rows.append((float(b), previous.P_z_NV, previous.P_z_P1))
    return np.array(rows)


def cmd_steady_state(cfg, args):
    if args.sweep == "T1O_inv":
        values = np.linspace(cfg["rates.T1O_start_hz"], cfg["rates.T1O_stop_hz"], cfg["rates.T1O_points"])
        rows = dynamics.sweep_optical_rate(config.rate_params(cfg), values)
        first = "T1O_inv_hz"
    else:
        rows = _field_sweep_rows(cfg)
        first = "B_tesla"
    _finite(rows)
    dynamics.write_sweep_csv(rows, args.out, first_column=first)


def _read_vartheta_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, []))
        if header != ("T1O_inv_hz", "vartheta"):
            raise ValueError(f"{path}: expected header T1O_inv_hz,vartheta")
        try:
            arr = np.array([[float(x) for x in r] for r in reader if r], dtype=float)
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric data") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: no data rows")
    return arr[:, 0], arr[:, 1]


def cmd_cavity(cfg, args):
    c = config.cavity_params(cfg)
    if args.mode == "model":
        f0 = cfg["cavity.f0_ghz"] * 1e9
        half = 0.5 * cfg["cavity.span_mhz"] * 1e6
        f = np.linspace(f0 - half, f0 + half, cfg["cavity.n_points"])
        s = cavity.s11(TWO_PI * f, c)
        if cfg["cavity.noise"] > 0:
            rng = np.random.default_rng(cfg["seed"])
            s = s + cfg["cavity.noise"] * (rng.normal(size=f.size) + 1j * rng.normal(size=f.size))
        _finite(s)
        cavity.write_reflection_csv(f, s, args.out)
        return
    if args.data is None:
        raise config.ConfigError(f"cavity {args.mode} needs --data PATH")
    if args.mode == "fit":
        f, data = _read(cavity.read_reflection_csv, args.data)
        try:
            fit = cavity.fit_s11_curve(TWO_PI * f, data)
        except ValueError as exc:
            raise NumericFailure(str(exc)) from None
        _finite([fit.params.omega_0, fit.params.gamma_1, fit.params.gamma_2, fit.rms])
        cavity.write_fit_report(fit, args.out)
        return
    t1o, theta = _read(_read_vartheta_csv, args.data)
    ratio = t1o / cfg["cavity.T1T_inv_hz"] if cfg["cavity.T1T_inv_hz"] > 0 else np.full_like(t1o, np.inf)
    p_so = cavity.extract_polarization(
        theta, cfg["cavity.kappa"], TWO_PI * cfg["cavity.Delta_mhz"] * 1e6, cfg["cavity.T2_us"] * 1e-6,
        ratio, cfg["cavity.P_zST"],
    )
    _finite(p_so)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("T1O_inv_hz", "vartheta", "P_zSO"))
        for row in zip(t1o, theta, p_so):
            w.writerow(tuple(repr(float(x)) for x in row))


def _validate(cfg):
    try:
        config.system_params(cfg)
        config.rate_params(cfg)
        config.cavity_params(cfg)
        spectra.SweepGrid(cfg["sweep.B_start_t"], cfg["sweep.B_stop_t"], cfg["sweep.n_points"])
    except ValueError as exc:
        raise config.ConfigError(f"invalid configuration: {exc}") from None


def _global_options(parser, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", metavar="PATH", help="run configuration file", **kw)
    parser.add_argument("--out", metavar="PATH", help="output file", **kw)
    parser.add_argument("--threads", type=int, metavar="N", help="worker threads (output is unaffected)", **kw)
    parser.add_argument("--seed", type=int, metavar="N", help="overrides the config 'seed' key", **kw)


def build_parser():
    parser = argparse.ArgumentParser(prog="nvdiamond", description="NV/P1 magnetic-resonance modelling tools")
    _global_options(parser, suppress=False)
    parser.set_defaults(config=None, out=None, threads=1, seed=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="transition lines over the field sweep")
    p.add_argument("--system", choices=("NV", "NV_C13", "P1"), default="NV")
    p.add_argument("--unidentified-ghz", type=float, metavar="F_S",
                   help="append the empirical F_S - F/3 line of the axis nearest the field")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("map", help="synthetic ODMR map from a line file")
    p.add_argument("--lines", required=True, metavar="PATH")
    p.add_argument("--format", choices=("csv", "pgm"), default="csv")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("fit-orientation", help="fit the field orientation to resonance points")
    p.add_argument("--points", required=True, metavar="PATH")
    p.set_defaults(func=cmd_fit_orientation)

    p = sub.add_parser("steady-state", help="steady-state polarizations of the rate equations")
    p.add_argument("--sweep", choices=("T1O_inv", "B"), default="T1O_inv")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("cavity", help="cavity reflection model, fit or polarization extraction")
    p.add_argument("mode", choices=("fit", "model", "extract"))
    p.add_argument("--data", metavar="PATH", help="input CSV for fit and extract")
    p.set_defaults(func=cmd_cavity)

    for p in sub.choices.values():
        _global_options(p, suppress=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.out is None:
            raise config.ConfigError("--out PATH is required")
        if args.threads < 1:
            raise config.ConfigError("--threads must be at least 1")
        cfg = config.load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        _validate(cfg)
        args.func(cfg, args)
    except (config.ConfigError, InputError) as exc:
        print(f"nvdiamond: error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, cavity.NotInvertibleError, spectra.AmbiguousAssignmentError,
            EigenConvergenceError, dynamics.SteadyStateError, FloatingPointError, ValueError) as exc:
        print(f"nvdiamond: numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
