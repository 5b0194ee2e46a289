"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]`` / ``[FAIL]`` line with the measured
quantity and records it for the end-of-run summary. Run directly with
``python3 tests/test_acceptance.py`` for the summary alone.
"""

import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from nvdiamond.cavity import CavityParams, SpinCouplingParams, extract_polarization, fit_s11_curve, s11, vartheta
from nvdiamond.dynamics import (
    RateParams,
    integrate_rate_equations,
    oisp_rate,
    steady_state,
    susceptibility,
    sweep_optical_rate,
    thermal_polarization,
)
from nvdiamond.fitting import fit_orientation, synthetic_points, write_points_csv
from nvdiamond.hamiltonians import FieldConfig, NvParams, SystemParams, defect_axes, hamiltonian
from nvdiamond.spectra import (
    FAMILIES,
    SweepGrid,
    gslac_field,
    lines_over_sweep,
    near_parallel_axis,
    track_axis,
    unidentified_line,
)
from nvdiamond.spin_algebra import axis_to_z_rotation, eigh

TWO_PI = 2 * np.pi
RESULTS = {}


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_criterion_01_zero_field_splitting():
    lines = {ln.family: ln for ln in lines_over_sweep("NV", (0.0, 0.0), [0.0, 1e-6], axes=[0])}
    lo, hi = lines["NV_0_to_minus1"].f[0], lines["NV_0_to_plus1"].f[0]
    err = max(abs(lo / 2.870e9 - 1), abs(hi / 2.890e9 - 1))
    report(1, "zero-field NV transitions", err <= 1e-6,
           f"{lo / 1e9:.9f} / {hi / 1e9:.9f} GHz, max rel err {err:.1e} (tol 1e-6)")


def test_criterion_02_gslac():
    p = SystemParams()
    b = gslac_field(p.nv, [0, 0, 1], (0.0, 0.0))
    br = track_axis("NV", (0.0, 0.0), [0, 0, 1], SweepGrid(0.0, 0.15, 1501), p)
    # the +1 and -1 branches anticross with gap 2E; branch order at low field is (0, -1, +1)
    gap = np.min(np.abs(br.values[:, 2] - br.values[:, 1])) / TWO_PI
    ok = abs(b - 0.102747) <= 1e-5 and abs(gap - 20e6) <= 0.1e6
    report(2, "GSLAC location and 2E anticrossing gap", ok,
           f"B = {b * 1e3:.4f} mT (102.747 +/- 0.01), gap = {gap / 1e6:.4f} MHz (20 +/- 0.1)")


def test_criterion_03_plus_minus_slope():
    p = replace(SystemParams(), nv=NvParams(E=0.0))
    grid = SweepGrid(0.01, 0.09, 81)
    pm = next(ln for ln in lines_over_sweep("NV", (0.0, 0.0), grid, params=p, axes=[0])
              if ln.family == "NV_plus1_to_minus1")
    slope = np.polyfit(pm.B, pm.f, 1)[0]
    err = abs(slope / 56.06e9 - 1)
    report(3, "NV +1 -> -1 slope", err <= 1e-6, f"{slope / 1e9:.6f} GHz/T, rel err {err:.1e} (tol 1e-6)")


def test_criterion_04_oracle_equivalence():
    rng = np.random.default_rng(2024)
    p = SystemParams()
    worst_f, worst_res = 0.0, 0.0
    for _ in range(50):
        theta = np.degrees(np.arccos(rng.uniform(-1, 1)))
        phi = rng.uniform(0, 360)
        b_max = rng.uniform(0.005, 0.15)
        axis = defect_axes()[rng.integers(4)]
        fields = np.linspace(0.0, b_max, 300)
        direction = axis_to_z_rotation(axis) @ FieldConfig(1.0, theta, phi).n_MA
        for system in ("NV", "P1", "NV_C13"):
            br = track_axis(system, (theta, phi), axis, fields, p)
            h = hamiltonian(system, p, fields[:, None] * direction)
            ref = np.linalg.eigvalsh(h)
            scale = np.abs(ref).max(axis=1)
            # map each tracked branch to the oracle level with the same value
            order = np.argsort(br.values, axis=1, kind="stable")
            ref_by_branch = np.empty_like(ref)
            np.put_along_axis(ref_by_branch, order, ref, axis=1)
            for _, a, c in FAMILIES[system]:
                f = np.abs(br.values[:, a] - br.values[:, c])
                f_ref = np.abs(ref_by_branch[:, a] - ref_by_branch[:, c])
                worst_f = max(worst_f, np.max(np.abs(f - f_ref) / scale))
            w, v = eigh(h)
            res = np.linalg.norm(h @ v - v * w[:, None, :], axis=(1, 2)) / np.linalg.norm(h, axis=(1, 2))
            worst_res = max(worst_res, res.max())
    ok = worst_f <= 1e-9 and worst_res <= 1e-10
    report(4, "tracked vs re-diagonalized (NV, P1, NV+13C; 50 draws)", ok,
           f"max rel freq diff {worst_f:.1e} (tol 1e-9), max residual {worst_res:.1e} (tol 1e-10)")


def test_criterion_05_thermal_polarization():
    pz = thermal_polarization(TWO_PI * 1.464e9, 3.6)
    err = abs(pz / -9.7e-3 - 1)
    report(5, "thermal polarization at 1.464 GHz, 3.6 K", err <= 0.01,
           f"P_zT = {pz:.4e}, rel err {err:.2%} (tol 1%)")


def test_criterion_06_n_s0():
    _, n0 = susceptibility(1.0, 1e5, 1.0)
    n0_cm3 = n0 * 1e-6
    report(6, "n_S0 for T2^-1 = 1e5 1/s", 0.9e17 <= n0_cm3 <= 1.1e17,
           f"n_S0 = {n0_cm3:.3e} cm^-3 (window 0.9e17 .. 1.1e17)")


def test_criterion_07_oisp_rate():
    gamma = oisp_rate(10e-3 / 1e-6, 3e-17 * 1e-4, 532e-9)
    err = abs(gamma / 80.3 - 1)
    report(7, "optical pumping rate", err <= 0.01, f"gamma_O = {gamma:.3f} 1/s, rel err {err:.2%} (tol 1%)")


def test_criterion_08_rate_equations():
    rng = np.random.default_rng(8)
    n = 100
    draws = dict(
        T_I_P1_inv=rng.uniform(0, 50, n), T_T_P1_inv=rng.uniform(5, 50, n),
        T_I_NV_inv=rng.uniform(0, 50, n), T_1T_NV_inv=rng.uniform(5, 50, n),
        T_O_NV_inv=rng.uniform(0, 200, n), omega_P1=TWO_PI * 1.464e9 * rng.uniform(0.5, 2.0, n),
        P_zO_NV=rng.uniform(-1, 1, n), T_d_P1_inv=rng.uniform(0, 20, n),
    )
    ode = integrate_rate_equations(RateParams(**draws))
    worst = 0.0
    for k in range(n):
        fp = steady_state(RateParams(**{key: float(v[k]) for key, v in draws.items()}))
        worst = max(worst, abs(fp.P_z_P1 - ode.P_z_P1[k]), abs(fp.P_z_NV - ode.P_z_NV[k]))

    rows = sweep_optical_rate(RateParams(), np.linspace(0.0, 500.0, 101))
    nv = rows[:, 1]
    slopes = -np.diff(nv)
    monotone = bool(np.all(slopes > 0))
    saturating = bool(np.all(np.diff(slopes) < 0) and slopes[-1] < 0.05 * slopes[0])

    dec = RateParams(T_I_P1_inv=0.0, T_I_NV_inv=0.0, omega_P1=TWO_PI * 1.1e9)
    s = steady_state(dec)
    thermal_exact = (s.P_z_P1 == dec.thermal_targets[0]) and (s.P_z_NV == dec.thermal_targets[1])

    ok = worst <= 1e-9 and monotone and saturating and thermal_exact
    report(8, "rate equations", ok,
           f"fixed point vs RK4 max diff {worst:.1e} over {n} sets (tol 1e-9); "
           f"monotone={monotone}, saturating={saturating} (P_z,NV {nv[0]:.4f} -> {nv[-1]:.4f}); "
           f"decoupled limit exact={thermal_exact}")


def test_criterion_09_cavity():
    c = CavityParams()
    on_res = s11(c.omega_0, c)
    w = TWO_PI * np.linspace(1.4e9, 1.53e9, 200001)
    max_mag = np.max(np.abs(s11(w, c)))
    rng = np.random.default_rng(9)
    worst_inv = 0.0
    for _ in range(1000):
        sp = SpinCouplingParams(rng.uniform(0.01, 1), rng.uniform(-1e6, 1e6), rng.uniform(1e-7, 1e-4),
                                rng.uniform(0.01, 100), rng.choice([-1, 1]) * rng.uniform(1e-3, 1),
                                rng.uniform(-1, 1))
        back = extract_polarization(vartheta(sp), sp.kappa, sp.Delta, sp.T2, sp.rate_ratio, sp.P_zST)
        worst_inv = max(worst_inv, abs(back - sp.P_zSO))
    ws = TWO_PI * np.linspace(1.464e9 - 10e6, 1.464e9 + 10e6, 401)
    fit = fit_s11_curve(ws, s11(ws, c))
    fit_err = max(abs(fit.params.omega_0 / c.omega_0 - 1), abs(fit.params.gamma_1 / c.gamma_1 - 1),
                  abs(fit.params.gamma_2 / c.gamma_2 - 1))
    ok = abs(on_res - (-0.2994)) <= 1e-3 and max_mag <= 1.0 and worst_inv <= 1e-12 and fit_err <= 1e-3
    report(9, "cavity model, inversion and fit", ok,
           f"S11(w0) = {on_res.real:.4f} (tol 1e-3), max|S11| = {max_mag:.6f}, "
           f"inversion err {worst_inv:.1e} (tol 1e-12), fit rel err {fit_err:.1e} (tol 1e-3)")


def _angle_error(res, truth):
    return abs(res.theta_MA - truth[0]), abs(res.phi_MA - truth[1])


def test_criterion_10_orientation_fit():
    fields = np.linspace(0.0, 0.15, 41)
    noiseless = []
    for truth in ((-4.0, 95.0), (-12.3, 95.0)):
        res = fit_orientation(synthetic_points(truth, fields), initial=(0.0, 90.0))
        noiseless.append(max(_angle_error(res, truth)))
    clean = synthetic_points((-4.0, 95.0), fields)
    noisy_err, rms = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        pts = [replace(pt, f=pt.f + rng.normal(0.0, 1e6)) for pt in clean]
        res = fit_orientation(pts, initial=(0.0, 90.0))
        noisy_err.append(max(_angle_error(res, (-4.0, 95.0))))
        rms.append(res.rms_residual)
    ok = max(noiseless) <= 0.05 and max(noisy_err) <= 0.5
    report(10, "orientation fit round trips", ok,
           f"noiseless max err {max(noiseless):.1e} deg (tol 0.05); 1 MHz noise max err "
           f"{max(noisy_err):.3f} deg over 20 seeds (tol 0.5), median rms {np.median(rms) / 1e6:.2f} MHz")


def test_criterion_11_unidentified_line_symmetry():
    p = SystemParams()
    orient = (-4.0, 95.0)
    grid = SweepGrid()
    k = near_parallel_axis(orient)
    nv = next(ln for ln in lines_over_sweep("NV", orient, grid, params=p, axes=[k])
              if ln.family == "NV_0_to_minus1")
    b_g = gslac_field(p.nv, defect_axes()[k], orient)
    u = unidentified_line(2.169e9, nv)
    half = min(b_g - u.B[0], u.B[-1] - b_g)
    sel = np.abs(u.B - b_g) <= half
    mirrored = np.interp(2 * b_g - u.B[sel], u.B, u.f)
    dev = np.max(np.abs(mirrored - u.f[sel]))
    step = grid.fields[1] - grid.fields[0]
    resolution = np.max(np.abs(np.gradient(u.f, u.B))) * step
    report(11, "unidentified line symmetric about the GSLAC", dev <= resolution,
           f"GSLAC {b_g * 1e3:.3f} mT, max mirror deviation {dev / 1e6:.3f} MHz "
           f"(grid resolution {resolution / 1e6:.3f} MHz)")


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "nvdiamond.cli", *map(str, args)],
                          cwd=cwd, capture_output=True, text=True)


def test_criterion_12_cli_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("sweep.n_points = 300\nmap.f_points = 200\nmap.B_points = 60\ncavity.noise = 0.01\n")
    pts = tmp_path / "points.csv"
    write_points_csv(synthetic_points((-4.0, 95.0), np.linspace(0.0, 0.15, 21)), pts)
    vt = tmp_path / "vartheta.csv"
    vt.write_text("T1O_inv_hz,vartheta\n50,0.08\n120,0.12\n")
    lines = tmp_path / "lines.csv"
    refl = tmp_path / "refl.csv"
    assert _cli(["--config", cfg, "--out", lines, "spectrum"], tmp_path).returncode == 0
    assert _cli(["--config", cfg, "--out", refl, "cavity", "model"], tmp_path).returncode == 0

    commands = {
        "spectrum NV": ["spectrum"],
        "spectrum NV threads": ["--threads", "4", "spectrum"],
        "spectrum P1": ["spectrum", "--system", "P1"],
        "spectrum NV_C13": ["spectrum", "--system", "NV_C13"],
        "map csv": ["map", "--lines", lines],
        "map pgm": ["map", "--lines", lines, "--format", "pgm"],
        "fit-orientation": ["fit-orientation", "--points", pts],
        "steady-state T1O_inv": ["steady-state"],
        "steady-state B": ["steady-state", "--sweep", "B"],
        "cavity model": ["--seed", "7", "cavity", "model"],
        "cavity fit": ["cavity", "fit", "--data", refl],
        "cavity extract": ["cavity", "extract", "--data", vt],
    }
    failed = []
    outputs = {}
    for name, args in commands.items():
        blobs = []
        for run in range(2):
            out = tmp_path / f"{name.replace(' ', '_')}_{run}.out"
            res = _cli(["--config", cfg, "--out", out, *args], tmp_path)
            blobs.append(out.read_bytes() if res.returncode == 0 else None)
        outputs[name] = blobs[0]
        if blobs[0] is None or blobs[0] != blobs[1]:
            failed.append(name)
    if outputs["spectrum NV"] != outputs["spectrum NV threads"]:
        failed.append("threads changed output")
    report(12, "CLI determinism", not failed,
           f"{len(commands)} commands run twice, byte-identical" if not failed else f"differs: {failed}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
