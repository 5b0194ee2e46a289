"""Coupled P1 / NV polarization rate equations and related rate formulas.

Each spin species relaxes toward a target polarization that is the
rate-weighted average of the contributions acting on it:

* P1: driving-induced depolarization (target 0), dipolar coupling to NV
  and thermal relaxation;
* NV: dipolar coupling to P1, thermal relaxation and optical pumping.

The dipolar targets depend on the other species' polarization, so the
steady state is a fixed point, found here by damped iteration. A fixed-step
RK4 integrator of the same equations serves as an independent check.

All scalar formulas accept numpy arrays and broadcast.
"""

import csv
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import constants as sc

TWO_PI = 2.0 * np.pi
GAMMA_E = TWO_PI * 28.03e9  # rad/s/T


def thermal_frequency(temperature):
    """``omega_T = 2 k_B T / hbar`` in rad/s."""
    return 2.0 * sc.k * np.asarray(temperature) / sc.hbar


def thermal_polarization(omega, temperature):
    """Two-level thermal polarization ``-tanh(omega / omega_T)``."""
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0):
        raise ValueError("temperature must be positive")
    return -np.tanh(np.asarray(omega) / thermal_frequency(temperature))


def driving_depolarization_rate(omega_1, omega_p, omega_P1, T2_P1):
    """Depolarization rate of driven P1 spins, Lorentzian in the detuning."""
    T2_P1 = np.asarray(T2_P1, dtype=float)
    if np.any(T2_P1 <= 0):
        raise ValueError("T2_P1 must be positive")
    detuning = np.asarray(omega_p) - np.asarray(omega_P1)
    return np.asarray(omega_1) ** 2 * T2_P1 / (1.0 + detuning**2 * T2_P1**2)


class DipolarTargets(NamedTuple):
    P_zI_P1: np.ndarray
    P_zI_NV: np.ndarray
    saturated: bool


def _transfer(p_other, ratio):
    # |P| = 1 maps to sign(P); arctanh diverges there
    p_other = np.asarray(p_other, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(np.abs(p_other) >= 1.0, np.sign(p_other), np.tanh(ratio * np.arctanh(p_other)))


def dipolar_polarization_targets(state, omega_P1, omega_NV):
    """Polarizations each species is pulled toward by dipolar coupling.

    ``P_zI_P1 = tanh((omega_P1 / omega_NV) artanh P_z_NV)`` and the mirror
    expression for NV. Inputs at ``|P| = 1`` give ``sign(P)`` and set the
    ``saturated`` flag.
    """
    p_p1 = np.asarray(state.P_z_P1, dtype=float)
    p_nv = np.asarray(state.P_z_NV, dtype=float)
    ratio = np.asarray(omega_P1) / np.asarray(omega_NV)
    saturated = bool(np.any(np.abs(p_p1) >= 1.0) or np.any(np.abs(p_nv) >= 1.0))
    return DipolarTargets(_transfer(p_nv, ratio), _transfer(p_p1, 1.0 / ratio), saturated)


@dataclass(frozen=True)
class PolarizationState:
    P_z_P1: float
    P_z_NV: float


@dataclass(frozen=True)
class RateParams:
    """Rates in 1/s and frequencies in rad/s.

    Defaults are the values used for the low-field OISP curves at 3.6 K with
    NV and P1 resonances coinciding at 1.464 GHz. ``T_d_P1_inv = None``
    derives the driving-induced rate from ``omega_1``, ``omega_p`` and
    ``T2_P1``.
    """

    T_d_P1_inv: float | None = 0.0
    T_I_P1_inv: float = 40.0
    T_T_P1_inv: float = 8.0
    T_I_NV_inv: float = 5.0
    T_1T_NV_inv: float = 25.0
    T_O_NV_inv: float = 0.0
    omega_P1: float = TWO_PI * 1.464e9
    omega_NV: float = TWO_PI * 1.464e9
    omega_T: float = float(thermal_frequency(3.6))
    omega_1: float = 0.0
    omega_p: float = 0.0
    T2_P1: float = 1e-6
    P_zO_NV: float = -1.0

    def __post_init__(self):
        rates = [self.T_I_P1_inv, self.T_T_P1_inv, self.T_I_NV_inv, self.T_1T_NV_inv, self.T_O_NV_inv]
        if self.T_d_P1_inv is not None:
            rates.append(self.T_d_P1_inv)
        if any(np.any(np.asarray(r) < 0) for r in rates):
            raise ValueError("rates must be non-negative")
        if np.any(np.asarray(self.omega_T) <= 0):
            raise ValueError("omega_T must be positive")
        if np.any(np.abs(np.asarray(self.P_zO_NV)) > 1):
            raise ValueError("|P_zO_NV| must not exceed 1")

    @property
    def depolarization_rate(self):
        if self.T_d_P1_inv is not None:
            return self.T_d_P1_inv
        return driving_depolarization_rate(self.omega_1, self.omega_p, self.omega_P1, self.T2_P1)

    @property
    def total_P1_rate(self):
        return self.depolarization_rate + self.T_I_P1_inv + self.T_T_P1_inv

    @property
    def total_NV_rate(self):
        return self.T_I_NV_inv + self.T_1T_NV_inv + self.T_O_NV_inv

    @property
    def thermal_targets(self):
        return -np.tanh(self.omega_P1 / self.omega_T), -np.tanh(self.omega_NV / self.omega_T)


class SteadyStateError(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


def target_polarizations(state, p):
    """Rate-weighted targets ``(P_z0_P1, P_z0_NV)`` for the current ``state``."""
    dip = dipolar_polarization_targets(state, p.omega_P1, p.omega_NV)
    therm_p1, therm_nv = p.thermal_targets
    p1 = (p.T_I_P1_inv * dip.P_zI_P1 + p.T_T_P1_inv * therm_p1) / p.total_P1_rate
    nv = (p.T_I_NV_inv * dip.P_zI_NV + p.T_1T_NV_inv * therm_nv + p.T_O_NV_inv * p.P_zO_NV) / p.total_NV_rate
    return p1, nv


def _check_rates(p):
    if np.any(np.asarray(p.total_P1_rate) <= 0) or np.any(np.asarray(p.total_NV_rate) <= 0):
        raise ValueError("total P1 and NV rates must be positive")


def steady_state(p, initial=None, damping=0.5, tol=1e-12, max_iter=100_000):
    """Fixed point of the target maps by damped iteration."""
    _check_rates(p)
    if initial is None:
        therm = p.thermal_targets
        initial = PolarizationState(therm[0], therm[1])
    p1 = np.asarray(initial.P_z_P1, dtype=float)
    nv = np.asarray(initial.P_z_NV, dtype=float)
    for _ in range(int(max_iter)):
        t1, t2 = target_polarizations(PolarizationState(p1, nv), p)
        n1 = (1.0 - damping) * p1 + damping * t1
        n2 = (1.0 - damping) * nv + damping * t2
        delta = max(np.max(np.abs(n1 - p1)), np.max(np.abs(n2 - nv)))
        p1, nv = n1, n2
        if delta < tol:
            return PolarizationState(_scalar(p1), _scalar(nv))
    raise SteadyStateError(
        f"fixed-point iteration did not converge in {max_iter} iterations",
        PolarizationState(_scalar(p1), _scalar(nv)),
    )


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_equation_rhs(state, p):
    t1, t2 = target_polarizations(state, p)
    return (
        -(np.asarray(state.P_z_P1) - t1) * p.total_P1_rate,
        -(np.asarray(state.P_z_NV) - t2) * p.total_NV_rate,
    )


def integrate_rate_equations(p, t_end=None, initial=None, steps_per_time=50):
    """Classical RK4 integration of the two rate equations.

    The default horizon is 40 times the slowest leak time. Leak rates are
    the non-dipolar parts of each total rate, which bound the slowest mode
    of the coupled system. The step is the fastest relaxation time divided
    by ``steps_per_time``. Parameters may be arrays; every element gets its
    own step size over a common number of steps.
    """
    _check_rates(p)
    r1 = np.asarray(p.total_P1_rate, dtype=float)
    r2 = np.asarray(p.total_NV_rate, dtype=float)
    fast = np.maximum(r1, r2)
    if t_end is None:
        leak = np.minimum(r1 - np.asarray(p.T_I_P1_inv), r2 - np.asarray(p.T_I_NV_inv))
        slow = np.where(leak > 0, leak, np.minimum(r1, r2) * 1e-3)
        t_end = 40.0 / slow
    t_end = np.asarray(t_end, dtype=float)
    n_steps = int(np.ceil(np.max(t_end * fast * steps_per_time)))
    dt = t_end / n_steps
    if initial is None:
        initial = PolarizationState(np.zeros_like(r1), np.zeros_like(r2))
    y1 = np.array(initial.P_z_P1, dtype=float) + np.zeros_like(r1)
    y2 = np.array(initial.P_z_NV, dtype=float) + np.zeros_like(r2)

    # rate_equation_rhs written out with constants hoisted out of the loop
    ratio = np.asarray(p.omega_P1) / np.asarray(p.omega_NV)
    therm_p1, therm_nv = p.thermal_targets
    c_i1, c_i2 = np.asarray(p.T_I_P1_inv), np.asarray(p.T_I_NV_inv)
    c_1 = p.T_T_P1_inv * therm_p1
    c_2 = p.T_1T_NV_inv * therm_nv + p.T_O_NV_inv * np.asarray(p.P_zO_NV)

    def f(a, b):
        with np.errstate(divide="ignore"):
            ta = np.arctanh(np.clip(a, -1.0, 1.0))
            tb = np.arctanh(np.clip(b, -1.0, 1.0))
        return (
            c_i1 * np.tanh(ratio * tb) + c_1 - r1 * a,
            c_i2 * np.tanh(ta / ratio) + c_2 - r2 * b,
        )

    for _ in range(n_steps):
        k1 = f(y1, y2)
        k2 = f(y1 + 0.5 * dt * k1[0], y2 + 0.5 * dt * k1[1])
        k3 = f(y1 + 0.5 * dt * k2[0], y2 + 0.5 * dt * k2[1])
        k4 = f(y1 + dt * k3[0], y2 + dt * k3[1])
        y1 = y1 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y2 = y2 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return PolarizationState(_scalar(y1), _scalar(y2))


def oisp_target(B, gslac_B):
    """NV optical-pumping target: thermal sign below the GSLAC, inverted above."""
    return np.where(np.asarray(B) > gslac_B, 1.0, -1.0)


def sweep_optical_rate(p, T_O_values):
    """Steady states for each optical pumping rate in ``T_O_values``."""
    out = []
    previous = None
    for t_o in np.asarray(T_O_values, dtype=float):
        previous = steady_state(replace(p, T_O_NV_inv=float(t_o)), initial=previous)
        out.append((float(t_o), previous.P_z_NV, previous.P_z_P1))
    return np.array(out)


def oisp_rate(I_L, sigma, lambda_L, C_O=1.0):
    """Optical pumping rate ``C_O I_L sigma lambda_L / (h c)`` in 1/s (SI inputs)."""
    for v in (I_L, sigma, lambda_L, C_O):
        if np.any(np.asarray(v) < 0):
            raise ValueError("oisp_rate inputs must be non-negative")
    return np.asarray(C_O) * np.asarray(I_L) * sigma * lambda_L / (sc.h * sc.c)


def susceptibility(n_S, T2_inv, P_z0, gamma_e=GAMMA_E):
    """Return ``(chi, n_S0)`` for a spin-1/2 ensemble of density ``n_S`` (1/m^3).

    ``n_S0 = 4 T2_inv / (hbar gamma_e^2 mu_0)`` with ``T2_inv`` taken as a
    plain rate in 1/s, and ``chi = i (n_S / n_S0) P_z0``.
    """
    if np.any(np.asarray(T2_inv) <= 0):
        raise ValueError("T2_inv must be positive")
    n_s0 = 4.0 * np.asarray(T2_inv) / (sc.hbar * gamma_e**2 * sc.mu_0)
    return 1j * (np.asarray(n_S) / n_s0) * np.asarray(P_z0), n_s0


def write_sweep_csv(rows, path, first_column="T1O_inv_hz"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((first_column, "Pz_NV", "Pz_P1"))
        for row in rows:
            w.writerow(tuple(repr(float(x)) for x in row))

