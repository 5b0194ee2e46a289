"""
Cavity reflection and polarization readout
==========================================

A one-port resonator is characterised from its reflection curve; the
spin-induced change in damping is then inverted to the optically pumped
polarization.
"""

import numpy as np

from nvdiamond.cavity import (
    CavityParams,
    SpinCouplingParams,
    extract_polarization,
    fit_s11_curve,
    quality_factors,
    s11,
    vartheta,
)

TWO_PI = 2 * np.pi
cavity = CavityParams()  # 1.464 GHz, gamma_1 = 1.15 MHz, gamma_2 = 0.62 MHz
print("S11 on resonance: %.4f" % s11(cavity.omega_0, cavity).real)
print("Q = w0/(g1+g2) = %.0f, w0/(2(g1+g2)) = %.0f" % quality_factors(cavity))

# a noisy complex reflection sweep, fitted back
omega = TWO_PI * np.linspace(1.454e9, 1.474e9, 401)
rng = np.random.default_rng(0)
data = s11(omega, cavity) + 0.01 * (rng.normal(size=omega.size) + 1j * rng.normal(size=omega.size))
fit = fit_s11_curve(omega, data)
print("fit: f0 = %.6f GHz, gamma_1 = %.3f MHz, gamma_2 = %.3f MHz" % (
    fit.params.omega_0 / TWO_PI / 1e9, fit.params.gamma_1 / TWO_PI / 1e6, fit.params.gamma_2 / TWO_PI / 1e6))

# damping ratio for an NV ensemble pumped at 120 1/s against 25 1/s thermal relaxation
spins = SpinCouplingParams(kappa=0.1, Delta=0.0, T2=1e-5, rate_ratio=120 / 25, P_zST=-9.7e-3, P_zSO=-1.6 * 9.7e-3)
theta = vartheta(spins)
print(f"\nvartheta = {theta:.4f}")
back = extract_polarization(theta, spins.kappa, spins.Delta, spins.T2, spins.rate_ratio, spins.P_zST)
print(f"extracted P_zSO = {back:.4e} (input {spins.P_zSO:.4e})")
