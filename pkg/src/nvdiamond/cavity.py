"""Cavity reflection, spin-induced damping ratio and its inversion."""

import csv
from dataclasses import dataclass

import numpy as np

from .fitting import nelder_mead

TWO_PI = 2.0 * np.pi


class NotInvertibleError(ValueError):
    pass


@dataclass(frozen=True)
class CavityParams:
    omega_0: float = TWO_PI * 1.464e9
    gamma_1: float = TWO_PI * 1.15e6
    gamma_2: float = TWO_PI * 0.62e6

    def __post_init__(self):
        if not (self.omega_0 > 0 and self.gamma_1 > 0 and self.gamma_2 > 0):
            raise ValueError("cavity parameters must be positive")


@dataclass(frozen=True)
class SpinCouplingParams:
    kappa: float
    Delta: float
    T2: float
    rate_ratio: float
    P_zST: float
    P_zSO: float

    def __post_init__(self):
        if self.kappa < 0 or self.T2 <= 0 or self.rate_ratio < 0:
            raise ValueError("need kappa >= 0, T2 > 0, rate_ratio >= 0")
        if abs(self.P_zST) > 1 or abs(self.P_zSO) > 1 or self.P_zST == 0:
            raise ValueError("need 0 < |P_zST| <= 1 and |P_zSO| <= 1")


def s11(omega_p, c):
    """Reflection coefficient of a one-port resonator."""
    d = 1j * (np.asarray(omega_p) - c.omega_0)
    return (d - (c.gamma_2 - c.gamma_1)) / (d - (c.gamma_2 + c.gamma_1))


def quality_factors(c):
    """``omega_0 / (gamma_1 + gamma_2)`` and ``omega_0 / (2 (gamma_1 + gamma_2))``."""
    total = c.gamma_1 + c.gamma_2
    return c.omega_0 / total, c.omega_0 / (2.0 * total)


def vartheta(s):
    """Normalized spin-induced change of cavity damping."""
    lorentz = s.kappa / (1.0 + (s.Delta * s.T2) ** 2)
    return lorentz * (1.0 + s.rate_ratio * s.P_zSO / s.P_zST) / (1.0 + s.rate_ratio)


def extract_polarization(vartheta_measured, kappa, Delta, T2, rate_ratio, P_zST):
    """Optically pumped polarization ``P_zSO`` that reproduces ``vartheta_measured``."""
    rate_ratio = np.asarray(rate_ratio, dtype=float)
    if np.any(rate_ratio <= 0):
        raise NotInvertibleError("rate_ratio must be positive; damping carries no P_zSO information")
    if not kappa > 0:
        raise NotInvertibleError("kappa must be positive")
    scaled = np.asarray(vartheta_measured) * (1.0 + (Delta * T2) ** 2) * (1.0 + rate_ratio) / kappa
    return P_zST * (scaled - 1.0) / rate_ratio


@dataclass
class S11Fit:
    params: CavityParams
    rms: float
    magnitude_only: bool
    ambiguous: bool
    converged: bool


def _initial_guess(omega, mag, data, complex_data):
    i0 = int(np.argmin(mag))
    depth = 1.0 - mag**2
    above = omega[depth >= 0.5 * depth[i0]]
    width = above.max() - above.min() if above.size > 1 else np.min(np.diff(omega))
    total = max(width / 2.0, np.min(np.diff(omega)))
    ratio = float(np.real(data[i0])) if complex_data else -float(mag[i0])
    ratio = np.clip(ratio, -0.999, 0.999)
    return omega[i0], total, 0.5 * total * (1.0 - ratio), 0.5 * total * (1.0 + ratio)


def fit_s11_curve(omega, data, max_iter=4000):
    """Least-squares fit of ``(omega_0, gamma_1, gamma_2)`` to reflection data.

    ``data`` is complex S11 or real |S11|. Magnitude-only data cannot tell
    gamma_1 from gamma_2; the fit then assumes over-coupling
    (gamma_1 > gamma_2) and sets ``ambiguous``.
    """
    omega = np.asarray(omega, dtype=float)
    data = np.asarray(data)
    order = np.argsort(omega, kind="stable")
    omega, data = omega[order], data[order]
    complex_data = np.iscomplexobj(data)
    mag = np.abs(data)
    if omega.size < 5:
        raise ValueError("need at least 5 reflection points")
    w0, total, g1, g2 = _initial_guess(omega, mag, data, complex_data)
    if omega[-1] - omega[0] <= 4.0 * total:
        raise ValueError("frequency span too narrow: need more than 4 (gamma_1 + gamma_2)")

    def model(x):
        c = CavityParams(w0 + x[0] * total, abs(x[1]) * total, abs(x[2]) * total)
        return s11(omega, c)

    def fun(x):
        if x[1] == 0 or x[2] == 0:
            return np.inf
        m = model(x)
        r = m - data if complex_data else np.abs(m) - mag
        return float(np.mean(np.abs(r) ** 2))

    def converged(simplex, values):
        return np.max(np.abs(simplex[1:] - simplex[0])) < 1e-10

    x0 = [0.0, g1 / total, g2 / total]
    first = nelder_mead(fun, x0, 0.1, converged, max_iter)
    second = nelder_mead(fun, first.x, 0.01, converged, max_iter)
    best = second if second.fun <= first.fun else first
    gam = sorted([abs(best.x[1]), abs(best.x[2])], reverse=True) if not complex_data else [
        abs(best.x[1]), abs(best.x[2])]
    params = CavityParams(w0 + best.x[0] * total, gam[0] * total, gam[1] * total)
    return S11Fit(params, float(np.sqrt(best.fun)), not complex_data, not complex_data,
                  bool(first.converged and second.converged))


def read_reflection_csv(path):
    """Return ``(f_hz, data)``; data is complex for re/im files and real for abs files.

    Files written by :func:`write_reflection_csv` carry both; the complex
    columns are used.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, []))
        rows = [r for r in reader if r]
    try:
        arr = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric reflection data") from exc
    if header in (("f_hz", "re_s11", "im_s11"), ("f_hz", "re_s11", "im_s11", "abs_s11")):
        return arr[:, 0], arr[:, 1] + 1j * arr[:, 2]
    if header == ("f_hz", "abs_s11"):
        return arr[:, 0], arr[:, 1]
    raise ValueError(f"{path}: expected header f_hz,re_s11,im_s11 or f_hz,abs_s11")


def write_reflection_csv(f_hz, values, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("f_hz", "re_s11", "im_s11", "abs_s11"))
        for f, v in zip(f_hz, values):
            w.writerow((repr(float(f)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))))


def write_fit_report(fit, path):
    c = fit.params
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("f0_hz", "gamma1_hz", "gamma2_hz", "rms"))
        w.writerow(tuple(repr(float(x)) for x in (c.omega_0 / TWO_PI, c.gamma_1 / TWO_PI,
                                                  c.gamma_2 / TWO_PI, fit.rms)))
