"""Flat ``key = value`` run configuration.

Keys carry a dotted section prefix (``nv.D_ghz = 2.88``); ``#`` starts a
comment. Frequencies are ordinary frequencies with the unit in the key
name. Unknown keys and malformed values are rejected with the offending
line number.
"""

from dataclasses import replace

import numpy as np
from scipy import constants as sc

from .cavity import CavityParams
from .dynamics import RateParams
from .hamiltonians import C13Params, FieldConfig, NvParams, P1Params, SystemParams

TWO_PI = 2.0 * np.pi

DEFAULTS = {
    "seed": 0,
    "constants.hbar": sc.hbar,
    "constants.k_B": sc.k,
    "constants.h": sc.h,
    "constants.c": sc.c,
    "constants.mu_0": sc.mu_0,
    "nv.D_ghz": 2.88,
    "nv.E_mhz": 10.0,
    "nv.gamma_e_ghz_per_t": 28.03,
    "nv.strain_azimuth_deg": 0.0,
    "c13.A_par_mhz": 199.7,
    "c13.A_perp_mhz": 120.3,
    "p1.gamma_n_mhz_per_t": 3.0766,
    "p1.Q_mhz": -3.97,
    "p1.A_par_mhz": 114.0,
    "p1.A_perp_mhz": 81.3,
    "orientation.theta_deg": -4.0,
    "orientation.phi_deg": 95.0,
    "orientation.frame": "nv",
    "sweep.B_start_t": 0.0,
    "sweep.B_stop_t": 0.15,
    "sweep.n_points": 1000,
    "map.f_start_ghz": 0.0,
    "map.f_stop_ghz": 8.0,
    "map.f_points": 800,
    "map.B_points": 300,
    "map.linewidth_mhz": 10.0,
    "fit.theta0_deg": 0.0,
    "fit.phi0_deg": 90.0,
    "fit.max_iter": 2000,
    "fit.free_DE": False,
    "fit.include_p1": False,
    "rates.temperature_k": 3.6,
    "rates.f_P1_ghz": 1.464,
    "rates.f_NV_ghz": 1.464,
    "rates.T_d_P1_inv_hz": 0.0,
    "rates.T_I_P1_inv_hz": 40.0,
    "rates.T_T_P1_inv_hz": 8.0,
    "rates.T_I_NV_inv_hz": 5.0,
    "rates.T_1T_NV_inv_hz": 25.0,
    "rates.T1O_inv_hz": 120.0,
    "rates.T1O_start_hz": 0.0,
    "rates.T1O_stop_hz": 500.0,
    "rates.T1O_points": 51,
    "rates.P_zO_NV": -1.0,
    "cavity.f0_ghz": 1.464,
    "cavity.gamma1_mhz": 1.15,
    "cavity.gamma2_mhz": 0.62,
    "cavity.span_mhz": 20.0,
    "cavity.n_points": 401,
    "cavity.noise": 0.0,
    # kappa, Delta and T2 are sample-specific; these are placeholders to calibrate
    "cavity.kappa": 0.1,
    "cavity.Delta_mhz": 0.0,
    "cavity.T2_us": 10.0,
    "cavity.T1T_inv_hz": 25.0,
    "cavity.P_zST": -9.7e-3,
}

NON_NEGATIVE_PREFIXES = ("rates.T",)
POSITIVE_KEYS = {
    "nv.D_ghz", "nv.gamma_e_ghz_per_t", "rates.temperature_k", "map.linewidth_mhz",
    "cavity.f0_ghz", "cavity.gamma1_mhz", "cavity.gamma2_mhz", "cavity.T2_us",
    "cavity.span_mhz", "constants.hbar", "constants.k_B", "constants.h", "constants.c",
    "constants.mu_0",
}


class ConfigError(ValueError):
    pass


def _parse_value(raw, default, key, lineno):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        kind = type(default).__name__
        raise ConfigError(f"line {lineno}: {key}: expected {kind}, got {raw!r}") from None


def parse_config(text, source="<config>"):
    """Parse config text into a dict with every key filled from DEFAULTS."""
    values = dict(DEFAULTS)
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        try:
            value = _parse_value(raw, DEFAULTS[key], key, lineno)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
        if key.startswith(NON_NEGATIVE_PREFIXES) and value < 0:
            raise ConfigError(f"{source}: line {lineno}: {key} must be non-negative")
        if key in POSITIVE_KEYS and not value > 0:
            raise ConfigError(f"{source}: line {lineno}: {key} must be positive")
        values[key] = value
    if values["orientation.frame"] not in ("nv", "cubic"):
        raise ConfigError(f"{source}: orientation.frame must be 'nv' or 'cubic'")
    if abs(values["rates.P_zO_NV"]) > 1:
        raise ConfigError(f"{source}: rates.P_zO_NV must lie in [-1, 1]")
    return values


def load_config(path=None):
    if path is None:
        return dict(DEFAULTS)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def system_params(cfg):
    nv = NvParams(
        D=TWO_PI * cfg["nv.D_ghz"] * 1e9,
        E=TWO_PI * cfg["nv.E_mhz"] * 1e6,
        gamma_e=TWO_PI * cfg["nv.gamma_e_ghz_per_t"] * 1e9,
        strain_azimuth=cfg["nv.strain_azimuth_deg"],
    )
    c13 = C13Params(A_par=TWO_PI * cfg["c13.A_par_mhz"] * 1e6, A_perp=TWO_PI * cfg["c13.A_perp_mhz"] * 1e6)
    p1 = P1Params(
        gamma_e=nv.gamma_e,
        gamma_n=TWO_PI * cfg["p1.gamma_n_mhz_per_t"] * 1e6,
        Q=TWO_PI * cfg["p1.Q_mhz"] * 1e6,
        A_par=TWO_PI * cfg["p1.A_par_mhz"] * 1e6,
        A_perp=TWO_PI * cfg["p1.A_perp_mhz"] * 1e6,
    )
    return SystemParams(nv, c13, p1)


def orientation(cfg):
    return FieldConfig(0.0, cfg["orientation.theta_deg"], cfg["orientation.phi_deg"])


def rate_params(cfg, T_O_NV_inv=None):
    omega_t = 2.0 * cfg["constants.k_B"] * cfg["rates.temperature_k"] / cfg["constants.hbar"]
    p = RateParams(
        T_d_P1_inv=cfg["rates.T_d_P1_inv_hz"],
        T_I_P1_inv=cfg["rates.T_I_P1_inv_hz"],
        T_T_P1_inv=cfg["rates.T_T_P1_inv_hz"],
        T_I_NV_inv=cfg["rates.T_I_NV_inv_hz"],
        T_1T_NV_inv=cfg["rates.T_1T_NV_inv_hz"],
        T_O_NV_inv=cfg["rates.T1O_inv_hz"],
        omega_P1=TWO_PI * cfg["rates.f_P1_ghz"] * 1e9,
        omega_NV=TWO_PI * cfg["rates.f_NV_ghz"] * 1e9,
        omega_T=omega_t,
        P_zO_NV=cfg["rates.P_zO_NV"],
    )
    if T_O_NV_inv is not None:
        p = replace(p, T_O_NV_inv=T_O_NV_inv)
    return p


def cavity_params(cfg):
    return CavityParams(
        omega_0=TWO_PI * cfg["cavity.f0_ghz"] * 1e9,
        gamma_1=TWO_PI * cfg["cavity.gamma1_mhz"] * 1e6,
        gamma_2=TWO_PI * cfg["cavity.gamma2_mhz"] * 1e6,
    )


def format_config(values):
    """Render a config dict back to text (round-trips through parse_config)."""
    out = []
    section = None
    for key in DEFAULTS:
        head = key.split(".", 1)[0] if "." in key else None
        if head != section and head is not None:
            out.append(f"\n# {head}")
            section = head
        v = values[key]
        out.append(f"{key} = {str(v).lower() if isinstance(v, bool) else v!r}".replace("'", ""))
    return "\n".join(out).lstrip() + "\n"
