"""NV-, NV- + 13C and P1 spin Hamiltonians.

All Hamiltonians are returned divided by hbar, i.e. in rad/s. Field
vectors are in tesla and may carry leading batch dimensions: a field array
of shape ``(..., 3)`` yields matrices of shape ``(..., n, n)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .spin_algebra import axis_to_z_rotation, rotation_about, spin_operators

TWO_PI = 2.0 * np.pi

S1 = np.array(spin_operators(1))
S_HALF = np.array(spin_operators(0.5))
I3 = np.eye(3)
I2 = np.eye(2)


@dataclass(frozen=True)
class NvParams:
    D: float = TWO_PI * 2.88e9
    E: float = TWO_PI * 10e6
    gamma_e: float = TWO_PI * 28.03e9
    strain_azimuth: float = 0.0  # degrees, orientation of the E term in the defect frame

    def __post_init__(self):
        if not (self.D > 0 and self.E >= 0 and self.gamma_e > 0):
            raise ValueError("NvParams requires D > 0, E >= 0, gamma_e > 0")


def _unit(v):
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"expected a unit vector, got {v!r}")
    return v / norm


# nearest-neighbour carbon of the vacancy, tetrahedral angle from the NV axis
_DEFAULT_NC = (np.sqrt(8.0) / 3.0, 0.0, -1.0 / 3.0)


@dataclass(frozen=True)
class C13Params:
    A_par: float = TWO_PI * 199.7e6
    A_perp: float = TWO_PI * 120.3e6
    n_C: tuple = _DEFAULT_NC

    def __post_init__(self):
        object.__setattr__(self, "n_C", tuple(_unit(self.n_C)))


@dataclass(frozen=True)
class P1Params:
    gamma_e: float = TWO_PI * 28.03e9
    gamma_n: float = TWO_PI * 3.0766e6
    Q: float = -TWO_PI * 3.97e6
    A_par: float = TWO_PI * 114e6
    A_perp: float = TWO_PI * 81.3e6
    n_P: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "n_P", tuple(_unit(self.n_P)))


@dataclass(frozen=True)
class FieldConfig:
    """Field magnitude ``B`` (tesla) and orientation angles in degrees."""

    B: float = 0.0
    theta_MA: float = 0.0
    phi_MA: float = 0.0

    @property
    def n_MA(self):
        return field_direction(self.theta_MA, self.phi_MA)

    @property
    def vector(self):
        return self.B * self.n_MA


def field_direction(theta_deg, phi_deg):
    th, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


_CUBIC_AXES = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3.0)


def defect_axes(frame="nv"):
    """The four <111> defect axes as rows of a (4, 3) array.

    ``frame="nv"`` expresses them in a frame whose z axis is the first NV
    axis, with the other three at azimuths 0, 120 and 240 degrees and polar
    cosine -1/3. ``frame="cubic"`` uses the crystal cubic axes.
    """
    if frame == "cubic":
        return _CUBIC_AXES.copy()
    if frame != "nv":
        raise ValueError(f"unknown frame {frame!r}")
    sin_a = np.sqrt(8.0) / 3.0
    axes = [(0.0, 0.0, 1.0)]
    for beta in np.radians([0.0, 120.0, 240.0]):
        axes.append((sin_a * np.cos(beta), sin_a * np.sin(beta), -1.0 / 3.0))
    return np.array(axes)


def field_in_defect_frame(cfg, axis):
    """Field vector of ``cfg`` rotated so that ``axis`` becomes z."""
    return axis_to_z_rotation(axis) @ cfg.vector


def _dot_spin(vec, ops):
    """``vec . ops`` for vec of shape (..., 3) and ops of shape (3, n, n)."""
    return np.einsum("...i,ijk->...jk", np.asarray(vec, dtype=float), ops)


def _tensor_coupling(tensor, s_ops, i_ops):
    """Sum_ij T_ij S_i (x) I_j."""
    out = 0
    for a in range(3):
        for b in range(3):
            if tensor[a, b] != 0.0:
                out = out + tensor[a, b] * np.kron(s_ops[a], i_ops[b])
    return out


def axial_tensor(par, perp, n):
    """``R^-1 diag(perp, perp, par) R`` with ``R n = z``."""
    r = axis_to_z_rotation(n)
    return r.T @ np.diag([perp, perp, par]) @ r


def nv_hamiltonian(p, b_defect):
    """NV- ground-state triplet Hamiltonian, ``D Sz^2 - gamma_e B.S + E-term``."""
    sx, sy, sz = S1
    splus = sx + 1j * sy
    phase = np.exp(-2j * np.radians(p.strain_azimuth))
    strain = 0.5 * p.E * (phase * splus @ splus + np.conj(phase) * splus.conj().T @ splus.conj().T)
    static = p.D * sz @ sz + strain
    return static - p.gamma_e * _dot_spin(b_defect, S1)


def nv_c13_hamiltonian(p, c, b_defect):
    """NV- coupled to one 13C nuclear spin; basis is spin-1 (x) spin-1/2."""
    h_nv = nv_hamiltonian(p, b_defect)
    h = np.einsum("...ij,kl->...ikjl", h_nv, I2).reshape(h_nv.shape[:-2] + (6, 6))
    return h + _tensor_coupling(axial_tensor(c.A_par, c.A_perp, c.n_C), S1, S_HALF)


def p1_hamiltonian(p, b_defect):
    """P1 centre: electron spin 1/2 (x) 14N spin 1.

    Zeeman terms use the full field vector. The quadrupole term is
    ``Q (n_P . I)^2``, which is ``Q Iz^2`` when ``n_P`` is z.
    """
    e_ops = np.array([np.kron(s, I3) for s in S_HALF])
    n_ops = np.array([np.kron(I2, i) for i in S1])
    n_p = np.asarray(p.n_P)
    i_axis = np.einsum("i,ijk->jk", n_p, n_ops)
    static = p.Q * i_axis @ i_axis + _tensor_coupling(axial_tensor(p.A_par, p.A_perp, n_p), S_HALF, S1)
    return static + p.gamma_e * _dot_spin(b_defect, e_ops) + p.gamma_n * _dot_spin(b_defect, n_ops)


def electron_drive(system):
    """Transverse drive operator Sx of the electronic spin for ``system``."""
    if system == "NV":
        return S1[0]
    if system == "NV_C13":
        return np.kron(S1[0], I2)
    if system == "P1":
        return np.kron(S_HALF[0], I3)
    raise ValueError(f"unknown system {system!r}")


@dataclass(frozen=True)
class SystemParams:
    """Bundle of the parameter sets used by the sweep and fitting code."""

    nv: NvParams = field(default_factory=NvParams)
    c13: C13Params = field(default_factory=C13Params)
    p1: P1Params = field(default_factory=P1Params)


def hamiltonian(system, params, b_defect):
    if system == "NV":
        return nv_hamiltonian(params.nv, b_defect)
    if system == "NV_C13":
        return nv_c13_hamiltonian(params.nv, params.c13, b_defect)
    if system == "P1":
        return p1_hamiltonian(params.p1, b_defect)
    raise ValueError(f"unknown system {system!r}")


__all__ = [
    "NvParams", "C13Params", "P1Params", "FieldConfig", "SystemParams",
    "defect_axes", "field_direction", "field_in_defect_frame", "axial_tensor",
    "nv_hamiltonian", "nv_c13_hamiltonian", "p1_hamiltonian", "hamiltonian",
    "electron_drive", "rotation_about",
]
