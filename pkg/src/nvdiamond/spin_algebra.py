"""Spin operators, axis rotations and a batched Hermitian eigensolver.

Everything here works on small dense matrices (dimension 2 to 6). Arrays
follow numpy broadcasting: a stack of matrices has shape ``(..., n, n)``.
"""

import numpy as np

HERMITIAN_RTOL = 1e-12
JACOBI_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 60


class EigenConvergenceError(RuntimeError):
    pass


def spin_operators(s):
    """Return ``(Sx, Sy, Sz)`` for spin ``s`` in the ``|m = s..-s>`` basis.

    Only ``s = 1/2`` and ``s = 1`` are supported. Units are hbar-free.
    """
    if s not in (0.5, 1, 1.0):
        raise ValueError(f"unsupported spin quantum number {s!r}; use 1/2 or 1")
    m = np.arange(s, -s - 1, -1.0)
    dim = len(m)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        splus[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def kron(a, b):
    """Kronecker product of two square matrices."""
    return np.kron(np.asarray(a), np.asarray(b))


def rotation_about(axis, angle):
    """Rodrigues rotation matrix for a unit ``axis`` and ``angle`` in radians."""
    k = np.asarray(axis, dtype=float)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


def axis_to_z_rotation(n):
    """Minimal rotation ``R`` with ``R @ n == z``.

    The rotation turns about ``n x z``. ``n = z`` gives the identity and
    ``n = -z`` a half turn about x.
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError(f"axis must be a unit 3-vector, got {n!r}")
    n = n / np.linalg.norm(n)
    c = n[2]
    axis = np.array([n[1], -n[0], 0.0])  # n x z
    s = np.linalg.norm(axis)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])
    return rotation_about(axis / s, np.arctan2(s, c))


def is_hermitian(h, rtol=HERMITIAN_RTOL):
    h = np.asarray(h)
    scale = np.max(np.abs(h)) if h.size else 0.0
    return bool(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))), initial=0.0) <= rtol * scale)


def eigh(h):
    """Eigendecomposition of Hermitian matrices by cyclic complex Jacobi rotations.

    Parameters
    ----------
    h : array_like, shape (..., n, n)
        Hermitian matrix or stack of matrices.

    Returns
    -------
    values : ndarray, shape (..., n)
        Real eigenvalues, ascending.
    vectors : ndarray, shape (..., n, n)
        Orthonormal eigenvectors as columns.

    The sweep stops once the off-diagonal Frobenius norm of every matrix in
    the stack is below ``1e-14`` times its Frobenius norm.
    """
    h = np.asarray(h)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    scale = np.max(np.abs(h), axis=(-1, -2), keepdims=True) if h.size else 0.0
    asym = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))), axis=(-1, -2), keepdims=True)
    if np.any(asym > HERMITIAN_RTOL * scale):
        raise ValueError("matrix is not Hermitian")

    batch_shape = h.shape[:-2]
    n = h.shape[-1]
    a = np.array(h, dtype=complex).reshape((-1, n, n))
    # symmetrize so roundoff-level asymmetry does not leak into the rotations
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    tol = JACOBI_RTOL * norm
    offmask = ~np.eye(n, dtype=bool)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        if np.all(off <= tol):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotate(a, v, p, q)
    else:
        raise EigenConvergenceError(f"Jacobi sweeps did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    values = np.real(np.diagonal(a, axis1=1, axis2=2))
    order = np.argsort(values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return values.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def _jacobi_rotate(a, v, p, q):
    b = a[:, p, q]
    absb = np.abs(b)
    active = absb > 0
    if not np.any(active):
        return
    app = a[:, p, p].real
    aqq = a[:, q, q].real
    phase = np.where(active, b / np.where(active, absb, 1.0), 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        theta = (aqq - app) / (2.0 * absb)
        t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    t = np.where(active & np.isfinite(theta), t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # U = diag(1, conj(phase)) @ [[c, s], [-s, c]]
    u = np.empty((a.shape[0], 2, 2), dtype=complex)
    u[:, 0, 0] = c
    u[:, 0, 1] = s
    u[:, 1, 0] = -s * np.conj(phase)
    u[:, 1, 1] = c * np.conj(phase)
    idx = [p, q]
    a[:, :, idx] = a[:, :, idx] @ u
    a[:, idx, :] = np.conj(np.swapaxes(u, 1, 2)) @ a[:, idx, :]
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = a[:, p, p].real
    a[:, q, q] = a[:, q, q].real
    v[:, :, idx] = v[:, :, idx] @ u
