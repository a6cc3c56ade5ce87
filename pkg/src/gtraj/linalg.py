"""Dense kernels: Pfaffians, RK4 stepping and covariance projection."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionError, NumericalBlowup, ValidationError

ANTISYM_TOL = 1e-12


def _check_antisymmetric(a: np.ndarray, tol: float) -> None:
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    dev = float(np.max(np.abs(a + np.swapaxes(a, -1, -2)))) if a.size else 0.0
    if dev > tol * scale:
        raise ValidationError("matrix is not antisymmetric", deviation=dev)


def pfaffian(a, tol: float = ANTISYM_TOL, check: bool = True):
    """Pfaffian of an antisymmetric matrix.

    Parlett-Reid reduction to tridiagonal form with partial pivoting,
    O(n^3). Returns a python complex for complex input, float otherwise.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("pfaffian needs a square matrix", shape=a.shape)
    n = a.shape[0]
    if n % 2:
        raise DimensionError("pfaffian of an odd-dimensional matrix", dim=n)
    if check:
        _check_antisymmetric(a, tol)
    if n == 0:
        return 1.0
    dtype = np.result_type(a.dtype, np.float64)
    return pfaffian_batch(a[None].astype(dtype), check=False)[0].item()


def pfaffian_batch(a: np.ndarray, check: bool = False) -> np.ndarray:
    """Pfaffians of a stack ``(B, n, n)`` of antisymmetric matrices.

    Each slice goes through the same arithmetic as a single call, so results
    do not depend on how a workload is batched.
    """
    a = np.array(a, dtype=np.result_type(a.dtype, np.float64), copy=True)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionError("expected a (B, n, n) stack", shape=a.shape)
    nb, n = a.shape[0], a.shape[1]
    if n % 2:
        raise DimensionError("pfaffian of an odd-dimensional matrix", dim=n)
    if check:
        _check_antisymmetric(a, ANTISYM_TOL)
    pf = np.ones(nb, dtype=a.dtype)
    if n == 0:
        return pf
    if n == 2:
        return a[:, 0, 1].copy()
    if n == 4:
        return (a[:, 0, 1] * a[:, 2, 3] - a[:, 0, 2] * a[:, 1, 3]
                + a[:, 0, 3] * a[:, 1, 2])
    rows = np.arange(nb)
    for k in range(0, n - 1, 2):
        kp = k + 1 + np.argmax(np.abs(a[:, k + 1:, k]), axis=1)
        swap = kp != k + 1
        if swap.any():
            idx, kps = rows[swap], kp[swap]
            tmp = a[idx, k + 1, :].copy()
            a[idx, k + 1, :] = a[idx, kps, :]
            a[idx, kps, :] = tmp
            tmp = a[idx, :, k + 1].copy()
            a[idx, :, k + 1] = a[idx, :, kps]
            a[idx, :, kps] = tmp
            pf[swap] *= -1
        piv = a[:, k, k + 1]
        pf *= piv
        if k + 2 < n:
            safe = np.where(piv == 0, 1, piv)
            tau = a[:, k, k + 2:] / safe[:, None]
            col = a[:, k + 2:, k + 1]
            a[:, k + 2:, k + 2:] += (tau[:, :, None] * col[:, None, :]
                                     - col[:, :, None] * tau[:, None, :])
    return pf


def rk4_matrix_step(g: np.ndarray, rhs: Callable[[np.ndarray], np.ndarray], dt: float,
                    step_index: int | None = None) -> np.ndarray:
    """One classical RK4 step of dG/dt = rhs(G)."""
    if not dt > 0:
        raise ValidationError("dt must be positive", dt=dt)
    k1 = rhs(g)
    k2 = rhs(g + (0.5 * dt) * k1)
    k3 = rhs(g + (0.5 * dt) * k2)
    k4 = rhs(g + dt * k3)
    out = g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup("non-finite value after RK4 step", step=step_index)
    return out


def project_covariance(gamma: np.ndarray) -> np.ndarray:
    """Return I + iA with A the exactly antisymmetrised real part of -i(G - I)."""
    gamma = np.asarray(gamma)
    n = gamma.shape[-1]
    if n % 2 or gamma.shape[-2] != n:
        raise DimensionError("covariance must be square with even dimension", shape=gamma.shape)
    a = antisym_part(gamma.imag)
    return np.eye(n) + 1j * a


def antisym_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - np.swapaxes(a, -1, -2))
