"""Translation-invariant product-state mean field for the dissipative TFIM.

H = J sum s^x_i s^x_{i+1} + h sum s^z_i, L_i = sqrt(kappa) s^-_i, with the
Bloch equations

    dx/dt = -h y - kappa x / 2
    dy/dt =  h x - J x z - kappa y / 2
    dz/dt =  J x y - kappa (z - 1).

The ordered fixed point has x^2 = (4hJ - 4h^2 - kappa^2) / (2 J^2), which is
non-negative exactly inside the band returned by ``tfim_phase_boundary``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class MeanFieldState:
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        if self.sx ** 2 + self.sy ** 2 + self.sz ** 2 > 1 + 1e-9:
            raise ValidationError("Bloch vector longer than 1", sx=self.sx, sy=self.sy, sz=self.sz)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])


def _rhs(v: np.ndarray, J: float, h: float, kappa: float) -> np.ndarray:
    x, y, z = v
    return np.array([
        -h * y - 0.5 * kappa * x,
        h * x - J * x * z - 0.5 * kappa * y,
        J * x * y - kappa * (z - 1.0),
    ])


def meanfield_tfim(J: float, h: float, kappa: float, s0: MeanFieldState, t_final: float,
                   dt: float, stride: int = 1):
    """RK4 of the Bloch equations; returns ``(times, states)`` with states of shape (T, 3)."""
    if dt <= 0 or t_final < 0:
        raise ValidationError("need dt > 0 and t_final >= 0")
    v = s0.as_array()
    n_steps = int(round(t_final / dt))
    times, out = [0.0], [v.copy()]
    for step in range(1, n_steps + 1):
        k1 = _rhs(v, J, h, kappa)
        k2 = _rhs(v + 0.5 * dt * k1, J, h, kappa)
        k3 = _rhs(v + 0.5 * dt * k2, J, h, kappa)
        k4 = _rhs(v + dt * k3, J, h, kappa)
        v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            out.append(v.copy())
    return np.array(times), np.array(out)


def ordered_fixed_point_sx2(J: float, h: float, kappa: float) -> float:
    """(s^x)^2 at the symmetry-broken fixed point (negative means it does not exist)."""
    if J == 0:
        raise ValidationError("J must be non-zero")
    return (4 * h * J - 4 * h * h - kappa * kappa) / (2 * J * J)


def fixed_points(J: float, h: float, kappa: float) -> list[MeanFieldState]:
    """Paramagnet (0, 0, 1) plus the ordered pair when it exists."""
    pts = [MeanFieldState(0.0, 0.0, 1.0)]
    x2 = ordered_fixed_point_sx2(J, h, kappa)
    if x2 > 0 and h != 0:
        z = (4 * h * h + kappa * kappa) / (4 * h * J)
        for x in (math.sqrt(x2), -math.sqrt(x2)):
            y = -kappa * x / (2 * h)
            if x * x + y * y + z * z <= 1 + 1e-9:
                pts.append(MeanFieldState(x, y, z))
    return pts


def tfim_phase_boundary(J_tilde: float) -> tuple[float, float] | None:
    """Ordered band (h_low, h_high) in units of kappa, or None when J/kappa < 1."""
    if J_tilde < 1:
        return None
    r = math.sqrt(J_tilde * J_tilde - 1.0)
    return (0.5 * (J_tilde - r), 0.5 * (J_tilde + r))
