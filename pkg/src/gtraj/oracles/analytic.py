"""Closed-form free-fermion references.

Bessel functions come from scipy.special; the exponentially scaled variants
(i0e, ive) keep e^{-2 kappa t} I_d(2 kappa t) finite for large arguments.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from ..errors import ValidationError


def _t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    return t


def free_fermion_afm(t, J: float, kappa: float):
    """Staggered density order from a Neel start: e^{-kappa t} J_0(4 J t)."""
    t = _t(t)
    return np.exp(-kappa * t) * special.j0(4 * J * t)


def free_fermion_subradiant_density(t, kappa: float):
    """Density under correlated loss from a filled chain: e^{-2 kappa t} I_0(2 kappa t)."""
    t = _t(t)
    return special.i0e(2 * kappa * t)


def free_fermion_dd_corr(d: int, t, kappa: float):
    """Connected density-density correlation at separation d: -(e^{-2 kappa t} I_d(2 kappa t))^2."""
    t = _t(t)
    return -special.ive(abs(int(d)), 2 * kappa * t) ** 2


def disorder_ansatz_afm(t, J: float, kappa: float, alpha: float, n_quad: int = 4096):
    """Quasi-static gauge-disorder ansatz

        A(t) = e^{-kappa t} (1/2pi) int dq exp(-4iJt cos q - 16 alpha J^2 t^2 sin^2 q),

    normalised so that A(0) = 1. The periodic trapezoid rule converges
    spectrally; ``n_quad`` must resolve the 4Jt oscillation.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive", alpha=alpha)
    t = _t(t)
    q = 2 * np.pi * np.arange(n_quad) / n_quad
    tt = t.reshape(-1, 1)
    phase = np.cos(4 * J * tt * np.cos(q))
    damp = np.exp(-16 * alpha * J * J * tt * tt * np.sin(q) ** 2)
    val = np.mean(phase * damp, axis=1)
    return (np.exp(-kappa * t.ravel()) * val).reshape(t.shape)


def disorder_ansatz_asymptote(t, J: float, kappa: float, alpha: float):
    """Large-t stationary-phase form of ``disorder_ansatz_afm`` (both q = 0 and q = pi)."""
    t = _t(t)
    jt = J * t
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.exp(-kappa * t) / (4 * np.abs(jt) * np.sqrt(np.pi * alpha))
        return lead * (np.cos(4 * jt) + np.sin(4 * jt) / (16 * jt * alpha))


def subradiant_asymptote(t, kappa: float):
    """(4 pi kappa t)^{-1/2}."""
    return 1.0 / np.sqrt(4 * np.pi * kappa * _t(t))
