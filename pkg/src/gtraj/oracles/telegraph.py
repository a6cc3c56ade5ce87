"""Telegraph-noise stand-in for the Jordan-Wigner strings.

Each chain bond carries a classical sign xi_b in {-1, +1}. The averaged
string-free dynamics runs with every bond block of the generator and of the
jump kernels multiplied by xi_b (equivalently, conjugated by the cumulative
sign s_m = prod_{b<m} xi_b). In a step dt each xi_b flips with probability
dt * <sum_j L_j^dag L_j> / N, the mean local decay rate.
"""
from __future__ import annotations

import numpy as np

from ..errors import NumericalBlowup, StepError, ValidationError
from .cumulant import linear_parts, linear_rhs

MAX_FLIP_PROB = 0.5


def _mode_signs(xi: np.ndarray, n_modes: int) -> np.ndarray:
    s = np.concatenate([[1.0], np.cumprod(xi)])
    return np.repeat(s[:n_modes], 2)


def total_decay_rate(gamma: np.ndarray, l: np.ndarray) -> float:
    """sum_j <L_j^dag L_j> = sum_j l_j^dag G l_j (equal to i<H_eff - H_eff^dag> up to constants)."""
    return float(np.einsum("jk,kl,jl->", l.conj(), gamma, l).real)


def flip_probability(gamma: np.ndarray, l: np.ndarray, dt: float, n_sites: int) -> float:
    return dt * total_decay_rate(gamma, l) / n_sites


def telegraph_evolve(model, gamma0, t_final: float, dt: float, seed: int, stride: int = 1):
    """One noise realisation. Returns ``(times, gammas, n_flips)``."""
    if getattr(model, "boundary", False):
        raise ValidationError("telegraph noise needs a plain chain without boundary modes")
    lp = linear_parts(model)
    if lp.deph_rate.size:
        raise ValidationError("telegraph noise is defined for linear jumps only")
    g0 = np.asarray(getattr(gamma0, "gamma", gamma0), dtype=complex)
    n = model.n_sites
    if g0.shape != (2 * n, 2 * n):
        raise ValidationError("initial covariance does not match the model", shape=g0.shape)
    if dt <= 0 or t_final < 0:
        raise ValidationError("need dt > 0 and t_final >= 0")
    rng = np.random.default_rng(seed)
    xi = np.ones(max(n - 1, 0))
    s_sum, q_sum = lp.s.sum(axis=0), lp.q.sum(axis=0)
    kern = np.einsum("jk,jl->kl", lp.l.conj(), lp.l)

    def dressed():
        sg = _mode_signs(xi, n)
        d = np.outer(sg, sg)
        return d * lp.r, d * s_sum, d * q_sum, d * kern

    def f(a, r, s, q):
        return linear_rhs(a, lp, r=r, s=s, q=q)

    a = 0.5 * (g0.imag - g0.imag.T)
    eye = np.eye(2 * n)
    r, s, q, k = dressed()
    n_steps = int(round(t_final / dt))
    times, out, flips = [0.0], [a.copy()], 0
    for step in range(1, n_steps + 1):
        rate = float(np.sum(k * (eye + 1j * a)).real) / n
        n_sub = max(1, int(np.ceil(rate * dt / MAX_FLIP_PROB)))
        h = dt / n_sub
        for _ in range(n_sub):
            p = float(np.sum(k * (eye + 1j * a)).real) * h / n
            if not 0.0 <= p <= 1.0:
                if -1e-12 <= p < 0:
                    p = 0.0
                else:
                    raise StepError("telegraph flip probability outside [0, 1]", p=p, step=step)
            if xi.size and p > 0:
                hit = rng.random(xi.size) < p
                if hit.any():
                    xi[hit] *= -1
                    flips += int(hit.sum())
                    r, s, q, k = dressed()
            k1 = f(a, r, s, q)
            k2 = f(a + 0.5 * h * k1, r, s, q)
            k3 = f(a + 0.5 * h * k2, r, s, q)
            k4 = f(a + h * k3, r, s, q)
            a = a + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            a = 0.5 * (a - a.T)
        if not np.all(np.isfinite(a)):
            raise NumericalBlowup("telegraph evolution diverged", step=step)
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            out.append(a.copy())
    return np.array(times), np.array([eye + 1j * x for x in out]), flips
