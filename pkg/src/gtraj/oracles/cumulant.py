"""Second-cumulant (Gaussian mean-field) evolution of the trajectory-averaged covariance.

Write the averaged covariance as G = I + iA. For string-free linear jumps
l = a + ib the averaged dynamics is exactly linear,

    dA/dt = A R - R A + sum_j (2 Q_j - A S_j - S_j A),

with R = Re(4iH), Q_j = 2(a b^T - b a^T) and S_j = 2(a a^T + b b^T).
Strings add, per jump, the weighted term

    (eta_m eta_n - 1) [p G_mn + G_m conj(G_n) - G_n conj(G_m)],   G = l^* G,

which is what remains of the jump update once fluctuations of the covariance
around its mean are neglected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalBlowup, ValidationError


@dataclass
class LinearParts:
    r: np.ndarray
    s: np.ndarray          # (J, 2N, 2N)
    q: np.ndarray          # (J, 2N, 2N)
    l: np.ndarray          # (J, 2N) complex jump vectors
    eta: np.ndarray        # (J, 2N)
    deph_rate: np.ndarray  # (U,)
    deph_sign: np.ndarray  # (U, 2N)


def linear_parts(model) -> LinearParts:
    if getattr(model, "kind", "chain") == "honeycomb":
        raise ValidationError("cumulant and telegraph evolutions support chain models only")
    dim = 2 * model.n_modes
    r = (4j * np.asarray(model.hamiltonian)).real
    ls = np.array([j.coeffs for j in model.linear_jumps]).reshape(-1, dim)
    a, b = ls.real, ls.imag
    s = 2 * (a[:, :, None] * a[:, None, :] + b[:, :, None] * b[:, None, :])
    q = 2 * (a[:, :, None] * b[:, None, :] - b[:, :, None] * a[:, None, :])
    eta = np.array([j.eta_mask for j in model.linear_jumps]).reshape(-1, dim)
    rate = np.array([u.rate for u in model.unitary_jumps], dtype=float)
    sign = np.array([u.sign_flips for u in model.unitary_jumps]).reshape(-1, dim)
    return LinearParts(r, s, q, ls, eta, rate, sign)


def linear_rhs(a: np.ndarray, lp: LinearParts, r=None, s=None, q=None) -> np.ndarray:
    r = lp.r if r is None else r
    s = lp.s.sum(axis=0) if s is None else s
    q = lp.q.sum(axis=0) if q is None else q
    out = a @ r - r @ a + 2 * q - a @ s - s @ a
    for g, sg in zip(lp.deph_rate, lp.deph_sign):
        out += g * (np.outer(sg, sg) - 1.0) * a
    return out


def string_correction(a: np.ndarray, lp: LinearParts) -> np.ndarray:
    gamma = np.eye(a.shape[0]) + 1j * a
    out = np.zeros_like(a)
    for l, eta in zip(lp.l, lp.eta):
        w = np.outer(eta, eta) - 1.0
        if not np.any(w):
            continue
        g = l.conj() @ gamma
        p = (l.conj() @ gamma @ l).real
        o = np.outer(g, g.conj())
        out += w * (p * gamma + o - o.T).imag
    return out


def second_cumulant_evolve(model, gamma0, t_final: float, dt: float, stride: int = 1,
                           strings: bool = True):
    """RK4 integration of the averaged covariance; returns ``(times, gammas)``.

    With ``strings=False`` (or a string-free model) the flow is the exact
    linear equation for the averaged state.
    """
    g0 = np.asarray(getattr(gamma0, "gamma", gamma0), dtype=complex)
    if g0.shape != (2 * model.n_modes,) * 2:
        raise ValidationError("initial covariance does not match the model", shape=g0.shape)
    if dt <= 0 or t_final < 0:
        raise ValidationError("need dt > 0 and t_final >= 0")
    lp = linear_parts(model)
    s_sum, q_sum = lp.s.sum(axis=0), lp.q.sum(axis=0)

    def f(a):
        out = linear_rhs(a, lp, s=s_sum, q=q_sum)
        if strings:
            out = out + string_correction(a, lp)
        return out

    a = g0.imag.copy()
    a = 0.5 * (a - a.T)
    n_steps = int(round(t_final / dt))
    times, out = [0.0], [a.copy()]
    for step in range(1, n_steps + 1):
        k1 = f(a)
        k2 = f(a + 0.5 * dt * k1)
        k3 = f(a + 0.5 * dt * k2)
        k4 = f(a + dt * k3)
        a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        a = 0.5 * (a - a.T)
        if not np.all(np.isfinite(a)):
            raise NumericalBlowup("second-cumulant integration diverged", step=step)
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            out.append(a.copy())
    eye = np.eye(a.shape[0])
    return np.array(times), np.array([eye + 1j * x for x in out])
