"""Heisenberg-picture Pfaffian evaluation of trajectory-conditional expectations.

A trajectory with jump record (t_1, L_1), ..., (t_m, L_m) leaves the
unnormalised state

    U_m P_m L'_m U_{m-1} ... P_1 L'_1 U_0 |phi>,    U_k = exp(-i H_eff tau_k).

Every parity string P_e is pushed to the right onto |phi>, conjugating the
generators and linear parts it passes. The linear parts are then moved to
the left through the remaining no-jump propagators, so that the state becomes
Lambda_m ... Lambda_1 |phi_t> with |phi_t> Gaussian and each Lambda_e linear
in the Majoranas. Expectations follow from a single Pfaffian by Wick's theorem.

This is a verification tool: cost grows quickly with the number of jumps.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from ..errors import ConditioningError, DimensionError, ValidationError
from ..gaussian import (CovarianceState, LinearJump, UnitaryJump, apply_linear_jump,
                        apply_unitary_jump, evolve_no_jump, expectation_majorana_string)
from ..jw import Monomial, normal_order, parse_pauli, pauli_to_majorana
from ..linalg import pfaffian

MAX_MODES = 10
MAX_JUMPS = 20


def _as_terms(observable) -> list[Monomial]:
    if isinstance(observable, str):
        return [pauli_to_majorana(parse_pauli(observable))]
    if isinstance(observable, tuple) and len(observable) == 2 and not isinstance(observable[0], tuple):
        return [normal_order(*observable)]
    return [normal_order(c, idx) for c, idx in observable]


def _resolve_event(model, ev):
    t, j = ev
    if isinstance(j, (int, np.integer)):
        if not 0 <= j < len(model.linear_jumps):
            raise ValidationError("jump index out of range", index=int(j))
        j = model.linear_jumps[j]
    if not isinstance(j, (LinearJump, UnitaryJump)):
        raise ValidationError("jump must be an index, LinearJump or UnitaryJump")
    return float(t), j


def _check_sequence(model, jump_sequence, t_final):
    if getattr(model, "kind", "chain") == "honeycomb":
        raise ValidationError("the Pfaffian evaluator handles chain models only")
    if model.n_modes > MAX_MODES:
        raise DimensionError(f"Pfaffian evaluator limited to {MAX_MODES} modes", n_modes=model.n_modes)
    events = [_resolve_event(model, ev) for ev in jump_sequence]
    if len(events) > MAX_JUMPS:
        raise DimensionError(f"Pfaffian evaluator limited to {MAX_JUMPS} jumps", n_jumps=len(events))
    times = [t for t, _ in events]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValidationError("jump times must be non-decreasing")
    if times and (times[0] < 0 or times[-1] > t_final):
        raise ValidationError("jump times must lie in [0, t_final]")
    return events


def _signs(j) -> np.ndarray:
    return j.eta_mask if isinstance(j, LinearJump) else j.sign_flips


def _no_jump_state(a: np.ndarray, x: np.ndarray, tau: float) -> np.ndarray:
    """Normalised Gaussian state after exp(-i H tau), X = 4iH, via the linear lift."""
    if tau == 0:
        return a
    r, q = x.real, x.imag
    n = a.shape[0]
    k = np.block([[-r, -q], [q, -r]])
    p = expm(k * tau)
    top = p[:n, :n] + p[:n, n:] @ a
    bot = p[n:, :n] + p[n:, n:] @ a
    out = np.linalg.solve(top.T, bot.T).T
    return 0.5 * (out - out.T)


def otoc_expectation(model, init: CovarianceState, jump_sequence: Sequence, observable,
                     t_final: float) -> complex:
    """Trajectory-conditional <O>(t_final) given an explicit jump record.

    ``jump_sequence`` holds ``(time, jump)`` pairs where ``jump`` is an index into
    ``model.linear_jumps`` or a jump object. ``observable`` is a Pauli string on
    modes (``"x0 x1"``), a Majorana monomial ``(coef, indices)`` or a list of them.
    """
    events = _check_sequence(model, jump_sequence, t_final)
    terms = _as_terms(observable)
    dim = 2 * model.n_modes
    x = model.generator.x
    m = len(events)

    # after[k]: product of the string signs of events k, k+1, ..., m-1
    after = np.ones((m + 1, dim))
    for k in range(m - 1, -1, -1):
        after[k] = after[k + 1] * _signs(events[k][1])

    # segment k runs from event k-1 to event k; it and the linear part of
    # event k are conjugated by the strings of events >= k
    bounds = [0.0] + [t for t, _ in events] + [float(t_final)]
    taus = np.diff(bounds)
    gens = [x * np.outer(after[k], after[k]) for k in range(m + 1)]
    props = [expm(gens[k] * taus[k]) for k in range(m + 1)]

    a = init.a * np.outer(after[0], after[0])
    for k in range(m + 1):
        a = _no_jump_state(a, gens[k], taus[k])
    gamma = np.eye(dim) + 1j * a

    rows = []
    for e, (_, j) in enumerate(events):
        if isinstance(j, UnitaryJump):
            continue
        v = j.coeffs * after[e]
        for k in range(e + 1, m + 1):
            v = v @ props[k]
        rows.append(v)

    left = [r.conj() for r in rows]
    right = rows[::-1]
    den = _wick(left + right, gamma)
    scale = np.prod([np.vdot(r, r).real for r in rows]) if rows else 1.0
    if not np.isfinite(den) or abs(den) <= 1e-13 * scale:
        raise ConditioningError("post-selected trajectory has vanishing weight", norm=abs(den))
    total = 0j
    for coef, idx in terms:
        if len(idx) % 2:
            continue
        mid = [np.eye(dim)[i] for i in idx]
        total += coef * _wick(left + mid + right, gamma)
    return complex(total / den)


def _wick(rows: list[np.ndarray], gamma: np.ndarray) -> complex:
    if not rows:
        return 1.0 + 0j
    r = np.array(rows)
    g = r @ gamma @ r.T
    mat = np.triu(g, 1)
    mat = mat - mat.T
    return complex(pfaffian(mat, check=False))


def schrodinger_expectation(model, init: CovarianceState, jump_sequence: Sequence, observable,
                            t_final: float, dt: float = 1e-3) -> complex:
    """Same quantity through the covariance pipeline: evolve, jump, evolve, measure."""
    events = _check_sequence(model, jump_sequence, t_final)
    terms = _as_terms(observable)
    state = init.copy()
    t = 0.0
    for t_next, j in events + [(float(t_final), None)]:
        span = t_next - t
        n = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        for _ in range(n):
            state = evolve_no_jump(state, model.generator, span / n)
        t = t_next
        if j is None:
            break
        state = apply_linear_jump(state, j) if isinstance(j, LinearJump) else apply_unitary_jump(state, j)
    total = 0j
    for coef, idx in terms:
        if len(idx) % 2:
            continue
        total += coef * expectation_majorana_string(state, idx)
    return complex(total)


def random_jump_record(model, n_jumps: int, t_final: float, rng: np.random.Generator,
                       include_unitary: bool = True) -> list:
    """Sorted random jump times with uniformly chosen jump channels."""
    channels: list = list(range(len(model.linear_jumps)))
    if include_unitary:
        channels += list(model.unitary_jumps)
    if not channels:
        raise ValidationError("model has no jump channels")
    times = np.sort(rng.uniform(0.0, t_final, size=n_jumps))
    picks = rng.integers(len(channels), size=n_jumps)
    return [(float(t), channels[int(p)]) for t, p in zip(times, picks)]


def pairwise_observables(n_modes: int) -> Iterable[Monomial]:
    """All Majorana bilinears g_k g_l (k < l), handy for full covariance checks."""
    for k in range(2 * n_modes):
        for l in range(k + 1, 2 * n_modes):
            yield (1.0, (k, l))
