"""Quantum-jump trajectory sampling and ensemble averaging.

Trajectories are integrated in fixed blocks as stacks of real antisymmetric
matrices A (the covariance is I + iA). Every per-trajectory quantity is
computed slice by slice, so a trajectory's arithmetic is the same whether it
runs alone, in a block or in another worker process.

No-jump stretches of shared-generator models are propagated with the exact
linear-fractional solution of the covariance flow, A(h) = (P21 + P22 A)
(P11 + P12 A)^{-1} with P = expm(h [[-R, -Q], [Q, -R]]) for X = R + iQ.
Substeps containing a jump, and honeycomb models whose generator depends on
per-trajectory gauge bits, use classical RK4.

Jump sampling: within each (sub)step of length h the rates p_i are evaluated
at the start, at most one jump is drawn with probability p_i h each, and a
drawn jump is placed uniformly inside the substep (the leftover of the same
uniform gives its position). Steps are subdivided so that sum_i p_i h never
exceeds ``max_step_jump_prob``.
"""
from __future__ import annotations

import logging
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (DarkStateJump, GtrajError, NumericalBlowup, PurityAbort, StateCorruption,
                     ValidationError)
from scipy.linalg import expm

from .gaussian import CovarianceState, purity_defect_real, rk4_real
from .honeycomb import honeycomb_generator
from .observables import resolve_observables

log = logging.getLogger("gtraj")

PURITY_ABORT = 1e-4
DARK_DRAW = 1e-12
SUBBLOCK = 16
RK4_REACH = 0.05   # max ||X|| h per RK4 piece; local error ~ RK4_REACH^5 / 120


@dataclass
class ScheduleConfig:
    t_final: float
    dt: float
    max_step_jump_prob: float = 0.1
    observable_stride: int = 1
    integrator: str = "exact"

    def __post_init__(self):
        v = []
        if self.integrator not in ("exact", "rk4"):
            v.append("integrator must be 'exact' or 'rk4'")
        if not (np.isfinite(self.dt) and self.dt > 0):
            v.append("dt must be > 0")
        if not (0 < self.max_step_jump_prob <= 0.2):
            v.append("max_step_jump_prob must lie in (0, 0.2]")
        if int(self.observable_stride) != self.observable_stride or self.observable_stride < 1:
            v.append("observable_stride must be a positive integer")
        if not (np.isfinite(self.t_final) and self.t_final >= 0):
            v.append("t_final must be >= 0")
        elif not v and abs(round(self.t_final / self.dt) * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            v.append("t_final must be an integer multiple of dt")
        if v:
            raise ValidationError(violations=v)
        self.observable_stride = int(self.observable_stride)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def record_steps(self) -> np.ndarray:
        steps = list(range(0, self.n_steps + 1, self.observable_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps)

    def times(self) -> np.ndarray:
        return self.record_steps() * self.dt


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    observables: dict
    jump_log: list
    gauge_record: np.ndarray
    seed: int = 0
    index: int = 0


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: dict
    stderr: dict
    n_traj: int
    manifest: dict = field(default_factory=dict)
    final_covariance: np.ndarray | None = None


def block_size(model) -> int:
    dim = 2 * model.n_modes
    if dim <= 16:
        return 256
    if dim <= 64:
        return 64
    if dim <= 128:
        return 32
    return 16


def trajectory_seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    """Counter-mode seed: hash of (master_seed, trajectory index)."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


class _Streams:
    CHUNK = 128

    def __init__(self, master_seed: int, indices: np.ndarray):
        self.gens = [np.random.Generator(np.random.PCG64(trajectory_seed_sequence(master_seed, k)))
                     for k in indices]
        self.buf = np.stack([g.random(self.CHUNK) for g in self.gens])
        self.pos = np.zeros(len(indices), dtype=np.int64)

    def draw(self, rows: np.ndarray) -> np.ndarray:
        for r in rows[self.pos[rows] >= self.CHUNK]:
            self.buf[r] = self.gens[r].random(self.CHUNK)
            self.pos[r] = 0
        u = self.buf[rows, self.pos[rows]]
        self.pos[rows] += 1
        return u


class _Kernel:
    """Per-block integrator state: generator stacks, jump data and gauge bits."""

    def __init__(self, model, nb: int, integrator: str = "exact"):
        self.model = model
        self.exact = integrator == "exact" and model.kind != "honeycomb"
        self._prop_cache: dict = {}
        self.nb = nb
        self.honey = model.kind == "honeycomb"
        n = 2 * model.n_modes
        self.n = n
        if self.honey:
            hd = model.honeycomb
            self.hd = hd
            self.gauge = np.repeat(hd.gauge_bits[None].astype(np.int8), nb, 0)
            self.r, self.q = honeycomb_generator(hd, self.gauge)
            self.jbond = hd.active
            self.sup = hd.bonds[hd.active].astype(np.int64)
            l1, l2 = hd.l1[hd.active], hd.l2[hd.active]
            self.ll = np.abs(l1) ** 2 + np.abs(l2) ** 2
            self.eta = np.ones((len(hd.active), n))
            self.bond_of_jump = list(hd.active)
        else:
            x = model.generator.x
            self.gauge = np.ones((nb, model.n_bonds), dtype=np.int8)
            self.r = np.repeat(np.ascontiguousarray(x.real)[None], nb, 0)
            self.q = np.repeat(np.ascontiguousarray(x.imag)[None], nb, 0)
            jumps = model.linear_jumps
            s_max = max((len(j.support) for j in jumps), default=1)
            nj = len(jumps)
            self.sup = np.zeros((nj, s_max), dtype=np.int64)
            self.a0 = np.zeros((nj, s_max))
            self.b0 = np.zeros((nj, s_max))
            for k, j in enumerate(jumps):
                s = j.support
                self.sup[k, :len(s)] = s
                self.a0[k, :len(s)] = j.coeffs[s].real
                self.b0[k, :len(s)] = j.coeffs[s].imag
            self.ll = np.sum(self.a0 ** 2 + self.b0 ** 2, axis=1)
            self.eta = np.array([j.eta_mask for j in jumps]).reshape(nj, n)
            self.bond_of_jump = [model.jump_bond(k) for k in range(nj)]
        self.n_lin = len(self.sup)
        uj = model.unitary_jumps
        self.u_rate = np.array([u.rate for u in uj], dtype=float)
        self.u_sign = np.array([u.sign_flips for u in uj]).reshape(len(uj), n)
        self.labels = ([j.label for j in model.linear_jumps] + [u.label for u in uj])
        self.n_jumps = self.n_lin + len(uj)
        # max(row-sum, column-sum) of |R| + |Q| bounds ||X|| and ignores gauge signs
        mag = np.abs(self.r[0]) + np.abs(self.q[0])
        self.xnorm = float(max(mag.sum(0).max(initial=0.0), mag.sum(1).max(initial=0.0)))

    def rk4(self, a_st: np.ndarray, rows: np.ndarray, h: np.ndarray) -> np.ndarray:
        """RK4 over per-slice spans ``h``, each cut into pieces with ||X|| h <= RK4_REACH.

        The piece count depends only on the slice's own span.
        """
        h = np.asarray(h, dtype=float)
        n_pc = np.maximum(1, np.ceil(h * self.xnorm / RK4_REACH)).astype(np.int64)
        hp = h / n_pc
        out = a_st
        for k in range(int(n_pc.max(initial=0))):
            act = np.flatnonzero(n_pc > k)
            if act.size == len(rows):
                r, q = self.gen(rows, False)
                out = rk4_real(out, r, q, hp)
            else:
                r, q = self.gen(rows[act], False)
                out = out.copy() if out is a_st else out
                out[act] = rk4_real(out[act], r, q, hp[act])
        return out

    def _propagator(self, h: float):
        hit = self._prop_cache.get(h)
        if hit is None:
            if len(self._prop_cache) > 32:
                self._prop_cache.pop(next(iter(self._prop_cache)))
            n = self.n
            r, q = self.r[0], self.q[0]
            p = expm(h * np.block([[-r, -q], [q, -r]]))
            hit = tuple(np.ascontiguousarray(b)[None] for b in (p[:n, :n], p[:n, n:], p[n:, :n], p[n:, n:]))
            self._prop_cache[h] = hit
        return hit

    def flow(self, a_st: np.ndarray, rows: np.ndarray, h: np.ndarray, full: bool) -> np.ndarray:
        """No-jump evolution of each slice by its own time step."""
        if not self.exact:
            return self.rk4(a_st, rows, h)
        out = np.empty_like(a_st)
        hs = np.unique(h)
        for hv in hs:
            sel = slice(None) if len(hs) == 1 else np.flatnonzero(h == hv)
            x = a_st[sel]
            p11, p12, p21, p22 = self._propagator(float(hv))
            u = p21 + p22 @ x
            v = p11 + p12 @ x
            y = np.swapaxes(np.linalg.solve(np.swapaxes(v, -1, -2), np.swapaxes(u, -1, -2)), -1, -2)
            out[sel] = 0.5 * (y - np.swapaxes(y, -1, -2))
        if not np.all(np.isfinite(out)):
            raise NumericalBlowup("non-finite covariance after propagation")
        return out

    # coefficient rows (real and imaginary parts on the support)
    def coeffs(self, rows: np.ndarray):
        if not self.honey:
            return self.a0[None], self.b0[None]
        hd = self.hd
        s = self.gauge[np.ix_(rows, self.jbond)].astype(float)
        l1, l2 = hd.l1[self.jbond], hd.l2[self.jbond]
        one = np.ones_like(s)
        a = np.stack([one * l1.real, s * l2.imag], axis=-1)
        b = np.stack([one * l1.imag, -s * l2.real], axis=-1)
        return a, b

    def gen(self, rows: np.ndarray, all_rows: bool):
        if all_rows:
            return self.r, self.q
        if self.honey:
            return self.r[rows], self.q[rows]
        m = len(rows)
        return self.r[:m], self.q[:m]

    def rates(self, a_st: np.ndarray, rows: np.ndarray) -> np.ndarray:
        m = a_st.shape[0]
        out = np.empty((m, self.n_jumps))
        if self.n_lin:
            ca, cb = self.coeffs(rows)
            s = self.sup.shape[1]
            g = a_st[:, self.sup[:, :, None], self.sup[:, None, :]]
            cross = (ca[..., :, None] * g * cb[..., None, :]).reshape(m, self.n_lin, s * s).sum(-1)
            p = self.ll - 2.0 * cross
            if np.any(p < -1e-6 * self.ll):
                raise StateCorruption("negative jump rate", rate=float(p.min()))
            out[:, :self.n_lin] = np.maximum(p, 0.0)
        out[:, self.n_lin:] = self.u_rate
        return out

    def apply(self, a_st: np.ndarray, rows: np.ndarray, j: int) -> np.ndarray:
        """Apply jump j to the stack a_st (trajectories ``rows`` of the block)."""
        if j >= self.n_lin:
            s = self.u_sign[j - self.n_lin]
            return a_st * np.outer(s, s)
        ca, cb = self.coeffs(rows)
        ca = np.broadcast_to(ca[:, j], (len(rows), ca.shape[-1]))
        cb = np.broadcast_to(cb[:, j], (len(rows), cb.shape[-1]))
        sup = self.sup[j]
        m = a_st.shape[0]
        asup = a_st[:, :, sup]
        a_b = (asup * cb[:, None, :]).sum(-1)
        a_a = (asup * ca[:, None, :]).sum(-1)
        afull = np.zeros((m, self.n))
        bfull = np.zeros((m, self.n))
        cross = np.zeros(m)
        for t in range(len(sup)):
            afull[:, sup[t]] += ca[:, t]
            bfull[:, sup[t]] += cb[:, t]
            cross += ca[:, t] * a_b[:, sup[t]]
        p = self.ll[j] - 2.0 * cross
        if np.any(p <= 1e-14):
            raise DarkStateJump("sampled a jump from a dark state", label=self.labels[j], rate=float(p.min()))
        u = afull - a_b
        v = -a_a - bfull
        upd = (v[:, :, None] * u[:, None, :] - u[:, :, None] * v[:, None, :]) * (2.0 / p)[:, None, None]
        e = self.eta[j]
        out = (a_st + upd) * np.outer(e, e)
        out = 0.5 * (out - np.swapaxes(out, -1, -2))
        if self.honey:
            b = self.bond_of_jump[j]
            self.gauge[rows, b] *= -1
            i, k = self.hd.bonds[b]
            for mat in (self.r, self.q):
                mat[rows, i, k] *= -1
                mat[rows, k, i] *= -1
        else:
            b = self.bond_of_jump[j]
            if b is not None:
                self.gauge[rows, b] *= -1
        return out


def _simulate(model, a0: np.ndarray, sched: ScheduleConfig, master_seed: int, indices: np.ndarray,
              observables, want_log: bool = False):
    """Integrate the trajectories ``indices`` together. Returns a dict."""
    nb = len(indices)
    kern = _Kernel(model, nb, sched.integrator)
    streams = _Streams(master_seed, indices)
    a = np.repeat(np.asarray(a0, dtype=float)[None], nb, 0)
    rec_steps = sched.record_steps()
    n_obs = len(observables)
    values = np.empty((len(rec_steps), n_obs, nb))
    gauge_rec = np.empty((len(rec_steps), nb, kern.gauge.shape[1]), dtype=np.int8) if want_log else None
    jump_log = [[] for _ in range(nb)] if want_log else None
    dt, cap = sched.dt, sched.max_step_jump_prob
    stats = {"substeps": 0, "jumps": 0, "max_step_prob": 0.0}
    all_rows = np.arange(nb)
    rec_i = 0

    def record(step):
        nonlocal rec_i
        t = step * dt
        defect = purity_defect_real(a)
        bad = ~np.isfinite(defect)
        if bad.any():
            k = int(indices[np.flatnonzero(bad)[0]])
            raise NumericalBlowup("non-finite covariance", trajectory=k, step=step, time=t, seed=master_seed)
        if np.any(defect > PURITY_ABORT):
            r = int(np.argmax(defect))
            raise PurityAbort("purity defect above abort threshold", trajectory=int(indices[r]),
                              step=step, time=t, seed=master_seed, defect=float(defect[r]))
        g = kern.gauge
        for o, obs in enumerate(observables):
            values[rec_i, o] = obs.evaluate(a, g)
        if want_log:
            gauge_rec[rec_i] = g
        rec_i += 1

    record(0)
    next_rec = 1
    for step in range(sched.n_steps):
        t0 = step * dt
        rem = np.full(nb, dt)
        nsub = np.ones(nb, dtype=np.int64)
        rows = all_rows
        while rows.size:
            full = rows.size == nb
            a_act = a if full else a[rows]
            p = kern.rates(a_act, rows)
            p[p < DARK_DRAW] = 0.0
            tot = p.sum(axis=1)
            r_rem, r_n = rem[rows], nsub[rows]
            h = r_rem / r_n
            over = tot * h > cap
            if over.any():
                r_n = np.where(over, np.ceil(tot * r_rem / cap).astype(np.int64), r_n)
                h = r_rem / r_n
                # guard against rounding in the ceiling
                fix = tot * h > cap
                r_n = np.where(fix, r_n + 1, r_n)
                h = r_rem / r_n
            u = streams.draw(rows)
            cum = np.cumsum(p * h[:, None], axis=1)
            stats["max_step_prob"] = max(stats["max_step_prob"], float((tot * h).max(initial=0.0)))
            jidx = np.sum(cum <= u[:, None], axis=1)
            jumped = jidx < kern.n_jumps
            h1 = h.copy()
            if jumped.any():
                jr = np.flatnonzero(jumped)
                jj = jidx[jr]
                prev = np.where(jj > 0, cum[jr, np.maximum(jj - 1, 0)], 0.0)
                width = cum[jr, jj] - prev
                frac = np.clip((u[jr] - prev) / width, 0.0, 1.0)
                h1[jr] = frac * h[jr]
            if jumped.any():
                a_new = np.empty_like(a_act)
                nj = np.flatnonzero(~jumped)
                if nj.size:
                    a_new[nj] = kern.flow(a_act[nj], rows[nj], h[nj], False)
                a_new[jr] = kern.rk4(a_act[jr], rows[jr], h1[jr])
            else:
                a_new = kern.flow(a_act, rows, h, full)
            if jumped.any():
                for j in np.unique(jj):
                    sel = jr[jj == j]
                    a_new[sel] = kern.apply(a_new[sel], rows[sel], int(j))
                    if want_log:
                        for s_, f_ in zip(sel, frac[jj == j]):
                            jump_log[rows[s_]].append((float(t0 + (dt - r_rem[s_]) + f_ * h[s_]),
                                                       kern.labels[int(j)]))
                stats["jumps"] += len(jr)
                h2 = h[jr] - h1[jr]
                a_new[jr] = kern.rk4(a_new[jr], rows[jr], h2)
            if full:
                a = a_new
            else:
                a[rows] = a_new
            stats["substeps"] += rows.size
            rem[rows] = r_rem - h
            nsub[rows] = r_n - 1
            rows = rows[nsub[rows] > 0]
        if next_rec < len(rec_steps) and step + 1 == rec_steps[next_rec]:
            record(step + 1)
            next_rec += 1
    return {"values": values, "gauge": gauge_rec, "jump_log": jump_log, "stats": stats, "a": a}


def _initial_a(init) -> np.ndarray:
    if isinstance(init, CovarianceState):
        return init.a
    g = np.asarray(init)
    return g.imag if np.iscomplexobj(g) else g


def _check_dims(model, init):
    a0 = _initial_a(init)
    if a0.shape != (2 * model.n_modes, 2 * model.n_modes):
        raise ValidationError("initial state dimension does not match the model",
                              state=a0.shape, modes=model.n_modes)
    return 0.5 * (a0 - a0.T)


def run_trajectory(model, init, sched: ScheduleConfig, seed: int, observables: Sequence[str] = (),
                   index: int = 0) -> TrajectoryRecord:
    """One trajectory; identical to member ``index`` of ``run_ensemble(master_seed=seed)``."""
    _check_seed(seed)
    a0 = _check_dims(model, init)
    prims, _ = resolve_observables(model, observables)
    try:
        out = _simulate(model, a0, sched, seed, np.array([index]), prims, want_log=True)
    except GtrajError as exc:
        exc.context.setdefault("trajectory", index)
        raise
    vals = out["values"][:, :, 0]
    return TrajectoryRecord(sched.times(), {o.name: vals[:, k].copy() for k, o in enumerate(prims)},
                            out["jump_log"][0], out["gauge"][:, 0, :].copy(), seed, index)


def _check_seed(seed):
    if int(seed) != seed or seed < 0:
        raise ValidationError("seeds must be non-negative integers", seed=seed)


def _run_block(args):
    model, a0, sched, master_seed, lo, hi, requests = args
    prims, ders = resolve_observables(model, requests)
    idx = np.arange(lo, hi)
    out = _simulate(model, a0, sched, master_seed, idx, prims)
    vals = out["values"]                        # (T, n_obs, B)
    mean = vals.mean(axis=2)
    m2 = ((vals - mean[:, :, None]) ** 2).sum(axis=2)
    names = [o.name for o in prims]
    need = sorted({n for d in ders for n in d.inputs})
    sub = None
    if need:
        cols = [names.index(n) for n in need]
        nsb = (hi - lo + SUBBLOCK - 1) // SUBBLOCK
        sub = np.stack([vals[:, cols, s * SUBBLOCK:(s + 1) * SUBBLOCK].mean(axis=2) for s in range(nsb)])
        sub_n = np.array([min(SUBBLOCK, hi - lo - s * SUBBLOCK) for s in range(nsb)])
        sub = (sub, sub_n, need)
    return hi - lo, mean, m2, sub, out["stats"], out["a"].mean(axis=0)


def _worker_count(workers) -> int:
    env = os.environ.get("GTRJ_THREADS")
    w = int(workers) if workers else 1
    if env:
        try:
            w = min(w, int(env)) if workers else int(env)
        except ValueError:
            raise ValidationError("GTRJ_THREADS must be an integer", value=env)
    return max(1, w)


def run_ensemble(model, init, sched: ScheduleConfig, master_seed: int, n_traj: int,
                 observables: Sequence[str] = (), workers: int | None = None) -> EnsembleResult:
    """Mean and standard error of each observable over ``n_traj`` trajectories."""
    _check_seed(master_seed)
    if int(n_traj) != n_traj or n_traj < 1:
        raise ValidationError("n_traj must be >= 1", n_traj=n_traj)
    a0 = _check_dims(model, init)
    prims, ders = resolve_observables(model, observables)
    names = [o.name for o in prims]
    bs = block_size(model)
    blocks = [(lo, min(lo + bs, n_traj)) for lo in range(0, n_traj, bs)]
    tasks = [(model, a0, sched, int(master_seed), lo, hi, list(observables)) for lo, hi in blocks]
    nw = min(_worker_count(workers), len(tasks))
    t_start = _time.perf_counter()
    results = []

    def consume(res_iter):
        for k, res in enumerate(res_iter):
            results.append(res)
            if (k + 1) % max(1, len(tasks) // 10) == 0 or k + 1 == len(tasks):
                log.info("ensemble: %d/%d blocks done (%.1fs)", k + 1, len(tasks),
                         _time.perf_counter() - t_start)

    try:
        if nw == 1:
            consume(_run_block(t) for t in tasks)
        else:
            with ProcessPoolExecutor(max_workers=nw) as pool:
                consume(pool.map(_run_block, tasks))
    except GtrajError as exc:
        exc.context.setdefault("master_seed", master_seed)
        raise

    # Chan-style combination in block order
    n_tot = 0
    mean = m2 = None
    subs, sub_ns = [], []
    stats = {"substeps": 0, "jumps": 0, "max_step_prob": 0.0}
    a_mean = None
    for nb_, mb, m2b, sub, st, ab in results:
        if mean is None:
            n_tot, mean, m2, a_mean = nb_, mb.copy(), m2b.copy(), ab.copy()
        else:
            delta = mb - mean
            new = n_tot + nb_
            mean = mean + delta * (nb_ / new)
            m2 = m2 + m2b + delta ** 2 * (n_tot * nb_ / new)
            a_mean = a_mean + (ab - a_mean) * (nb_ / new)
            n_tot = new
        if sub is not None:
            subs.append(sub[0])
            sub_ns.append(sub[1])
            need = sub[2]
        stats["substeps"] += st["substeps"]
        stats["jumps"] += st["jumps"]
        stats["max_step_prob"] = max(stats["max_step_prob"], st["max_step_prob"])
    var = m2 / (n_tot - 1) if n_tot > 1 else np.zeros_like(m2)
    se = np.sqrt(np.maximum(var, 0.0) / n_tot)
    out_mean = {n: mean[:, k].copy() for k, n in enumerate(names)}
    out_se = {n: se[:, k].copy() for k, n in enumerate(names)}
    if ders:
        sub_all = np.concatenate(subs)          # (n_sub, T, k)
        w = np.concatenate(sub_ns).astype(float)
        for d in ders:
            cols = [need.index(n) for n in d.inputs]
            est = d.combine([out_mean[n] for n in d.inputs])
            per = np.array([d.combine([s[:, c] for c in cols]) for s in sub_all])
            if len(per) > 1:
                wm = np.sum(w[:, None] * per, axis=0) / w.sum()
                v = np.sum(w[:, None] * (per - wm) ** 2, axis=0) / (w.sum() * (len(per) - 1))
                dse = np.sqrt(v)
            else:
                dse = np.full_like(est, np.nan)
            out_mean[d.name] = np.asarray(est, dtype=float)
            out_se[d.name] = dse
    wall = _time.perf_counter() - t_start
    manifest = {
        "master_seed": int(master_seed),
        "dt": sched.dt,
        "t_final": sched.t_final,
        "max_step_jump_prob": sched.max_step_jump_prob,
        "observable_stride": sched.observable_stride,
        "n_traj": int(n_traj),
        "block_size": bs,
        "workers": nw,
        "model_hash": model.model_hash(),
        "wall_time_s": wall,
        "total_substeps": stats["substeps"],
        "total_jumps": stats["jumps"],
        "max_step_jump_prob_observed": stats["max_step_prob"],
    }
    final_cov = np.eye(a_mean.shape[0]) + 1j * a_mean
    return EnsembleResult(sched.times(), out_mean, out_se, int(n_traj), manifest, final_cov)


def required_samples(epsilon: float, delta: float) -> int:
    """Hoeffding sample count for observables bounded in [-1, 1]."""
    if not epsilon > 0 or not 0 < delta < 1:
        raise ValidationError("need epsilon > 0 and 0 < delta < 1", epsilon=epsilon, delta=delta)
    bound = 2.0 * math.log(2.0 / delta) / epsilon ** 2
    # absorb rounding noise so that exact integers are not bumped up
    return int(math.ceil(bound * (1 - 1e-12)))
