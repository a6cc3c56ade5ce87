"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section at the end
of the pytest report. Criterion 5 takes ~30 min on one core and is marked
``slow``; criterion 6 runs a small fallback unless GTRAJ_FULL_SCALE=1.
"""
import math
import os

import numpy as np
import pytest
from scipy.optimize import curve_fit

from conftest import zscore
from gtraj import (ScheduleConfig, build_subradiant, build_tfim, build_xx_loss, compile,
                   required_samples, run_ensemble, run_trajectory)
from gtraj.cli import _honeycomb_dense_initial, otoc_verify, random_chain_spec
from gtraj.gaussian import (CovarianceState, apply_linear_jump, entanglement_entropy, purity_defect,
                            subsystem_entropy)
from gtraj.honeycomb import build_honeycomb, compile_honeycomb, honeycomb_ground_state
from gtraj.linalg import pfaffian
from gtraj.models import JumpTerm, ModelSpec
from gtraj.oracles import analytic as A
from gtraj.oracles import dense as D
from gtraj.oracles.cumulant import second_cumulant_evolve
from gtraj.oracles.meanfield import ordered_fixed_point_sx2, tfim_phase_boundary
from test_honeycomb import majorana_sector_spectrum, sector_basis

Z_MAX = 3.0             # ensemble agreement: |est - ref| <= 3 stderr
SE_FLOOR = 1e-10        # stderr floor where both sides are exactly deterministic


def neel(n):
    return [(i + 1) % 2 for i in range(n)]


def worst_z(mean, stderr, ref, keys=None):
    keys = list(mean) if keys is None else keys
    return max(float(np.max(zscore(mean[k], ref[k], stderr[k], SE_FLOOR))) for k in keys)


def window_afm(gammas, n, s):
    """Staggered sigma^z over sites s..n-1-s from covariance matrices."""
    sites = np.arange(s, n - s)
    sign = (-1.0) ** (sites + 1)
    out = []
    for g in gammas:
        sz = -np.imag(g[2 * sites, 2 * sites + 1])
        out.append(np.mean(sign * sz))
    return np.array(out)


# -- 1 -----------------------------------------------------------------------------

def test_c01_xx_loss_matches_dense_master_equation(verdict):
    n, n_traj = 4, 10_000
    spec = build_xx_loss(n, 1.0, 1.0)
    m = compile(spec)
    obs = ["density"] + [f"zz@{i}:{j}" for i in range(n) for j in range(i + 1, n)]
    sched = ScheduleConfig(3.0, 0.01, observable_stride=25)
    res = run_ensemble(m, m.initial_state(neel(n)), sched, 2024, n_traj, obs)
    dm = D.dense_from_spec(spec)
    ops = {}
    for q in obs:
        ops.update(D.dense_observables(q, n, dm))
    _, ref = D.dense_evolve(dm, D.product_density(neel(n)), 3.0, 0.01, 25, ops)
    z = worst_z(res.mean, res.stderr, ref)
    ok = z <= Z_MAX
    verdict(1, ok, f"XX+loss N=4, {n_traj} traj: worst |ens-dense|/stderr = {z:.2f} (<= {Z_MAX})")
    assert ok


# -- 2 -----------------------------------------------------------------------------

def test_c02_tfim_steady_state_matches_dense(verdict):
    n, n_traj = 3, 20_000
    spec = build_tfim(n, 1.0, 0.5, 1.0)
    m = compile(spec)
    obs = ["xx_corr", "energy_density"]
    res = run_ensemble(m, m.initial_state([0] * n), ScheduleConfig(16.0, 0.02, observable_stride=200),
                       7, n_traj, obs)
    dm = D.dense_from_spec(spec)
    rho = D.steady_state(dm)
    zs = []
    for q in obs:
        op = D.dense_observables(q, n, dm)[q]
        zs.append(float(zscore(res.mean[q][-1], D.expect(rho, op).real, res.stderr[q][-1])))
    ok = max(zs) <= Z_MAX
    verdict(2, ok, f"TFIM N=3, {n_traj} traj at t=16: z(xx_corr) = {zs[0]:.2f}, "
                   f"z(energy_density) = {zs[1]:.2f} (<= {Z_MAX})")
    assert ok


# -- 3 -----------------------------------------------------------------------------

def test_c03_string_free_afm_follows_bessel_law(verdict):
    n, n_traj, s = 40, 1000, 12
    spec = build_xx_loss(n, 1.0, 1.0)
    spec.strings = False
    m = compile(spec)
    init = m.initial_state(neel(n))
    res = run_ensemble(m, init, ScheduleConfig(4.0, 0.01, observable_stride=25), 11, n_traj, [f"afm@s={s}"])
    key = f"afm_s{s}"
    law = A.free_fermion_afm(res.times, 1.0, 1.0)
    z = float(np.max(zscore(res.mean[key], law, res.stderr[key], SE_FLOOR)))
    t, gam = second_cumulant_evolve(m, init, 4.0, 0.002, stride=125)
    cum_err = float(np.max(np.abs(window_afm(gam, n, s) - A.free_fermion_afm(t, 1.0, 1.0))))
    ok = z <= Z_MAX and cum_err <= 1e-6
    verdict(3, ok, f"N=40 string-free, {n_traj} traj, bulk sites {s}..{n - 1 - s}: "
                   f"worst z = {z:.2f} (<= {Z_MAX}); cumulant |err| = {cum_err:.1e} (<= 1e-6)")
    assert ok


# -- 4 -----------------------------------------------------------------------------

def test_c04_string_free_subradiant_density_law(verdict):
    n, n_traj, s = 40, 1000, 12
    spec = build_subradiant(n, 1.0, 1.0)
    spec.strings = False
    m = compile(spec)
    res = run_ensemble(m, m.initial_state([1] * n), ScheduleConfig(4.0, 0.01, observable_stride=25),
                       12, n_traj, [f"total_density@s={s}"])
    key = f"total_density_s{s}"
    law = A.free_fermion_subradiant_density(res.times, 1.0)
    z = float(np.max(zscore(res.mean[key], law, res.stderr[key], SE_FLOOR)))
    ok = z <= Z_MAX
    verdict(4, ok, f"N=40 string-free subradiant, {n_traj} traj, bulk sites {s}..{n - 1 - s}: "
                   f"worst z = {z:.2f} (<= {Z_MAX})")
    assert ok


# -- 5 -----------------------------------------------------------------------------

def fit_envelope_exponent(t, y, e):
    """Fit y = c t^p cos(4t + phi); returns (p, stderr of p)."""
    f = lambda t, c, p, ph: c * t ** p * np.cos(4 * t + ph)
    po, pc = curve_fit(f, t, y, p0=(1.0, -1.0, 0.0), sigma=e, absolute_sigma=True, maxfev=20000)
    return float(po[1]), float(np.sqrt(pc[1, 1]))


@pytest.mark.slow
def test_c05_spin_afm_melting_exponent(verdict):
    n, n_traj = 40, 5000
    m = compile(build_xx_loss(n, 1.0, 1.0))
    res = run_ensemble(m, m.initial_state(neel(n)), ScheduleConfig(3.0, 0.01, observable_stride=5),
                       5, n_traj, ["afm"])
    t = res.times
    sel = (t >= 1.0) & (t <= 3.0 + 1e-12)
    y = res.mean["afm"][sel] * np.exp(t[sel])
    e = res.stderr["afm"][sel] * np.exp(t[sel])
    p, dp = fit_envelope_exponent(t[sel], y, e)
    ok = abs(p + 1.0) <= 0.2
    verdict(5, ok, f"spins N=40, {n_traj} traj: fitted exponent of A(t)e^(kt) on kt in [1,3] = "
                   f"{p:.3f} +- {dp:.3f} (target -1.0 +- 0.2)")
    assert ok


# -- 6 -----------------------------------------------------------------------------

def fit_power(t, y, e):
    w = y / e
    coef = np.polyfit(np.log(t), np.log(y), 1, w=w)
    return float(coef[0])


def test_c06_subradiant_spins_decay_faster(verdict):
    if os.environ.get("GTRAJ_FULL_SCALE") == "1":
        n, n_traj = 60, 2000
        m = compile(build_subradiant(n, 1.0, 1.0))
        res = run_ensemble(m, m.initial_state([1] * n), ScheduleConfig(20.0, 0.01, observable_stride=20),
                           6, n_traj, ["total_density"])
        t, y, e = res.times, res.mean["total_density"], res.stderr["total_density"]
        sel = (t >= 1.0) & (y * n > 1)
        p = fit_power(t[sel], y[sel], e[sel])
        ok = abs(p + 0.75) <= 0.10
        verdict(6, ok, f"spins N=60, {n_traj} traj: density exponent = {p:.3f} (target -0.75 +- 0.10)")
        assert ok
        return
    n, n_traj = 24, 300
    sched = ScheduleConfig(8.0, 0.02, observable_stride=25)
    spins = compile(build_subradiant(n, 1.0, 1.0))
    res = run_ensemble(spins, spins.initial_state([1] * n), sched, 6, n_traj, ["total_density"])
    free_spec = build_subradiant(n, 1.0, 1.0)
    free_spec.strings = False
    free = compile(free_spec)
    # string-free averaged dynamics is linear, so the cumulant path is exact
    t, gam = second_cumulant_evolve(free, free.initial_state([1] * n), 8.0, 0.002, stride=250)
    ref = np.array([np.mean(0.5 * (1 + np.imag(np.diag(g, 1)[::2]))) for g in gam])
    late = res.times >= 5.0
    gap = (ref[late] - res.mean["total_density"][late]) / res.stderr["total_density"][late]
    ok = bool(np.all(gap > Z_MAX))
    verdict(6, ok, f"fallback, N={n}, {n_traj} traj: string-free minus spin density at kt >= 5 "
                   f"is >= {gap.min():.1f} stderr (need > {Z_MAX}); full run with GTRAJ_FULL_SCALE=1")
    assert ok


# -- 7 -----------------------------------------------------------------------------

def test_c07_meanfield_phase_boundary(verdict):
    errs = []
    for jt in (1.0, 1.25, 2.0, 3.7, 10.0, 1e3):
        lo, hi = tfim_phase_boundary(jt)
        r = math.sqrt(jt * jt - 1.0)
        errs += [abs(lo - (jt - r) / 2), abs(hi - (jt + r) / 2)]
    below = tfim_phase_boundary(0.5) is None
    star = ordered_fixed_point_sx2(1.0, 0.5, 1.0)
    ok = max(errs) <= 1e-12 and below and abs(star) <= 1e-12
    verdict(7, ok, f"boundary max |err| = {max(errs):.1e} (<= 1e-12); no band below J/k=1: {below}; "
                   f"(s^x)^2 at J=k=2h = {star:.1e}")
    assert ok


# -- 8 -----------------------------------------------------------------------------

def purity_over_steps(n_chunks=10, steps=1000):
    m = compile(build_tfim(6, 1.0, 0.5, 1.0))
    state = m.initial_state([0] * 6)
    worst, jumps = 0.0, 0
    for k in range(n_chunks):
        res = run_ensemble(m, state, ScheduleConfig(steps * 0.01, 0.01, observable_stride=steps), 100 + k, 1)
        state = CovarianceState(res.final_covariance)
        worst = max(worst, purity_defect(state))
        jumps += res.manifest["total_jumps"]
    return worst, jumps


def pf_det_error(rng):
    worst = 0.0
    for dim in range(2, 26, 2):
        for _ in range(5):
            x = rng.normal(size=(dim, dim))
            a = x - x.T
            d = np.linalg.det(a)
            worst = max(worst, abs(pfaffian(a) ** 2 - d) / max(1.0, abs(d)))
    return worst


def jump_vs_fock_error():
    worst = 0.0
    for n in (1, 2, 3):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            spec = random_chain_spec(n, rng)
            model = compile(spec)
            a = D.random_pure_covariance(n, rng)
            psi = D.gaussian_state_vector(a)
            for jump, op in zip(model.linear_jumps, D.dense_from_spec(spec).jumps):
                phi = op @ psi
                new = apply_linear_jump(CovarianceState.from_real(a), jump)
                ref = D.covariance_of(phi / np.linalg.norm(phi), n)
                worst = max(worst, float(np.max(np.abs(new.gamma - ref))))
    return worst


def entropy_asymmetry(rng):
    worst = 0.0
    for n in (4, 8, 12):
        st = CovarianceState.from_real(D.random_pure_covariance(n, rng))
        for cut in range(1, n):
            s_a = entanglement_entropy(st, cut)
            s_b = subsystem_entropy(st, list(range(cut, n)))
            worst = max(worst, abs(s_a - s_b))
    return worst


def dephasing_check():
    gamma = 0.4
    spec = ModelSpec(2, [0.0, 0.0], [0.0], [0.0], [], dephasing=[gamma, 0.0])
    m = compile(spec)
    psi = np.zeros(4, complex)
    psi[1] = psi[2] = 1 / math.sqrt(2)
    init = CovarianceState(D.covariance_of(psi, 2))
    obs = "pauli@x0x1"
    res = run_ensemble(m, init, ScheduleConfig(2.0, 0.01, observable_stride=20), 3, 4000, [obs])
    dm = D.dense_from_spec(spec)
    ops = D.dense_observables(obs, 2, dm)
    t, ref = D.dense_evolve(dm, np.outer(psi, psi.conj()), 2.0, 0.01, 20, ops)
    key = next(iter(res.mean))
    (rkey,) = ref
    z = float(np.max(zscore(res.mean[key], ref[rkey], res.stderr[key], SE_FLOOR)))
    law = float(np.max(np.abs(ref[rkey] - np.exp(-2 * gamma * t))))
    return z, law


def worker_determinism():
    m = compile(build_tfim(5, 1.0, 0.7, 0.8))
    s = m.initial_state([1, 0, 1, 0, 1])
    sched = ScheduleConfig(1.0, 0.02, observable_stride=10)
    obs = ["density", "xx_corr", "dd_connected@1:3"]
    a = run_ensemble(m, s, sched, 99, 96, obs, workers=1)
    b = run_ensemble(m, s, sched, 99, 96, obs, workers=2)
    return all(np.array_equal(a.mean[k], b.mean[k]) and np.array_equal(a.stderr[k], b.stderr[k])
               for k in a.mean)


def test_c08_property_suite(verdict):
    rng = np.random.default_rng(88)
    purity, jumps = purity_over_steps()
    pf = pf_det_error(rng)
    fock = jump_vs_fock_error()
    otoc = max(otoc_verify(n, j, seed) for n, j, seed in [(1, 1, 0), (2, 2, 1), (3, 3, 2), (3, 1, 3)])
    ent = entropy_asymmetry(rng)
    zdeph, law = dephasing_check()
    det = worker_determinism()
    checks = {
        f"purity {purity:.1e} over 1e4 steps ({jumps} jumps)": purity <= 1e-6 and jumps > 0,
        f"Pf^2-det {pf:.1e}": pf <= 1e-10,
        f"jump-vs-Fock {fock:.1e}": fock <= 1e-9,
        f"OTOC {otoc:.1e}": otoc <= 1e-8,
        f"S(A)-S(B) {ent:.1e}": ent <= 1e-8,
        f"dephasing z {zdeph:.2f}": zdeph <= Z_MAX and law <= 1e-8,
        f"workers bit-exact {det}": det,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    verdict(8, ok, "; ".join(checks) + (f"  [failed: {failed}]" if failed else ""))
    assert ok


# -- 9 -----------------------------------------------------------------------------

def test_c09_honeycomb(verdict):
    J = (1.0, 0.8, 1.2)
    # spectrum of the compiled Majorana Hamiltonian in fixed gauges vs spins
    spin_h = D.dense_honeycomb(build_honeycomb(2, 2, J)).hamiltonian
    spec_err = 0.0
    for seed in range(3):
        gb = np.random.default_rng(seed).choice([-1, 1], size=12)
        model = build_honeycomb(2, 2, J, gauge_bits=gb)
        v = sector_basis(model)
        ref = np.sort(np.linalg.eigvalsh(v.conj().T @ spin_h @ v))
        spec_err = max(spec_err, float(np.max(np.abs(majorana_sector_spectrum(model) - ref))))

    # record every step; each interval holding one logged jump must show one bit and two fluxes flipped
    hf = build_honeycomb(2, 2, J, (0.5, 0.3))
    rec = run_trajectory(compile_honeycomb(hf), honeycomb_ground_state(hf),
                         ScheduleConfig(5.0, 0.0025, max_step_jump_prob=0.01), seed=3)
    g = rec.gauge_record
    per_step = np.histogram([t for t, _ in rec.jump_log], bins=len(rec.times) - 1,
                            range=(0.0, rec.times[-1]))[0]
    diffs = np.sum(g[1:] != g[:-1], axis=1)
    single = np.flatnonzero(per_step == 1)
    flips_ok = bool(np.all(diffs[per_step == 0] == 0)) and single.size >= 10
    for k in single:
        flips_ok &= diffs[k] == 1 and int(np.sum(hf.flux(g[k]) != hf.flux(g[k + 1]))) == 2

    hm = build_honeycomb(2, 2, J, (0.3, 0.2))
    cm = compile_honeycomb(hm)
    s0 = honeycomb_ground_state(hm)
    n_traj = 10_000
    obs = [f"sigma_z@{i}" for i in range(8)] + [f"bond@{b}" for b in (0, 1, 2)]
    sched = ScheduleConfig(1.0, 0.01, observable_stride=10)
    res = run_ensemble(cm, s0, sched, 1, n_traj, obs)
    dm = D.dense_honeycomb(hm)
    psi = _honeycomb_dense_initial(hm, dm)
    ops = {}
    for q in obs:
        ops.update(D.dense_observables(q, 8, dm, hm))
    _, ref = D.dense_evolve(dm, np.outer(psi, psi.conj()), 1.0, 0.01, 10, ops)
    zk = [k for k in res.mean if k.startswith("sigma_z")]
    bk = [k for k in res.mean if k.startswith("bond")]
    z_sz = worst_z(res.mean, res.stderr, ref, zk)
    z_bond = worst_z(res.mean, res.stderr, ref, bk)
    ok = spec_err <= 1e-10 and flips_ok and z_sz <= Z_MAX and z_bond <= Z_MAX
    verdict(9, ok, f"2x2 cells: spectrum err {spec_err:.1e} (<= 1e-10); one bit + two fluxes per jump: "
                   f"{flips_ok} ({single.size} jumps); {n_traj} traj: z(sigma^z) = {z_sz:.2f}, "
                   f"z(bond energies) = {z_bond:.2f} (<= {Z_MAX})")
    assert ok


# -- 10 ----------------------------------------------------------------------------

def test_c10_hoeffding_sample_count(verdict):
    eps, delta, kappa, n_rep = 0.1, 0.05, 1.0, 200
    n = required_samples(eps, delta)
    m = compile(ModelSpec(1, [0.0], [], [], [JumpTerm(0, (math.sqrt(kappa), 0, 0, 0))]))
    s = m.initial_state([1])
    sched = ScheduleConfig(1.0, 0.05, observable_stride=20)
    exact = math.exp(-kappa)
    fails = 0
    for rep in range(n_rep):
        res = run_ensemble(m, s, sched, 10_000 + rep, n, ["density"])
        fails += abs(res.mean["density_0"][-1] - exact) > eps
    rate = fails / n_rep
    ok = rate <= delta
    verdict(10, ok, f"n = required_samples({eps}, {delta}) = {n}; failure rate {rate:.3f} over "
                    f"{n_rep} ensembles (<= {delta})")
    assert ok
