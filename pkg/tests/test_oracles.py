import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm

from gtraj.cli import otoc_verify, random_chain_spec
from gtraj.errors import ConditioningError, DimensionError, StepError, ValidationError
from gtraj.gaussian import CovarianceState, product_state
from gtraj.models import ModelSpec, build_subradiant, build_xx_loss, compile
from gtraj.oracles import analytic as A
from gtraj.oracles import dense as D
from gtraj.oracles.cumulant import second_cumulant_evolve
from gtraj.oracles.meanfield import (MeanFieldState, fixed_points, meanfield_tfim,
                                     ordered_fixed_point_sx2, tfim_phase_boundary)
from gtraj.oracles.otoc import otoc_expectation, schrodinger_expectation
from gtraj.oracles.telegraph import flip_probability, telegraph_evolve


# --- dense master equation ---------------------------------------------------

def test_dense_single_loss_rate_equation():
    m = D.DenseLindbladModel(np.zeros((2, 2)), [math.sqrt(0.8) * D.SM], 1)
    n_op = {"n": 0.5 * (np.eye(2) - D.SZ)}
    t, s = D.dense_evolve(m, D.product_density([1]), 2.0, 0.01, 10, n_op)
    assert np.max(np.abs(s["n"] - np.exp(-0.8 * t))) < 1e-9


def test_dense_dephasing():
    gamma = 0.3
    m = D.DenseLindbladModel(np.zeros((2, 2)), [math.sqrt(gamma) * D.SZ], 1)
    plus = np.array([1, 1]) / math.sqrt(2)
    t, s = D.dense_evolve(m, plus, 2.0, 0.01, 20, {"x": D.SX})
    assert np.max(np.abs(s["x"] - np.exp(-2 * gamma * t))) < 1e-9


def test_dense_trace_and_hermiticity():
    m = D.dense_from_spec(random_chain_spec(3, np.random.default_rng(0)))
    t, rhos = D.dense_evolve(m, D.product_density([1, 0, 1]), 1.0, 0.005, 20)
    for r in rhos:
        assert abs(np.trace(r) - 1) < 1e-9
        assert np.max(np.abs(r - r.conj().T)) < 1e-10
        assert np.linalg.eigvalsh(r).min() > -1e-9
    with pytest.raises(StepError):
        D.dense_evolve(m, D.product_density([1, 0, 1]), 4.0, 1.0)
    with pytest.raises(DimensionError):
        D.dense_xx_loss(13, 1, 1)


def test_dense_steady_state_is_stationary():
    m = D.dense_tfim(3, 1.0, 0.5, 1.0)
    rho = D.steady_state(m)
    assert np.max(np.abs(m.rhs(rho))) < 1e-10
    assert abs(np.trace(rho) - 1) < 1e-12


def test_dense_gaussian_four_point_wick(rng):
    # Fock-space states rebuilt from covariances obey the pair-contraction rule
    n = 3
    a = D.random_pure_covariance(n, rng)
    psi = D.gaussian_state_vector(a)
    g = D.majoranas(n)
    gam = np.eye(2 * n) + 1j * a
    for i, j, k, l in [(0, 1, 2, 3), (0, 2, 4, 5), (1, 3, 4, 5)]:
        four = D.expect(psi, g[i] @ g[j] @ g[k] @ g[l])
        wick = gam[i, j] * gam[k, l] - gam[i, k] * gam[j, l] + gam[i, l] * gam[j, k]
        assert abs(four - wick) < 1e-9


# --- Pfaffian evaluator of trajectory-conditional expectations ---------------

@pytest.mark.parametrize("n,jumps,seed", [(1, 1, 0), (2, 1, 1), (2, 3, 2), (3, 2, 3), (3, 3, 4)])
def test_otoc_matches_schrodinger(n, jumps, seed):
    assert otoc_verify(n, jumps, seed) <= 1e-8


def test_otoc_one_jump_matches_fock():
    rng = np.random.default_rng(7)
    spec = random_chain_spec(2, rng, dephasing=False)
    m = compile(spec)
    dm = D.dense_from_spec(spec)
    a0 = D.random_pure_covariance(2, rng)
    t1, tf = 0.4, 0.9
    psi = D.gaussian_state_vector(a0)
    he = dm.h_eff()
    phi = expm(-1j * he * (tf - t1)) @ dm.jumps[0] @ expm(-1j * he * t1) @ psi
    g = D.majoranas(2)
    init = CovarianceState.from_real(a0)
    for k, l in [(0, 1), (0, 3), (1, 2), (2, 3)]:
        ref = D.expect(phi, g[k] @ g[l])
        val = otoc_expectation(m, init, [(t1, 0)], (1.0, (k, l)), tf)
        assert abs(val - ref) < 1e-8


def test_otoc_empty_sequence_is_heisenberg_two_point():
    m = compile(build_xx_loss(2, 1.0, 1.0))
    m.generator.x = m.generator.x.real + 0j   # Hermitian part only
    init = product_state([1, 0])
    tf = 0.7
    # Heisenberg picture: G(t) = O G O^T with O = expm(R t)
    o = expm(m.generator.x.real * tf)
    ref = o.T @ init.gamma @ o
    for k, l in [(0, 1), (0, 2), (1, 3)]:
        assert abs(otoc_expectation(m, init, [], (1.0, (k, l)), tf) - ref[k, l]) < 1e-12


def test_otoc_conditioning_error():
    m = compile(build_xx_loss(2, 1.0, 1.0))
    with pytest.raises(ConditioningError):
        otoc_expectation(m, product_state([0, 0]), [(0.0, 0)], "z0", 0.1)


# --- second cumulant -----------------------------------------------------------

def test_cumulant_string_free_is_exact():
    spec = build_xx_loss(3, 1.0, 0.7)
    spec.strings = False
    m = compile(spec)
    dm = D.dense_from_spec(spec)
    dm = D.DenseLindbladModel(dm.hamiltonian, [math.sqrt(0.7) * D.annihilator(i, 3) for i in range(3)], 3)
    occ = [1, 0, 1]
    t, gam = second_cumulant_evolve(m, m.initial_state(occ), 1.5, 0.005, stride=100)
    _, rhos = D.dense_evolve(dm, D.product_density(occ), 1.5, 0.005, 100)
    for g, r in zip(gam, rhos):
        assert np.max(np.abs(g - D.covariance_of(r, 3))) < 1e-6


def test_cumulant_total_density_with_strings():
    m = compile(build_xx_loss(6, 1.0, 1.0))
    s = m.initial_state([1, 0, 1, 0, 1, 0])
    t, gam = second_cumulant_evolve(m, s, 2.0, 0.01, stride=20)
    dens = np.array([np.mean([0.5 * (1 + g[2 * j, 2 * j + 1].imag) for j in range(6)]) for g in gam])
    assert np.max(np.abs(dens - 0.5 * np.exp(-t))) < 1e-9


# --- telegraph noise -----------------------------------------------------------

def test_telegraph_flip_probability_filled_subradiant():
    n, kappa, dt = 6, 0.8, 0.01
    m = compile(build_subradiant(n, 1.0, kappa))
    g = m.initial_state([1] * n).gamma
    ls = np.array([j.coeffs for j in m.linear_jumps])
    # each bond operator sqrt(k)(s-_i + s-_{i+1}) has <L^dag L> = 2 kappa on the filled chain
    assert flip_probability(g, ls, dt, n) == pytest.approx(dt * 2 * kappa * (n - 1) / n, rel=1e-12)
    dm = D.dense_subradiant(n, 1.0, kappa)
    rho = D.product_density([1] * n)
    direct = sum(D.expect(rho, l.conj().T @ l).real for l in dm.jumps)
    assert flip_probability(g, ls, dt, n) == pytest.approx(dt * direct / n, rel=1e-12)


def test_telegraph_no_loss_no_flips():
    spec = ModelSpec(4, np.zeros(4), -np.ones(3), np.zeros(3), [])
    m = compile(spec)
    _, _, flips = telegraph_evolve(m, m.initial_state([1, 1, 0, 0]), 2.0, 0.01, seed=3)
    assert flips == 0


def test_telegraph_density_matches_string_free_total():
    m = compile(build_subradiant(8, 1.0, 1.0))
    t, gam, flips = telegraph_evolve(m, m.initial_state([1] * 8), 2.0, 0.01, seed=1, stride=50)
    assert flips > 0
    dens = [np.mean([0.5 * (1 + g[2 * j, 2 * j + 1].imag) for j in range(8)]) for g in gam]
    assert np.all(np.diff(dens) < 0) and 0 < dens[-1] < 1


# --- mean field ---------------------------------------------------------------

def test_phase_boundary_closed_form():
    for jt in (1.0, 1.5, 3.0, 10.0):
        lo, hi = tfim_phase_boundary(jt)
        r = math.sqrt(jt * jt - 1)
        assert abs(lo - (jt - r) / 2) <= 1e-12 and abs(hi - (jt + r) / 2) <= 1e-12
    assert tfim_phase_boundary(1.0) == (0.5, 0.5)
    assert tfim_phase_boundary(0.99) is None
    # kappa -> 0 at fixed J = 1: band in h tends to (0, J)
    kappa = 1e-6
    lo, hi = tfim_phase_boundary(1.0 / kappa)
    assert lo * kappa < 1e-11 and abs(hi * kappa - 1.0) < 1e-11


def test_ordered_fixed_point_boundary():
    assert ordered_fixed_point_sx2(1.0, 0.5, 1.0) == 0.0
    lo, hi = tfim_phase_boundary(2.0)
    for h in (lo, hi):
        assert abs(ordered_fixed_point_sx2(2.0, h, 1.0)) < 1e-12
    assert ordered_fixed_point_sx2(2.0, 0.5 * (lo + hi), 1.0) > 0


def test_fixed_points_are_stationary():
    from gtraj.oracles.meanfield import _rhs
    for pt in fixed_points(2.0, 0.5, 1.0):
        assert np.max(np.abs(_rhs(pt.as_array(), 2.0, 0.5, 1.0))) < 1e-12
    assert len(fixed_points(2.0, 0.5, 1.0)) == 3
    assert len(fixed_points(0.5, 0.5, 1.0)) == 1


def test_meanfield_relaxes_to_paramagnet_outside_band():
    t, s = meanfield_tfim(0.5, 0.5, 1.0, MeanFieldState(1.0, 0.0, 0.0), 30.0, 0.01, stride=100)
    assert np.max(np.abs(s[-1] - [0, 0, 1])) < 1e-5
    assert np.all(np.sum(s ** 2, axis=1) <= 1 + 1e-9)
    with pytest.raises(ValidationError):
        MeanFieldState(1.0, 1.0, 0.0)


# --- closed forms --------------------------------------------------------------

def _j0(x):
    return integrate.quad(lambda th: math.cos(x * math.sin(th)), 0, math.pi, epsabs=1e-14, limit=200)[0] / math.pi


def _i_d_scaled(d, x):
    # e^{-x} I_d(x) = (1/pi) int_0^pi e^{x (cos th - 1)} cos(d th) dth
    return integrate.quad(lambda th: math.exp(x * (math.cos(th) - 1)) * math.cos(d * th), 0, math.pi,
                          epsabs=1e-13, epsrel=1e-13, limit=400)[0] / math.pi


def test_bessel_closed_forms_against_quadrature():
    for t in (0.0, 0.3, 1.7, 4.0):
        assert abs(A.free_fermion_afm(t, 1.0, 0.5) - math.exp(-0.5 * t) * _j0(4 * t)) < 1e-12
        assert abs(A.free_fermion_subradiant_density(t, 0.8) - _i_d_scaled(0, 1.6 * t)) < 1e-12
        for d in (0, 1, 3):
            assert abs(A.free_fermion_dd_corr(d, t, 0.8) + _i_d_scaled(d, 1.6 * t) ** 2) < 1e-12
    assert A.free_fermion_afm(0.0, 1, 1) == 1.0
    assert A.free_fermion_subradiant_density(0.0, 1) == 1.0
    t = np.linspace(0, 5, 11)
    assert np.allclose(A.free_fermion_dd_corr(0, t, 1.0), -A.free_fermion_subradiant_density(t, 1.0) ** 2,
                       atol=0, rtol=1e-15)
    with pytest.raises(ValidationError):
        A.free_fermion_afm(-1.0, 1, 1)


def test_subradiant_asymptote():
    rel = abs(A.free_fermion_subradiant_density(100.0, 1.0) / A.subradiant_asymptote(100.0, 1.0) - 1)
    assert rel <= 0.01


def test_disorder_ansatz_against_quadrature():
    J, kappa, alpha = 1.0, 0.5, 0.2
    for t in (0.0, 0.5, 2.0):
        f = lambda q: math.cos(4 * J * t * math.cos(q)) * math.exp(-16 * alpha * J * J * t * t * math.sin(q) ** 2)
        ref = math.exp(-kappa * t) * integrate.quad(f, 0, 2 * math.pi, limit=400, epsabs=1e-13)[0] / (2 * math.pi)
        assert abs(A.disorder_ansatz_afm(t, J, kappa, alpha) - ref) < 1e-11
    # large-t stationary-phase form
    t = np.array([20.0, 40.0])
    full = A.disorder_ansatz_afm(t, J, 0.0, alpha, n_quad=1 << 15)
    asym = A.disorder_ansatz_asymptote(t, J, 0.0, alpha)
    env = 1 / (4 * J * t * math.sqrt(math.pi * alpha))
    assert np.all(np.abs(full - asym) / env < 0.05)
    with pytest.raises(ValidationError):
        A.disorder_ansatz_afm(1.0, 1.0, 1.0, 0.0)
