import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gtraj.errors import DimensionError, NumericalBlowup, ValidationError
from gtraj.linalg import (antisym_part, pfaffian, pfaffian_batch, project_covariance,
                          rk4_matrix_step)

# integer matrix whose Pfaffian was computed by expansion over perfect matchings
M6 = np.array([[0, 1, -2, 3, 0, 5], [-1, 0, 4, -1, 2, 1], [2, -4, 0, 3, -3, 2],
               [-3, 1, -3, 0, 1, -2], [0, -2, 3, -1, 0, 4], [-5, -1, -2, 2, -4, 0]], float)
PF_M6 = 72.0


def _antisym(n, rng, cplx=False):
    z = rng.normal(size=(n, n))
    if cplx:
        z = z + 1j * rng.normal(size=(n, n))
    return z - z.T


def _pf_expand(a):
    n = a.shape[0]
    if n == 0:
        return 1.0
    tot = 0.0
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        tot += (-1) ** (j + 1) * a[0, j] * _pf_expand(a[np.ix_(rest, rest)])
    return tot


def test_pfaffian_frozen_integer_case():
    assert pfaffian(M6) == pytest.approx(PF_M6, abs=1e-12)


def test_pfaffian_small_closed_forms():
    a = np.array([[0, 2.5], [-2.5, 0]])
    assert pfaffian(a) == 2.5
    b = _antisym(4, np.random.default_rng(0))
    ref = b[0, 1] * b[2, 3] - b[0, 2] * b[1, 3] + b[0, 3] * b[1, 2]
    assert pfaffian(b) == pytest.approx(ref, rel=1e-13)
    assert pfaffian(np.zeros((0, 0))) == 1.0


@pytest.mark.parametrize("n", [6, 8])
def test_pfaffian_matches_expansion(n, rng):
    for cplx in (False, True):
        a = _antisym(n, rng, cplx)
        assert abs(pfaffian(a) - _pf_expand(a)) < 1e-10 * max(1, abs(_pf_expand(a)))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 7), seed=st.integers(0, 2 ** 32 - 1), cplx=st.booleans())
def test_pfaffian_squared_is_determinant(n, seed, cplx):
    a = _antisym(2 * n, np.random.default_rng(seed), cplx)
    pf = pfaffian(a)
    det = np.linalg.det(a)
    assert abs(pf * pf - det) <= 1e-10 * max(1.0, abs(det))


def test_pfaffian_block_and_congruence(rng):
    # Pf(B A B^T) = det(B) Pf(A)
    a = _antisym(6, rng)
    b = rng.normal(size=(6, 6))
    assert pfaffian(b @ a @ b.T) == pytest.approx(np.linalg.det(b) * pfaffian(a), rel=1e-9)
    j = np.kron(np.eye(3), [[0, 1], [-1, 0]])
    assert pfaffian(j) == pytest.approx(1.0)


def test_pfaffian_batch_matches_single(rng):
    stack = np.array([_antisym(10, rng) for _ in range(7)])
    single = np.array([pfaffian(m) for m in stack])
    batch = pfaffian_batch(stack)
    assert np.array_equal(single, batch)
    # zero pivots do not produce nans
    z = np.zeros((2, 6, 6))
    assert np.all(pfaffian_batch(z) == 0)


def test_pfaffian_errors():
    with pytest.raises(DimensionError):
        pfaffian(np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        pfaffian(np.zeros((2, 4)))
    with pytest.raises(ValidationError):
        pfaffian(np.ones((2, 2)))
    with pytest.raises(DimensionError):
        pfaffian_batch(np.zeros((4, 4)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)))
def test_project_covariance_is_idempotent(m):
    g = np.eye(4) + 1j * m + 0.3 * m
    p = project_covariance(g)
    assert np.allclose(p + p.T, 2 * np.eye(4))
    assert np.allclose(p, p.conj().T)
    assert np.array_equal(project_covariance(p), p)
    assert np.array_equal(antisym_part(p.imag), p.imag)


def test_rk4_step_linear_ode():
    # dG/dt = K G has G(t) = expm(K t) G0; RK4 local error is O(dt^5)
    k = np.array([[0.0, 1.0], [-1.0, 0.0]])
    g = np.eye(2)
    dt = 0.01
    for _ in range(100):
        g = rk4_matrix_step(g, lambda m: k @ m, dt)
    ref = np.array([[np.cos(1), np.sin(1)], [-np.sin(1), np.cos(1)]])
    assert np.max(np.abs(g - ref)) < 1e-10
    with pytest.raises(ValidationError):
        rk4_matrix_step(g, lambda m: m, 0.0)
    with pytest.raises(NumericalBlowup), np.errstate(over="ignore", invalid="ignore"):
        rk4_matrix_step(np.array([[1e300]]), lambda m: m * m, 1.0)
