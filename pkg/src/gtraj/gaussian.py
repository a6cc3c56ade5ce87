"""Fermionic Gaussian trajectory states in the Majorana covariance picture.

Conventions (0-based): mode j carries the Majoranas g[2j] = c_j + c_j^dag and
g[2j+1] = i(c_j - c_j^dag), so c_j = (g[2j] - i g[2j+1]) / 2 and
<g[2j] g[2j+1]> = i(2 n_j - 1). The covariance is G_kl = <g_k g_l> = I + iA
with A real antisymmetric; a pure state has A @ A = -I.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (DarkStateJump, DimensionError, NumericalBlowup, StateCorruption,
                     ValidationError)
from .linalg import antisym_part, pfaffian, project_covariance, rk4_matrix_step

DARK_RATE = 1e-14


@dataclass
class CovarianceState:
    gamma: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise DimensionError("covariance must be 2N x 2N", shape=g.shape)
        self.gamma = g

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0] // 2

    @property
    def a(self) -> np.ndarray:
        """Real antisymmetric part A = -i(G - I)."""
        return antisym_part(self.gamma.imag)

    @classmethod
    def from_real(cls, a: np.ndarray, time: float = 0.0) -> "CovarianceState":
        a = np.asarray(a, dtype=float)
        return cls(np.eye(a.shape[0]) + 1j * a, time)

    def copy(self) -> "CovarianceState":
        return CovarianceState(self.gamma.copy(), self.time)

    def validate(self, tol: float = 1e-9) -> None:
        g = self.gamma
        n = g.shape[0]
        problems = []
        if np.max(np.abs(g + g.T - 2 * np.eye(n))) > tol:
            problems.append("G + G^T != 2I")
        if np.max(np.abs(g - g.conj().T)) > tol:
            problems.append("G not Hermitian")
        sv = np.linalg.svd(self.a, compute_uv=False)
        if sv.size and sv.max() > 1 + tol:
            problems.append(f"singular value {sv.max():.3g} of A exceeds 1")
        if problems:
            raise StateCorruption("; ".join(problems))


@dataclass
class QuadraticGenerator:
    """X = 4iH for H_eff = sum_kl H_kl g_k g_l with H antisymmetric."""
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] % 2:
            raise DimensionError("generator must be 2N x 2N", shape=x.shape)
        if np.max(np.abs(x + x.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(x))):
            raise ValidationError("generator must satisfy X^T = -X")
        self.x = x

    @classmethod
    def from_h(cls, h: np.ndarray) -> "QuadraticGenerator":
        return cls(4j * np.asarray(h))

    @property
    def h(self) -> np.ndarray:
        return self.x / 4j

    @property
    def dim(self) -> int:
        return self.x.shape[0]


@dataclass
class LinearJump:
    """Linear jump L' = sum_k coeffs[k] g_k preceded by a parity string.

    ``eta_mask[m] = -1`` when the string anticommutes with g_m. ``string_end``
    is the number of leading modes covered by the string.
    """
    coeffs: np.ndarray
    eta_mask: np.ndarray
    label: str = ""
    string_end: int = 0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.eta_mask = np.asarray(self.eta_mask, dtype=float)
        if self.coeffs.shape != self.eta_mask.shape or self.coeffs.ndim != 1:
            raise DimensionError("coeffs and eta_mask must be equal-length vectors")
        if not np.any(self.coeffs != 0):
            raise ValidationError("jump coefficients are all zero", label=self.label)
        if not np.all(np.abs(self.eta_mask) == 1):
            raise ValidationError("eta mask entries must be +-1", label=self.label)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs)

    def without_string(self) -> "LinearJump":
        return LinearJump(self.coeffs, np.ones_like(self.eta_mask), self.label, 0)


@dataclass
class UnitaryJump:
    sign_flips: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        self.sign_flips = np.asarray(self.sign_flips, dtype=float)
        if not np.all(np.abs(self.sign_flips) == 1):
            raise ValidationError("sign flips must be +-1", label=self.label)
        if not (self.rate >= 0 and np.isfinite(self.rate)):
            raise ValidationError("unitary jump rate must be finite and >= 0", label=self.label)


def eta_mask_for_string(n_modes: int, string_end: int) -> np.ndarray:
    """Mask for a parity string over the first ``string_end`` modes."""
    mask = np.ones(2 * n_modes)
    mask[: 2 * string_end] = -1.0
    return mask


def product_state(occupations: Sequence[int]) -> CovarianceState:
    occ = np.asarray(occupations, dtype=int)
    if occ.ndim != 1 or occ.size < 1:
        raise DimensionError("need at least one occupation")
    if np.any((occ != 0) & (occ != 1)):
        raise ValidationError("occupations must be 0 or 1")
    n = occ.size
    g = np.eye(2 * n, dtype=complex)
    for j, nj in enumerate(occ):
        g[2 * j, 2 * j + 1] = 1j * (2 * nj - 1)
        g[2 * j + 1, 2 * j] = -1j * (2 * nj - 1)
    return CovarianceState(g)


def riccati_rhs(gamma: np.ndarray, x: np.ndarray) -> np.ndarray:
    """dG/dt = G X - X* G + (1/2) G (X* - X) G."""
    xc = x.conj()
    return gamma @ x - xc @ gamma + 0.5 * (gamma @ (xc - x) @ gamma)


def evolve_no_jump(state: CovarianceState, gen: QuadraticGenerator, dt: float,
                   step_index: int | None = None) -> CovarianceState:
    if gen.dim != state.gamma.shape[0]:
        raise DimensionError("generator and state dimensions differ",
                             gen=gen.dim, state=state.gamma.shape[0])
    x = gen.x
    g = rk4_matrix_step(state.gamma, lambda m: riccati_rhs(m, x), dt, step_index)
    return CovarianceState(project_covariance(g), state.time + dt)


def jump_rate(state: CovarianceState, jump: LinearJump) -> float:
    l = jump.coeffs
    if l.shape[0] != state.gamma.shape[0]:
        raise DimensionError("jump and state dimensions differ")
    val = complex(l.conj() @ state.gamma @ l)
    mag = max(abs(val), float(np.vdot(l, l).real))
    if abs(val.imag) > 1e-8 * max(mag, 1e-300):
        raise StateCorruption("jump rate has an imaginary part", imag=val.imag, label=jump.label)
    if val.real < -1e-10:
        raise StateCorruption("negative jump rate", rate=val.real, label=jump.label)
    return max(val.real, 0.0)


def apply_linear_jump(state: CovarianceState, jump: LinearJump) -> CovarianceState:
    p = jump_rate(state, jump)
    if p <= DARK_RATE:
        raise DarkStateJump("jump selected from a dark state", rate=p, label=jump.label)
    gvec = jump.coeffs.conj() @ state.gamma
    outer = np.outer(gvec, gvec.conj())
    g = state.gamma + (outer - outer.T) / p
    eta = jump.eta_mask
    g = g * np.outer(eta, eta)
    return CovarianceState(project_covariance(g), state.time)


def apply_unitary_jump(state: CovarianceState, jump: UnitaryJump) -> CovarianceState:
    s = jump.sign_flips
    if s.shape[0] != state.gamma.shape[0]:
        raise DimensionError("unitary jump and state dimensions differ")
    return CovarianceState(state.gamma * np.outer(s, s), state.time)


def expectation_majorana_string(state: CovarianceState, indices: Sequence[int]) -> complex:
    """<g_i1 g_i2 ... g_i2k> for strictly increasing indices via a Pfaffian."""
    idx = np.asarray(indices, dtype=int)
    if idx.size % 2:
        raise DimensionError("odd Majorana strings have no Gaussian expectation", length=idx.size)
    if idx.size == 0:
        return 1.0 + 0j
    if np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= state.gamma.shape[0]:
        raise ValidationError("indices must be strictly increasing and in range")
    m = state.gamma[np.ix_(idx, idx)] - np.eye(idx.size)
    return complex(pfaffian(m, check=False))


def occupation(state: CovarianceState, site: int) -> float:
    if not 0 <= site < state.n_modes:
        raise ValidationError("site out of range", site=site)
    return 0.5 * (1.0 + state.gamma[2 * site, 2 * site + 1].imag)


def purity_defect(state: CovarianceState) -> float:
    a = state.a
    return float(np.max(np.abs(a @ a + np.eye(a.shape[0]))))


def _entropy_from_block(block: np.ndarray, order: str) -> float:
    if block.size == 0:
        return 0.0
    ev = np.linalg.eigvalsh(1j * block)
    nu = np.sort(np.abs(ev))[::2]
    nu = np.clip(nu, 0.0, 1.0)
    p = 0.5 * (1 + nu)
    q = 0.5 * (1 - nu)
    if order in ("vonNeumann", "vn", "von_neumann"):
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
        return float(np.sum(h))
    if order in ("renyi2", "renyi-2", "r2"):
        return float(-np.sum(np.log(p * p + q * q)))
    raise ValidationError("unknown entropy order", order=order)


def subsystem_entropy(state: CovarianceState, modes: Sequence[int], order: str = "vonNeumann",
                      check_pure: bool = True) -> float:
    if check_pure and purity_defect(state) > 1e-6:
        raise ValidationError("entanglement entropy of a mixed state is not a cut entropy; "
                              "evaluate it on single trajectories instead")
    modes = np.asarray(modes, dtype=int)
    idx = np.sort(np.concatenate([2 * modes, 2 * modes + 1]))
    a = state.a
    return _entropy_from_block(a[np.ix_(idx, idx)], order)


def entanglement_entropy(state: CovarianceState, cut: int, order: str = "vonNeumann") -> float:
    """Entropy of the first ``cut`` modes."""
    n = state.n_modes
    if not 1 <= cut < n:
        raise ValidationError("cut must satisfy 1 <= cut < N", cut=cut, n_modes=n)
    return subsystem_entropy(state, np.arange(cut), order)


# ---------------------------------------------------------------------------
# Batched real kernels. States are stacks A of shape (B, 2N, 2N); the complex
# generator is split as X = R + iQ. All reductions act per slice so that a
# trajectory's arithmetic does not depend on the batch it runs in.


def riccati_rhs_real(a: np.ndarray, r: np.ndarray, q: np.ndarray) -> np.ndarray:
    """dA/dt = Q + AR - RA + AQA for stacks of equal leading shape."""
    ar = a @ r
    aq = a @ q
    return q + ar - np.swapaxes(ar, -1, -2) + aq @ a


def rk4_real(a: np.ndarray, r: np.ndarray, q: np.ndarray, h) -> np.ndarray:
    """RK4 step with a per-slice step ``h`` (scalar or shape (B,))."""
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        h = h[:, None, None]
    k1 = riccati_rhs_real(a, r, q)
    k2 = riccati_rhs_real(a + (0.5 * h) * k1, r, q)
    k3 = riccati_rhs_real(a + (0.5 * h) * k2, r, q)
    k4 = riccati_rhs_real(a + h * k3, r, q)
    out = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = 0.5 * (out - np.swapaxes(out, -1, -2))
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup("non-finite covariance after RK4 step")
    return out


def purity_defect_real(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    return np.max(np.abs(a @ a + np.eye(n)), axis=(-2, -1))


def ground_state(h: np.ndarray, gap_tol: float = 1e-10, parity: int | None = None) -> CovarianceState:
    """Pure ground state of a Hermitian quadratic H = sum_kl h_kl g_k g_l.

    With h = iK (K real antisymmetric) the ground covariance is A = K |K|^{-1}.
    ``parity`` (+1 or -1) asks for the lowest state with Pf(A) = parity; when
    the true ground state has the other parity its softest mode is flipped.
    """
    h = np.asarray(h)
    if np.max(np.abs(h.real), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise ValidationError("a Hermitian Majorana Hamiltonian has purely imaginary coefficients")
    if parity not in (None, 1, -1):
        raise ValidationError("parity must be +1 or -1", parity=parity)
    k = antisym_part(h.imag)
    w, v = np.linalg.eigh(1j * k)
    if np.min(np.abs(w)) < gap_tol:
        raise ValidationError("Hamiltonian has a zero mode; the ground state is degenerate")
    pol = (v * np.sign(w)) @ v.conj().T          # i K |K|^{-1}
    a = antisym_part((-1j * pol).real)
    if parity is not None and np.sign(pfaffian(a).real) != parity:
        # eigenvectors of the imaginary Hermitian iK pair up as (u, conj u) at (+w, -w)
        u = v[:, np.argmin(np.where(w > 0, w, np.inf))]
        flip = np.outer(u, u.conj()) - np.outer(u.conj(), u)
        a = antisym_part(a + 2 * (1j * flip).real)
    return CovarianceState.from_real(a)
