"""Dense Hilbert-space oracles (small N only).

Everything here is built from explicit spin matrices. Jordan-Wigner strings
are materialised as diagonal parity matrices so that the string bookkeeping
of the Gaussian code is tested rather than shared.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, StepError, ValidationError

MAX_SITES = 12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# local annihilator: the empty state is spin up (first basis vector)
SM = np.array([[0, 1], [0, 0]], dtype=complex)
SP = SM.T.copy()
PAULI = {"i": I2, "x": SX, "y": SY, "z": SZ, "-": SM, "+": SP}


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_SITES:
        raise DimensionError(f"dense oracle limited to 1..{MAX_SITES} sites", n=n)


def site_op(op, site: int, n: int) -> np.ndarray:
    _check_n(n)
    m = PAULI[op] if isinstance(op, str) else np.asarray(op, dtype=complex)
    mats = [I2] * n
    mats[site] = m
    return reduce(np.kron, mats)


def pauli_string(ops: Mapping[int, str], n: int) -> np.ndarray:
    _check_n(n)
    mats = [PAULI[ops.get(j, "i")] for j in range(n)]
    return reduce(np.kron, mats)


def parity_string(sites: Sequence[int], n: int) -> np.ndarray:
    """Diagonal product of (-1)^{n_j} = sigma^z_j over ``sites``."""
    diag = np.ones(2 ** n)
    for j in sites:
        diag = diag * np.diag(site_op("z", j, n)).real
    return np.diag(diag).astype(complex)


def annihilator(site: int, n: int) -> np.ndarray:
    return parity_string(range(site), n) @ site_op("-", site, n)


def majoranas(n: int) -> list[np.ndarray]:
    out = []
    for j in range(n):
        c = annihilator(j, n)
        cd = c.conj().T
        out.append(c + cd)
        out.append(1j * (c - cd))
    return out


def covariance_of(psi_or_rho: np.ndarray, n: int) -> np.ndarray:
    g = majoranas(n)
    m = len(g)
    out = np.empty((m, m), dtype=complex)
    for k in range(m):
        for l in range(m):
            out[k, l] = expect(psi_or_rho, g[k] @ g[l])
    return out


def expect(psi_or_rho: np.ndarray, op: np.ndarray) -> complex:
    x = np.asarray(psi_or_rho)
    if x.ndim == 1:
        return complex(np.vdot(x, op @ x) / np.vdot(x, x))
    return complex(np.trace(op @ x) / np.trace(x))


def gaussian_state_vector(a: np.ndarray) -> np.ndarray:
    """Pure Fock-space vector whose covariance is I + iA (A real antisymmetric, A^2 = -I)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] // 2
    g = majoranas(n)
    h = sum(1j * a[k, l] * (g[k] @ g[l]) for k in range(2 * n) for l in range(2 * n) if a[k, l] != 0)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    if w.size > 1 and w[1] - w[0] < 1e-8:
        raise ValidationError("covariance is not pure; ground state degenerate")
    return v[:, 0]


def random_pure_covariance(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random real antisymmetric A with A^2 = -I (Haar orthogonal rotation of a product state)."""
    z = rng.normal(size=(2 * n, 2 * n))
    o, r = np.linalg.qr(z)
    o = o * np.sign(np.diag(r))
    omega = np.zeros((2 * n, 2 * n))
    for j in range(n):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    a = o @ omega @ o.T
    return 0.5 * (a - a.T)


@dataclass
class DenseLindbladModel:
    hamiltonian: np.ndarray
    jumps: list = field(default_factory=list)
    n_sites: int = 0

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        d = h.shape[0]
        if self.n_sites == 0:
            self.n_sites = int(round(np.log2(d)))
        _check_n(self.n_sites)
        if h.shape != (d, d):
            raise DimensionError("Hamiltonian must be square")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(h))):
            raise ValidationError("Hamiltonian is not Hermitian")
        self.hamiltonian = h
        self.jumps = [np.asarray(l, dtype=complex) for l in self.jumps]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def h_eff(self) -> np.ndarray:
        h = self.hamiltonian.copy()
        for l in self.jumps:
            h = h - 0.5j * (l.conj().T @ l)
        return h

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        he = self.h_eff()
        out = -1j * (he @ rho - rho @ he.conj().T)
        for l in self.jumps:
            out = out + l @ rho @ l.conj().T
        return out

    def liouvillian(self) -> np.ndarray:
        """Row-major vectorised superoperator, vec(A rho B) = (A kron B^T) vec(rho)."""
        d = self.dim
        eye = np.eye(d)
        he = self.h_eff()
        sup = -1j * (np.kron(he, eye) - np.kron(eye, he.conj()))
        for l in self.jumps:
            sup = sup + np.kron(l, l.conj())
        return sup


def dense_evolve(model: DenseLindbladModel, rho0: np.ndarray, t_final: float, dt: float,
                 stride: int = 1, observables: Mapping[str, np.ndarray] | None = None):
    """RK4 integration of the master equation.

    Returns ``(times, rhos)`` or, when ``observables`` is given,
    ``(times, {name: series})`` without storing the density matrices.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if abs(np.trace(rho) - 1) > 1e-9:
        raise ValidationError("initial density matrix must have unit trace")
    n_steps = int(round(t_final / dt))
    if n_steps < 0 or abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValidationError("t_final must be a multiple of dt", t_final=t_final, dt=dt)
    he = model.h_eff()
    hd = he.conj().T
    ls = [(l, l.conj().T) for l in model.jumps]

    def f(r):
        out = -1j * (he @ r - r @ hd)
        for l, ld in ls:
            out += l @ r @ ld
        return out

    times, store = [], []
    series = {k: [] for k in observables} if observables is not None else None

    def record(t, r):
        times.append(t)
        if series is None:
            store.append(r.copy())
        else:
            for k, op in observables.items():
                series[k].append(np.trace(op @ r).real)

    record(0.0, rho)
    for step in range(1, n_steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if abs(np.trace(rho) - 1) > 1e-6:
            raise StepError("trace drift in dense integration; reduce dt", step=step)
        # positivity monitor: no entry of a density matrix exceeds 1 in modulus
        if not np.max(np.abs(rho)) <= 1 + 1e-6:
            raise StepError("density matrix left the positive cone; reduce dt", step=step)
        if step % stride == 0 or step == n_steps:
            record(step * dt, rho)
    times = np.array(times)
    if series is None:
        return times, np.array(store)
    return times, {k: np.array(v) for k, v in series.items()}


def steady_state(model: DenseLindbladModel) -> np.ndarray:
    """Unique steady state from the null vector of the Liouvillian."""
    sup = model.liouvillian()
    w, v = np.linalg.eig(sup)
    k = int(np.argmin(np.abs(w)))
    d = model.dim
    rho = v[:, k].reshape(d, d)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


# --- spin-level model constructors (independent of the fermionic compiler) ---

def dense_xx_loss(n: int, J: float, kappa: float) -> DenseLindbladModel:
    """H = -(J/2) sum (XX + YY), L_i = sqrt(kappa) sigma^-_i."""
    h = sum(-0.5 * J * (pauli_string({i: "x", i + 1: "x"}, n) + pauli_string({i: "y", i + 1: "y"}, n))
            for i in range(n - 1))
    jumps = [np.sqrt(kappa) * site_op("-", i, n) for i in range(n)]
    return DenseLindbladModel(h, jumps, n)


def dense_tfim(n: int, J: float, h: float, kappa: float) -> DenseLindbladModel:
    ham = sum(J * pauli_string({i: "x", i + 1: "x"}, n) for i in range(n - 1))
    ham = ham + sum(h * site_op("z", i, n) for i in range(n))
    jumps = [np.sqrt(kappa) * site_op("-", i, n) for i in range(n)]
    return DenseLindbladModel(ham, jumps, n)


def dense_subradiant(n: int, J: float, kappa: float) -> DenseLindbladModel:
    h = sum(-0.5 * J * (pauli_string({i: "x", i + 1: "x"}, n) + pauli_string({i: "y", i + 1: "y"}, n))
            for i in range(n - 1))
    jumps = [np.sqrt(kappa) * (site_op("-", i, n) + site_op("-", i + 1, n)) for i in range(n - 1)]
    return DenseLindbladModel(h, jumps, n)


def dense_from_spec(spec) -> DenseLindbladModel:
    """Dense spin model for a chain ``ModelSpec``.

    Hopping and pairing terms are written with explicit string-bearing
    annihilators; jumps are the spin operators l1 s-_i + l2 s+_i + l3 s-_{i+1}
    + l4 s+_{i+1}; boundary drives and dephasing are plain Pauli terms.
    """
    n = spec.n_sites
    _check_n(n)
    c = [annihilator(j, n) for j in range(n)]
    cd = [m.conj().T for m in c]
    d = 2 ** n
    h = spec.constant * np.eye(d, dtype=complex)
    for j in range(n):
        h += spec.delta[j] * (cd[j] @ c[j])
    for j in range(n - 1):
        t = spec.hop[j] * (cd[j] @ c[j + 1])
        p = spec.pair[j] * (cd[j] @ cd[j + 1])
        h += t + t.conj().T + p + p.conj().T
    if spec.boundary is not None:
        o1, o2, o3, o4 = spec.boundary
        h += o1 * site_op("x", 0, n) + o2 * site_op("y", 0, n)
        h += o3 * site_op("x", n - 1, n) + o4 * site_op("y", n - 1, n)
    jumps = []
    for jt in spec.jumps:
        i = jt.site
        l1, l2, l3, l4 = jt.coeffs
        op = l1 * site_op("-", i, n) + l2 * site_op("+", i, n)
        if l3 != 0 or l4 != 0:
            op = op + l3 * site_op("-", i + 1, n) + l4 * site_op("+", i + 1, n)
        jumps.append(op)
    for i, g in enumerate(spec.dephasing):
        if g > 0:
            jumps.append(np.sqrt(g) * site_op("z", i, n))
    return DenseLindbladModel(h, jumps, n)


def product_density(occupations: Sequence[int]) -> np.ndarray:
    """Spin product state; occupied = spin down."""
    vecs = [np.array([0, 1.0]) if o else np.array([1.0, 0]) for o in occupations]
    psi = reduce(np.kron, vecs).astype(complex)
    return np.outer(psi, psi.conj())


def dense_honeycomb(model) -> DenseLindbladModel:
    """Spin Hamiltonian sum J_a s^a_i s^a_j with jumps l1 s^a_i + l2 s^a_j per bond."""
    n = model.n_sites
    _check_n(n)
    d = 2 ** n
    h = np.zeros((d, d), dtype=complex)
    jumps = []
    for (i, j, alpha), (l1, l2) in zip(model.bonds, model.bond_jumps):
        h += model.couplings[alpha] * pauli_string({i: alpha, j: alpha}, n)
        if l1 != 0 or l2 != 0:
            jumps.append(l1 * site_op(alpha, i, n) + l2 * site_op(alpha, j, n))
    return DenseLindbladModel(h, jumps, n)


def plaquette_operator(model, p: int) -> np.ndarray:
    ops = {site: outer for site, outer in model.plaquettes[p]}
    return pauli_string(ops, model.n_sites)


def dense_observables(request: str, n: int, model: DenseLindbladModel | None = None,
                      lattice=None) -> dict:
    """Spin-level operators for an observable request (see ``gtraj.observables``).

    Returns {series name: operator}. Derived requests (connected correlations)
    return the operators they are built from.
    """
    import re
    from ..jw import parse_pauli

    name, _, arg = request.strip().partition("@")
    name = name.strip().lower()

    def dens(i):
        return 0.5 * (np.eye(2 ** n) - site_op("z", i, n))

    def pair(arg):
        i, j = (int(x) for x in re.split(r"[:,\s]+", arg.strip()) if x)
        return i, j

    if lattice is not None:
        if name == "flux":
            return {f"flux_{int(arg)}": plaquette_operator(lattice, int(arg))}
        if name == "sigma_z":
            return {f"sigma_z_{int(arg)}": site_op("z", int(arg), n)}
        if name == "bond":
            i, j, alpha = lattice.bonds[int(arg)]
            return {f"bond_{int(arg)}": pauli_string({i: alpha, j: alpha}, n)}
        if name == "energy_density" and model is not None:
            return {"energy_density": model.hamiltonian / n}
        raise ValidationError(f"no dense operator for request {request!r}")
    if name == "density":
        sites = [int(arg)] if arg else range(n)
        return {f"density_{i}": dens(i) for i in sites}
    if name in ("total_density", "afm"):
        s = int(arg.split("=")[1]) if arg else 0
        sites = range(s, n - s)
        tag = f"_s{s}" if arg else ""
        if name == "afm":
            return {"afm" + tag: sum((-1) ** (i + 1) * site_op("z", i, n) for i in sites) / len(sites)}
        return {"total_density" + tag: sum(dens(i) for i in sites) / len(sites)}
    if name == "zz":
        i, j = pair(arg)
        return {f"zz_{i}_{j}": pauli_string({i: "z", j: "z"}, n)}
    if name in ("nn", "dd_connected"):
        i, j = pair(arg)
        return {f"nn_{i}_{j}": dens(i) @ dens(j), f"density_{i}": dens(i), f"density_{j}": dens(j)}
    if name == "xx_corr":
        return {"xx_corr": sum(pauli_string({i: "x", i + 1: "x"}, n) for i in range(n - 1)) / (n - 1)}
    if name == "pauli":
        ops = parse_pauli(arg)
        tag = "".join(f"{v}{k}" for k, v in sorted(ops.items()))
        return {f"pauli_{tag}": pauli_string(ops, n)}
    if name == "energy_density" and model is not None:
        return {"energy_density": model.hamiltonian / n}
    raise ValidationError(f"no dense operator for request {request!r}")
