"""Spin-chain model builders and their compilation to Majorana form.

Sites are 0-based. sigma^-_j = P_{<j} c_j, so the fermionic vacuum is the
all-up spin state, spin down is occupied and sigma^z_j = 1 - 2 n_j.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .gaussian import (CovarianceState, LinearJump, QuadraticGenerator, UnitaryJump,
                       eta_mask_for_string, product_state)
from .jw import pauli_to_majorana


@dataclass(frozen=True)
class JumpTerm:
    """l1 s-_i + l2 s+_i + l3 s-_{i+1} + l4 s+_{i+1}; on-site when l3 = l4 = 0."""
    site: int
    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        if len(c) != 4:
            raise ValidationError("jump needs four coefficients", site=self.site)
        object.__setattr__(self, "coeffs", c)

    @property
    def is_bond(self) -> bool:
        return self.coeffs[2] != 0 or self.coeffs[3] != 0


@dataclass
class ModelSpec:
    n_sites: int
    delta: np.ndarray
    hop: np.ndarray
    pair: np.ndarray
    jumps: list = field(default_factory=list)
    dephasing: np.ndarray | None = None
    boundary: tuple | None = None
    strings: bool = True
    constant: float = 0.0

    def __post_init__(self):
        n = int(self.n_sites)
        self.n_sites = n
        self.delta = np.asarray(self.delta, dtype=float).reshape(-1)
        self.hop = np.asarray(self.hop, dtype=complex).reshape(-1)
        self.pair = np.asarray(self.pair, dtype=complex).reshape(-1)
        if self.dephasing is None:
            self.dephasing = np.zeros(n)
        self.dephasing = np.asarray(self.dephasing, dtype=float).reshape(-1)
        self.jumps = [j if isinstance(j, JumpTerm) else JumpTerm(j[0], tuple(j[1:]) if len(j) == 5 else j[1])
                      for j in self.jumps]
        if self.boundary is not None:
            self.boundary = tuple(float(x) for x in self.boundary)
        self.validate()

    def violations(self) -> list[str]:
        n = self.n_sites
        out = []
        if n < 1:
            out.append("n_sites must be >= 1")
        if self.delta.size != n:
            out.append(f"delta has {self.delta.size} entries, expected {n}")
        if self.hop.size != max(n - 1, 0):
            out.append(f"hop has {self.hop.size} entries, expected {n - 1}")
        if self.pair.size != max(n - 1, 0):
            out.append(f"pair has {self.pair.size} entries, expected {n - 1}")
        if self.dephasing.size != n:
            out.append(f"dephasing has {self.dephasing.size} entries, expected {n}")
        elif np.any(self.dephasing < 0):
            out.append("dephasing rates must be >= 0")
        for name in ("delta", "hop", "pair", "dephasing"):
            if not np.all(np.isfinite(getattr(self, name))):
                out.append(f"{name} has non-finite entries")
        if self.boundary is not None:
            if len(self.boundary) != 4:
                out.append("boundary needs four drive amplitudes")
            elif not np.all(np.isfinite(self.boundary)):
                out.append("boundary has non-finite entries")
        for jt in self.jumps:
            if not np.all(np.isfinite(jt.coeffs)):
                out.append(f"jump at site {jt.site} has non-finite coefficients")
            if all(c == 0 for c in jt.coeffs):
                out.append(f"jump at site {jt.site} has all-zero coefficients")
            hi = n - 2 if jt.is_bond else n - 1
            if not 0 <= jt.site <= hi:
                out.append(f"jump site {jt.site} out of range for {'bond' if jt.is_bond else 'on-site'} jump")
        return out

    def validate(self) -> None:
        v = self.violations()
        if v:
            raise ValidationError(violations=v)

    def to_dict(self) -> dict:
        def cl(a):
            return [[float(np.real(x)), float(np.imag(x))] for x in np.asarray(a).reshape(-1)]
        return {
            "kind": "chain",
            "n_sites": self.n_sites,
            "delta": [float(x) for x in self.delta],
            "hop": cl(self.hop),
            "pair": cl(self.pair),
            "jumps": [{"site": j.site, "coeffs": cl(j.coeffs)} for j in self.jumps],
            "dephasing": [float(x) for x in self.dephasing],
            "boundary": None if self.boundary is None else list(self.boundary),
            "strings": bool(self.strings),
            "constant": float(self.constant),
        }

    def model_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def build_xx_loss(N: int, J: float, kappa: float) -> ModelSpec:
    """-(J/2) sum (XX + YY) with local loss sqrt(kappa) sigma^-_i."""
    _check_preset(N, kappa, J)
    return ModelSpec(N, np.zeros(N), -J * np.ones(N - 1), np.zeros(N - 1),
                     [JumpTerm(i, (np.sqrt(kappa), 0, 0, 0)) for i in range(N)])


def build_subradiant(N: int, J: float, kappa: float) -> ModelSpec:
    """XX hopping with correlated bond loss sqrt(kappa)(sigma^-_i + sigma^-_{i+1})."""
    _check_preset(N, kappa, J)
    s = np.sqrt(kappa)
    return ModelSpec(N, np.zeros(N), -J * np.ones(N - 1), np.zeros(N - 1),
                     [JumpTerm(i, (s, 0, s, 0)) for i in range(N - 1)])


def build_tfim(N: int, J: float, h: float, kappa: float) -> ModelSpec:
    """J sum X_i X_{i+1} + h sum Z_i with local loss sqrt(kappa) sigma^-_i."""
    _check_preset(N, kappa, J)
    if not np.isfinite(h):
        raise ValidationError("h must be finite")
    return ModelSpec(N, -2.0 * h * np.ones(N), J * np.ones(N - 1), J * np.ones(N - 1),
                     [JumpTerm(i, (np.sqrt(kappa), 0, 0, 0)) for i in range(N)], constant=h * N)


def _check_preset(N, kappa, J):
    v = []
    if int(N) != N or N < 2:
        v.append("N must be an integer >= 2")
    if not (np.isfinite(kappa) and kappa > 0):
        v.append("kappa must be > 0")
    if not np.isfinite(J) or np.iscomplexobj(J):
        v.append("J must be real and finite")
    if v:
        raise ValidationError(violations=v)


# --- compilation -------------------------------------------------------------

def _vec(n_modes: int, mode: int, dagger: bool) -> np.ndarray:
    v = np.zeros(2 * n_modes, dtype=complex)
    v[2 * mode] = 0.5
    v[2 * mode + 1] = 0.5j if dagger else -0.5j
    return v


@dataclass
class CompiledModel:
    n_modes: int
    n_sites: int
    generator: QuadraticGenerator
    linear_jumps: list
    unitary_jumps: list
    offset: int = 0
    boundary: bool = False
    kind: str = "chain"
    spec: object = None
    hamiltonian: np.ndarray | None = None
    honeycomb: object = None
    energy_offset: float = 0.0

    @property
    def n_bonds(self) -> int:
        if self.kind == "honeycomb":
            return len(self.honeycomb.bonds)
        return max(self.n_sites - 1, 0)

    def model_hash(self) -> str:
        return self.spec.model_hash() if self.spec is not None else ""

    def jump_bond(self, jump_index: int) -> int | None:
        """Chain bond whose gauge sign a linear jump flips (None if none)."""
        s = self.linear_jumps[jump_index].string_end
        b = s - 1 - self.offset
        return b if 0 <= b < self.n_sites - 1 else None

    def initial_state(self, occupations: Sequence[int]) -> CovarianceState:
        occ = list(occupations)
        if len(occ) != self.n_sites:
            raise ValidationError("initial occupations length differs from n_sites")
        if self.boundary:
            occ = [0] + occ + [0]
        return product_state(occ)


def compile(spec: ModelSpec) -> CompiledModel:
    spec.validate()
    n = spec.n_sites
    off = 1 if spec.boundary is not None else 0
    nm = n + 2 * off
    dim = 2 * nm
    c = np.zeros((dim, dim), dtype=complex)

    def add(coef, va, vb):
        c[:] += coef * np.outer(va, vb)

    for j in range(n):
        m = j + off
        add(spec.delta[j], _vec(nm, m, True), _vec(nm, m, False))
    for j in range(n - 1):
        m = j + off
        t, p = spec.hop[j], spec.pair[j]
        add(t, _vec(nm, m, True), _vec(nm, m + 1, False))
        add(np.conj(t), _vec(nm, m + 1, True), _vec(nm, m, False))
        add(p, _vec(nm, m, True), _vec(nm, m + 1, True))
        add(np.conj(p), _vec(nm, m + 1, False), _vec(nm, m, False))
    if off:
        o1, o2, o3, o4 = spec.boundary
        left, right = 0, nm - 1
        terms = [(o1, {left: "x", 1: "x"}), (o2, {left: "x", 1: "y"}),
                 (o3, {right: "x", nm - 2: "x"}), (o4, {right: "x", nm - 2: "y"})]
        for amp, ops in terms:
            if amp == 0:
                continue
            coef, idx = pauli_to_majorana(ops, amp)
            c[idx[0], idx[1]] += coef
    h = 0.5 * (c - c.T)

    jumps = []
    heff = h.astype(complex)
    for jt in spec.jumps:
        i = jt.site + off
        l1, l2, l3, l4 = jt.coeffs
        if jt.is_bond:
            vec = (l1 * _vec(nm, i, False) - l2 * _vec(nm, i, True)
                   + l3 * _vec(nm, i + 1, False) + l4 * _vec(nm, i + 1, True))
            send = i + 1
        else:
            vec = l1 * _vec(nm, i, False) + l2 * _vec(nm, i, True)
            send = i
        if not spec.strings:
            send = 0
        jumps.append(LinearJump(vec, eta_mask_for_string(nm, send),
                                label=f"{'bond' if jt.is_bond else 'site'}{jt.site}", string_end=send))
        outer = np.outer(vec.conj(), vec)
        heff = heff - 0.5j * 0.5 * (outer - outer.T)

    unitary = []
    for j, g in enumerate(spec.dephasing):
        if g > 0:
            s = np.ones(dim)
            s[2 * (j + off): 2 * (j + off) + 2] = -1
            unitary.append(UnitaryJump(s, float(g), label=f"deph{j}"))
    offset = float(np.trace(c).real) + spec.constant
    return CompiledModel(nm, n, QuadraticGenerator.from_h(heff), jumps, unitary, off,
                         bool(off), "chain", spec, h, None, offset)
