"""Kitaev honeycomb model with bond-correlated dissipation.

Each spin is written as sigma^a_i = i b^a_i c_i. On a bond <ij> of type a
the gauge field u_ij = i b^a_i b^a_j is frozen to a classical sign A_ij and
sigma^a_i sigma^a_j = -i A_ij c_i c_j. A bond jump l1 sigma^a_i + l2 sigma^a_j
equals i b^a_i (l1 c_i - i A_ij l2 c_j): the linear factor acts on the
Gaussian state while b^a_i flips A_ij.

Lattice: cells (x, y) on an Lx x Ly torus, sites A(x,y) = 2(x + Lx y) and
B(x,y) = A(x,y) + 1. Bonds are oriented A -> B:
  z: A(x,y)-B(x,y),  x: A(x,y)-B(x-1,y),  y: A(x,y)-B(x,y-1).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gaussian import LinearJump, QuadraticGenerator
from .models import CompiledModel

ALPHAS = ("x", "y", "z")


@dataclass
class HoneycombModel:
    lx: int
    ly: int
    bonds: list                      # (i, j, alpha) with i on sublattice A
    couplings: dict                  # alpha -> J_alpha
    bond_jumps: np.ndarray           # (n_bonds, 2) complex, (l1, l2)
    gauge_bits: np.ndarray           # (n_bonds,) +-1
    plaquettes: list = field(default_factory=list)   # lists of (site, outer Pauli)
    plaquette_bonds: list = field(default_factory=list)
    loops: list = field(default_factory=list)             # two winding loops of (site, Pauli)
    loop_bonds: list = field(default_factory=list)

    @property
    def n_sites(self) -> int:
        return 2 * self.lx * self.ly

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def bond_coupling(self) -> np.ndarray:
        return np.array([self.couplings[a] for _, _, a in self.bonds], dtype=float)

    def flux(self, gauge_bits=None) -> np.ndarray:
        """Plaquette fluxes W_p = prod of the six gauge signs around hexagon p."""
        g = self.gauge_bits if gauge_bits is None else np.asarray(gauge_bits)
        return np.stack([np.prod(g[..., b], axis=-1) for b in self.plaquette_bonds], axis=-1)

    def wilson_loops(self, gauge_bits=None) -> np.ndarray:
        """Winding-loop eigenvalues prod_(i in loop) sigma^(outer)_i = -prod of the loop's gauge signs."""
        g = self.gauge_bits if gauge_bits is None else np.asarray(gauge_bits)
        return np.stack([-np.prod(g[..., b], axis=-1) for b in self.loop_bonds], axis=-1)

    def physical_parity(self, gauge_bits=None) -> int:
        """Majorana parity Pf(A) of the physical states in a gauge sector.

        Projecting onto sum_i D_i = 1 ties Pf(A) to the product of all gauge
        signs, with an extra -1 unless Lx and Ly are both even.
        """
        g = self.gauge_bits if gauge_bits is None else np.asarray(gauge_bits)
        sign = 1 if (self.lx % 2 == 0 and self.ly % 2 == 0) else -1
        return int(sign * np.prod(g))

    def to_dict(self) -> dict:
        return {
            "kind": "honeycomb", "lx": self.lx, "ly": self.ly,
            "couplings": {a: float(self.couplings[a]) for a in ALPHAS},
            "bond_jumps": [[[float(z.real), float(z.imag)] for z in row] for row in self.bond_jumps],
            "gauge_bits": [int(x) for x in self.gauge_bits],
        }

    def model_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def honeycomb_lattice(lx: int, ly: int):
    """Bond list and hexagons of the Lx x Ly torus."""
    if int(lx) != lx or int(ly) != ly or lx < 2 or ly < 2:
        raise ValidationError("honeycomb torus needs Lx, Ly >= 2", lx=lx, ly=ly)

    def a(x, y):
        return 2 * ((x % lx) + lx * (y % ly))

    def b(x, y):
        return a(x, y) + 1

    bonds, index = [], {}
    for y in range(ly):
        for x in range(lx):
            for alpha, (bx, by) in (("z", (x, y)), ("x", (x - 1, y)), ("y", (x, y - 1))):
                index[(a(x, y), alpha)] = len(bonds)
                bonds.append((a(x, y), b(bx, by), alpha))
    plaquettes, pbonds = [], []
    for y in range(ly):
        for x in range(lx):
            sites = [(a(x, y), "x"), (b(x, y), "y"), (a(x + 1, y), "z"),
                     (b(x + 1, y - 1), "x"), (a(x + 1, y - 1), "y"), (b(x, y - 1), "z")]
            pb = [index[(a(x, y), "z")], index[(a(x + 1, y), "x")], index[(a(x + 1, y), "y")],
                  index[(a(x + 1, y - 1), "z")], index[(a(x + 1, y - 1), "x")], index[(a(x, y), "y")]]
            plaquettes.append(sites)
            pbonds.append(pb)
    # winding loops: the y = 0 row and the x = 0 column
    loops = [[(s, "y") for x in range(lx) for s in (a(x, 0), b(x, 0))],
             [(s, "x") for y in range(ly) for s in (a(0, y), b(0, y))]]
    lbonds = [[index[(a(x, 0), al)] for x in range(lx) for al in ("z", "x")],
              [index[(a(0, y), al)] for y in range(ly) for al in ("z", "y")]]
    return bonds, plaquettes, pbonds, loops, lbonds


def build_honeycomb(Lx: int, Ly: int, J, bond_jumps=(0.0, 0.0), gauge_bits=None) -> HoneycombModel:
    """``J`` is (Jx, Jy, Jz) or a dict; ``bond_jumps`` is one (l1, l2) pair for
    every bond, a dict keyed by orientation, or an (n_bonds, 2) array."""
    bonds, plaqs, pbonds, loops, lbonds = honeycomb_lattice(Lx, Ly)
    nb = len(bonds)
    if isinstance(J, dict):
        couplings = {a: float(J[a]) for a in ALPHAS}
    else:
        jx, jy, jz = J
        couplings = {"x": float(jx), "y": float(jy), "z": float(jz)}
    if isinstance(bond_jumps, dict):
        lj = np.array([bond_jumps.get(a, (0, 0)) for _, _, a in bonds], dtype=complex)
    else:
        lj = np.asarray(bond_jumps, dtype=complex)
        if lj.shape == (2,):
            lj = np.tile(lj, (nb, 1))
    problems = []
    if lj.shape != (nb, 2):
        problems.append(f"bond_jumps must have shape ({nb}, 2)")
    if not all(np.isfinite(v) for v in couplings.values()):
        problems.append("couplings must be finite")
    gb = np.ones(nb, dtype=np.int8) if gauge_bits is None else np.asarray(gauge_bits, dtype=np.int8)
    if gb.shape != (nb,) or np.any(np.abs(gb) != 1):
        problems.append("gauge bits must be +-1 for every bond")
    if problems:
        raise ValidationError(violations=problems)
    return HoneycombModel(int(Lx), int(Ly), bonds, couplings, lj, gb, plaqs, pbonds, loops, lbonds)


@dataclass
class HoneycombData:
    model: HoneycombModel
    bonds: np.ndarray          # (n_bonds, 2) site pairs
    j_bond: np.ndarray         # J_alpha per bond
    rho: np.ndarray            # Re(l1 conj(l2)) per bond
    l1: np.ndarray
    l2: np.ndarray
    gauge_bits: np.ndarray     # initial gauge
    active: np.ndarray         # indices of bonds with a nonzero jump

    @property
    def plaquette_bonds(self):
        return self.model.plaquette_bonds


def honeycomb_generator(hd: HoneycombData, gauge_bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of X for one or many gauge configurations."""
    g = np.asarray(gauge_bits, dtype=float)
    n = hd.model.n_sites
    i, j = hd.bonds[:, 0], hd.bonds[:, 1]
    shape = g.shape[:-1] + (n, n)
    r = np.zeros(shape)
    q = np.zeros(shape)
    r[..., i, j] = 2.0 * g * hd.j_bond
    r[..., j, i] = -r[..., i, j]
    q[..., i, j] = -2.0 * g * hd.rho
    q[..., j, i] = -q[..., i, j]
    return r, q


def honeycomb_jump(hd: HoneycombData, bond: int, gauge_bit: int) -> LinearJump:
    n = hd.model.n_sites
    i, j = hd.bonds[bond]
    v = np.zeros(n, dtype=complex)
    v[i] += hd.l1[bond]
    v[j] += -1j * gauge_bit * hd.l2[bond]
    # b^a_i anticommutes with every c, so the string phases cancel in pairs
    return LinearJump(v, np.ones(n), label=f"hbond{bond}", string_end=0)


def compile_honeycomb(model: HoneycombModel) -> CompiledModel:
    if model.n_sites % 2:
        raise ValidationError("honeycomb needs an even number of Majoranas")
    bonds = np.array([(i, j) for i, j, _ in model.bonds], dtype=int)
    l1, l2 = model.bond_jumps[:, 0], model.bond_jumps[:, 1]
    rho = (l1 * np.conj(l2)).real
    active = np.flatnonzero((np.abs(l1) > 0) | (np.abs(l2) > 0))
    hd = HoneycombData(model, bonds, model.bond_coupling(), rho, l1, l2,
                       model.gauge_bits.copy(), active)
    r, q = honeycomb_generator(hd, model.gauge_bits)
    jumps = [honeycomb_jump(hd, b, int(model.gauge_bits[b])) for b in active]
    return CompiledModel(model.n_sites // 2, model.n_sites, QuadraticGenerator(r + 1j * q),
                         jumps, [], 0, False, "honeycomb", model, r / 4j, hd)


def honeycomb_ground_state(model: HoneycombModel):
    """Lowest physical state of the Majorana Hamiltonian in the model's gauge sector."""
    from .gaussian import ground_state
    return ground_state(compile_honeycomb(model).hamiltonian, parity=model.physical_parity())
