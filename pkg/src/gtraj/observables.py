"""Observable requests resolved against a compiled model.

Requests are short strings:
  density, density@i, total_density[@s=S], afm[@s=S], zz@i:j, nn@i:j, xx_corr,
  energy_density, pauli@x0z3, majorana@0:1:2:3, entropy@cut=m[,order=renyi2],
  dd_connected@i:j, dd_window@d=D,s=S, bond@b, flux@p, sigma_z@i.
Sites are 0-based physical sites; auxiliary boundary modes are hidden.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .gaussian import _entropy_from_block
from .jw import normal_order, parse_pauli, pauli_to_majorana
from .linalg import pfaffian_batch

Term = tuple[complex, tuple[int, ...]]


def string_expectations(a: np.ndarray, idx: Sequence[int]) -> np.ndarray:
    """<g_idx> for a stack of real A (idx sorted, even length)."""
    idx = tuple(idx)
    k = len(idx)
    if k == 0:
        return np.ones(a.shape[0], dtype=complex)
    phase = 1j ** (k // 2)
    if k == 2:
        return phase * a[:, idx[0], idx[1]]
    sub = a[:, np.asarray(idx)[:, None], np.asarray(idx)[None, :]]
    return phase * pfaffian_batch(sub)


@dataclass
class Observable:
    name: str
    fn: Callable
    kind: str = "primitive"

    def evaluate(self, a: np.ndarray, gauge: np.ndarray | None) -> np.ndarray:
        return np.asarray(self.fn(a, gauge), dtype=float)


@dataclass
class Derived:
    """Nonlinear function of ensemble means of primitive series."""
    name: str
    inputs: list
    combine: Callable


def _terms_observable(name: str, terms: list[Term]) -> Observable:
    const = sum(c for c, idx in terms if len(idx) == 0)
    # odd monomials change fermion parity and vanish on every Gaussian state
    rest = [(c, idx) for c, idx in terms if len(idx) > 0 and len(idx) % 2 == 0]

    def fn(a, gauge):
        out = np.full(a.shape[0], complex(const))
        for c, idx in rest:
            out = out + c * string_expectations(a, idx)
        return out.real
    return Observable(name, fn)


class ObservableResolver:
    def __init__(self, model):
        self.model = model
        self.n = model.n_sites
        self.off = model.offset
        self._dress = None
        if model.kind == "chain" and model.boundary:
            nm = model.n_modes
            self._dress = [(1.0, ()), pauli_to_majorana({0: "x"}),
                           pauli_to_majorana({nm - 1: "x"}),
                           pauli_to_majorana({0: "x", nm - 1: "x"})]

    # -- helpers ---------------------------------------------------------
    def _site(self, i, what="site") -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise ValidationError(f"{what} {i} out of range 0..{self.n - 1}")
        return i

    def _dressed(self, terms: list[Term]) -> list[Term]:
        if self._dress is None:
            return terms
        out = []
        for c, idx in terms:
            for dc, didx in self._dress:
                cc, ii = normal_order(c * dc, idx + didx)
                if len(ii) % 2 == 0:
                    out.append((cc, ii))
        return out

    def pauli_terms(self, ops: dict[int, str], coef: complex = 1.0) -> list[Term]:
        shifted = {self._site(k) + self.off: v for k, v in ops.items()}
        return self._dressed([pauli_to_majorana(shifted, coef)])

    def density_terms(self, i) -> list[Term]:
        return [(0.5, ())] + self.pauli_terms({i: "z"}, -0.5)

    def _chain_only(self, what):
        if self.model.kind != "chain":
            raise ValidationError(f"{what} is only defined for chain models")

    def _honeycomb_only(self, what):
        if self.model.kind != "honeycomb":
            raise ValidationError(f"{what} is only defined for honeycomb models")

    # -- resolution ------------------------------------------------------
    def resolve(self, request: str):
        """Return (primitives, deriveds) for one request string."""
        req = request.strip()
        name, _, arg = req.partition("@")
        name = name.strip().lower()
        arg = arg.strip()
        m = self.model
        if name == "density":
            self._chain_only(name)
            sites = [self._site(arg)] if arg else range(self.n)
            return [_terms_observable(f"density_{i}", self._dressed(self.density_terms(i))) for i in sites], []
        if name in ("total_density", "afm"):
            self._chain_only(name)
            sites, tag = self._bulk(arg, req)
            w = 1.0 / len(sites)
            terms = []
            for i in sites:
                if name == "afm":
                    terms += self.pauli_terms({i: "z"}, (-1) ** (i + 1) * w)
                else:
                    terms += [(c * w, idx) for c, idx in self._dressed(self.density_terms(i))]
            return [_terms_observable(name + tag, terms)], []
        if name in ("zz", "nn", "dd_connected"):
            self._chain_only(name)
            i, j = _pair(arg, req)
            i, j = self._site(i), self._site(j)
            if i == j:
                raise ValidationError(f"{req}: sites must differ")
            if name == "zz":
                return [_terms_observable(f"zz_{i}_{j}", self.pauli_terms({i: "z", j: "z"}))], []
            nn = _terms_observable(f"nn_{i}_{j}", self._nn_terms(i, j))
            if name == "nn":
                return [nn], []
            di, dj = (_terms_observable(f"density_{k}", self._dressed(self.density_terms(k))) for k in (i, j))
            der = Derived(f"dd_connected_{i}_{j}", [nn.name, di.name, dj.name],
                          lambda v: v[0] - v[1] * v[2])
            return [nn, di, dj], [der]
        if name == "dd_window":
            self._chain_only(name)
            kv = _kv(arg, req)
            d, s = int(kv.get("d", -1)), int(kv.get("s", 0))
            pairs = [(i, i + d) for i in range(s, self.n - s) if i + d <= self.n - 1 - s]
            if d < 1 or not pairs:
                raise ValidationError(f"{req}: no site pairs with separation d inside the window")
            prims, names = {}, []
            for i, j in pairs:
                for o in (_terms_observable(f"nn_{i}_{j}", self._nn_terms(i, j)),
                          _terms_observable(f"density_{i}", self._dressed(self.density_terms(i))),
                          _terms_observable(f"density_{j}", self._dressed(self.density_terms(j)))):
                    prims[o.name] = o
                names += [f"nn_{i}_{j}", f"density_{i}", f"density_{j}"]

            def comb(v, npairs=len(pairs)):
                acc = 0.0
                for p in range(npairs):
                    nn, ni, nj = v[3 * p: 3 * p + 3]
                    acc = acc + (nn - ni * nj) / (ni * nj)
                return acc / npairs
            return list(prims.values()), [Derived(f"dd_window_d{d}_s{s}", names, comb)]
        if name == "xx_corr" and not arg:
            self._chain_only(name)
            terms = []
            for i in range(self.n - 1):
                terms += self.pauli_terms({i: "x", i + 1: "x"}, 1.0 / (self.n - 1))
            return [_terms_observable("xx_corr", terms)], []
        if name == "energy_density" and not arg:
            return [self._energy()], []
        if name == "pauli":
            self._chain_only(name)
            ops = parse_pauli(arg)
            tag = "".join(f"{v}{k}" for k, v in sorted(ops.items()))
            return [_terms_observable(f"pauli_{tag}", self.pauli_terms(ops))], []
        if name == "majorana":
            idx = tuple(int(x) for x in re.split(r"[:,\s]+", arg) if x)
            dim = 2 * m.n_modes
            if len(idx) % 2 or any(not 0 <= k < dim for k in idx):
                raise ValidationError(f"{req}: need an even number of Majorana indices in 0..{dim - 1}")
            c, ii = normal_order(1.0, idx)
            tag = "_".join(map(str, idx))
            return [_terms_observable(f"majorana_{tag}", [(c, ii)])], []
        if name == "entropy":
            self._chain_only(name)
            if m.boundary:
                raise ValidationError("entropy is not available with boundary drives")
            kv = _kv(arg, req)
            cut = int(kv.get("cut", -1))
            order = kv.get("order", "vonNeumann")
            if not 1 <= cut < self.n:
                raise ValidationError(f"{req}: cut must satisfy 1 <= cut < N = {self.n}")
            if order not in ("vonNeumann", "renyi2"):
                raise ValidationError(f"{req}: order must be vonNeumann or renyi2")
            return [Observable(f"entropy_cut{cut}" + ("" if order == "vonNeumann" else "_renyi2"),
                               lambda a, g, c=cut, o=order: _batched_entropy(a[:, :2 * c, :2 * c], o))], []
        if name == "bond":
            self._honeycomb_only(name)
            b = int(arg)
            hd = m.honeycomb
            if not 0 <= b < len(hd.bonds):
                raise ValidationError(f"{req}: bond out of range")
            i, j = hd.bonds[b]
            return [Observable(f"bond_{b}", lambda a, g, b=b, i=i, j=j: g[:, b] * a[:, i, j])], []
        if name == "flux":
            self._honeycomb_only(name)
            p = int(arg)
            pb = m.honeycomb.plaquette_bonds
            if not 0 <= p < len(pb):
                raise ValidationError(f"{req}: plaquette out of range")
            return [Observable(f"flux_{p}", lambda a, g, b=list(pb[p]): np.prod(g[:, b], axis=1).astype(float))], []
        if name == "sigma_z":
            self._honeycomb_only(name)
            i = int(arg)
            if not 0 <= i < m.honeycomb.model.n_sites:
                raise ValidationError(f"{req}: site out of range")
            # sigma^z_i flips the fluxes of two plaquettes, so it vanishes in
            # every flux eigenstate and hence on every trajectory
            return [Observable(f"sigma_z_{i}", lambda a, g: np.zeros(a.shape[0]))], []
        raise ValidationError(f"unknown observable request {request!r}")

    def _bulk(self, arg, req):
        """Sites s..N-1-s for an optional ``s=S`` window (edge sites dropped)."""
        if not arg:
            return list(range(self.n)), ""
        s = int(_kv(arg, req).get("s", 0))
        if not 0 <= s or self.n - 2 * s < 1:
            raise ValidationError(f"{req}: window s={s} leaves no sites")
        return list(range(s, self.n - s)), f"_s{s}"

    def _nn_terms(self, i, j) -> list[Term]:
        out = [(0.25, ())]
        out += self.pauli_terms({i: "z"}, -0.25)
        out += self.pauli_terms({j: "z"}, -0.25)
        out += self.pauli_terms({i: "z", j: "z"}, 0.25)
        return out

    def _energy(self) -> Observable:
        m = self.model
        if m.kind == "honeycomb":
            hd = m.honeycomb
            i, j = hd.bonds[:, 0], hd.bonds[:, 1]
            ns = hd.model.n_sites

            def fn(a, g):
                return np.sum(hd.j_bond * g * a[:, i, j], axis=1) / ns
            return Observable("energy_density", fn)
        h = m.hamiltonian
        terms = [(m.energy_offset, ())]
        dim = h.shape[0]
        for k in range(dim):
            for l in range(k + 1, dim):
                if h[k, l] != 0:
                    terms.append((2 * h[k, l], (k, l)))
        terms = self._dressed(terms)
        return _terms_observable("energy_density", [(c / self.n, idx) for c, idx in terms])


def _batched_entropy(block: np.ndarray, order: str) -> np.ndarray:
    return np.array([_entropy_from_block(b, order) for b in block])


def _pair(arg, req):
    parts = [p for p in re.split(r"[:,\s]+", arg) if p]
    if len(parts) != 2:
        raise ValidationError(f"{req}: expected two sites i:j")
    return int(parts[0]), int(parts[1])


def _kv(arg, req) -> dict:
    out = {}
    for part in arg.split(","):
        if not part.strip():
            continue
        k, eq, v = part.partition("=")
        if not eq:
            raise ValidationError(f"{req}: expected key=value, got {part!r}")
        out[k.strip()] = v.strip()
    return out


def resolve_observables(model, requests: Sequence[str]):
    """Resolve requests into unique primitive observables and derived series."""
    res = ObservableResolver(model)
    prims, ders, errors = {}, [], []
    for r in requests:
        try:
            p, d = res.resolve(r)
        except ValidationError as exc:
            errors.append(str(exc))
            continue
        except ValueError:
            errors.append(f"{r}: malformed index or argument")
            continue
        for o in p:
            prims.setdefault(o.name, o)
        ders.extend(d)
    if errors:
        raise ValidationError(violations=errors)
    return list(prims.values()), ders
