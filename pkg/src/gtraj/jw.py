"""Jordan-Wigner bookkeeping: Pauli strings as Majorana monomials.

With 0-based modes, sigma^z_j = i g[2j] g[2j+1], sigma^x_j = P_{<j} g[2j] and
sigma^y_j = -P_{<j} g[2j+1], where P_{<j} is the product of sigma^z over
modes k < j.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .errors import ValidationError

Monomial = tuple[complex, tuple[int, ...]]


def normal_order(coef: complex, factors: Iterable[int]) -> Monomial:
    """Sort a product of Majoranas, tracking signs and cancelling g^2 = 1."""
    seq = list(factors)
    sign = 1
    # insertion sort; each transposition of distinct Majoranas costs a sign
    out: list[int] = []
    for x in seq:
        pos = len(out)
        while pos > 0 and out[pos - 1] > x:
            pos -= 1
        sign *= (-1) ** (len(out) - pos)
        if pos > 0 and out[pos - 1] == x:
            # move next to its twin, then cancel the pair
            out.pop(pos - 1)
        else:
            out.insert(pos, x)
    return coef * sign, tuple(out)


def _local_factors(op: str, j: int) -> list[Monomial]:
    string = []
    for k in range(j):
        string += [2 * k, 2 * k + 1]
    sfac = 1j ** j
    if op == "z":
        return [(1j, (2 * j, 2 * j + 1))]
    if op == "x":
        return [(sfac, tuple(string) + (2 * j,))]
    if op == "y":
        return [(-sfac, tuple(string) + (2 * j + 1,))]
    if op == "i":
        return [(1.0, ())]
    raise ValidationError(f"unknown Pauli letter {op!r}")


def pauli_to_majorana(ops: Mapping[int, str], coef: complex = 1.0) -> Monomial:
    """Majorana monomial equal to coef * prod_j sigma^{ops[j]}_j (ordered by site)."""
    c = complex(coef)
    factors: list[int] = []
    for j in sorted(ops):
        (fc, idx), = _local_factors(ops[j].lower(), j)
        c *= fc
        factors.extend(idx)
    return normal_order(c, factors)


def parse_pauli(text: str) -> dict[int, str]:
    """Parse strings such as ``"x0 z3"`` or ``"x0z3"`` into {site: letter}."""
    import re
    toks = re.findall(r"([xyzXYZ])\s*(\d+)", text)
    if not toks or "".join(f"{a}{b}" for a, b in toks) != re.sub(r"\s+", "", text):
        raise ValidationError(f"cannot parse Pauli string {text!r}")
    out: dict[int, str] = {}
    for letter, site in toks:
        s = int(site)
        if s in out:
            raise ValidationError(f"site {s} repeated in Pauli string {text!r}")
        out[s] = letter.lower()
    return out
