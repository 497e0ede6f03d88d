"""Dual bases, trace functions Phi over V_n, and zero-mode Casimir traces."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..errors import CapExceededError, DegenerateFormError, TruncationError
from ..lattice_core import Lattice, rational_inverse
from .model import LatticeVOA, StateVector, _accumulate, voa_model

PAIRINGS = ("form", "vacuum")
EXPANSION_ORDER = "|w_1| > |z_1| > |w_2| > |z_2| > ..."


def default_term_cap() -> int:
    raw = os.environ.get("LATTICE_VOA_MAX_TERMS")
    return int(raw) if raw else 10**6


DualPair = tuple[list[StateVector], list[StateVector]]


def dual_bases(l: Lattice, k: int, pairing: str = "form") -> DualPair:
    """Bases {u_j} of V_k (the graded basis) and {u^j} with <u_j, u^j'> = delta.

    ``pairing="form"`` uses the invariant form; ``"vacuum"`` uses the vacuum
    coefficient of u_{2k-1} v, which agrees with the form on V_0 and V_1.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    model = voa_model(l)
    basis = model.graded_basis(k)
    pair = model.form_basis if pairing == "form" else model.vacuum_pairing
    blocks: dict[tuple[int, ...], list[int]] = {}
    for idx, s in enumerate(basis):
        blocks.setdefault(s.vec, []).append(idx)
    duals: list[StateVector | None] = [None] * len(basis)
    for vec, rows in blocks.items():
        neg = tuple(-x for x in vec)
        cols = blocks.get(neg)
        if cols is None or len(cols) != len(rows):
            raise DegenerateFormError(f"no partner block for lattice vector {list(vec)}")
        mat = [[pair(basis[i], basis[j]) for j in cols] for i in rows]
        if all(mat[i][j] == 0 for i in range(len(rows)) for j in range(len(cols)) if i != j):
            if any(mat[i][i] == 0 for i in range(len(rows))):
                raise DegenerateFormError(f"form degenerate on block {list(vec)}")
            for i, r in enumerate(rows):
                duals[r] = StateVector({basis[cols[i]]: _frac(1, mat[i][i])})
            continue
        try:
            inv = rational_inverse(mat)
        except ZeroDivisionError as exc:
            raise DegenerateFormError(f"form degenerate on block {list(vec)}") from exc
        for i, r in enumerate(rows):
            duals[r] = StateVector({basis[cols[j]]: _norm(inv[j][i]) for j in range(len(cols))})
    return [StateVector({s: 1}) for s in basis], duals  # type: ignore[return-value]


def _frac(a, b):
    return _norm(Fraction(a) / b)


def _norm(c):
    c = Fraction(c)
    return int(c) if c.denominator == 1 else c


def change_dual_basis(duals: DualPair, u: Sequence[Sequence]) -> DualPair:
    """Replace (B, B*) by (B U, B* (U^T)^{-1}) for an invertible rational U."""
    basis, dual = duals
    n = len(basis)
    w = rational_inverse([[u[j][i] for j in range(n)] for i in range(n)])
    new_basis = []
    new_dual = []
    for j in range(n):
        acc: dict = {}
        for i in range(n):
            if u[i][j]:
                _accumulate(acc, basis[i], u[i][j])
        new_basis.append(StateVector(acc))
        acc = {}
        for i in range(n):
            if w[i][j]:
                _accumulate(acc, dual[i], w[i][j])
        new_dual.append(StateVector(acc))
    return new_basis, new_dual


@dataclass(frozen=True)
class LaurentWindow:
    """Coefficients of prod_i w_i^{a_i} z_i^{b_i} inside a box of exponents.

    Exponent tuples are ordered (a_1, b_1, a_2, b_2, ...).  Entries inside the
    window that are not stored are zero; lookups outside it are refused.
    """

    pairs: int
    window: tuple[tuple[int, int], ...]
    coeffs: dict[tuple[int, ...], Fraction | int]
    meta: dict = field(default_factory=dict, compare=False)

    def in_window(self, exps: Sequence[int]) -> bool:
        return len(exps) == len(self.window) and all(lo <= e <= hi for e, (lo, hi) in zip(exps, self.window))

    def coefficient(self, exps: Sequence[int]) -> Fraction | int:
        exps = tuple(exps)
        if not self.in_window(exps):
            raise KeyError(f"exponents {exps} outside window {self.window}")
        return self.coeffs.get(exps, 0)

    __getitem__ = coefficient

    def items(self):
        return sorted(self.coeffs.items())

    def to_json(self) -> dict:
        return {
            "pairs": self.pairs,
            "window": [list(b) for b in self.window],
            "coeffs": [
                {"exps": list(e), "num": str(Fraction(c).numerator), "den": str(Fraction(c).denominator)}
                for e, c in self.items()
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LaurentWindow":
        coeffs = {tuple(e["exps"]): _norm(Fraction(int(e["num"]), int(e["den"]))) for e in data["coeffs"]}
        return cls(int(data["pairs"]), tuple(tuple(b) for b in data["window"]), coeffs, dict(data.get("meta", {})))


def _weight_path(n: int, k: Sequence[int], exps: Sequence[int]) -> list[int] | None:
    """Intermediate weights for one monomial, applying the last factor first; None if some is negative."""
    w = n
    path = [w]
    for i in reversed(range(len(k))):
        a, b = exps[2 * i], exps[2 * i + 1]
        for step in (k[i] + b, k[i] + a):
            w += step
            if w < 0:
                return None
            path.append(w)
    return path


def phi_block(
    l: Lattice,
    n: int,
    k: Sequence[int],
    window: Sequence[tuple[int, int]],
    trunc: int | None = None,
    duals: dict[int, DualPair] | Sequence[DualPair] | None = None,
    pairing: str = "vacuum",
    max_terms: int | None = None,
) -> LaurentWindow:
    """Window of Tr_{V_n} prod_i sum_j Y(u_j, w_i) Y(u^j, z_i).

    The coefficient of prod w_i^{a_i} z_i^{b_i} composes the modes
    (u_j)_{-a_i-1} (u^j)_{-b_i-1}, rightmost factor first.  Only monomials
    with sum_i (a_i + b_i + 2 k_i) = 0 can be nonzero; the rest are zero.
    ``duals`` may supply replacement dual bases, one per factor.
    """
    k = tuple(int(x) for x in k)
    if n < 0 or any(x < 0 for x in k):
        raise ValueError("weights must be non-negative")
    window = tuple((int(lo), int(hi)) for lo, hi in window)
    if len(window) != 2 * len(k):
        raise ValueError(f"window needs {2 * len(k)} exponent bounds, got {len(window)}")
    if any(lo > hi for lo, hi in window):
        raise ValueError("empty window bound")
    model = voa_model(l)
    basis = model.graded_basis(n)
    meta = {"n": n, "k": list(k), "expansion": EXPANSION_ORDER, "pairing": pairing}
    if not k:
        return LaurentWindow(0, (), {(): len(basis)} if basis else {}, meta)

    if duals is None:
        cache: dict[int, DualPair] = {}
        factor_duals = []
        for kk in k:
            if kk not in cache:
                cache[kk] = dual_bases(l, kk, pairing)
            factor_duals.append(cache[kk])
    elif isinstance(duals, dict):
        factor_duals = [duals[kk] for kk in k]
    else:
        factor_duals = list(duals)

    live = []
    needed = n
    for exps in itertools.product(*[range(lo, hi + 1) for lo, hi in window]):
        if sum(exps) + 2 * sum(k) != 0:
            continue
        path = _weight_path(n, k, exps)
        if path is None:
            continue
        live.append(exps)
        needed = max(needed, max(path))
    if trunc is None:
        trunc = needed
    elif needed > trunc:
        raise TruncationError(f"window needs intermediate weight {needed}, truncation is {trunc}")
    meta["trunc"] = trunc

    cap = default_term_cap() if max_terms is None else max_terms
    terms = len(basis) * len(live)
    for b, _ in factor_duals:
        terms *= max(len(b), 1)
    if terms > cap:
        raise CapExceededError("max_terms", cap, f"trace needs {terms} terms, cap max_terms={cap}")

    coeffs: dict[tuple[int, ...], Fraction | int] = {}
    for exps in live:
        total = 0
        for x in basis:
            state: dict = {x: 1}
            for i in reversed(range(len(k))):
                p, r = -exps[2 * i] - 1, -exps[2 * i + 1] - 1
                us, ud = factor_duals[i]
                if i == 0:
                    # last operator: only the coefficient of x is needed
                    for u, v in zip(us, ud):
                        mid = model.mode_action(v, r, state, trunc)
                        if mid:
                            total += model.coefficient_of(x, u, p, mid)
                    break
                nxt: dict = {}
                for u, v in zip(us, ud):
                    mid = model.mode_action(v, r, state, trunc)
                    if mid:
                        _accumulate(nxt, model.mode_action(u, p, mid, trunc))
                state = nxt
                if not state:
                    break
        if total:
            coeffs[exps] = _norm(total)
    return LaurentWindow(len(k), window, coeffs, meta)


def genus0_oracle(dim_vk: int, k: int, window: Sequence[tuple[int, int]]) -> dict[tuple[int, int], Fraction | int]:
    """Coefficients of dim_vk * (w - z)^{-2k} expanded for |z| < |w|.

    (w - z)^{-2k} = sum_b C(2k+b-1, b) w^{-2k-b} z^b.
    """
    from math import comb

    (alo, ahi), (blo, bhi) = window
    out = {}
    for b in range(max(blo, 0), bhi + 1):
        a = -2 * k - b
        if alo <= a <= ahi:
            c = dim_vk * comb(2 * k + b - 1, b) if k else dim_vk * (b == 0)
            if c:
                out[(a, b)] = c
    return out


def casimir_zero_trace(l: Lattice, n: int, t: int, max_terms: int | None = None) -> Fraction | int:
    """Tr_{V_n} of (sum_j (u_j)_0 (u^j)_0)^t over weight-1 dual bases."""
    if t < 0 or n < 0:
        raise ValueError("n and t must be non-negative")
    model = voa_model(l)
    basis = model.graded_basis(n)
    if t == 0:
        return len(basis)
    us, ud = dual_bases(l, 1)
    cap = default_term_cap() if max_terms is None else max_terms
    terms = len(basis) * len(us) * t
    if terms > cap:
        raise CapExceededError("max_terms", cap, f"trace needs {terms} terms, cap max_terms={cap}")
    total = 0
    for x in basis:
        state: dict = {x: 1}
        for _ in range(t - 1):
            nxt: dict = {}
            for u, v in zip(us, ud):
                mid = model.mode_action(v, 0, state)
                if mid:
                    _accumulate(nxt, model.mode_action(u, 0, mid))
            state = nxt
        for u, v in zip(us, ud):
            mid = model.mode_action(v, 0, state)
            if mid:
                total += model.coefficient_of(x, u, 0, mid)
    return _norm(total)


def casimir_operator(model: LatticeVOA, x: dict) -> StateVector:
    """Apply sum_j (u_j)_0 (u^j)_0 once."""
    us, ud = dual_bases(model.lattice, 1)
    out: dict = {}
    for u, v in zip(us, ud):
        mid = model.mode_action(v, 0, x)
        if mid:
            _accumulate(out, model.mode_action(u, 0, mid))
    return StateVector(out)
