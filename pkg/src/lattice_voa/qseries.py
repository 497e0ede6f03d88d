"""Exact truncated q-series and the genus-one series of a lattice VOA."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .lattice_core import Lattice, LatticeError, enumerate_by_norm, orthogonal_frame

Coeff = Union[int, Fraction]


def _normalize(c: Coeff) -> Coeff:
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    if isinstance(c, bool):
        return int(c)
    return c


@dataclass(frozen=True)
class QSeries:
    """q^prefactor * sum_{n=0}^{N} coeffs[n] q^n, known modulo q^{N+1}."""

    coeffs: tuple[Coeff, ...]
    prefactor: Fraction = Fraction(0)

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a QSeries needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", tuple(_normalize(c) for c in self.coeffs))
        object.__setattr__(self, "prefactor", Fraction(self.prefactor))

    @classmethod
    def one(cls, order: int) -> "QSeries":
        return cls((1,) + (0,) * order)

    @classmethod
    def from_list(cls, coeffs: Iterable[Coeff], order: int | None = None, prefactor: Fraction | int = 0) -> "QSeries":
        cs = list(coeffs)
        if order is not None:
            cs = (cs + [0] * (order + 1))[: order + 1]
        return cls(tuple(cs), Fraction(prefactor))

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Coeff:
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def truncate(self, order: int) -> "QSeries":
        if order > self.truncation:
            raise ValueError(f"cannot extend truncation {self.truncation} to {order}")
        return QSeries(self.coeffs[: order + 1], self.prefactor)

    def __add__(self, other: "QSeries") -> "QSeries":
        return series_add(self, other)

    def __sub__(self, other: "QSeries") -> "QSeries":
        return series_add(self, -other)

    def __neg__(self) -> "QSeries":
        return QSeries(tuple(-c for c in self.coeffs), self.prefactor)

    def __mul__(self, other: "QSeries | int | Fraction") -> "QSeries":
        if isinstance(other, (int, Fraction)):
            return QSeries(tuple(c * other for c in self.coeffs), self.prefactor)
        return series_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "QSeries":
        return series_pow(self, k)

    def __repr__(self) -> str:
        head = ", ".join(str(c) for c in self.coeffs[:8])
        more = ", ..." if len(self.coeffs) > 8 else ""
        pre = f", prefactor={self.prefactor}" if self.prefactor else ""
        return f"QSeries([{head}{more}], N={self.truncation}{pre})"

    # serialization: coefficients travel as decimal strings
    def to_json(self) -> dict:
        return {
            "prefactor": str(self.prefactor),
            "truncation": self.truncation,
            "coeffs": [str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QSeries":
        try:
            coeffs = [Fraction(c) for c in doc["coeffs"]]
            series = cls(tuple(coeffs), Fraction(doc.get("prefactor", "0")))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed series document: {exc}") from exc
        if "truncation" in doc and doc["truncation"] != series.truncation:
            raise ValueError(f"truncation {doc['truncation']} does not match {len(coeffs)} coefficients")
        return series


def _check_same_order(a: QSeries, b: QSeries) -> None:
    if a.truncation != b.truncation:
        raise ValueError(f"truncation mismatch: {a.truncation} vs {b.truncation}")


def series_add(a: QSeries, b: QSeries) -> QSeries:
    _check_same_order(a, b)
    if a.prefactor != b.prefactor:
        raise ValueError(f"cannot add series with prefactors {a.prefactor} and {b.prefactor}")
    return QSeries(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), a.prefactor)


def _mul_lists(a: Sequence[Coeff], b: Sequence[Coeff], order: int) -> list[Coeff]:
    out: list[Coeff] = [0] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if not x:
            continue
        for j, y in enumerate(b[: order + 1 - i]):
            if y:
                out[i + j] += x * y
    return out


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    _check_same_order(a, b)
    return QSeries(tuple(_mul_lists(a.coeffs, b.coeffs, a.truncation)), a.prefactor + b.prefactor)


def series_invert(a: QSeries) -> QSeries:
    """Multiplicative inverse; needs a nonzero constant term."""
    c0 = a.coeffs[0]
    if c0 == 0:
        raise ZeroDivisionError("cannot invert a series with zero constant term")
    n = a.truncation
    inv: list[Coeff] = [0] * (n + 1)
    inv[0] = _normalize(Fraction(1) / c0)
    for k in range(1, n + 1):
        s = sum(a.coeffs[j] * inv[k - j] for j in range(1, k + 1))
        inv[k] = -s * inv[0]
    return QSeries(tuple(inv), -a.prefactor)


def series_pow(a: QSeries, k: int) -> QSeries:
    if k < 0:
        return series_pow(series_invert(a), -k)
    result = QSeries.one(a.truncation)
    base = a
    while k:
        if k & 1:
            result = series_mul(result, base)
        k >>= 1
        if k:
            base = series_mul(base, base)
    return result


def euler_product(order: int) -> QSeries:
    """prod_{n>=1} (1 - q^n) truncated at ``order``."""
    p = QSeries.one(order)
    for n in range(1, order + 1):
        factor = [0] * (order + 1)
        factor[0], factor[n] = 1, -1
        p = series_mul(p, QSeries(tuple(factor)))
    return p


def _sigma(n: int) -> int:
    s = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            s += d
            if d * d != n:
                s += n // d
    return s


def partition_power_series(d: int, order: int) -> QSeries:
    """prod_{n>=1} (1 - q^n)^{-d}: generating function of d-colored partitions.

    Uses n p(n) = d sum_k sigma(k) p(n-k), all in integers.
    """
    if d < 0:
        raise ValueError(f"number of colors must be >= 0, got {d}")
    p = [0] * (order + 1)
    p[0] = 1
    for n in range(1, order + 1):
        s = d * sum(_sigma(k) * p[n - k] for k in range(1, n + 1))
        q, r = divmod(s, n)
        assert r == 0
        p[n] = q
    return QSeries(tuple(p))


# ------------------------------------------------------------- theta series


@lru_cache(maxsize=None)
def _coset_theta_1d(norm: int, residue: int, order: int) -> tuple[int, ...]:
    """sum over m = residue (mod norm) of q^{m^2 / (2 norm)}, exponents in units
    of 1/(2 norm), truncated at q^order."""
    top = 2 * norm * order
    out = [0] * (top + 1)
    bound = math.isqrt(top)
    start = -bound - ((-bound - residue) % norm)
    for m in range(start, bound + 1, norm):
        e = m * m
        if e <= top:
            out[e] += 1
    return tuple(out)


def _frame_cosets(l: Lattice, frame: list[tuple[int, ...]], limit: int) -> tuple[list[int], dict[tuple[int, ...], int]]:
    """Cosets of the frame sublattice, labelled by residues <x, f_i> mod N_i."""
    g = l.gram
    d = l.rank
    norms = [sum(f[i] * g[i][j] * f[j] for i in range(d) for j in range(d)) for f in frame]
    gens = []
    for i in range(d):
        e = [0] * d
        e[i] = 1
        gens.append(tuple(sum(e[a] * g[a][b] * f[b] for a in range(d) for b in range(d)) % n for f, n in zip(frame, norms)))
    zero = tuple(0 for _ in norms)
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for t in frontier:
            for gvec in gens:
                s = tuple((a + b) % n for a, b, n in zip(t, gvec, norms))
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
                    if len(seen) > limit:
                        raise LatticeError(f"frame index of {l.name} exceeds {limit}")
        frontier = nxt
    counts: dict[tuple[int, ...], int] = {}
    for t in seen:
        key = tuple(sorted((n, min(r, n - r)) for n, r in zip(norms, t)))
        counts[key] = counts.get(key, 0) + 1
    return norms, counts


def _theta_via_frame(l: Lattice, order: int, coset_limit: int = 1 << 16) -> QSeries:
    frame = orthogonal_frame(l)
    norms, cosets = _frame_cosets(l, frame, coset_limit)
    prod_n = math.prod(norms)
    index_sq, rem = divmod(prod_n, l.det)
    if rem or math.isqrt(index_sq) ** 2 != index_sq or sum(cosets.values()) != math.isqrt(index_sq):
        raise LatticeError("frame coset count does not match the sublattice index")
    unit = 2 * math.lcm(*norms)  # exponents measured in q^{1/unit}
    top = unit * order
    total = [0] * (top + 1)
    for key, mult in cosets.items():
        acc = [1] + [0] * top
        for n, r in key:
            base = _coset_theta_1d(n, r, order)
            scale = unit // (2 * n)
            spread = [0] * (top + 1)
            for e, c in enumerate(base):
                if c and e * scale <= top:
                    spread[e * scale] = c
            acc = _mul_lists(acc, spread, top)
        for e, c in enumerate(acc):
            total[e] += mult * c
    for e, c in enumerate(total):
        if c and e % unit:
            raise LatticeError(f"non-integral q-exponent {Fraction(e, unit)} in theta of {l.name}; lattice is not even")
    return QSeries(tuple(total[m * unit] for m in range(order + 1)))


def _theta_via_shells(l: Lattice, order: int, cap: int | None = None) -> QSeries:
    shells = enumerate_by_norm(l, 2 * order, cap=cap)
    return QSeries(tuple(shells.count(2 * m) for m in range(order + 1)))


def theta_genus1(l: Lattice, order: int, method: str = "auto", cap: int | None = None) -> QSeries:
    """Theta series sum_v q^{<v,v>/2}; the q^m coefficient counts vectors of norm 2m.

    ``method="frame"`` sums products of one-dimensional coset thetas over the
    cosets of an orthogonal sublattice, so it never lists vectors;
    ``"shells"`` counts enumerated shells; ``"auto"`` tries the frame first.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if l.rank == 0:
        return QSeries.one(order)
    if method == "shells":
        return _theta_via_shells(l, order, cap)
    if method not in ("auto", "frame"):
        raise ValueError(f"unknown theta method {method!r}")
    try:
        return _theta_via_frame(l, order)
    except LatticeError:
        if method == "frame":
            raise
        return _theta_via_shells(l, order, cap)


def graded_dims(l: Lattice, order: int, eta_normalized: bool = False, cap: int | None = None) -> QSeries:
    """dim V_n of the lattice VOA: theta(q) / prod (1-q^n)^rank.

    With ``eta_normalized`` the result carries the q^{-rank/24} prefactor of
    the eta-quotient convention; coefficients are unchanged.
    """
    s = series_mul(theta_genus1(l, order, cap=cap), partition_power_series(l.rank, order))
    if eta_normalized:
        s = QSeries(s.coeffs, Fraction(-l.rank, 24))
    return s


# ----------------------------------------------------------- comparisons


@dataclass(frozen=True)
class SturmVerdict:
    equal: bool
    first_difference: int | None
    window: int
    weight: int

    def to_json(self) -> dict:
        return {
            "verdict": "equal" if self.equal else "unequal",
            "unequal_at": self.first_difference,
            "window": self.window,
            "weight": self.weight,
        }


def sturm_window(weight: int) -> int:
    """Largest n compared: floor(k/12) + 1, inclusive."""
    if weight < 0:
        raise ValueError(f"weight must be >= 0, got {weight}")
    return weight // 12 + 1


def sturm_equal(f: QSeries, g: QSeries, weight: int, full_window: bool = False) -> SturmVerdict:
    """Finite equality test for weight-k q-expansions.

    Compares n = 0..floor(k/12)+1; with ``full_window`` every shared
    coefficient is compared and the smallest disagreement is reported.
    """
    w = sturm_window(weight)
    if f.prefactor != g.prefactor:
        raise ValueError(f"prefactors differ: {f.prefactor} vs {g.prefactor}")
    for s in (f, g):
        if s.truncation < w:
            raise ValueError(f"series truncated at {s.truncation} is shorter than the bound {w} for weight {weight}")
    top = min(f.truncation, g.truncation) if full_window else w
    for n in range(top + 1):
        if f.coeffs[n] != g.coeffs[n]:
            return SturmVerdict(False, n, top, weight)
    return SturmVerdict(True, None, top, weight)


def exact_compare(f: QSeries, g: QSeries) -> SturmVerdict:
    """Coefficientwise comparison over the shared truncation."""
    if f.prefactor != g.prefactor:
        raise ValueError(f"prefactors differ: {f.prefactor} vs {g.prefactor}")
    top = min(f.truncation, g.truncation)
    for n in range(top + 1):
        if f.coeffs[n] != g.coeffs[n]:
            return SturmVerdict(False, n, top, -1)
    return SturmVerdict(True, None, top, -1)


def slope_bound(central_charge: int, vanishing_order: int) -> Fraction:
    """Upper bound c / (2b) on the slope of the effective cone."""
    for label, v in (("central charge", central_charge), ("vanishing order", vanishing_order)):
        if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
            raise ValueError(f"{label} must be a positive integer, got {v!r}")
    return Fraction(central_charge, 2 * vanishing_order)
