"""Exact Fock-space model of a lattice vertex algebra.

States are finite sums of monomials f_{k1}(-m1)...f_{kr}(-mr) e^alpha where
the Heisenberg colors f_k form an orthogonal frame of lattice vectors (so
[f_k(m), f_l(n)] = m <f_k, f_k> delta_{kl} delta_{m+n,0} with integer
norms) and alpha is given in lattice-basis coordinates.

Vertex operators of pure lattice states use the exponential formula

    Y(e^a, z) = eps(a, .) E^-(a, z) E^+(a, z) e_a z^{a(0)},

and modes of states carrying Heisenberg factors are peeled one factor at a
time with the iterate (Borcherds) formula

    (f(-m) v)_p = sum_j C(m+j-1, j) [ f(-m-j) v_{p+j} + (-1)^{m+1} v_{p-m-j} f(j) ],

whose sums are finite on any given state.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, lcm
from typing import Iterable, Iterator, NamedTuple, Sequence

from ..lattice_core import Lattice, enumerate_by_norm, orthogonal_frame
from ..errors import TruncationError

# memoized mode results are dropped wholesale past this many entries
MODE_CACHE_LIMIT = 1_500_000


class FockState(NamedTuple):
    """Basis monomial: colored partition (mode, color) pairs and a lattice vector.

    ``heis`` is kept sorted by descending mode, then color, so equal states
    compare equal syntactically.
    """

    heis: tuple[tuple[int, int], ...]
    vec: tuple[int, ...]


def _hkey(pair: tuple[int, int]) -> tuple[int, int]:
    return (-pair[0], pair[1])


def canonical_heis(pairs: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(pairs, key=_hkey))


class StateVector(dict):
    """Finite linear combination of FockStates with exact coefficients."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for k in [k for k, v in self.items() if v == 0]:
            del self[k]

    def scaled(self, c) -> "StateVector":
        if c == 0:
            return StateVector()
        return StateVector({k: v * c for k, v in self.items()})

    def __add__(self, other: dict) -> "StateVector":
        out = StateVector(self)
        _accumulate(out, other, 1)
        return out

    def __sub__(self, other: dict) -> "StateVector":
        out = StateVector(self)
        _accumulate(out, other, -1)
        return out

    def __repr__(self) -> str:
        if not self:
            return "StateVector(0)"
        parts = [f"{c}*{_fmt_state(s)}" for s, c in sorted(self.items())[:6]]
        more = f" + ... ({len(self)} terms)" if len(self) > 6 else ""
        return "StateVector(" + " + ".join(parts) + more + ")"


def _fmt_state(s: FockState) -> str:
    h = "".join(f"f{k}({-m})" for m, k in s.heis)
    return f"{h}e^{list(s.vec)}" if h else f"e^{list(s.vec)}"


def _accumulate(acc: dict, other: dict, scale=1) -> None:
    for k, v in other.items():
        nv = acc.get(k, 0) + v * scale
        if nv:
            acc[k] = nv
        else:
            acc.pop(k, None)


def _normal(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


class LatticeVOA:
    """Truncation-free exact model of V_L for an even positive-definite lattice."""

    def __init__(self, lattice: Lattice):
        self.lattice = lattice
        self.rank = d = lattice.rank
        self.gram = lattice.gram
        # Heisenberg colors: mutually orthogonal lattice vectors spanning the space
        self.frame = [tuple(v) for v in orthogonal_frame(lattice)]
        g = self.gram
        self.frame_dual = [tuple(sum(g[i][j] * f[j] for j in range(d)) for i in range(d)) for f in self.frame]
        self.fnorm = [sum(f[i] * gf[i] for i in range(d)) for f, gf in zip(self.frame, self.frame_dual)]
        # cocycle: eps(a, b) = (-1)^{a^T E b}, E strictly lower part of gram plus half its diagonal
        self._eps_matrix = [[g[i][j] if i > j else (g[i][i] // 2 if i == j else 0) for j in range(d)] for i in range(d)]
        self._norms: dict[tuple[int, ...], int] = {}
        self._mode_cache: dict = {}
        self._eminus_cache: dict = {}
        self._pair_cache: dict = {}
        self._coords_cache: dict = {}
        self._sugawara_cache: dict = {}
        self._basis_cache: dict[int, list[FockState]] = {}
        self._shells = None

    # ---------------------------------------------------------------- basics

    def norm(self, vec: Sequence[int]) -> int:
        vec = tuple(vec)
        n = self._norms.get(vec)
        if n is None:
            g = self.gram
            d = self.rank
            n = sum(vec[i] * g[i][j] * vec[j] for i in range(d) if vec[i] for j in range(d) if vec[j])
            self._norms[vec] = n
        return n

    def ip(self, a: Sequence[int], b: Sequence[int]) -> int:
        g = self.gram
        d = self.rank
        return sum(a[i] * g[i][j] * b[j] for i in range(d) if a[i] for j in range(d) if b[j])

    def weight(self, s: FockState) -> int:
        return sum(m for m, _ in s.heis) + self.norm(s.vec) // 2

    def frame_coords(self, vec: Sequence[int]) -> tuple[int, ...]:
        """<vec, f_k> for every frame color k."""
        return tuple(sum(v * x for v, x in zip(vec, fd)) for fd in self.frame_dual)

    def eps(self, a: Sequence[int], b: Sequence[int]) -> int:
        e = self._eps_matrix
        d = self.rank
        s = sum(a[i] * e[i][j] * b[j] for i in range(d) if a[i] for j in range(i + 1) if b[j] and e[i][j])
        return -1 if s % 2 else 1

    def zero_vec(self) -> tuple[int, ...]:
        return (0,) * self.rank

    def vacuum(self) -> FockState:
        return FockState((), self.zero_vec())

    def clear_caches(self) -> None:
        self._mode_cache.clear()
        self._sugawara_cache.clear()

    # ------------------------------------------------------------- graded bases

    def shells(self, max_norm: int):
        if self._shells is None or self._shells.max_norm < max_norm:
            self._shells = enumerate_by_norm(self.lattice, max_norm)
        return self._shells

    def graded_basis(self, n: int) -> list[FockState]:
        if n < 0:
            return []
        if n not in self._basis_cache:
            sh = self.shells(2 * n)
            out = []
            for h in range(n + 1):
                vecs = sh.vectors(2 * (n - h))
                parts = list(colored_partitions(h, self.rank))
                for v in vecs:
                    for p in parts:
                        out.append(FockState(p, v))
            self._basis_cache[n] = out
        return self._basis_cache[n]

    # ------------------------------------------------------------- Heisenberg

    def heis_apply_state(self, k: int, n: int, s: FockState) -> dict:
        """f_k(n) applied to a single monomial."""
        if n < 0:
            return {FockState(canonical_heis(s.heis + ((-n, k),)), s.vec): 1}
        if n == 0:
            c = sum(v * x for v, x in zip(s.vec, self.frame_dual[k]))
            return {s: c} if c else {}
        cnt = s.heis.count((n, k))
        if not cnt:
            return {}
        lst = list(s.heis)
        lst.remove((n, k))
        return {FockState(tuple(lst), s.vec): cnt * n * self.fnorm[k]}

    def heis_apply(self, k: int, n: int, x: dict) -> dict:
        out: dict = {}
        for s, c in x.items():
            for t, c2 in self.heis_apply_state(k, n, s).items():
                nv = out.get(t, 0) + c * c2
                if nv:
                    out[t] = nv
                else:
                    out.pop(t, None)
        return out

    # --------------------------------------------------------- lattice fields

    def _eplus(self, ak: tuple[int, ...], heis: tuple[tuple[int, int], ...], max_removed: int) -> list[tuple[tuple, int, int]]:
        """E^+(a, z) on a Heisenberg monomial: (remaining monomial, annihilated weight, coeff).

        Terms annihilating more than ``max_removed`` weight are dropped.
        """
        runs: list[list] = []
        for pair in heis:
            if runs and runs[-1][0] == pair:
                runs[-1][1] += 1
            else:
                runs.append([pair, 1])
        if not any(ak[pair[1]] for pair, _ in runs):
            return [(heis, 0, 1)]
        out = [((), 0, 1)]
        for (m, k), c in runs:
            a = ak[k]
            nxt = []
            for rest, removed, coeff in out:
                for j in range(c + 1 if a else 1):
                    r = removed + m * j
                    if r > max_removed:
                        break
                    keep = c - j
                    nxt.append((rest + ((m, k),) * keep, r, coeff * (-a) ** j * comb(c, j) if j else coeff))
            out = nxt
        return out

    def _eminus(self, vec: tuple[int, ...], s: int) -> dict:
        """z^s coefficient of E^-(a, z) = exp(sum_n a(-n) z^n / n) as monomial -> coeff."""
        key = (vec, s)
        hit = self._eminus_cache.get(key)
        if hit is not None:
            return hit
        ak = self._frame_coords_cached(vec)
        ck = [Fraction(a, f) for a, f in zip(ak, self.fnorm)]
        colors = [k for k in range(self.rank) if ak[k]]
        out: dict = {}
        for parts in _partitions_with_mults(s, colors):
            coeff = Fraction(1)
            for (m, k), mult in parts:
                coeff *= (ck[k] / m) ** mult / factorial(mult)
            mono = canonical_heis(pair for pair, mult in parts for _ in range(mult))
            out[mono] = _normal(coeff)
        self._eminus_cache[key] = out
        return out

    def _pair_data(self, vec: tuple[int, ...], beta: tuple[int, ...]) -> tuple[int, int, tuple[int, ...]]:
        key = (vec, beta)
        hit = self._pair_cache.get(key)
        if hit is None:
            hit = (self.ip(vec, beta), self.eps(vec, beta), tuple(a + b for a, b in zip(vec, beta)))
            self._pair_cache[key] = hit
        return hit

    def _frame_coords_cached(self, vec: tuple[int, ...]) -> tuple[int, ...]:
        hit = self._coords_cache.get(vec)
        if hit is None:
            hit = self._coords_cache[vec] = self.frame_coords(vec)
        return hit

    def lattice_mode(self, vec: tuple[int, ...], p: int, s: FockState) -> dict:
        """(e^vec)_p applied to a monomial."""
        ab, sign, new_vec = self._pair_data(vec, s.vec)
        base = -p - 1 - ab
        if base + sum(m for m, _ in s.heis) < 0:
            return {}
        ak = self._frame_coords_cached(vec)
        out: dict = {}
        for rest, removed, c1 in self._eplus(ak, s.heis, 1 << 30):
            deg = base + removed
            if deg < 0:
                continue
            c1 *= sign
            for mono, c2 in self._eminus(vec, deg).items():
                st = FockState(canonical_heis(rest + mono) if rest and mono else rest or mono, new_vec)
                nv = out.get(st, 0) + c1 * c2
                if nv:
                    out[st] = nv
                else:
                    out.pop(st, None)
        return out

    def _eminus_coefficient(self, ak: tuple[int, ...], mono: tuple[tuple[int, int], ...]) -> Fraction | int:
        """Coefficient of one monomial in E^-(a, z), i.e. prod (a_k / (m D_k))^j / j!."""
        coeff = Fraction(1)
        for (m, k), j in Counter(mono).items():
            if not ak[k]:
                return 0
            coeff *= Fraction(ak[k], m * self.fnorm[k]) ** j / factorial(j)
        return _normal(coeff)

    def lattice_coefficient(self, vec: tuple[int, ...], p: int, s: FockState, target: FockState) -> Fraction | int:
        """Coefficient of ``target`` in (e^vec)_p s without building the whole output."""
        ab, sign, new_vec = self._pair_data(vec, s.vec)
        if new_vec != target.vec:
            return 0
        base = -p - 1 - ab
        ak = self._frame_coords_cached(vec)
        want = Counter(target.heis)
        total = 0
        for rest, removed, c1 in self._eplus(ak, s.heis, 1 << 30):
            deg = base + removed
            if deg < 0:
                continue
            diff = Counter(want)
            diff.subtract(rest)
            if any(v < 0 for v in diff.values()):
                continue
            mono = canonical_heis(diff.elements())
            if sum(m for m, _ in mono) != deg:
                continue
            c2 = self._eminus_coefficient(ak, mono)
            if c2:
                total += sign * c1 * c2
        return total

    def mode_coefficient(self, u: FockState, p: int, c: FockState, target: FockState) -> Fraction | int:
        """Coefficient of ``target`` in u_p c."""
        if self.weight(u) + self.weight(c) - p - 1 != self.weight(target):
            return 0
        if not u.heis and any(u.vec):
            key = (u, p, c)
            hit = self._mode_cache.get(key)
            if hit is not None:
                return hit.get(target, 0)
            return self.lattice_coefficient(u.vec, p, c, target)
        return self.mode(u, p, c).get(target, 0)

    def coefficient_of(self, target: FockState, u: dict, p: int, b: dict) -> Fraction | int:
        """Coefficient of ``target`` in u_p b (bilinear in u and b)."""
        total = 0
        for us, uc in u.items():
            for bs, bc in b.items():
                if tuple(x + y for x, y in zip(us.vec, bs.vec)) != target.vec:
                    continue
                c = self.mode_coefficient(us, p, bs, target)
                if c:
                    total += uc * bc * c
        return total

    # ----------------------------------------------------------- general modes

    def mode(self, u: FockState, p: int, c: FockState) -> dict:
        """u_p c for basis monomials; result dict must not be mutated."""
        key = (u, p, c)
        hit = self._mode_cache.get(key)
        if hit is not None:
            return hit
        wu, wc = self.weight(u), self.weight(c)
        if wu + wc - p - 1 < 0:
            res: dict = {}
        elif not u.heis:
            if any(u.vec):
                res = self.lattice_mode(u.vec, p, c)
            else:
                res = {c: 1} if p == -1 else {}
        elif len(u.heis) == 1 and u.heis[0][0] == 1 and not any(u.vec):
            # Y(f(-1)1, z) is the free field f(z) itself
            res = self.heis_apply_state(u.heis[0][1], p, c)
        else:
            (m, k), v = u.heis[0], FockState(u.heis[1:], u.vec)
            wv = wu - m
            res = {}
            for j in range(0, wv + wc - p):
                inner = self.mode(v, p + j, c)
                if inner:
                    _accumulate(res, self.heis_apply(k, -m - j, inner), comb(m + j - 1, j))
            sgn = -1 if m % 2 == 0 else 1
            js = {0} | {n for n, kk in c.heis if kk == k}
            for j in sorted(js):
                for st, cf in self.heis_apply_state(k, j, c).items():
                    inner = self.mode(v, p - m - j, st)
                    if inner:
                        _accumulate(res, inner, sgn * comb(m + j - 1, j) * cf)
        if len(self._mode_cache) >= MODE_CACHE_LIMIT:
            self._mode_cache.clear()
        self._mode_cache[key] = res
        return res

    def mode_action(self, u: dict, p: int, b: dict, trunc: int | None = None) -> StateVector:
        """u_p b for state vectors (bilinear extension of ``mode``)."""
        out: dict = {}
        for us, uc in u.items():
            wu = self.weight(us)
            for bs, bc in b.items():
                w_out = wu + self.weight(bs) - p - 1
                if w_out < 0:
                    continue
                if trunc is not None and w_out > trunc:
                    raise TruncationError(f"output weight {w_out} exceeds truncation {trunc}")
                r = self.mode(us, p, bs)
                if r:
                    _accumulate(out, r, uc * bc)
        return StateVector(out)

    # -------------------------------------------------------------- the form

    def fock_norm(self, heis: tuple[tuple[int, int], ...]) -> int:
        """<x, x> for a Heisenberg monomial under f(m)^T = f(-m)."""
        val = 1
        for (m, k), c in Counter(heis).items():
            val *= (m * self.fnorm[k]) ** c * factorial(c)
        return val

    def form_basis(self, s: FockState, t: FockState) -> int:
        """Bilinear form on monomials: Fock pairing times eps(a, -a) on e^a, e^{-a}."""
        if s.heis != t.heis:
            return 0
        if any(a + b for a, b in zip(s.vec, t.vec)):
            return 0
        sign = self.eps(s.vec, t.vec)
        return sign * self.fock_norm(s.heis)

    def form(self, u: dict, v: dict) -> Fraction | int:
        total = 0
        for s, a in u.items():
            neg = tuple(-x for x in s.vec)
            for t, b in v.items():
                if t.vec == neg and t.heis == s.heis:
                    total += a * b * self.form_basis(s, t)
        return _normal(Fraction(total)) if isinstance(total, Fraction) else total

    def vacuum_pairing(self, s: FockState, t: FockState) -> Fraction | int:
        """Vacuum coefficient of s_{2k-1} t for weight-k monomials."""
        k = self.weight(s)
        if self.weight(t) != k:
            return 0
        return self.mode(s, 2 * k - 1, t).get(self.vacuum(), 0)

    # -------------------------------------------------------- conformal vector

    def conformal_vector(self) -> StateVector:
        """omega = 1/2 sum_k f_k(-1)^2 1 / <f_k, f_k>."""
        z = self.zero_vec()
        return StateVector({FockState(((1, k), (1, k)), z): Fraction(1, 2 * self.fnorm[k]) for k in range(self.rank)})

    def virasoro(self, m: int, b: dict) -> StateVector:
        """L_m b = omega_{m+1} b."""
        return self.mode_action(self.conformal_vector(), m + 1, b)

    @property
    def sugawara_scale(self) -> int:
        """N = 2 lcm(<f_k, f_k>); N L_m has integer matrix entries."""
        return 2 * lcm(*self.fnorm) if self.rank else 2

    def sugawara(self, m: int, x: dict, scaled: bool = False) -> StateVector:
        """L_m as the normal-ordered free-field sum 1/2 sum_k sum_j :f_k(j) f_k(m-j): / <f_k, f_k>.

        Independent of the vertex-operator recursion; used to cross-check it.
        With ``scaled`` the integral operator N L_m is applied instead.
        """
        out: dict = {}
        for s, c in x.items():
            _accumulate(out, self._sugawara_state(m, s), c)
        if not scaled:
            n = self.sugawara_scale
            out = {k: _normal(Fraction(v, n)) for k, v in out.items()}
        return StateVector(out)

    def _sugawara_state(self, m: int, s: FockState) -> dict:
        """N L_m on one monomial, integer coefficients."""
        key = (m, s)
        hit = self._sugawara_cache.get(key)
        if hit is not None:
            return hit
        big = self.sugawara_scale
        ck = self._frame_coords_cached(s.vec)
        counts = Counter(s.heis)
        out: dict = {}

        def emit(heis_counts: Counter, coeff: int) -> None:
            st = FockState(canonical_heis(heis_counts.elements()), s.vec)
            nv = out.get(st, 0) + coeff
            if nv:
                out[st] = nv
            else:
                out.pop(st, None)

        for k in range(self.rank):
            dk = self.fnorm[k]
            w = big // (2 * dk)
            c = ck[k]
            if c:
                if m == 0:
                    emit(counts, c * c * w)
                elif m < 0:
                    new = counts.copy()
                    new[(-m, k)] += 1
                    emit(new, 2 * c * w)
                elif counts[(m, k)]:
                    new = counts.copy()
                    new[(m, k)] -= 1
                    emit(new, c * m * counts[(m, k)] * big)
            # two creators: a + b = m, a <= b < 0
            if m < 0:
                for b in range((m + 1) // 2 if m % 2 else m // 2, 0):
                    a = m - b
                    new = counts.copy()
                    new[(-a, k)] += 1
                    new[(-b, k)] += 1
                    emit(new, (1 if a == b else 2) * w)
            for (n, kk), cnt in list(counts.items()):
                if kk != k:
                    continue
                b, a = n, m - n
                if a < 0:
                    # creator a with annihilator b
                    new = counts.copy()
                    new[(b, k)] -= 1
                    new[(-a, k)] += 1
                    emit(new, b * cnt * big)
                elif 0 < a <= b:
                    if a == b:
                        if cnt >= 2:
                            new = counts.copy()
                            new[(b, k)] -= 2
                            emit(new, (b * dk) ** 2 * cnt * (cnt - 1) * w)
                    elif counts[(a, k)]:
                        new = counts.copy()
                        new[(b, k)] -= 1
                        new[(a, k)] -= 1
                        emit(new, 2 * (b * dk) * (a * dk) * cnt * counts[(a, k)] * w)
        if len(self._sugawara_cache) >= MODE_CACHE_LIMIT:
            self._sugawara_cache.clear()
        self._sugawara_cache[key] = out
        return out

    def heisenberg_state(self, i: int, m: int = 1) -> StateVector:
        """h_i(-m) 1 for the lattice basis vector b_i, written in frame colors."""
        coords = self.frame_coords(tuple(int(j == i) for j in range(self.rank)))
        z = self.zero_vec()
        return StateVector({FockState(((m, k),), z): _normal(Fraction(c, self.fnorm[k])) for k, c in enumerate(coords) if c})

    def heisenberg_apply(self, i: int, n: int, x: dict) -> StateVector:
        """h_i(n) applied to a state, for the lattice basis vector b_i."""
        coords = self.frame_coords(tuple(int(j == i) for j in range(self.rank)))
        out: dict = {}
        for k, c in enumerate(coords):
            if c:
                _accumulate(out, self.heis_apply(k, n, x), Fraction(c, self.fnorm[k]))
        return StateVector(out)


def colored_partitions(n: int, colors: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Multisets of (part, color) with parts summing to n, canonical order."""
    pairs = [(m, k) for m in range(n, 0, -1) for k in range(colors)]

    def rec(rem: int, start: int, acc: list):
        if rem == 0:
            yield tuple(acc)
            return
        for i in range(start, len(pairs)):
            m, k = pairs[i]
            if m <= rem:
                acc.append(pairs[i])
                yield from rec(rem - m, i, acc)
                acc.pop()

    if n == 0:
        yield ()
        return
    if colors == 0:
        return
    yield from rec(n, 0, [])


def _partitions_with_mults(n: int, colors: Sequence[int]) -> Iterator[list[tuple[tuple[int, int], int]]]:
    """Colored partitions of n as [((part, color), multiplicity)]."""
    pairs = [(m, k) for m in range(n, 0, -1) for k in colors]

    def rec(rem: int, start: int, acc: list):
        if rem == 0:
            yield list(acc)
            return
        for i in range(start, len(pairs)):
            m, k = pairs[i]
            for mult in range(1, rem // m + 1):
                acc.append(((m, k), mult))
                yield from rec(rem - m * mult, i + 1, acc)
                acc.pop()

    if n == 0:
        yield []
        return
    yield from rec(n, 0, [])


@lru_cache(maxsize=16)
def voa_model(l: Lattice) -> LatticeVOA:
    return LatticeVOA(l)
