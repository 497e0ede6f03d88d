"""Genus-g theta coefficients as representation numbers of vector tuples.

The Fourier coefficient of the genus-g theta series at index T counts
ordered g-tuples (v_1..v_g) with <v_i, v_j> = T_ij.  The search is the
usual depth-first extension with candidate filtering by inner products,
but every level is first split into orbits of the reflection group that
fixes the already chosen vectors.  That group is generated by the
reflections in roots orthogonal to the prefix (Steinberg), so each orbit
is searched once and weighted by its size; the counts stay exact.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lattice_core import Lattice, LatticeError, bareiss_det, default_vector_cap, enumerate_by_norm


@dataclass(frozen=True)
class GramTarget:
    """Symmetric integer g x g matrix with even non-negative diagonal."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        t = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", t)
        g = len(t)
        for i, row in enumerate(t):
            if len(row) != g:
                raise ValueError(f"row {i} of the target has length {len(row)}, expected {g}")
        for i in range(g):
            if t[i][i] < 0 or t[i][i] % 2:
                raise ValueError(f"diagonal entry T[{i}][{i}]={t[i][i]} must be even and >= 0")
            for j in range(i + 1, g):
                if t[i][j] != t[j][i]:
                    raise ValueError(f"T[{i}][{j}]={t[i][j]} differs from T[{j}][{i}]={t[j][i]}")

    @property
    def g(self) -> int:
        return len(self.entries)

    @property
    def trace(self) -> int:
        return sum(self.entries[i][i] for i in range(self.g))

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.entries[i][i] for i in range(self.g))

    def flat(self) -> tuple[int, ...]:
        return tuple(x for row in self.entries for x in row)

    def sort_key(self) -> tuple:
        return (self.trace, self.entries)

    def is_psd(self) -> bool:
        """Exact test: every principal minor is non-negative."""
        idx = range(self.g)
        for k in range(1, self.g + 1):
            for sub in itertools.combinations(idx, k):
                if bareiss_det([[self.entries[i][j] for j in sub] for i in sub]) < 0:
                    return False
        return True

    def transformed(self, u: Sequence[Sequence[int]]) -> "GramTarget":
        """U^T T U."""
        g = self.g
        t = self.entries
        return GramTarget(tuple(
            tuple(sum(u[a][i] * t[a][b] * u[b][j] for a in range(g) for b in range(g)) for j in range(g))
            for i in range(g)
        ))

    def permuted(self, perm: Sequence[int]) -> "GramTarget":
        return GramTarget(tuple(tuple(self.entries[i][j] for j in perm) for i in perm))

    def to_json(self) -> dict:
        return {"g": self.g, "t": [list(r) for r in self.entries]}

    @classmethod
    def from_json(cls, doc: dict) -> "GramTarget":
        t = cls(tuple(map(tuple, doc["t"])))
        if "g" in doc and doc["g"] != t.g:
            raise ValueError(f"declared g={doc['g']} but the matrix is {t.g}x{t.g}")
        return t

    def __repr__(self) -> str:
        return f"GramTarget({[list(r) for r in self.entries]})"


@dataclass
class RepTable:
    lattice: Lattice
    g: int
    max_diag: int
    table: dict[GramTarget, int]

    def __getitem__(self, t: GramTarget) -> int:
        if any(x > self.max_diag for x in t.diagonal):
            raise KeyError(f"{t} has a diagonal entry beyond max_diag={self.max_diag}")
        return self.table.get(t, 0)

    def total(self) -> int:
        return sum(self.table.values())

    def sorted_items(self) -> list[tuple[GramTarget, int]]:
        return sorted(self.table.items(), key=lambda kv: kv[0].sort_key())

    def write_tsv(self, path) -> None:
        g = self.g
        header = [f"t{i + 1}{j + 1}" for i in range(g) for j in range(g)] + ["count"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(header)
            for t, c in self.sorted_items():
                w.writerow(list(t.flat()) + [c])


def read_rep_table_tsv(path) -> dict[GramTarget, int]:
    out: dict[GramTarget, int] = {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or rows[0][-1] != "count":
        raise ValueError(f"{path}: missing header ending in 'count'")
    g = math.isqrt(len(rows[0]) - 1)
    if g * g != len(rows[0]) - 1:
        raise ValueError(f"{path}: header does not describe a square matrix")
    for line in rows[1:]:
        vals = [int(x) for x in line]
        t = GramTarget(tuple(tuple(vals[i * g:(i + 1) * g]) for i in range(g)))
        out[t] = vals[-1]
    return out


# ------------------------------------------------------------- point sets


class _PointSet:
    """All vectors of norm <= max_norm, plus the lattice roots and lookup."""

    def __init__(self, l: Lattice, max_norm: int, cap: int | None):
        self.lattice = l
        shells = enumerate_by_norm(l, max(max_norm, 2), cap=cap)
        x, norms = shells.stacked()
        keep = norms <= max_norm
        self.x = np.ascontiguousarray(x[keep])
        self.norms = norms[keep]
        self.roots = shells.shell(2)
        self.gram = l.gram_array.astype(float)
        self.gx = self.x.astype(float) @ self.gram
        d = l.rank
        self._void = np.dtype((np.void, 8 * d)) if d else None
        if d:
            keys = self.x.view(self._void).ravel()
            self._order = np.argsort(keys, kind="stable")
            self._sorted = keys[self._order]

    def __len__(self) -> int:
        return len(self.x)

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        keys = np.ascontiguousarray(rows, dtype=np.int64).view(self._void).ravel()
        pos = np.searchsorted(self._sorted, keys)
        pos = np.minimum(pos, len(self._sorted) - 1)
        idx = self._order[pos]
        if not np.array_equal(self.x[idx], rows):
            raise AssertionError("reflection image left the enumerated point set")
        return idx

    def ips(self, vecs: np.ndarray) -> np.ndarray:
        """Inner products of every point with each row of ``vecs`` (N x k ints)."""
        if len(vecs) == 0:
            return np.zeros((len(self.x), 0), dtype=np.int64)
        return np.rint(self.gx @ vecs.T.astype(float)).astype(np.int64)

    def stabilizer_generators(self, prefix: np.ndarray) -> np.ndarray:
        """Simple roots of the root subsystem orthogonal to ``prefix``."""
        roots = self.roots
        if len(roots) and len(prefix):
            ip = np.rint(roots.astype(float) @ self.gram @ prefix.T.astype(float)).astype(np.int64)
            roots = roots[np.all(ip == 0, axis=1)]
        if len(roots) == 0:
            return roots
        return _simple_roots(roots)


def _simple_roots(roots: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng(12345)
    d = roots.shape[1]
    for _ in range(64):
        f = rng.integers(1, 1 << 20, size=d)
        val = roots @ f
        if np.all(val != 0):
            break
    else:  # pragma: no cover - 64 random functionals all degenerate
        raise AssertionError("could not find a regular functional for the root system")
    pos = roots[val > 0]
    pos_set = {row.tobytes() for row in pos}
    simple = []
    for a in pos:
        diff = a[None, :] - pos
        if not any(row.tobytes() in pos_set for row in diff):
            simple.append(a)
    return np.array(simple, dtype=np.int64).reshape(-1, d)


def _orbits(ps: _PointSet, subset: np.ndarray, gens: np.ndarray) -> list[tuple[int, int]]:
    """(representative, size) for the orbits of <reflections in gens> on ``subset``.

    ``subset`` must be invariant under the group.  Representatives are the
    smallest point index in each orbit, so output order is deterministic.
    """
    n = len(subset)
    if n == 0:
        return []
    if len(gens) == 0:
        return [(int(i), 1) for i in subset]
    local = np.full(len(ps), -1, dtype=np.int64)
    local[subset] = np.arange(n)
    rows, cols = [], []
    pts = ps.x[subset]
    gpts = ps.gx[subset]
    for a in gens:
        ip = np.rint(gpts @ a.astype(float)).astype(np.int64)
        moved = np.nonzero(ip)[0]
        if len(moved) == 0:
            continue
        img = pts[moved] - ip[moved, None] * a[None, :]
        target = local[ps.lookup(img)]
        if np.any(target < 0):
            raise AssertionError("candidate set is not invariant under the stabilizer")
        rows.append(moved)
        cols.append(target)
    if not rows:
        return [(int(i), 1) for i in subset]
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n)).tocsr()
    ncomp, labels = connected_components(graph, directed=True, connection="weak")
    sizes = np.bincount(labels, minlength=ncomp)
    reps = np.full(ncomp, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(reps, labels, subset)
    out = sorted((int(reps[k]), int(sizes[k])) for k in range(ncomp))
    return out


@lru_cache(maxsize=8)
def _point_set(l: Lattice, max_norm: int, cap: int | None) -> _PointSet:
    return _PointSet(l, max_norm, cap)


# ------------------------------------------------------------- operations


def representation_number(l: Lattice, t: GramTarget, cap: int | None = None) -> int:
    """Number of ordered tuples (v_1..v_g) of lattice vectors with Gram matrix T."""
    if not t.is_psd():
        return 0
    if t.g == 0:
        return 1
    ps = _point_set(l, max(t.diagonal), cap)
    ent = np.array(t.entries, dtype=np.int64)
    by_norm = {n: np.nonzero(ps.norms == n)[0] for n in set(t.diagonal)}

    def rec(prefix: list[int]) -> int:
        level = len(prefix)
        cand = by_norm[t.entries[level][level]]
        if level:
            pv = ps.x[prefix]
            ip = np.rint(ps.gx[cand] @ pv.T.astype(float)).astype(np.int64)
            cand = cand[np.all(ip == ent[level, :level], axis=1)]
        if level == t.g - 1:
            return len(cand)
        gens = ps.stabilizer_generators(ps.x[prefix])
        return sum(size * rec(prefix + [rep]) for rep, size in _orbits(ps, cand, gens))

    return rec([])


def _decode_leaf(keys: np.ndarray, level: int, max_diag: int):
    m = max_diag
    base_n = m // 2 + 1
    norm = (keys % base_n) * 2
    rest = keys // base_n
    ips = []
    for _ in range(level):
        ips.append(rest % (2 * m + 1) - m)
        rest //= 2 * m + 1
    return norm, ips


def rep_table(l: Lattice, g: int, max_diag: int, cap: int | None = None, method: str = "auto") -> RepTable:
    """Every nonzero representation number with all diagonal entries <= max_diag.

    At genus 1 the table is read off the theta series unless ``method`` is
    ``"search"``, which forces the tuple search used for higher genus.
    """
    if g < 1:
        raise ValueError(f"genus must be >= 1, got {g}")
    if max_diag < 0 or max_diag % 2:
        raise ValueError(f"max_diag must be a non-negative even integer, got {max_diag}")
    if method not in ("auto", "search"):
        raise ValueError(f"unknown method {method!r}")
    if g == 1 and method == "auto":
        from .qseries import theta_genus1

        th = theta_genus1(l, max_diag // 2, cap=cap)
        return RepTable(l, 1, max_diag, {GramTarget(((2 * m,),)): int(c) for m, c in enumerate(th.coeffs) if c})
    cap = default_vector_cap() if cap is None else cap
    ps = _point_set(l, max_diag, cap)
    acc: dict[tuple[int, ...], int] = {}
    m = max(max_diag, 1)
    base_n = max_diag // 2 + 1
    all_idx = np.arange(len(ps))

    def leaf(prefix: list[int], weight: int) -> None:
        level = len(prefix)
        key = ps.norms // 2
        if level:
            ip = ps.ips(ps.x[prefix])
            mult = base_n
            for j in range(level):
                key = key + (ip[:, j] + m) * mult
                mult *= 2 * m + 1
        uniq, counts = np.unique(key, return_counts=True)
        norm, ips = _decode_leaf(uniq, level, m) if level else ((uniq % base_n) * 2, [])
        pg = [[int(ps.x[a] @ l.gram_array @ ps.x[b]) for b in prefix] for a in prefix]
        for i in range(len(uniq)):
            last = tuple(int(ips[j][i]) for j in range(level))
            flat = []
            for a in range(level):
                flat.extend(pg[a][: a + 1])
            for j in range(level):
                flat.append(last[j])
            flat.append(int(norm[i]))
            k = tuple(flat)
            acc[k] = acc.get(k, 0) + weight * int(counts[i])

    def rec(prefix: list[int], weight: int) -> None:
        if len(prefix) == g - 1:
            leaf(prefix, weight)
            return
        gens = ps.stabilizer_generators(ps.x[prefix] if prefix else np.zeros((0, l.rank), np.int64))
        for rep, size in _orbits(ps, all_idx, gens):
            rec(prefix + [rep], weight * size)

    rec([], 1)
    table = {_from_lower(k, g): c for k, c in acc.items()}
    return RepTable(l, g, max_diag, table)


def _from_lower(flat: tuple[int, ...], g: int) -> GramTarget:
    """Rebuild a symmetric matrix from its lower triangle listed row by row."""
    t = [[0] * g for _ in range(g)]
    pos = 0
    for i in range(g):
        for j in range(i + 1):
            t[i][j] = t[j][i] = flat[pos]
            pos += 1
    return GramTarget(tuple(map(tuple, t)))


def schottky_difference_report(a: Lattice, b: Lattice, g: int, max_diag: int, cap: int | None = None
                               ) -> list[tuple[GramTarget, int, int]]:
    """Targets in the window where the two lattices' theta coefficients differ,
    ordered by trace and then lexicographically."""
    if a.rank != b.rank:
        raise LatticeError(f"rank mismatch: {a.name} has rank {a.rank}, {b.name} has rank {b.rank}")
    ta = rep_table(a, g, max_diag, cap)
    tb = rep_table(b, g, max_diag, cap) if b != a else ta
    keys = set(ta.table) | set(tb.table)
    diffs = [(t, ta.table.get(t, 0), tb.table.get(t, 0)) for t in keys if ta.table.get(t, 0) != tb.table.get(t, 0)]
    diffs.sort(key=lambda row: row[0].sort_key())
    return diffs


def naive_representation_number(l: Lattice, t: GramTarget) -> int:
    """Plain nested enumeration over shells, no symmetry; a test oracle."""
    if t.g == 0:
        return 1
    top = max(t.diagonal)
    shells = enumerate_by_norm(l, top)
    gram = l.gram_array

    def rec(prefix: list[np.ndarray]) -> int:
        level = len(prefix)
        cand = shells.shell(t.entries[level][level])
        for j, p in enumerate(prefix):
            cand = cand[(cand @ gram @ p) == t.entries[level][j]]
        if level == t.g - 1:
            return len(cand)
        return sum(rec(prefix + [v]) for v in cand)

    return rec([])
