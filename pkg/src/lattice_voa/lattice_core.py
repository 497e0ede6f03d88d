"""Even positive-definite integral lattices given by an integer Gram matrix.

Everything downstream (theta series, representation numbers, the Fock-space
model) consumes the exact vector shells produced here.  Vectors are integer
coordinate tuples with respect to the lattice basis; there is no ambient
coordinate model.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceededError, LatticeError

LatticeVector = tuple[int, ...]

DEFAULT_MAX_VECTORS = 10**7
MAX_VECTORS_ENV = "LATTICE_VOA_MAX_VECTORS"


def default_vector_cap() -> int:
    raw = os.environ.get(MAX_VECTORS_ENV)
    if raw is None:
        return DEFAULT_MAX_VECTORS
    try:
        value = int(raw)
    except ValueError as exc:
        raise LatticeError(f"{MAX_VECTORS_ENV}={raw!r} is not an integer") from exc
    if value <= 0:
        raise LatticeError(f"{MAX_VECTORS_ENV} must be positive, got {value}")
    return value


def bareiss_det(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def leading_minors(matrix: Sequence[Sequence[int]]) -> list[int]:
    return [bareiss_det([row[:k] for row in matrix[:k]]) for k in range(1, len(matrix) + 1)]


@dataclass(frozen=True)
class Lattice:
    """An even positive-definite integral lattice.

    ``gram`` holds the basis inner products <b_i, b_j>.  The rank equals the
    central charge of the associated lattice vertex algebra.
    """

    name: str
    gram: tuple[tuple[int, ...], ...]
    unimodular_flag: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        gram = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        validate_gram(gram)
        if self.unimodular_flag is not None and self.unimodular_flag != (self.det == 1):
            raise LatticeError(
                f"lattice {self.name!r} is flagged unimodular={self.unimodular_flag} "
                f"but det(gram)={self.det}"
            )

    @property
    def rank(self) -> int:
        return len(self.gram)

    @cached_property
    def det(self) -> int:
        return bareiss_det(self.gram)

    @property
    def is_unimodular(self) -> bool:
        return self.det == 1

    @cached_property
    def gram_array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64).reshape(self.rank, self.rank)

    @cached_property
    def gram_inverse(self) -> tuple[tuple[Fraction, ...], ...]:
        """Exact inverse Gram matrix (rationals)."""
        return tuple(tuple(row) for row in rational_inverse(self.gram))

    def norm(self, v: Sequence[int]) -> int:
        return inner_product(self, v, v)

    def permuted(self, perm: Sequence[int], name: str | None = None) -> "Lattice":
        """Same lattice with the basis reordered as ``perm``."""
        if sorted(perm) != list(range(self.rank)):
            raise LatticeError(f"{perm!r} is not a permutation of range({self.rank})")
        g = tuple(tuple(self.gram[i][j] for j in perm) for i in perm)
        return Lattice(name or f"{self.name}[perm]", g)

    def __repr__(self) -> str:
        return f"Lattice({self.name!r}, rank={self.rank}, det={self.det})"


def validate_gram(gram: Sequence[Sequence[int]]) -> None:
    """Raise LatticeError naming the first offending entry."""
    n = len(gram)
    for i, row in enumerate(gram):
        if len(row) != n:
            raise LatticeError(f"gram row {i} has length {len(row)}, expected {n}")
    for i in range(n):
        if gram[i][i] % 2:
            raise LatticeError(f"gram[{i}][{i}]={gram[i][i]} is odd; lattice must be even")
        for j in range(i + 1, n):
            if gram[i][j] != gram[j][i]:
                raise LatticeError(
                    f"gram[{i}][{j}]={gram[i][j]} differs from gram[{j}][{i}]={gram[j][i]}; "
                    "gram must be symmetric"
                )
    for k, m in enumerate(leading_minors(gram), start=1):
        if m <= 0:
            raise LatticeError(f"leading principal minor of order {k} is {m}; gram is not positive definite")


def rational_inverse(matrix: Sequence[Sequence[int | Fraction]]) -> list[list[Fraction]]:
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


# ---------------------------------------------------------------- builders

E8_CARTAN = (
    (2, -1, 0, 0, 0, 0, 0, 0),
    (-1, 2, -1, 0, 0, 0, 0, 0),
    (0, -1, 2, -1, 0, 0, 0, -1),
    (0, 0, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, 0),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, 0),
    (0, 0, -1, 0, 0, 0, 0, 2),
)


def _gram_from_rows(rows: Sequence[Sequence[Fraction]]) -> tuple[tuple[int, ...], ...]:
    out = []
    for u in rows:
        line = []
        for v in rows:
            ip = sum((a * b for a, b in zip(u, v)), Fraction(0))
            if ip.denominator != 1:
                raise LatticeError(f"basis inner product {ip} is not integral")
            line.append(int(ip))
        out.append(tuple(line))
    return tuple(out)


def integer_row_basis(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Basis of the Z-span of integer rows (echelon form by Euclidean row ops)."""
    a = [list(map(int, r)) for r in rows]
    ncols = len(a[0]) if a else 0
    basis: list[list[int]] = []
    for col in range(ncols):
        pivot_rows = [r for r in a if r[col] != 0]
        rest = [r for r in a if r[col] == 0]
        while len(pivot_rows) > 1:
            pivot_rows.sort(key=lambda r: abs(r[col]))
            p = pivot_rows[0]
            reduced = [p]
            for r in pivot_rows[1:]:
                q = r[col] // p[col]
                r = [x - q * y for x, y in zip(r, p)]
                (reduced if r[col] != 0 else rest).append(r)
            pivot_rows = reduced
        if pivot_rows:
            p = pivot_rows[0]
            if p[col] < 0:
                p = [-x for x in p]
            basis.append(p)
        a = [r for r in rest if any(r)]
    return basis


def _ambient_dn(n: int) -> list[list[Fraction]]:
    if n == 1:
        return [[Fraction(2)]]
    rows = []
    for i in range(n - 1):
        v = [Fraction(0)] * n
        v[i], v[i + 1] = Fraction(1), Fraction(-1)
        rows.append(v)
    v = [Fraction(0)] * n
    v[n - 2], v[n - 1] = Fraction(1), Fraction(1)
    rows.append(v)
    return rows


def dn_lattice(n: int) -> Lattice:
    if n < 1:
        raise LatticeError(f"D_n needs n >= 1, got {n}")
    return Lattice(f"D{n}", _gram_from_rows(_ambient_dn(n)))


def dn_plus_lattice(n: int) -> Lattice:
    """D_n extended by the glue vector (1/2, ..., 1/2); even unimodular for 8 | n."""
    if n <= 0 or n % 8:
        raise LatticeError(f"D{n}plus is even unimodular only for n divisible by 8")
    gens = _ambient_dn(n) + [[Fraction(1, 2)] * n]
    doubled = [[int(2 * x) for x in row] for row in gens]
    basis = [[Fraction(x, 2) for x in row] for row in integer_row_basis(doubled)]
    if len(basis) != n:
        raise LatticeError("glue construction did not produce a full-rank basis")
    return Lattice(f"D{n}plus", _gram_from_rows(basis))


def an_lattice(n: int) -> Lattice:
    if n < 1:
        raise LatticeError(f"A_n needs n >= 1, got {n}")
    g = [[2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(n)] for i in range(n)]
    return Lattice(f"A{n}", tuple(map(tuple, g)))


def e8_lattice() -> Lattice:
    return Lattice("E8", E8_CARTAN)


def zero_lattice() -> Lattice:
    return Lattice("0", ())


def direct_sum(a: Lattice, b: Lattice) -> Lattice:
    """Orthogonal direct sum; block-diagonal Gram matrix."""
    if b.rank == 0:
        return a
    if a.rank == 0:
        return b
    n, m = a.rank, b.rank
    g = [list(row) + [0] * m for row in a.gram] + [[0] * n + list(row) for row in b.gram]
    return Lattice(f"{a.name}x{b.name}", tuple(map(tuple, g)))


_NAME_PATTERNS = (
    (re.compile(r"^E8$"), lambda m: e8_lattice()),
    (re.compile(r"^D(\d+)plus$"), lambda m: dn_plus_lattice(int(m.group(1)))),
    (re.compile(r"^D(\d+)$"), lambda m: dn_lattice(int(m.group(1)))),
    (re.compile(r"^A(\d+)$"), lambda m: an_lattice(int(m.group(1)))),
    (re.compile(r"^0$"), lambda m: zero_lattice()),
)


def _builtin(name: str) -> Lattice | None:
    for pattern, make in _NAME_PATTERNS:
        m = pattern.match(name)
        if m:
            return make(m)
    return None


def build_named_lattice(name: str) -> Lattice:
    """Resolve a built-in name (``E8``, ``Dn``, ``An``, ``D16plus``, sums like
    ``E8xE8``), falling back to a lattice-definition JSON file path."""
    lat = _builtin(name)
    if lat is not None:
        return lat
    parts = name.split("x")
    if len(parts) > 1 and all(parts):
        pieces = [_builtin(p) for p in parts]
        if all(p is not None for p in pieces):
            out = pieces[0]
            for p in pieces[1:]:
                out = direct_sum(out, p)
            return out
    if os.path.exists(name):
        return load_lattice(name)
    raise LatticeError(f"unknown lattice {name!r}: not a built-in name and not an existing file")


def load_lattice(path: str | os.PathLike) -> Lattice:
    """Read ``{"name": str, "rank": int, "gram": [[int]]}``."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LatticeError(f"cannot read lattice file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "gram" not in doc:
        raise LatticeError(f"{path}: expected an object with a 'gram' entry")
    gram = doc["gram"]
    if not isinstance(gram, list) or not all(isinstance(r, list) for r in gram):
        raise LatticeError(f"{path}: 'gram' must be a list of lists")
    for i, row in enumerate(gram):
        for j, x in enumerate(row):
            if not isinstance(x, int) or isinstance(x, bool):
                raise LatticeError(f"{path}: gram[{i}][{j}]={x!r} is not an integer")
    rank = doc.get("rank", len(gram))
    if rank != len(gram):
        raise LatticeError(f"{path}: rank {rank} does not match gram size {len(gram)}")
    try:
        return Lattice(str(doc.get("name", Path(path).stem)), tuple(map(tuple, gram)), doc.get("unimodular"))
    except LatticeError as exc:
        raise LatticeError(f"{path}: {exc}") from exc


def lattice_to_json(lat: Lattice) -> dict:
    return {"name": lat.name, "rank": lat.rank, "gram": [list(r) for r in lat.gram]}


# ---------------------------------------------------------------- vectors


def inner_product(l: Lattice, u: Sequence[int], v: Sequence[int]) -> int:
    if len(u) != l.rank or len(v) != l.rank:
        raise LatticeError(f"vector lengths {len(u)}, {len(v)} do not match rank {l.rank}")
    g = l.gram
    return sum(int(u[i]) * g[i][j] * int(v[j]) for i in range(l.rank) for j in range(l.rank) if g[i][j])


@dataclass(frozen=True)
class VectorShells:
    """All lattice vectors of norm <= max_norm, grouped by norm.

    Each shell is an int64 array (rows are coordinate vectors) in
    lexicographic order.
    """

    lattice: Lattice
    max_norm: int
    shells: dict[int, np.ndarray]

    def shell(self, norm: int) -> np.ndarray:
        if norm < 0 or norm % 2 or norm > self.max_norm:
            raise KeyError(f"norm {norm} outside the enumerated even range [0, {self.max_norm}]")
        return self.shells[norm]

    def count(self, norm: int) -> int:
        return len(self.shell(norm))

    def vectors(self, norm: int) -> list[LatticeVector]:
        return [tuple(int(x) for x in row) for row in self.shell(norm)]

    def counts(self) -> dict[int, int]:
        return {k: len(v) for k, v in sorted(self.shells.items())}

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All vectors in one array together with their norms (ordered by norm)."""
        keys = sorted(self.shells)
        vecs = np.concatenate([self.shells[k] for k in keys]) if keys else np.zeros((0, self.lattice.rank), np.int64)
        norms = np.concatenate([np.full(len(self.shells[k]), k, dtype=np.int64) for k in keys])
        return vecs, norms


def _lex_sort(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0 or rows.shape[1] == 0:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def enumerate_by_norm(l: Lattice, max_norm: int, cap: int | None = None) -> VectorShells:
    """Enumerate every vector of norm <= max_norm (Fincke-Pohst style).

    Pruning uses a floating Cholesky factor with outward slack; membership
    is decided by exact integer norms, so rounding can only cost time.
    """
    if max_norm < 0 or max_norm % 2:
        raise LatticeError(f"max_norm must be a non-negative even integer, got {max_norm}")
    cap = default_vector_cap() if cap is None else cap
    d = l.rank
    if d == 0:
        shells = {k: np.zeros((0, 0), np.int64) for k in range(0, max_norm + 1, 2)}
        shells[0] = np.zeros((1, 0), np.int64)
        return VectorShells(l, max_norm, shells)

    gram = l.gram_array
    r = np.linalg.cholesky(gram.astype(float)).T  # gram = r.T @ r, r upper triangular
    q = np.diag(r) ** 2
    mu = r / np.diag(r)[:, None]
    bound = float(max_norm) * (1 + 1e-9) + 1e-9

    # depth-first from the last coordinate; the first coordinate is emitted as a range
    x = np.zeros(d)
    prefixes: list[tuple[int, ...]] = []
    ranges: list[tuple[int, int]] = []
    total = 0
    stack: list[tuple[int, float, tuple[int, ...]]] = [(d - 1, bound, ())]
    while stack:
        i, rem, tail = stack.pop()
        # tail holds x_{i+1..d-1}
        for j, val in enumerate(tail):
            x[i + 1 + j] = val
        c = -float(np.dot(mu[i, i + 1:], x[i + 1:])) if i + 1 < d else 0.0
        rad = math.sqrt(max(rem, 0.0) / q[i]) + 1e-9
        lo, hi = math.ceil(c - rad), math.floor(c + rad)
        if lo > hi:
            continue
        if i == 0:
            prefixes.append(tail)
            ranges.append((lo, hi))
            total += hi - lo + 1
            if total > 4 * cap + 1000:
                raise CapExceededError("max_vectors", cap, f"enumeration of {l.name} up to norm {max_norm} exceeds cap {cap}")
            continue
        for v in range(hi, lo - 1, -1):
            used = q[i] * (v - c) ** 2
            if used <= rem:
                stack.append((i - 1, rem - used, (v,) + tail))

    if ranges:
        sizes = np.array([h - lo + 1 for lo, h in ranges])
        cand = np.zeros((int(sizes.sum()), d), dtype=np.int64)
        pos = 0
        for (lo, hi), tail in zip(ranges, prefixes):
            n = hi - lo + 1
            cand[pos:pos + n, 0] = np.arange(lo, hi + 1)
            if tail:
                cand[pos:pos + n, 1:] = tail
            pos += n
    else:
        cand = np.zeros((0, d), dtype=np.int64)
    norms = np.einsum("ij,jk,ik->i", cand, gram, cand)
    keep = norms <= max_norm
    cand, norms = cand[keep], norms[keep]
    if len(cand) > cap:
        raise CapExceededError("max_vectors", cap, f"{len(cand)} vectors of norm <= {max_norm} in {l.name} exceed cap {cap}")
    if np.any(norms % 2):
        raise LatticeError(f"odd norm encountered in {l.name}; gram is not even")
    shells = {k: _lex_sort(cand[norms == k]) for k in range(0, max_norm + 1, 2)}
    return VectorShells(l, max_norm, shells)


def orthogonal_frame(l: Lattice, max_search_norm: int = 16, cap: int | None = None) -> list[LatticeVector]:
    """Greedy set of ``rank`` mutually orthogonal lattice vectors, shortest first.

    Returns the vectors in the order picked.  Raises LatticeError if no
    full-rank frame is found among vectors of norm <= max_search_norm.
    """
    d = l.rank
    if d == 0:
        return []
    gram = l.gram_array
    chosen: list[np.ndarray] = []
    norm = 2
    shells = None
    while len(chosen) < d and norm <= max_search_norm:
        if shells is None or norm > shells.max_norm:
            shells = enumerate_by_norm(l, norm, cap=cap)
        for v in shells.shell(norm):
            if all(int(v @ gram @ w) == 0 for w in chosen):
                chosen.append(v)
                if len(chosen) == d:
                    break
        norm += 2
    if len(chosen) < d:
        raise LatticeError(f"no orthogonal frame of {l.name} among vectors of norm <= {max_search_norm}")
    return [tuple(int(x) for x in v) for v in chosen]


def naive_shell_counts(l: Lattice, max_norm: int, box: Iterable[int] | None = None) -> dict[int, int]:
    """Brute-force count over a coordinate cube.

    The cube radius per coordinate comes from the exact inverse Gram
    (|x_i|^2 <= max_norm * (G^-1)_ii), so it is complete; only meant for
    small ranks.
    """
    d = l.rank
    if box is None:
        inv = l.gram_inverse
        box = [math.isqrt(int(max_norm * inv[i][i])) + 1 for i in range(d)]
    box = list(box)
    counts = {k: 0 for k in range(0, max_norm + 1, 2)}
    if not d:
        counts[0] = 1
        return counts
    shape = tuple(2 * b + 1 for b in box)
    offset = np.asarray(box, dtype=np.int64)
    gram = l.gram_array
    total = math.prod(shape)
    chunk = 1 << 20  # bounded memory: walk the cube in slices of the flat index
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        pts = np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64) - offset
        norms = np.einsum("ij,jk,ik->i", pts, gram, pts)
        for k in counts:
            counts[k] += int(np.count_nonzero(norms == k))
    return counts
