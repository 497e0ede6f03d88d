"""Independent brute-force oracles shared by several test modules."""

from __future__ import annotations

import itertools

import numpy as np

from lattice_voa.lattice_core import Lattice, enumerate_by_norm


def ambient_e8_counts(max_norm: int) -> dict[int, int]:
    """Count E8 vectors in the even coordinate model D8 u (D8 + 1/2), doubled coordinates."""
    r = int(np.floor(np.sqrt(max_norm)))
    counts: dict[int, int] = {}
    for half in (False, True):
        vals = np.arange(-2 * r - 1, 2 * r + 2)
        vals = vals[vals % 2 == (1 if half else 0)]
        grid = np.array(list(itertools.product(vals, repeat=8)), dtype=np.int64)
        ok = (grid.sum(axis=1) // 2) % 2 == 0  # coordinate sum is even
        norms4 = (grid**2).sum(axis=1)  # 4 * norm
        sel = ok & (norms4 <= 4 * max_norm)
        for n4, c in zip(*np.unique(norms4[sel], return_counts=True)):
            counts[int(n4) // 4] = counts.get(int(n4) // 4, 0) + int(c)
    return counts


def d4_star_root_count(l: Lattice) -> int:
    """Ordered root 4-tuples with the D4 Cartan Gram (centre root first).

    For each centre r the other three roots have <r, x> = -1 and are mutually
    orthogonal, so the count is the number of ordered triangles in the
    orthogonality graph on the neighbours of r, i.e. trace(A^3).
    """
    roots = np.asarray(enumerate_by_norm(l, 2).vectors(2), dtype=np.int64)
    ips = roots @ np.asarray(l.gram, dtype=np.int64) @ roots.T
    total = 0
    for i in range(len(roots)):
        nb = np.flatnonzero(ips[i] == -1)
        a = (ips[np.ix_(nb, nb)] == 0).astype(np.int64)
        total += int(np.trace(a @ a @ a))
    return total
