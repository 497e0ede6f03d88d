from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lattice_voa.errors import CapExceededError, TruncationError
from lattice_voa.fock_voa import (
    LaurentWindow,
    casimir_zero_trace,
    change_dual_basis,
    dual_bases,
    genus0_oracle,
    graded_basis,
    phi_block,
)
from lattice_voa.lattice_core import build_named_lattice
from lattice_voa.qseries import graded_dims


def test_empty_k_is_graded_dimension(d4):
    dims = graded_dims(d4, 3)
    for n in range(4):
        w = phi_block(d4, n, (), [])
        assert w.coefficient(()) == dims[n]


def test_vacuum_insertion_collapses(d4):
    dims = graded_dims(d4, 2)
    for n in range(3):
        w = phi_block(d4, n, (0,), [(-3, 3), (-3, 3)])
        assert w.items() == [((0, 0), dims[n])]


def test_genus0_oracle_values():
    assert genus0_oracle(248, 1, [(-7, -2), (0, 5)]) == {(-2 - b, b): 248 * (b + 1) for b in range(6)}
    assert genus0_oracle(10, 0, [(-3, 3), (-3, 3)]) == {(0, 0): 10}
    assert genus0_oracle(3, 2, [(-5, -4), (0, 1)]) == {(-4, 0): 3, (-5, 1): 12}


@pytest.mark.parametrize("name", ["D4", "A2", "E8"])
def test_genus0_k1(name):
    l = build_named_lattice(name)
    window = [(-7, -2), (0, 5)]
    w = phi_block(l, 0, (1,), window)
    assert dict(w.items()) == genus0_oracle(len(graded_basis(l, 1)), 1, window)


def test_genus0_k2_vacuum_pairing(d4):
    window = [(-9, -4), (0, 5)]
    w = phi_block(d4, 0, (2,), window, pairing="vacuum")
    expected = genus0_oracle(len(graded_basis(d4, 2)), 2, window)
    assert len(expected) == 6 and dict(w.items()) == expected


def test_form_pairing_k2_regression(d4):
    # the invariant form and the vacuum pairing differ on V_2; frozen value
    w = phi_block(d4, 0, (2,), [(-4, -4), (0, 0)], pairing="form")
    assert w[(-4, 0)] == 166


def test_form_and_vacuum_agree_for_k1(d4):
    window = [(-3, 1), (-3, 1)]
    assert phi_block(d4, 1, (1,), window, pairing="form").coeffs == phi_block(d4, 1, (1,), window).coeffs


def test_d4_weight_one_regression(d4):
    w = phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)])
    assert w.items() == [((-3, 1), 1568), ((-2, 0), 812), ((-1, -1), 336), ((0, -2), 28)]


def test_double_zero_mode_is_casimir(d4, e8):
    for l in (d4, e8):
        w = phi_block(l, 1, (1,), [(-1, -1), (-1, -1)])
        assert w[(-1, -1)] == casimir_zero_trace(l, 1, 1)


def test_vacuum_factor_in_two_pairs(d4):
    single = phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)])
    left = phi_block(d4, 1, (0, 1), [(-1, 1), (-1, 1), (-3, 1), (-3, 1)])
    right = phi_block(d4, 1, (1, 0), [(-3, 1), (-3, 1), (-1, 1), (-1, 1)])
    assert all(e[:2] == (0, 0) for e in left.coeffs)
    assert {e[2:]: c for e, c in left.coeffs.items()} == single.coeffs
    assert all(e[2:] == (0, 0) for e in right.coeffs)
    assert {e[:2]: c for e, c in right.coeffs.items()} == single.coeffs


def test_two_pair_regression(d4):
    w = phi_block(d4, 0, (1, 1), [(-3, 0), (-3, 1), (-3, 0), (-3, 1)])
    assert w.items() == [
        ((-3, -2, 0, 1), 392),
        ((-3, 1, -3, 1), 3136),
        ((-3, 1, -2, 0), 1568),
        ((-2, -3, 0, 1), 392),
        ((-2, -2, 0, 0), 392),
        ((-2, 0, -3, 1), 1568),
        ((-2, 0, -2, 0), 784),
    ]
    assert all(sum(e) == -4 for e in w.coeffs)


def test_homogeneity(e8):
    w = phi_block(e8, 1, (1,), [(-2, 0), (-2, 0)])
    assert w.coeffs and all(a + b == -2 for a, b in w.coeffs)
    assert w[(-1, 0)] == 0


def test_window_lookup_and_json(d4):
    w = phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)])
    with pytest.raises(KeyError):
        w[(-4, 2)]
    with pytest.raises(KeyError):
        w[(0,)]
    back = LaurentWindow.from_json(json.loads(json.dumps(w.to_json())))
    assert back == w and back.meta == w.meta
    assert w.meta["expansion"].startswith("|w_1| > |z_1|")


def test_fractional_coefficients_roundtrip():
    w = LaurentWindow(1, ((-1, 0), (0, 1)), {(-1, 1): Fraction(-3, 7), (0, 0): 5})
    back = LaurentWindow.from_json(json.loads(json.dumps(w.to_json())))
    assert back.coeffs == w.coeffs and back[(0, 1)] == 0


def test_truncation_and_caps(d4):
    with pytest.raises(TruncationError):
        phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)], trunc=2)
    assert phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)], trunc=4).items()
    with pytest.raises(CapExceededError) as info:
        phi_block(d4, 1, (1,), [(-3, 1), (-3, 1)], max_terms=100)
    assert info.value.cap == "max_terms" and info.value.limit == 100
    with pytest.raises(CapExceededError):
        casimir_zero_trace(d4, 2, 1, max_terms=10)


def test_argument_validation(d4):
    with pytest.raises(ValueError):
        phi_block(d4, 1, (1,), [(-3, 1)])
    with pytest.raises(ValueError):
        phi_block(d4, 1, (1,), [(1, -3), (0, 0)])
    with pytest.raises(ValueError):
        phi_block(d4, -1, (1,), [(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        dual_bases(d4, 1, "nonsense")


def random_invertible(n: int, rng: random.Random) -> list[list[int]]:
    """Unit lower triangular times unit upper triangular with a few entries; det = 1."""
    low = [[int(i == j) for j in range(n)] for i in range(n)]
    up = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(2 * n):
        i, j = rng.sample(range(n), 2)
        (low if i > j else up)[i][j] = rng.randint(-2, 2)
    return [[sum(low[i][t] * up[t][j] for t in range(n)) for j in range(n)] for i in range(n)]


@given(st.integers(0, 2**32))
@settings(max_examples=5, deadline=None)
def test_dual_basis_change_invariance(seed):
    l = build_named_lattice("D4")
    window = [(-3, 1), (-3, 1)]
    base = phi_block(l, 1, (1,), window)
    duals = dual_bases(l, 1)
    changed = change_dual_basis(duals, random_invertible(len(duals[0]), random.Random(seed)))
    assert phi_block(l, 1, (1,), window, duals=[changed]).coeffs == base.coeffs


def test_casimir_values(e8, d4):
    assert casimir_zero_trace(e8, 2, 0) == 4124
    assert casimir_zero_trace(e8, 1, 1) == 14880
    assert casimir_zero_trace(d4, 1, 1) == 336
    assert casimir_zero_trace(d4, 0, 3) == 0


@pytest.mark.slow
def test_casimir_rank16(e8e8, d16plus):
    assert casimir_zero_trace(e8e8, 1, 1) == casimir_zero_trace(d16plus, 1, 1) == 29760
