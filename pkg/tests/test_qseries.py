from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lattice_voa.lattice_core import build_named_lattice, direct_sum, e8_lattice, enumerate_by_norm, zero_lattice
from lattice_voa.qseries import (
    QSeries,
    euler_product,
    exact_compare,
    graded_dims,
    partition_power_series,
    series_add,
    series_invert,
    series_mul,
    series_pow,
    slope_bound,
    sturm_equal,
    sturm_window,
    theta_genus1,
)


def partition_counts(n_max: int, colors: int = 1) -> list[int]:
    """Colored partition numbers by the coin-change recurrence."""
    ways = [1] + [0] * n_max
    for part in range(1, n_max + 1):
        for _ in range(colors):
            for total in range(part, n_max + 1):
                ways[total] += ways[total - part]
    return ways


def test_basic_arithmetic():
    one_minus_q = QSeries.from_list([1, -1], order=6)
    assert series_mul(one_minus_q, series_invert(one_minus_q)) == QSeries.one(6)
    one_plus_q = QSeries.from_list([1, 1], order=4)
    assert (one_plus_q**2).coeffs == (1, 2, 1, 0, 0)
    assert (one_plus_q + one_plus_q).coeffs == (2, 2, 0, 0, 0)
    assert (one_plus_q - one_plus_q).coeffs == (0,) * 5


def test_invert_non_unit_constant():
    a = QSeries.from_list([3, 1], order=5)
    inv = series_invert(a)
    assert inv[0] == Fraction(1, 3)
    assert series_mul(a, inv) == QSeries.one(5)


def test_invert_zero_constant_fails():
    with pytest.raises(ZeroDivisionError):
        series_invert(QSeries.from_list([0, 1], order=3))


def test_truncation_mismatch():
    with pytest.raises(ValueError):
        series_add(QSeries.one(3), QSeries.one(4))
    with pytest.raises(ValueError):
        series_mul(QSeries.one(3), QSeries.one(4))


def test_product_keeps_truncation():
    a = QSeries.from_list([1, 1, 1], order=2)
    assert series_mul(a, a).truncation == 2


def test_prefactors_add_and_negate():
    a = QSeries((1, 2), Fraction(-1, 3))
    assert series_mul(a, a).prefactor == Fraction(-2, 3)
    assert series_invert(a).prefactor == Fraction(1, 3)
    assert series_pow(a, -1) == series_invert(a)


def test_partitions_from_inverted_euler_product():
    assert list(series_invert(euler_product(20)).coeffs) == partition_counts(20)


@pytest.mark.parametrize("d", [0, 1, 2, 8, 16])
def test_partition_power_series(d):
    s = partition_power_series(d, 15)
    assert list(s.coeffs) == partition_counts(15, d)
    if d == 1:
        assert s.coeffs[:5] == (1, 1, 2, 3, 5)
    if d == 8:
        assert s[1] == 8
    assert s == series_pow(series_invert(euler_product(15)), d)


def test_theta_e8():
    th = theta_genus1(e8_lattice(), 3)
    assert th.coeffs == (1, 240, 2160, 6720)
    assert theta_genus1(zero_lattice(), 3).coeffs == (1, 0, 0, 0)


def test_theta_methods_agree(e8, d4):
    for l, order in ((e8, 4), (d4, 6), (build_named_lattice("A2"), 6)):
        frame = theta_genus1(l, order, method="frame")
        shells = theta_genus1(l, order, method="shells")
        assert frame == shells


def test_theta_rank16_against_shells(e8e8, d16plus):
    for l in (e8e8, d16plus):
        counts = enumerate_by_norm(l, 4).counts()
        assert theta_genus1(l, 2).coeffs == (counts[0], counts[2], counts[4]) == (1, 480, 61920)


def test_theta_square(e8, e8e8):
    assert theta_genus1(e8, 10) ** 2 == theta_genus1(e8e8, 10) == theta_genus1(direct_sum(e8, e8), 10)


def test_theta_coefficients_even_and_nonnegative(d16plus):
    th = theta_genus1(d16plus, 12)
    assert th[0] == 1
    assert all(c >= 0 and c % 2 == 0 for c in th.coeffs[1:])


def test_graded_dims_e8(e8):
    assert graded_dims(e8, 3).coeffs == (1, 248, 4124, 34752)
    assert graded_dims(zero_lattice(), 3).coeffs == (1, 0, 0, 0)


def test_graded_dims_rank16(e8e8, d16plus):
    a, b = graded_dims(e8e8, 20), graded_dims(d16plus, 20)
    assert a == b
    assert a.coeffs[:5] == (1, 496, 69752, 2115008, 34670620)


def test_graded_dims_identity(e8, d4):
    for l in (e8, d4):
        n = 20
        lhs = series_mul(graded_dims(l, n), series_pow(euler_product(n), l.rank))
        assert lhs == theta_genus1(l, n)


def test_eta_prefactor(e8):
    s = graded_dims(e8, 4, eta_normalized=True)
    assert s.prefactor == Fraction(-1, 3)
    assert s.coeffs == graded_dims(e8, 4).coeffs


def test_series_json_roundtrip():
    s = QSeries((1, 10**40, Fraction(-3, 7)), Fraction(-2, 3))
    doc = json.loads(json.dumps(s.to_json()))
    assert doc["coeffs"][1] == str(10**40)
    assert QSeries.from_json(doc) == s
    with pytest.raises(ValueError):
        QSeries.from_json({"coeffs": ["1", "2"], "truncation": 4})


def test_sturm(e8e8, d16plus):
    a, b = graded_dims(e8e8, 20), graded_dims(d16plus, 20)
    v = sturm_equal(a, b, 8)
    assert v.equal and v.window == 1 == sturm_window(8)
    assert sturm_equal(a, a, 8).equal
    bumped = QSeries(a.coeffs[:1] + (a[1] + 1,) + a.coeffs[2:])
    v = sturm_equal(a, bumped, 8)
    assert not v.equal and v.first_difference == 1
    assert sturm_equal(a, b, 8, full_window=True).window == 20
    with pytest.raises(ValueError):
        sturm_equal(a.truncate(0), b.truncate(0), 8)
    with pytest.raises(ValueError):
        sturm_equal(a, QSeries(b.coeffs, Fraction(-2, 3)), 8)


def test_sturm_window_values():
    assert [sturm_window(k) for k in (0, 8, 11, 12, 24)] == [1, 1, 1, 2, 3]


def test_exact_compare():
    a = QSeries.from_list(range(1, 8))
    b = QSeries(a.coeffs[:5] + (0,) + a.coeffs[6:])
    assert exact_compare(a, a).equal
    v = exact_compare(a, b)
    assert not v.equal and v.first_difference == 5
    assert v.to_json()["unequal_at"] == 5


def test_slope_bound():
    assert slope_bound(16, 2) == 4
    assert slope_bound(24, 1) == 12
    assert slope_bound(8, 3) == Fraction(4, 3)
    for bad in ((0, 1), (1, 0), (-8, 2), (8, True), (8.0, 2)):
        with pytest.raises(ValueError):
            slope_bound(*bad)


coeff_lists = st.lists(st.integers(-20, 20), min_size=6, max_size=6)


@given(coeff_lists, coeff_lists)
@settings(max_examples=80, deadline=None)
def test_sturm_symmetric(x, y):
    f, g = QSeries.from_list(x), QSeries.from_list(y)
    assert sturm_equal(f, g, 12) == sturm_equal(g, f, 12)


@given(coeff_lists, coeff_lists)
@settings(max_examples=80, deadline=None)
def test_mul_commutes_and_truncation_stable(x, y):
    f, g = QSeries.from_list(x), QSeries.from_list(y)
    assert f * g == g * f
    assert (f * g).truncate(3) == f.truncate(3) * g.truncate(3)


@given(st.integers(1, 9).flatmap(lambda c0: st.lists(st.integers(-9, 9), min_size=5, max_size=5).map(lambda r: [c0] + r)))
@settings(max_examples=60, deadline=None)
def test_invert_is_inverse(cs):
    f = QSeries.from_list(cs)
    assert f * series_invert(f) == QSeries.one(f.truncation)


@given(st.integers(2, 8))
@settings(max_examples=5, deadline=None)
def test_raising_order_keeps_prefix(n):
    e8 = e8_lattice()
    assert graded_dims(e8, n + 3).truncate(n) == graded_dims(e8, n)
