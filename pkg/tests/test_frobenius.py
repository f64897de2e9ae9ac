from fractions import Fraction
from math import factorial

import gmpy2
import mpmath
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import OPERATORS
from cymonodromy import series as S
from cymonodromy.frobenius import (d3F0, frobenius_basis, frobenius_wronskian, genus0_instantons, lambert_series,
                                   mirror_map)
from cymonodromy.opcore import parse_operator

QUINTIC = parse_operator(OPERATORS["quintic"])


def test_quintic_holomorphic_period_closed_form():
    fb = frobenius_basis(QUINTIC, 12)
    assert fb.f[0] == [Fraction(factorial(5 * n), factorial(n) ** 5) for n in range(13)]
    assert fb.f[0][:3] == [1, 120, 113400]


def test_basis_normalization():
    for name in ("quintic", "AESZ-28", "AESZ-270"):
        fb = frobenius_basis(parse_operator(OPERATORS[name]), 6)
        assert fb.f[0][0] == 1
        assert fb.f[1][0] == fb.f[2][0] == fb.f[3][0] == 0


def test_trivial_operator():
    fb = frobenius_basis(parse_operator("theta^4"), 5)
    assert fb.f[0] == [1, 0, 0, 0, 0, 0]
    assert all(c == 0 for i in (1, 2, 3) for c in fb.f[i])
    mm = mirror_map(fb)
    assert mm.q_of_z == [0, 1, 0, 0, 0, 0]
    series = d3F0(parse_operator("theta^4"), fb, mm, 1, check=False)
    assert series == [1, 0, 0, 0, 0, 0]


def test_quintic_mirror_map():
    mm = mirror_map(frobenius_basis(QUINTIC, 6))
    assert mm.q_of_z[:2] == [0, 1]
    assert mm.z_of_q[:3] == [0, 1, -770]
    # z(q(z)) = z
    assert S.compose(mm.z_of_q, mm.q_of_z)[:7] == [0, 1, 0, 0, 0, 0, 0]


def test_quintic_yukawa_and_genus0():
    fb = frobenius_basis(QUINTIC, 8)
    series = d3F0(QUINTIC, fb, mirror_map(fb), 5)
    assert series[:3] == [5, 2875, 4876875]
    table = genus0_instantons(series)
    assert table.genus0[1] == 2875
    assert table.genus0[2] == 609250
    assert table.genus0[3] == 317206375
    assert not table.nonintegral


def test_aesz28_constant_term():
    op = parse_operator(OPERATORS["AESZ-28"])
    fb = frobenius_basis(op, 6)
    assert d3F0(op, fb, mirror_map(fb), 42)[0] == 42


def test_genus0_trivial_series():
    assert all(v == 0 for v in genus0_instantons([0] * 6).genus0.values())
    t = genus0_instantons([Fraction(7)] + [Fraction(0)] * 5)
    assert t.n00 == 7 and all(v == 0 for v in t.genus0.values())


def test_genus0_hand_inversion():
    t = genus0_instantons([5, 2875, 4876875])
    assert t.genus0 == {1: 2875, 2: 609250}


def test_recursion_stable_under_doubling():
    a = frobenius_basis(QUINTIC, 10)
    b = frobenius_basis(QUINTIC, 20)
    for i in range(4):
        assert b.f[i][:11] == a.f[i]


def test_wronskian_matches_exact_series():
    fb = frobenius_basis(QUINTIC, 60)
    z = 1 / 12500
    with gmpy2.context(gmpy2.get_context(), precision=200):
        W = frobenius_wronskian(QUINTIC, z, 1 / 3125, 50)
        y0 = W[0][0]
        dy0 = W[1][0]
    with mpmath.workdps(50):
        zz = mpmath.mpf(z)
        ref = sum(mpmath.mpf(c.numerator) / c.denominator * zz**n for n, c in enumerate(fb.f[0]))
        dref = sum(n * mpmath.mpf(c.numerator) / c.denominator * zz ** (n - 1) for n, c in enumerate(fb.f[0]) if n)
        assert abs(mpmath.mpf(str(y0.real)) - ref) < mpmath.mpf(10) ** -25
        assert abs(mpmath.mpf(str(dy0.real)) - dref) / dref < mpmath.mpf(10) ** -25


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.integers(min_value=1, max_value=15), st.integers(min_value=-10**9, max_value=10**9),
                       min_size=1),
       st.integers(min_value=-50, max_value=50))
def test_lambert_round_trip(table, n00):
    D = max(table)
    full = {d: table.get(d, 0) for d in range(1, D + 1)}
    back = genus0_instantons(lambert_series(n00, full, D))
    assert back.genus0 == full
    assert back.n00 == n00
