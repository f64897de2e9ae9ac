import functools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import OPERATORS
from cymonodromy.frobenius import d3F0, frobenius_basis, genus0_instantons, mirror_map
from cymonodromy.genus1 import Genus1Error, _divisor_inversion, assign_exponents, genus1_instantons
from cymonodromy.lattice import PLEntry
from cymonodromy.opcore import discriminant_factorization, parse_operator, singular_points

F = Fraction


@functools.lru_cache(maxsize=None)
def setup(name, H3, order=10):
    op = parse_operator(OPERATORS[name])
    fb = frobenius_basis(op, order)
    mm = mirror_map(fb)
    g0 = genus0_instantons(d3F0(op, fb, mm, H3)).genus0
    return op, fb, mm, g0


def _exponents(name, classification):
    op = parse_operator(OPERATORS[name])
    return assign_exponents(discriminant_factorization(op), singular_points(op), classification)


def test_assign_exponents_aesz28():
    ex = _exponents("AESZ-28", {"1/64": PLEntry("conifoldLike", 1, (0, 14, 1, 1)),
                                "1": PLEntry("conifoldLike", 2, (6, -21, -2, -3))})
    assert ex == {(F(1), F(-64)): F(-1, 6), (F(1), F(-1)): F(-1, 3)}


def test_assign_exponents_apparent_point():
    pts = singular_points(parse_operator(OPERATORS["AESZ-270"]))
    cls = {p.label: PLEntry("conifoldLike", 1, (0, 9, 1, 1)) for p in pts if p.label.startswith("root")}
    cls["-7/12"] = PLEntry("identity", 0)
    ex = _exponents("AESZ-270", cls)
    linear = [f for f in ex if len(f) == 2]
    assert linear == [(F(7), F(12))] and ex[linear[0]] == 0
    assert sorted(ex.values()) == [F(-1, 6), 0]


def test_assign_exponents_unknown_kind_aborts():
    with pytest.raises(Genus1Error, match="no exponent rule"):
        _exponents("AESZ-28", {"1/64": PLEntry("conifoldLike", 1, (0, 14, 1, 1)), "1": PLEntry("other")})


def test_assign_exponents_inconsistent_factor():
    pts = [p.label for p in singular_points(parse_operator(OPERATORS["AESZ-29"])) if p.label.startswith("root")]
    cls = {pts[0]: PLEntry("conifoldLike", 1, (0, 10, 1, 1)), pts[1]: PLEntry("identity", 0)}
    with pytest.raises(Genus1Error, match="inconsistent factor"):
        _exponents("AESZ-29", cls)


def test_quintic_genus1():
    op, fb, mm, g0 = setup("quintic", 5)
    r = genus1_instantons(fb, mm, g0, 50, {(F(1), F(-3125)): F(-1, 6)}, -200)
    assert [r.genus1[d] for d in range(1, 5)] == [0, 0, 609250, 3721431625]
    assert not r.nonintegral and not r.c3_solved


def test_constant_term_is_c2H_over_24():
    # with q = exp(t) the genus-one series starts at -c2H/24
    op, fb, mm, g0 = setup("quintic", 5)
    r = genus1_instantons(fb, mm, g0, 50, {(F(1), F(-3125)): F(-1, 6)}, -200)
    assert r.series[0] == F(-50, 24)
    assert abs(r.series[0]) == F(50, 24)


def test_aesz28_genus1_and_c3():
    op, fb, mm, g0 = setup("AESZ-28", 42)
    ex = {(F(1), F(-64)): F(-1, 6), (F(1), F(-1)): F(-1, 3)}
    r = genus1_instantons(fb, mm, g0, 84, ex)
    assert r.c3_solved and r.c3 == -96
    assert [r.genus1[d] for d in range(1, 8)] == [0, 0, 0, 0, 84, 74382, 8161452]
    assert not r.nonintegral


def test_aesz28_wrong_exponent_gives_nonintegral_numbers():
    op, fb, mm, g0 = setup("AESZ-28", 42)
    ex = {(F(1), F(-64)): F(-1, 6), (F(1), F(-1)): F(-1, 6)}
    r = genus1_instantons(fb, mm, g0, 84, ex)
    assert r.nonintegral


def test_aesz29_c3_from_n1():
    op, fb, mm, g0 = setup("AESZ-29", 24)
    r = genus1_instantons(fb, mm, g0, 72, {(F(1), F(-136), F(16)): F(-1, 6)})
    assert r.c3 == -116
    assert not r.nonintegral


def test_missing_genus0_degrees():
    op, fb, mm, g0 = setup("quintic", 5)
    with pytest.raises(Genus1Error):
        genus1_instantons(fb, mm, {1: 2875}, 50, {(F(1), F(-3125)): F(-1, 6)}, -200, D=5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=15),
       st.lists(st.integers(-10**6, 10**6), min_size=15, max_size=15))
def test_divisor_inversion_round_trip(n1, n0_list):
    D = len(n1)
    n1 = {d: n1[d - 1] for d in range(1, D + 1)}
    n0 = {d: n0_list[d - 1] for d in range(1, D + 1)}
    series = [F(0)] * (D + 1)
    for d in range(1, D + 1):
        for m in range(d, D + 1, d):
            series[m] += (F(n0[d], 12) + n1[d]) * d
    assert _divisor_inversion(series, n0, D) == n1
