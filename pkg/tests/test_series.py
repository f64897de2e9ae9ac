from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from cymonodromy import series as S

N = 8
coeff = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def series(first=None):
    tail = st.lists(coeff, min_size=N - 1, max_size=N - 1)
    return tail.map(lambda t: [Fraction(first)] + t) if first is not None else st.lists(coeff, min_size=N, max_size=N)


@settings(max_examples=50, deadline=None)
@given(series(0))
def test_exp_log_inverse(a):
    assert S.log(S.exp(a)) == a


@settings(max_examples=50, deadline=None)
@given(series(1))
def test_inverse(a):
    assert S.mul(a, S.inv(a)) == S.const(1, N)


@settings(max_examples=30, deadline=None)
@given(st.lists(coeff, min_size=N - 2, max_size=N - 2), st.fractions(min_value=1, max_value=5, max_denominator=5))
def test_reversion(tail, lead):
    b = [Fraction(0), Fraction(lead)] + tail
    r = S.reversion(b)
    assert S.compose(b, r) == [0, 1] + [0] * (N - 2)
    assert S.compose(r, b) == [0, 1] + [0] * (N - 2)


@settings(max_examples=30, deadline=None)
@given(series(1), st.fractions(min_value=-3, max_value=3, max_denominator=6),
       st.fractions(min_value=-3, max_value=3, max_denominator=6))
def test_fractional_powers_add(a, e1, e2):
    assert S.mul(S.pow_frac(a, e1), S.pow_frac(a, e2)) == S.pow_frac(a, e1 + e2)
