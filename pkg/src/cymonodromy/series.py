"""Truncated power series with exact rational coefficients.

A series is a list of ``Fraction`` of fixed length ``n`` (coefficients of
``x^0 .. x^{n-1}``); all operations truncate to the shorter operand.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Series = list


def const(c, n: int) -> Series:
    return [Fraction(c)] + [Fraction(0)] * (n - 1)


def from_poly(p: Sequence, n: int) -> Series:
    return [Fraction(p[i]) if i < len(p) else Fraction(0) for i in range(n)]


def add(a: Series, b: Series) -> Series:
    return [x + y for x, y in zip(a, b)]


def sub(a: Series, b: Series) -> Series:
    return [x - y for x, y in zip(a, b)]


def scale(a: Series, c) -> Series:
    return [c * x for x in a]


def mul(a: Series, b: Series) -> Series:
    n = min(len(a), len(b))
    out = [Fraction(0)] * n
    for i in range(n):
        ai = a[i]
        if ai:
            for j in range(n - i):
                out[i + j] += ai * b[j]
    return out


def inv(a: Series) -> Series:
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    n = len(a)
    out = [Fraction(0)] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        acc = sum((a[j] * out[k - j] for j in range(1, k + 1)), Fraction(0))
        out[k] = -acc * out[0]
    return out


def div(a: Series, b: Series) -> Series:
    return mul(a, inv(b))


def deriv(a: Series) -> Series:
    """d/dx, padded with a zero to keep the length."""
    return [k * a[k] for k in range(1, len(a))] + [Fraction(0)]


def theta(a: Series) -> Series:
    """x d/dx."""
    return [k * a[k] for k in range(len(a))]


def integrate(a: Series) -> Series:
    """Antiderivative with zero constant term (drops the top coefficient)."""
    return [Fraction(0)] + [a[k] / (k + 1) for k in range(len(a) - 1)]


def exp(a: Series) -> Series:
    """exp of a series with zero constant term, via f' = a' f."""
    if a[0] != 0:
        raise ValueError("exp needs a zero constant term to stay rational")
    n = len(a)
    da = deriv(a)
    out = [Fraction(0)] * n
    out[0] = Fraction(1)
    for k in range(1, n):
        out[k] = sum((da[j] * out[k - 1 - j] for j in range(k)), Fraction(0)) / k
    return out


def log(a: Series) -> Series:
    """log of a series with constant term 1."""
    if a[0] != 1:
        raise ValueError("log needs constant term 1")
    return integrate(mul(deriv(a), inv(a)))


def compose(a: Series, b: Series) -> Series:
    """a(b(x)) for b with zero constant term."""
    if b[0] != 0:
        raise ValueError("inner series must have zero constant term")
    n = min(len(a), len(b))
    out = [Fraction(0)] * n
    power = const(1, n)
    for k in range(n):
        if a[k]:
            for i in range(n):
                out[i] += a[k] * power[i]
        power = mul(power, b[:n])
    return out


def reversion(b: Series) -> Series:
    """Compositional inverse of b = x + O(x^2) (Newton-free, term by term)."""
    if b[0] != 0 or b[1] == 0:
        raise ValueError("reversion needs b(0)=0, b'(0)!=0")
    n = len(b)
    out = [Fraction(0)] * n
    out[1] = 1 / b[1]
    for k in range(2, n):
        # coefficient of x^k in b(out) must vanish; out[k] enters linearly as b[1]*out[k]
        trial = compose(b, out)
        out[k] = -trial[k] / b[1]
    return out


def pow_frac(a: Series, e: Fraction) -> Series:
    """a^e for a with constant term 1 and rational e."""
    return exp(scale(log(a), Fraction(e)))
