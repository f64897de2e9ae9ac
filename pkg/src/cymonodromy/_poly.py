"""Dense univariate polynomials over the rationals.

A polynomial is a tuple of ``Fraction`` coefficients, lowest degree first,
with no trailing zeros (the zero polynomial is the empty tuple).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Sequence

Poly = tuple


def trim(p: Sequence) -> Poly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(Fraction(c) for c in p)


def degree(p: Poly) -> int:
    return len(p) - 1


def add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def scale(p: Poly, c) -> Poly:
    return trim([c * a for a in p])


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, scale(q, -1))


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return trim(out)


def power(p: Poly, n: int) -> Poly:
    out: Poly = (Fraction(1),)
    for _ in range(n):
        out = mul(out, p)
    return out


def shift_var(p: Poly, k: int) -> Poly:
    """Multiply by ``x**k`` (k >= 0)."""
    return trim([Fraction(0)] * k + list(p)) if p else ()


def evaluate(p: Poly, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def taylor_shift(p: Poly, a) -> list:
    """Coefficients of ``p(a + x)`` in ``x``; works for any ring element ``a``."""
    n = len(p)
    out = list(p)
    # repeated synthetic division
    for i in range(n):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + a * out[j + 1]
    return out


def derivative(p: Poly) -> Poly:
    return trim([i * p[i] for i in range(1, len(p))])


def lowest_order(p: Poly) -> int:
    for i, c in enumerate(p):
        if c:
            return i
    raise ValueError("zero polynomial has no order")


def content_normalize(polys: Sequence[Poly]) -> tuple[Poly, ...]:
    """Divide a family of polynomials by their common power of x and rational content."""
    nonzero = [p for p in polys if p]
    if not nonzero:
        return tuple(polys)
    low = min(lowest_order(p) for p in nonzero)
    polys = [tuple(p[low:]) if p else () for p in polys]
    from math import gcd, lcm

    den = 1
    num = 0
    for p in polys:
        for c in p:
            den = lcm(den, c.denominator)
    for p in polys:
        for c in p:
            num = gcd(num, int(c * den))
    factor = Fraction(den, num)
    lead = next(p for p in reversed(polys) if p)[-1]
    if lead < 0:
        factor = -factor
    return tuple(scale(p, factor) for p in polys)


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if n == 0 or k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@lru_cache(maxsize=None)
def stirling1(n: int, k: int) -> int:
    """Signed Stirling numbers of the first kind: x(x-1)...(x-n+1) = sum s(n,k) x^k."""
    if n == k:
        return 1
    if n == 0 or k == 0:
        return 0
    return stirling1(n - 1, k - 1) - (n - 1) * stirling1(n - 1, k)


def falling(x, k: int):
    out = 1
    for i in range(k):
        out = out * (x - i)
    return out


def divmod_poly(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    quo = [Fraction(0)] * max(len(p) - len(q) + 1, 0)
    lead = q[-1]
    for k in range(len(p) - len(q), -1, -1):
        c = r[k + len(q) - 1] / lead
        quo[k] = c
        if c:
            for j, b in enumerate(q):
                r[k + j] -= c * b
    return trim(quo), trim(r[: len(q) - 1])


def inverse_mod(p: Poly, m: Poly) -> Poly:
    """Inverse of ``p`` modulo ``m`` (extended Euclid)."""
    r0, r1 = m, divmod_poly(p, m)[1]
    s0, s1 = (), (Fraction(1),)
    while r1:
        quo, rem = divmod_poly(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, sub(s0, mul(quo, s1))
    if len(r0) != 1:
        raise ZeroDivisionError("not invertible modulo the given polynomial")
    return divmod_poly(scale(s0, 1 / r0[0]), m)[1]
