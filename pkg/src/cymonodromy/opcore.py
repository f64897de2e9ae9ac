"""Fourth-order differential operators with exact rational coefficients.

Operators are written either in the Euler derivative ``theta = z d/dz`` or in
``D = d/dz``, with polynomial coefficients standing to the left:

    L = sum_i c_i(z) theta^i      or      L = sum_i a_i(z) D^i

Everything in this module is exact (``fractions.Fraction`` and sympy over QQ).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import sympy

from . import _poly as P

ORDER = 4
THETA = "theta"
DZ = "dz"


class OperatorSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnsupportedOrderError(ValueError):
    pass


@dataclass(frozen=True)
class DifferentialOperator:
    """``coeffs[i]`` multiplies ``theta**i`` (form="theta") or ``D**i`` (form="dz")."""

    coeffs: tuple
    form: str = THETA
    name: str | None = None

    def __post_init__(self):
        coeffs = tuple(P.trim(c) for c in self.coeffs)
        if len(coeffs) != ORDER + 1:
            raise UnsupportedOrderError(f"expected {ORDER + 1} coefficient polynomials, got {len(coeffs)}")
        if not coeffs[ORDER]:
            raise UnsupportedOrderError("leading coefficient vanishes identically")
        if self.form not in (THETA, DZ):
            raise ValueError(f"unknown form {self.form!r}")
        object.__setattr__(self, "coeffs", coeffs)

    def to(self, form: str) -> "DifferentialOperator":
        return convert_form(self, form)

    @property
    def zdegree(self) -> int:
        return max(P.degree(c) for c in self.coeffs if c)

    def theta_parts(self) -> list[P.Poly]:
        """Return ``[P_0, P_1, ...]`` with ``L = sum_j z^j P_j(theta)``."""
        op = self if self.form == THETA else convert_form(self, THETA)
        out = []
        for j in range(op.zdegree + 1):
            out.append(P.trim([c[j] if j < len(c) else 0 for c in op.coeffs]))
        return out

    def normalized(self) -> "DifferentialOperator":
        return DifferentialOperator(P.content_normalize(self.coeffs), self.form, self.name)

    def to_text(self) -> str:
        sym = "theta" if self.form == THETA else "D"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"({_poly_text(c)})*{sym}^{i}")
        return " + ".join(terms)

    def __str__(self) -> str:
        return self.to_text()


def _poly_text(p: P.Poly) -> str:
    parts = []
    for k, c in enumerate(p):
        if c:
            coef = f"({c})" if c.denominator != 1 else f"({c.numerator})"
            parts.append(coef if k == 0 else f"{coef}*z^{k}")
    return " + ".join(parts) if parts else "0"


# --------------------------------------------------------------------------
# Parsing
#
# The parser evaluates the text in the algebra of operators sum_j z^j P_j(theta)
# with j allowed negative, using  P(theta) z^b = z^b P(theta + b)  and
# D = z^{-1} theta.  Products therefore compose operators, not coefficients.


class _Weyl:
    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {j: p for j, p in (terms or {}).items() if p}

    @classmethod
    def const(cls, c) -> "_Weyl":
        return cls({0: P.trim([Fraction(c)])})

    def is_const(self) -> bool:
        return not self.terms or (set(self.terms) == {0} and len(self.terms[0]) <= 1)

    def const_value(self) -> Fraction:
        return self.terms[0][0] if self.terms else Fraction(0)

    def __add__(self, other: "_Weyl") -> "_Weyl":
        out = dict(self.terms)
        for j, p in other.terms.items():
            out[j] = P.add(out.get(j, ()), p)
        return _Weyl(out)

    def __neg__(self) -> "_Weyl":
        return _Weyl({j: P.scale(p, -1) for j, p in self.terms.items()})

    def __mul__(self, other: "_Weyl") -> "_Weyl":
        out: dict = {}
        for a, p in self.terms.items():
            for b, q in other.terms.items():
                shifted = P.trim(P.taylor_shift(p, Fraction(b)))
                out[a + b] = P.add(out.get(a + b, ()), P.mul(shifted, q))
        return _Weyl(out)

    def __pow__(self, n: int) -> "_Weyl":
        out = _Weyl.const(1)
        for _ in range(n):
            out = out * self
        return out


_TOKEN = re.compile(r"\s*(?:(\d+)|(theta|D|z)|(\*\*|[-+*/^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            j = pos
            while text[j].isspace():
                j += 1
            raise OperatorSyntaxError(f"unexpected character {text[j]!r}", j)
        kind = "num" if m.group(1) else "name" if m.group(2) else "op"
        value = m.group(m.lastindex)
        tokens.append((kind, "^" if value == "**" else value, m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.used: set[str] = set()

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise OperatorSyntaxError(f"expected {value!r}, found {what}", pos)
        self.take()

    def parse(self) -> _Weyl:
        result = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise OperatorSyntaxError(f"unexpected {val!r}", pos)
        return result

    def expr(self) -> _Weyl:
        acc = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc + (-rhs)
        return acc

    def term(self) -> _Weyl:
        acc = self.unary()
        while True:
            kind, val, pos = self.peek()
            if val == "*":
                self.take()
                acc = acc * self.unary()
            elif val == "/":
                self.take()
                rhs = self.unary()
                if not rhs.is_const() or rhs.const_value() == 0:
                    raise OperatorSyntaxError("division only by nonzero constants", pos)
                acc = acc * _Weyl.const(1 / rhs.const_value())
            elif kind in ("num", "name") or val == "(":
                acc = acc * self.unary()  # juxtaposition
            else:
                return acc

    def unary(self) -> _Weyl:
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> _Weyl:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num":
                raise OperatorSyntaxError("exponent must be a non-negative integer", pos)
            return base ** int(val)
        return base

    def atom(self) -> _Weyl:
        kind, val, pos = self.take()
        if kind == "num":
            return _Weyl.const(int(val))
        if kind == "name":
            self.used.add(val)
            if val == "z":
                return _Weyl({1: (Fraction(1),)})
            if val == "theta":
                return _Weyl({0: (Fraction(0), Fraction(1))})
            return _Weyl({-1: (Fraction(0), Fraction(1))})
        if val == "(":
            inner = self.expr()
            kind2, val2, pos2 = self.peek()
            if val2 != ")":
                raise OperatorSyntaxError(f"unclosed parenthesis opened at position {pos}", pos2)
            self.take()
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise OperatorSyntaxError(f"unexpected {what}", pos)


def parse_operator(text: str, name: str | None = None) -> DifferentialOperator:
    """Parse operator text such as ``"theta^4 - 5*z*(5*theta+1)*(5*theta+2)*(5*theta+3)*(5*theta+4)"``.

    The result is in theta-form unless only ``D`` (never ``theta``) appears.
    Raises ``OperatorSyntaxError`` or ``UnsupportedOrderError``.
    """
    parser = _Parser(text)
    w = parser.parse()
    if not w.terms:
        raise UnsupportedOrderError("zero operator")
    order = max(len(p) - 1 for p in w.terms.values())
    if order != ORDER:
        raise UnsupportedOrderError(f"unsupported order {order}; only order {ORDER} operators are handled")
    low = min(w.terms)
    if "D" in parser.used and "theta" not in parser.used:
        # sum_j z^j P_j(theta) with P_j(theta) = sum_k b_jk theta_(k) and z^k D^k = theta_(k)
        acc: dict[int, dict[int, Fraction]] = {k: {} for k in range(ORDER + 1)}
        for j, p in w.terms.items():
            for k in range(ORDER + 1):
                b = sum((p[i] * P.stirling2(i, k) for i in range(k, len(p))), Fraction(0))
                if b:
                    acc[k][j + k] = acc[k].get(j + k, Fraction(0)) + b
        low = min([e for d in acc.values() for e, c in d.items() if c] + [0])
        coeffs = []
        for k in range(ORDER + 1):
            deg = max(list(acc[k]) + [low]) - low
            coeffs.append(P.trim([acc[k].get(e + low, 0) for e in range(deg + 1)]))
        return DifferentialOperator(tuple(coeffs), DZ, name)
    shift = min(low, 0)
    high = max(w.terms)
    coeffs = []
    for i in range(ORDER + 1):
        coeffs.append(P.trim([
            (w.terms[j][i] if j in w.terms and i < len(w.terms[j]) else 0) for j in range(shift, high + 1)
        ]))
    return DifferentialOperator(tuple(coeffs), THETA, name)


# --------------------------------------------------------------------------
# Form conversion


def convert_form(op: DifferentialOperator, target: str) -> DifferentialOperator:
    if target == op.form:
        return op
    if target == DZ:
        # theta^i = sum_k S2(i,k) z^k D^k
        coeffs = []
        for k in range(ORDER + 1):
            acc: P.Poly = ()
            for i in range(k, ORDER + 1):
                s = P.stirling2(i, k)
                if s:
                    acc = P.add(acc, P.scale(op.coeffs[i], s))
            coeffs.append(P.shift_var(acc, k))
        return DifferentialOperator(tuple(coeffs), DZ, op.name)
    if target == THETA:
        # D^k = z^{-k} theta_(k),  theta_(k) = sum_i s1(k,i) theta^i; clear z^{-k} afterwards
        parts: list[dict[int, Fraction]] = [{} for _ in range(ORDER + 1)]
        for k in range(ORDER + 1):
            for e, c in enumerate(op.coeffs[k]):
                if not c:
                    continue
                for i in range(k + 1):
                    s = P.stirling1(k, i)
                    if s:
                        parts[i][e - k] = parts[i].get(e - k, Fraction(0)) + c * s
        exps = [e for d in parts for e, c in d.items() if c]
        low = min(exps + [0])
        coeffs = []
        for d in parts:
            deg = max(list(d) + [low]) - low
            coeffs.append(P.trim([d.get(e + low, 0) for e in range(deg + 1)]))
        return DifferentialOperator(tuple(coeffs), THETA, op.name)
    raise ValueError(f"unknown form {target!r}")


# --------------------------------------------------------------------------
# Singular points


def _to_sympy(p: P.Poly, var):
    return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(p)] or [0], var, domain="QQ")


def _from_sympy(poly: sympy.Poly) -> P.Poly:
    return P.trim([Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())])


_Z = sympy.Symbol("z")


@dataclass(frozen=True)
class SingularPoint:
    """A point of P^1: ``z = 0``, a rational number, a root of an irreducible factor, or infinity."""

    label: str
    rational: Fraction | None = None
    factor: P.Poly | None = None
    index: int = 0
    infinite: bool = False

    @property
    def minimal_poly(self) -> P.Poly:
        if self.rational is not None:
            return (-self.rational, Fraction(1))
        return self.factor

    def value(self, dps: int = 30) -> mpmath.mpc:
        if self.infinite:
            raise ValueError("infinity has no finite value")
        if self.rational is not None:
            return mpmath.mpc(mpmath.mpf(self.rational.numerator) / self.rational.denominator)
        return _root_value(self.factor, self.index, dps)

    def __str__(self) -> str:
        return self.label


def _root_value(factor: P.Poly, index: int, dps: int) -> mpmath.mpc:
    return _root_cache(factor, index, max(dps, 30) // 50 * 50 + 50)


_ROOTS: dict = {}


def _root_cache(factor, index, dps):
    key = (factor, index, dps)
    if key not in _ROOTS:
        r = sympy.CRootOf(_to_sympy(factor, _Z).as_expr(), index).evalf(dps + 10)
        re_, im_ = r.as_real_imag()
        with mpmath.workdps(dps + 10):
            _ROOTS[key] = mpmath.mpc(mpmath.mpf(str(re_)), mpmath.mpf(str(im_)))
    return _ROOTS[key]


INFINITY = SingularPoint("oo", infinite=True)
ZERO = SingularPoint("0", rational=Fraction(0))


@dataclass(frozen=True)
class DiscriminantFactorization:
    factors: tuple  # ((Delta_i, k_i), ...), Delta_i primitive integer with positive constant term
    zpower: int
    constant: Fraction = Fraction(1)

    def delta(self) -> P.Poly:
        out: P.Poly = (Fraction(1),)
        for f, k in self.factors:
            out = P.mul(out, P.power(f, k))
        return out


def _normalize_factor(f: P.Poly) -> P.Poly:
    from math import gcd, lcm

    den = 1
    for c in f:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in f]
    g = 0
    for c in ints:
        g = gcd(g, c)
    f = tuple(Fraction(c, g) for c in ints)
    if (f[0] if f[0] else f[-1]) < 0:
        f = P.scale(f, -1)
    return f


def discriminant_factorization(op: DifferentialOperator) -> DiscriminantFactorization:
    """Squarefree rational factorization ``a_4 = const * z^p * prod Delta_i^k_i``."""
    lead = op.to(DZ).coeffs[ORDER]
    zpow = P.lowest_order(lead)
    rest = tuple(lead[zpow:])
    const, facs = _to_sympy(rest, _Z).factor_list()
    factors = []
    constant = Fraction(int(sympy.Rational(const).p), int(sympy.Rational(const).q))
    for f, k in facs:
        raw = _from_sympy(f)
        norm = _normalize_factor(raw)
        constant *= (raw[-1] / norm[-1]) ** k
        factors.append((norm, int(k)))
    factors.sort(key=lambda fk: (P.degree(fk[0]), [abs(c) for c in fk[0]]))
    return DiscriminantFactorization(tuple(factors), zpow, constant)


def singular_points(op: DifferentialOperator) -> list[SingularPoint]:
    """Finite singular points (roots of the leading D-coefficient) followed by infinity.

    Real points come in increasing order, then non-real ones by argument.
    """
    disc = discriminant_factorization(op)
    points = []
    if disc.zpower > 0 or op.form == THETA:
        points.append(ZERO)
    for f, _ in disc.factors:
        if P.degree(f) == 1:
            r = -f[0] / f[1]
            points.append(SingularPoint(str(r), rational=r))
            continue
        expr = _to_sympy(f, _Z).as_expr()
        for idx in range(P.degree(f)):
            points.append(SingularPoint(f"root({expr}, {idx})", factor=f, index=idx))

    def key(pt):
        v = pt.value(30)
        real = abs(v.imag) < 1e-25 * max(1, abs(v))
        return (0 if real else 1, float(v.real) if real else float(mpmath.arg(v)), float(abs(v)))

    points.sort(key=key)
    points.append(INFINITY)
    return points


# --------------------------------------------------------------------------
# Local exponents


class _Alg:
    """Element of Q[x]/(m) for the minimal polynomial m of a singular point."""

    __slots__ = ("p", "m")

    def __init__(self, p, m):
        self.p = P.divmod_poly(P.trim(p), m)[1] if len(p) >= len(m) else P.trim(p)
        self.m = m

    def _coerce(self, other):
        return other if isinstance(other, _Alg) else _Alg((Fraction(other),), self.m)

    def __add__(self, other):
        return _Alg(P.add(self.p, self._coerce(other).p), self.m)

    __radd__ = __add__

    def __mul__(self, other):
        return _Alg(P.mul(self.p, self._coerce(other).p), self.m)

    __rmul__ = __mul__

    def inverse(self):
        return _Alg(P.inverse_mod(self.p, self.m), self.m)

    def is_zero(self):
        return not self.p

    def rational(self):
        if len(self.p) > 1:
            return None
        return self.p[0] if self.p else Fraction(0)


@dataclass(frozen=True)
class Spectrum:
    exponents: tuple  # 4 entries, Fraction when rational else mpmath numbers
    rational: bool = True

    def __iter__(self):
        return iter(self.exponents)

    def __eq__(self, other):
        if isinstance(other, Spectrum):
            return self.exponents == other.exponents
        return sorted(self.exponents) == sorted(Fraction(x) for x in other)

    def __hash__(self):
        return hash(self.exponents)


def _spectrum_from_poly(coeffs: list[Fraction]) -> Spectrum:
    s = sympy.Symbol("s")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(coeffs)], s)
    roots = sympy.roots(poly, multiple=True)
    if len(roots) == ORDER and all(r.is_Rational for r in roots):
        return Spectrum(tuple(sorted(Fraction(int(r.p), int(r.q)) for r in roots)))
    vals = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in reversed(coeffs)], maxsteps=200, extraprec=200)
    return Spectrum(tuple(sorted(vals, key=lambda v: (mpmath.re(v), mpmath.im(v)))), rational=False)


def indicial_polynomial_at_infinity(op: DifferentialOperator) -> list[Fraction]:
    parts = op.theta_parts()
    top = parts[-1]
    # exponents at infinity are the negatives of the roots of the top theta-part
    return [c * (-1) ** i for i, c in enumerate(top)]


def indicial_spectrum(op: DifferentialOperator, point: SingularPoint | Fraction | int) -> Spectrum:
    """Roots (with multiplicity) of the indicial polynomial at ``point``."""
    if not isinstance(point, SingularPoint):
        r = Fraction(point)
        point = SingularPoint(str(r), rational=r)
    if point.infinite:
        coeffs = list(indicial_polynomial_at_infinity(op))
        coeffs += [Fraction(0)] * (ORDER + 1 - len(coeffs))
        if coeffs[ORDER] == 0:
            raise ValueError("infinity is not a regular singular point")
        return _spectrum_from_poly(coeffs)
    a = op.to(DZ).coeffs
    m = point.minimal_poly
    # order of vanishing of the leading coefficient at the point
    r, lead = 0, a[ORDER]
    while True:
        quo, rem = P.divmod_poly(lead, m)
        if rem:
            break
        r, lead = r + 1, quo
    zeta = _Alg((Fraction(0), Fraction(1)), m)
    c = []
    for i in range(ORDER + 1):
        e = r - ORDER + i
        if e < 0:
            c.append(_Alg((), m))
            continue
        shifted = P.taylor_shift([_Alg((x,), m) for x in a[i]], zeta) if a[i] else []
        c.append(shifted[e] if e < len(shifted) else _Alg((), m))
    ind = [_Alg((), m) for _ in range(ORDER + 1)]
    for i in range(ORDER + 1):
        for k in range(i + 1):
            s = P.stirling1(i, k)
            if s:
                ind[k] = ind[k] + c[i] * s
    inv = ind[ORDER].inverse()
    normalized = [x * inv for x in ind]
    rationals = [x.rational() for x in normalized]
    if any(v is None for v in rationals):
        raise ValueError(f"indicial polynomial at {point} is not defined over Q")
    return _spectrum_from_poly(rationals)


@dataclass(frozen=True)
class SchemePoint:
    point: SingularPoint
    spectrum: Spectrum
    apparent: bool = False


@dataclass(frozen=True)
class RiemannScheme:
    points: tuple

    def spectrum(self, label: str) -> Spectrum:
        for sp in self.points:
            if sp.point.label == label:
                return sp.spectrum
        raise KeyError(label)

    def fuchs_sum(self) -> Fraction:
        return sum((sum(sp.spectrum.exponents, Fraction(0)) - 6 for sp in self.points), Fraction(0))


def riemann_scheme(op: DifferentialOperator) -> RiemannScheme:
    return RiemannScheme(tuple(SchemePoint(pt, indicial_spectrum(op, pt)) for pt in singular_points(op)))


# --------------------------------------------------------------------------
# Calabi-Yau condition


def check_cy_condition(op: DifferentialOperator) -> tuple[bool, sympy.Expr]:
    """Test a1 = a2 a3/2 - a3^3/8 + a2' - 3/4 a3 a3' - a3''/2 for the monic D-form.

    Returns ``(holds, residual_numerator)``.
    """
    a = op.to(DZ).coeffs
    lead = _to_sympy(a[ORDER], _Z).as_expr()
    a1, a2, a3 = (_to_sympy(a[i], _Z).as_expr() / lead for i in (1, 2, 3))
    z = _Z
    rhs = (sympy.Rational(1, 2) * a2 * a3 - sympy.Rational(1, 8) * a3**3 + sympy.diff(a2, z)
           - sympy.Rational(3, 4) * a3 * sympy.diff(a3, z) - sympy.Rational(1, 2) * sympy.diff(a3, z, 2))
    residual = sympy.numer(sympy.together(a1 - rhs))
    residual = sympy.expand(residual)
    return residual == 0, residual


def poly_from_coeffs(coeffs: Sequence) -> P.Poly:
    return P.trim([Fraction(c) for c in coeffs])
