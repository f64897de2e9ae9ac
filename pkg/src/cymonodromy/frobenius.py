"""Frobenius basis at the MUM point z=0, mirror map, Yukawa coupling and genus-0 invariants.

The Frobenius basis comes from the formal solution

    y(z, rho) = sum_n A(n, rho) z^(n + rho),   A(0, rho) = 1,

computed in Q[rho]/(rho^4).  Writing sum_n A(n, rho) z^n = f0 + f1 rho + f2 rho^2 + f3 rho^3,
the basis is y_i = sum_{j<=i} log(z)^j / j! * f_{i-j}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import mpmath

from . import _poly as P
from . import series as S
from .opcore import THETA, DifferentialOperator, check_cy_condition

log = logging.getLogger(__name__)

NRHO = 4


class NotMUMError(ValueError):
    pass


class InconsistentYukawaError(ArithmeticError):
    pass


# --- arithmetic in K[rho]/(rho^NRHO) -------------------------------------


def rho_mul(a, b, n=NRHO):
    out = [a[0] * 0] * n
    for i in range(n):
        if a[i]:
            for j in range(n - i):
                out[i + j] += a[i] * b[j]
    return out


def rho_inv(a, n=NRHO):
    out = [a[0] * 0] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        acc = a[0] * 0
        for j in range(1, k + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc * out[0]
    return out


def rho_shift(p, x, n=NRHO):
    """Coefficients of p(x + rho) truncated to rho^(n-1)."""
    return (P.taylor_shift(list(p), x) + [x * 0] * n)[:n]


def rho_falling(x, k, n=NRHO):
    """(x + rho)(x + rho - 1)...(x + rho - k + 1) as a rho-polynomial."""
    out = [x * 0 + 1] + [x * 0] * (n - 1)
    for i in range(k):
        factor = [x - i, x * 0 + 1] + [x * 0] * (n - 2)
        out = rho_mul(out, factor, n)
    return out


def _mum_parts(op: DifferentialOperator):
    parts = op.theta_parts()
    p0 = parts[0]
    if len(p0) != NRHO + 1 or any(p0[i] for i in range(NRHO)):
        raise NotMUMError("z=0 is not a point of maximal unipotent monodromy (P_0 is not c*theta^4)")
    return parts


def frobenius_coefficients(op: DifferentialOperator, nterms: int, zero=Fraction(0)):
    """A(n, rho) for n < nterms, each a list of NRHO coefficients.

    ``zero`` fixes the number type: ``Fraction(0)`` for exact arithmetic or a
    gmpy2/mpmath zero for floating point.
    """
    parts = _mum_parts(op)
    if isinstance(zero, Fraction):
        conv = Fraction
    else:
        conv = lambda c: gmpy2.mpfr(gmpy2.mpq(c.numerator, c.denominator))  # noqa: E731
    cparts = [[conv(c) for c in p] for p in parts]
    one = zero + 1
    A = [[one] + [zero] * (NRHO - 1)]
    for m in range(1, nterms):
        acc = [zero] * NRHO
        for j in range(1, min(m, len(cparts) - 1) + 1):
            if not parts[j]:
                continue
            shifted = rho_shift(cparts[j], zero + (m - j))
            term = rho_mul(shifted, A[m - j])
            acc = [a + t for a, t in zip(acc, term)]
        den = rho_shift(cparts[0], zero + m)
        if den[0] == 0:
            raise NotMUMError(f"recursion denominator vanishes at n={m}")
        A.append([-x for x in rho_mul(rho_inv(den), acc)])
    return A


@dataclass(frozen=True)
class FrobeniusBasis:
    order: int
    f: tuple  # four exact series of length order+1

    def y_coeffs(self, i: int) -> list[list[Fraction]]:
        """y_i = sum_j log(z)^j/j! * f_{i-j}; returns the list of f_{i-j} by j."""
        return [self.f[i - j] for j in range(i + 1)]


def frobenius_basis(op: DifferentialOperator, N: int = 30) -> FrobeniusBasis:
    if N < 4:
        raise ValueError("need N >= 4")
    A = frobenius_coefficients(op, N + 1)
    f = tuple([A[n][i] for n in range(N + 1)] for i in range(NRHO))
    return FrobeniusBasis(N, f)


# --- numerical evaluation --------------------------------------------------


def frobenius_wronskian(op: DifferentialOperator, z, radius: float, digits: int):
    """4x4 matrix W[k][i] = d^k y_i / dz^k at ``z`` (gmpy2 mpc, working precision set by caller).

    ``radius`` is the distance from 0 to the nearest other singular point.
    """
    import math

    ratio = abs(complex(z)) / radius
    if ratio >= 1:
        raise ValueError("point outside the disc of convergence of the Frobenius series")
    bits = gmpy2.get_context().precision
    nterms = int(math.ceil((bits + 20) * math.log(2) / -math.log(ratio))) + 30
    zero = gmpy2.mpfr(0)
    A = frobenius_coefficients(op, nterms, zero)
    z = gmpy2.mpc(z)
    sums = [[gmpy2.mpc(0)] * NRHO for _ in range(4)]
    zn = gmpy2.mpc(1)
    for n in range(nterms):
        for k in range(4):
            ff = rho_falling(zero + n, k)
            t = rho_mul(ff, A[n])
            row = sums[k]
            for r in range(NRHO):
                row[r] += t[r] * zn
        zn *= z
    L = gmpy2.log(z)
    ezr = [gmpy2.mpc(1), L, L * L / 2, L * L * L / 6]
    W = [[None] * 4 for _ in range(4)]
    for k in range(4):
        full = rho_mul([s * z ** (-k) for s in sums[k]], ezr)
        for i in range(4):
            W[k][i] = full[i]
    return W


def mum_monodromy_exact() -> list[list[complex]]:
    """Monodromy of a counter-clockwise loop around 0 in the Frobenius basis (mpmath)."""
    tpi = 2j * mpmath.pi
    M = mpmath.zeros(4, 4)
    for i in range(4):
        for j in range(i + 1):
            M[i - j, i] = tpi**j / mpmath.factorial(j)
    return M


# --- mirror map and Yukawa coupling ----------------------------------------


@dataclass(frozen=True)
class MirrorMap:
    """t = log z + f1/f0 and q = exp(t); series truncated at ``order``."""

    t_regular: list  # f1/f0 (the part of t without log z)
    q_of_z: list
    z_of_q: list
    normalization: dict = field(default_factory=lambda: {
        "q": "exp(t)",
        "t": "log(z) + f1/f0",
        "t_hat": "t/(2*pi*i), q = exp(2*pi*i*t_hat)",
    })

    @property
    def order(self) -> int:
        return len(self.q_of_z) - 1


def mirror_map(fb: FrobeniusBasis) -> MirrorMap:
    f0, f1 = fb.f[0], fb.f[1]
    g = S.div(f1, f0)
    q_of_z = [Fraction(0)] + S.exp(g)[:-1]
    z_of_q = S.reversion(q_of_z)
    return MirrorMap(g, q_of_z, z_of_q)


def _yukawa_z_series(op: DifferentialOperator, n: int) -> list[Fraction]:
    """z^3 * exp(-1/2 int a3 dz) normalised to 1 at z=0, with a3 = A3/A4 in D-form."""
    dz = op.to("dz")
    a4, a3 = dz.coeffs[4], dz.coeffs[3]
    low = P.lowest_order(a4)
    if low != 4:
        raise NotMUMError("leading D-coefficient must vanish to order 4 at the MUM point")
    # a3/a4 = (A3/z^3) / (A4/z^4) * 1/z ; the 1/z residue must be 6
    num = S.from_poly(a3[3:], n + 1) if len(a3) > 3 else S.const(0, n + 1)
    if any(a3[i] for i in range(min(3, len(a3)))):
        raise NotMUMError("unexpected pole order of a3 at z=0")
    den = S.from_poly(a4[4:], n + 1)
    ratio = S.div(num, den)  # z * a3
    if ratio[0] != 6:
        raise NotMUMError("a3 residue at 0 differs from 6")
    regular = [ratio[k + 1] for k in range(n)] + [Fraction(0)]  # (z*a3 - 6)/z
    return S.exp(S.scale(S.integrate(regular), Fraction(-1, 2)))


def d3F0(op: DifferentialOperator, fb: FrobeniusBasis, mm: MirrorMap, n00: int | Fraction = 1,
         check: bool = True) -> list[Fraction]:
    """Third t-derivative of the genus-0 prepotential as a q-series.

    Computed from d^2/dt^2 (y2/y0); when ``check`` is set the Yukawa-coupling
    route is evaluated too and must agree coefficient by coefficient.
    The constant term is scaled to ``n00`` (= H^3).
    """
    n = fb.order + 1
    f0, f1, f2 = fb.f[0], fb.f[1], fb.f[2]
    g = mm.t_regular
    # y2/y0 = t^2/2 + h(z),  h = f2/f0 - g^2/2
    h = S.sub(S.div(f2, f0), S.scale(S.mul(g, g), Fraction(1, 2)))
    hq = S.compose(h, mm.z_of_q)
    viaG = S.add(S.const(1, n), S.theta(S.theta(hq)))
    if check:
        holds, _ = check_cy_condition(op)
        if not holds:
            raise InconsistentYukawaError("operator fails the Calabi-Yau condition")
        k = _yukawa_z_series(op, fb.order)
        # K_ttt = k / (f0^2 (1 + z g')^3)
        one_zg = S.add(S.const(1, n), S.theta(g))
        kz = S.div(k, S.mul(S.mul(f0, f0), S.mul(one_zg, S.mul(one_zg, one_zg))))
        viaK = S.compose(kz, mm.z_of_q)
        if viaK != viaG:
            bad = next(i for i in range(n) if viaK[i] != viaG[i])
            raise InconsistentYukawaError(f"Yukawa coupling routes disagree at q^{bad}")
    return S.scale(viaG, Fraction(n00))


# --- genus-0 instanton numbers ---------------------------------------------


@dataclass
class InstantonTable:
    genus0: dict = field(default_factory=dict)
    genus1: dict = field(default_factory=dict)
    n00: Fraction | int | None = None
    c3: int | None = None
    nonintegral: list = field(default_factory=list)


def _as_int(x: Fraction, tol: float = 1e-6):
    r = round(x)
    return int(r) if abs(x - r) <= tol else None


def genus0_instantons(series: list, D: int | None = None) -> InstantonTable:
    """Invert c_m = sum_{d|m} n_d d^3 for the coefficients of d^3F0/dt^3."""
    D = len(series) - 1 if D is None else min(D, len(series) - 1)
    table = InstantonTable(n00=series[0] if series else 0)
    exact: dict[int, Fraction] = {}
    for m in range(1, D + 1):
        acc = Fraction(series[m])
        for d in range(1, m):
            if m % d == 0:
                acc -= exact[d] * d**3
        exact[m] = acc / m**3
    for d, v in exact.items():
        iv = _as_int(v)
        if iv is None:
            table.nonintegral.append(d)
            table.genus0[d] = v
        else:
            table.genus0[d] = iv
    if isinstance(table.n00, Fraction) and table.n00.denominator == 1:
        table.n00 = int(table.n00)
    return table


def lambert_series(n00, table: dict, D: int) -> list[Fraction]:
    """n00 + sum_l n_l l^3 q^l/(1-q^l) through q^D."""
    out = [Fraction(n00)] + [Fraction(0)] * D
    for l, nl in table.items():
        for k in range(l, D + 1, l):
            out[k] += Fraction(nl) * l**3
    return out
