"""Genus-one instanton numbers from the holomorphic anomaly ansatz.

With q = exp(t) and G the genus-one free energy

    G = 1/2 log[ y0^-(4 - c3/12) * dz/dt * z^-(1 + c2H/12) * prod Delta_i^s_i ],

the series dG/dt equals -c2H/24 + sum_d sum_k (n0_d/12 + n1_d) d q^(kd).
The exponent of each discriminant factor is -lambda/6 for a transvection
S_{lambda,v} and 0 for trivial monodromy.  All series are exact rationals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from . import series as S
from .frobenius import FrobeniusBasis, MirrorMap

log = logging.getLogger(__name__)


class Genus1Error(ValueError):
    pass


UNKNOWN = None


def assign_exponents(disc, points: list, classification: dict) -> dict:
    """Map each discriminant factor to its exponent s_i (a Fraction).

    ``points`` are the singular points (with labels), ``classification``
    maps labels to PL entries.  Raises ``Genus1Error`` when a factor carries
    a monodromy of unknown type or its roots disagree.
    """
    out = {}
    for f, _k in disc.factors:
        roots = [p for p in points if not p.infinite and p.label != "0" and p.minimal_poly is not None
                 and _same_factor(p.minimal_poly, f)]
        if not roots:
            raise Genus1Error(f"no singular point found for factor {f}")
        exps = set()
        for p in roots:
            entry = classification.get(p.label)
            if entry is None or entry.kind not in ("identity", "conifoldLike"):
                kind = entry.kind if entry is not None else "missing"
                raise Genus1Error(f"no exponent rule for monodromy of kind {kind!r} at {p.label}")
            exps.add(Fraction(0) if entry.kind == "identity" else Fraction(-entry.lam, 6))
        if len(exps) != 1:
            raise Genus1Error(f"inconsistent factor {f}: roots carry different monodromy types")
        out[tuple(f)] = exps.pop()
    return out


def _same_factor(m, f) -> bool:
    m, f = list(m), list(f)
    if len(m) != len(f):
        return False
    r = f[-1] / m[-1]
    return all(a * r == b for a, b in zip(m, f))


@dataclass
class Genus1Result:
    genus1: dict
    c3: int | Fraction
    c3_solved: bool
    series: list  # dG/dt as q-series
    nonintegral: list = field(default_factory=list)


def _dF1_parts(fb: FrobeniusBasis, mm: MirrorMap, c2H, exponents: dict):
    """dG/dt = A + c3 * B as q-series (A, B exact)."""
    n = fb.order + 1
    f0 = fb.f[0]
    g = mm.t_regular
    jac = S.add(S.const(1, n), S.theta(g))  # dt/dlog z
    tl_f0 = S.theta(S.log(f0))
    tl_jac = S.theta(S.log(jac))
    base = S.sub(S.scale(tl_f0, -4), tl_jac)
    base = S.sub(base, S.const(Fraction(c2H, 12), n))
    for f, s in exponents.items():
        if not s:
            continue
        p = S.from_poly(f, n)
        p = S.scale(p, 1 / p[0])
        base = S.add(base, S.scale(S.theta(S.log(p)), s))
    c3part = S.scale(tl_f0, Fraction(1, 12))
    inv = S.inv(jac)
    A = S.scale(S.mul(base, inv), Fraction(1, 2))
    B = S.scale(S.mul(c3part, inv), Fraction(1, 2))
    return S.compose(A, mm.z_of_q), S.compose(B, mm.z_of_q)


def _divisor_inversion(series: list, genus0: dict, D: int) -> dict:
    """Solve coefficient(q^m) = sum_{d|m} (n0_d/12 + n1_d) d for n1."""
    a: dict[int, Fraction] = {}
    for m in range(1, D + 1):
        acc = Fraction(series[m])
        for d in range(1, m):
            if m % d == 0:
                acc -= a[d] * d
        a[m] = acc / m
    return {d: a[d] - Fraction(genus0[d]) / 12 for d in a}


def genus1_instantons(fb: FrobeniusBasis, mm: MirrorMap, genus0: dict, c2H: int, exponents: dict,
                      c3: int | None = None, D: int | None = None) -> Genus1Result:
    """n1_d for d <= D; when ``c3`` is None it is solved from n1_1 = 0."""
    D = fb.order if D is None else min(D, fb.order)
    if any(d not in genus0 for d in range(1, D + 1)):
        raise Genus1Error("genus-0 table does not reach the requested degree")
    A, B = _dF1_parts(fb, mm, c2H, exponents)
    solved = False
    if c3 is None:
        if B[1] == 0:
            raise Genus1Error("c3 does not enter the q^1 coefficient")
        c3v = (Fraction(genus0[1], 12) - A[1]) / B[1]
        solved = True
        if c3v.denominator != 1:
            log.warning("c3 solved from n1_1 = 0 is not an integer: %s", c3v)
        c3 = int(c3v) if c3v.denominator == 1 else c3v
    full = S.add(A, S.scale(B, Fraction(c3)))
    if full[0] != Fraction(-c2H, 24):
        raise Genus1Error("constant term differs from -c2H/24")
    raw = _divisor_inversion(full, genus0, D)
    table, bad = {}, []
    for d, v in raw.items():
        if v.denominator == 1:
            table[d] = int(v)
        else:
            table[d] = v
            bad.append(d)
    return Genus1Result(table, c3, solved, full, bad)
