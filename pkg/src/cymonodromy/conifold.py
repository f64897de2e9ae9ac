"""Conifold period and the Euler number c3.

The conifold period is the solution f multiplying log(z - z_c) at a conifold
point.  In the Frobenius basis at 0 it has coefficients c (f = sum c_i y_i),
obtained either as the image of the local monodromy minus the identity or
by matching the local log-solution at a point where both expansions
converge.  Its polynomial part in t_hat = t/(2 pi i),

    z2 = H^3/6 t_hat^3 + c2.H/24 t_hat + c3 zeta(3)/(2 pi i)^3 + O(q),

determines c3 once the cubic term is normalized.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import gmpy2
import mpmath

from . import _poly as P
from .continuation import _bits, to_mpmath
from .frobenius import frobenius_wronskian
from .lattice import extract_vanishing_vector
from .opcore import DZ, ORDER, DifferentialOperator, SingularPoint

log = logging.getLogger(__name__)

OVERLAP_LIMIT = 0.9
ROUND_TOL = 1e-6


class ConifoldError(ValueError):
    pass


@dataclass
class ConifoldPeriod:
    point: str
    c_vector: list  # coefficients of f in the Frobenius basis (image method)
    c_matching: list | None
    t_expansion: tuple  # (cubic, quadratic, linear, constant) in t_hat after normalization
    c3: int | None
    c2H: int | None
    residuals: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# midpoint


def midpoint_select(z_c, singulars: list) -> tuple[complex, float]:
    """Point z_* on the segment [0, z_c] balancing the two convergence ratios.

    Returns (z_*, ratio) where ratio is the larger of |z_*|/R_0 and
    |z_* - z_c|/R_c; ``ConifoldError`` when no useful overlap exists.
    """
    zc = mpmath.mpc(z_c)
    same = abs(zc) * mpmath.mpf(10) ** -20
    others = [mpmath.mpc(s) for s in singulars if abs(mpmath.mpc(s) - zc) > same]
    nonzero = [s for s in singulars if abs(mpmath.mpc(s)) > 0]
    R0 = min(abs(mpmath.mpc(s)) for s in nonzero)
    Rc = min(abs(s - zc) for s in others)
    if abs(zc) > R0 * (1 + mpmath.mpf(10) ** -20):
        warnings.warn("conifold point is not the singular point closest to the origin", stacklevel=2)
    a, b = abs(zc) / R0, abs(zc) / Rc
    tau = b / (a + b)
    ratio = a * b / (a + b)
    if ratio >= OVERLAP_LIMIT:
        raise ConifoldError("convergence discs at 0 and at the conifold point do not overlap")
    return tau * zc, float(ratio)


# --------------------------------------------------------------------------
# local log-solution at the conifold point


def _valuation(p: P.Poly, m: P.Poly) -> int:
    v = 0
    while p and any(p):
        quo, rem = P.divmod_poly(p, m)
        if any(rem):
            break
        v, p = v + 1, quo
    return v


def local_theta_parts(op: DifferentialOperator, point: SingularPoint, dps: int) -> list:
    """L = sum_j x^j P_j(theta_x) at x = z - point, numerically; P_j as coefficient lists."""
    a = op.to(DZ).coeffs
    m = point.minimal_poly
    zc = point.value(dps)
    vals = [_valuation(ai, m) if ai else 10**6 for ai in a]
    shift = min(v - i for i, v in enumerate(vals))
    with mpmath.workdps(dps):
        shifted = []
        for i, ai in enumerate(a):
            c = P.taylor_shift([mpmath.mpf(x.numerator) / x.denominator for x in ai], zc) if ai else []
            c = [mpmath.mpc(0) if k < vals[i] else x for k, x in enumerate(c)]
            shifted.append(c)
        J = max(len(c) - i - shift for i, c in enumerate(shifted))
        parts = []
        for j in range(J):
            poly = [mpmath.mpc(0)] * (ORDER + 1)
            for i, c in enumerate(shifted):
                k = j + i + shift
                if 0 <= k < len(c) and c[k] != 0:
                    for e in range(i + 1):
                        s = P.stirling1(i, e)
                        if s:
                            poly[e] += c[k] * s
            parts.append(poly)
    return parts


def _peval(p, x):
    return mpmath.polyval(list(reversed(p)), x)


def _pderiv(p):
    return [i * p[i] for i in range(1, len(p))]


def log_coefficient_series(parts: list, exponents, nterms: int, dps: int) -> list:
    """Series f (coefficients in x) such that f log x + g solves L for some series g.

    ``exponents`` are the (integer) local exponents; free coefficients up to the
    largest one are fixed by the resonance conditions.
    """
    E = int(max(exponents))
    dparts = [_pderiv(p) for p in parts]
    with mpmath.workdps(dps):
        nvar = 2 * (E + 1)
        rows = []
        for n in range(E + 1):
            rf = [mpmath.mpc(0)] * nvar
            rg = [mpmath.mpc(0)] * nvar
            for j, (pj, dj) in enumerate(zip(parts, dparts)):
                if n - j < 0:
                    continue
                rf[n - j] += _peval(pj, n - j)
                rg[E + 1 + n - j] += _peval(pj, n - j)
                rg[n - j] += _peval(dj, n - j)
            rows += [rf, rg]
        A = mpmath.matrix(rows)
        U, S, V = mpmath.svd_c(A)
        smax = max(abs(s) for s in S) or 1
        tol = mpmath.mpf(10) ** (-(dps // 2)) * smax
        sv = [abs(S[i]) if i < len(S) else mpmath.mpf(0) for i in range(nvar)]
        null = [V[i, :] for i in range(nvar) if sv[i] < tol]
        if not null:
            raise ConifoldError("no log-solution at the conifold point")
        F = mpmath.matrix([[vrow[0, k] for vrow in null] for k in range(E + 1)])
        Uf, Sf, Vf = mpmath.svd_c(F)
        sf = sorted((abs(s) for s in Sf), reverse=True)
        if len(sf) > 1 and sf[1] > tol * 10 * sf[0]:
            raise ConifoldError("log-coefficient not unique at the conifold point")
        f = [Uf[k, 0] for k in range(E + 1)]
        for n in range(E + 1, nterms):
            acc = mpmath.mpc(0)
            for j in range(1, len(parts)):
                if n - j >= 0:
                    acc += _peval(parts[j], n - j) * f[n - j]
            f.append(-acc / _peval(parts[0], n))
    return f


def _series_derivs(f, x, nd=4):
    """f^(k)(x) for k < nd."""
    out = [mpmath.mpc(0)] * nd
    xp = [mpmath.mpc(1)]
    for _ in range(len(f)):
        xp.append(xp[-1] * x)
    for k in range(nd):
        acc = mpmath.mpc(0)
        for n in range(k, len(f)):
            ff = 1
            for t in range(k):
                ff *= n - t
            acc += ff * f[n] * xp[n - k]
        out[k] = acc
    return out


def matching_vector(op, point: SingularPoint, exponents, singulars: list, digits: int) -> list:
    """Coefficients c with f^(k)(z_*) = sum_i c_i y_i^(k)(z_*), k = 0..3."""
    dps = digits + 20
    with mpmath.workdps(dps):
        zc = point.value(dps)
        zs, ratio = midpoint_select(zc, singulars)
        nterms = int(dps * 2.31 / -float(mpmath.log(ratio))) + 40
        parts = local_theta_parts(op, point, dps)
        f = log_coefficient_series(parts, exponents, nterms, dps)
        R0 = min(abs(mpmath.mpc(s)) for s in singulars if abs(mpmath.mpc(s)) > 0)
        zs_c = complex(zs)
        with gmpy2.context(gmpy2.get_context(), precision=_bits(dps)):
            W = to_mpmath(frobenius_wronskian(op, zs_c, float(R0), dps))
        # the Frobenius evaluation uses the binary point nearest to z_*; re-expand f there
        fd = _series_derivs(f, mpmath.mpc(zs_c) - zc)
        scale = [abs(zs_c) ** k for k in range(4)]
        Wm = mpmath.matrix(4, 4)
        rhs = mpmath.matrix(4, 1)
        for k in range(4):
            rhs[k] = fd[k] * scale[k]
            for i in range(4):
                Wm[k, i] = W[k, i] * scale[k]
        c = mpmath.lu_solve(Wm, rhs)
        return [c[i] for i in range(4)]


# --------------------------------------------------------------------------
# expansion and c3


def t_expansion(c: list, H3: int) -> tuple:
    """Polynomial part of sum c_i y_i / y_0 in t_hat, scaled so the cubic term is H3/6."""
    tpi = 2j * mpmath.pi
    raw = [c[3] * tpi**3 / 6, c[2] * tpi**2 / 2, c[1] * tpi, c[0]]
    s = mpmath.mpf(H3) / 6 / raw[0]
    return tuple(s * x for x in raw)


def proportionality_deviation(a: list, b: list):
    i = max(range(len(a)), key=lambda k: abs(a[k]))
    r = b[i] / a[i]
    nb = max(abs(x) for x in b)
    return max(abs(b[k] - r * a[k]) for k in range(len(a))) / nb


def conifold_period(op: DifferentialOperator, rep, point: SingularPoint, H3: int, c2H: int | None = None,
                    exponents=(0, 1, 1, 2), singulars=None, matching: bool = True,
                    tol_digits: float | None = None) -> ConifoldPeriod:
    """Conifold period at ``point``; c3 from the constant term of its t_hat expansion.

    The image method gives c from the local monodromy at ``point``; the
    matching method, when requested and possible, must agree up to scale.
    """
    digits = rep.digits
    tol = mpmath.mpf(10) ** (-(tol_digits if tol_digits is not None else digits / 2))
    residuals: dict = {}
    with mpmath.workdps(digits + 10):
        v = extract_vanishing_vector(rep.matrices[point.label])
        c = [v[i] for i in range(4)]
        cm = None
        if matching:
            if singulars is None:
                singulars = [p.value(digits + 20) for p in rep.points.values() if not p.infinite]
            try:
                cm = matching_vector(op, point, exponents, singulars, digits)
            except ConifoldError as exc:
                log.warning("matching method unavailable: %s", exc)
                residuals["matching"] = str(exc)
            if cm is not None:
                dev = proportionality_deviation(c, cm)
                residuals["methods"] = float(dev)
                if dev > tol:
                    raise ConifoldError(f"image and matching methods disagree (deviation {mpmath.nstr(dev, 5)})")
        cubic, quad, lin, const = t_expansion(c, H3)
        residuals["quadratic"] = float(abs(quad))
        if abs(quad) > tol:
            raise ConifoldError(f"t^2 coefficient does not vanish ({mpmath.nstr(abs(quad), 5)})")
        lin24 = lin * 24
        c2 = mpmath.nint(mpmath.re(lin24))
        residuals["c2H"] = float(abs(lin24 - c2))
        c3val = const * (2j * mpmath.pi) ** 3 / mpmath.zeta(3)
        c3 = mpmath.nint(mpmath.re(c3val))
        residuals["c3"] = float(abs(c3val - c3))
        ok3 = residuals["c3"] < ROUND_TOL
        if residuals["c2H"] >= ROUND_TOL:
            raise ConifoldError("linear coefficient is not c2.H/24 for an integer c2.H")
        if c2H is not None and int(c2) != c2H:
            raise ConifoldError(f"c2.H from the conifold period ({int(c2)}) differs from the lattice ({c2H})")
        if not ok3:
            raise ConifoldError(f"c3 extraction failed (rounding distance {residuals['c3']:.3g})")
        return ConifoldPeriod(point.label, c, cm, (cubic, quad, lin, const), int(c3), int(c2), residuals)
