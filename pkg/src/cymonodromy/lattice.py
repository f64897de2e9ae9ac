"""Integral lattices from numerical monodromy.

Numerical matrices (Frobenius basis, acting on coefficient columns) are
conjugated into a basis of orbit vectors of a vanishing cycle, rounded to
rationals by continued fractions, and then brought into the normal form

    T = [[1,1,0,0],[0,1,d,0],[0,0,1,1],[0,0,0,1]],
    S = [[1,0,0,0],[-k,1,0,0],[-1,0,1,0],[-1,0,0,1]]

by exact linear algebra.  d = H^3, k = c2.H/12 + H^3/6.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import sympy

log = logging.getLogger(__name__)

CONIFOLD_SPECTRUM = (0, 1, 1, 2)
RANK_TOL = mpmath.mpf(10) ** -20
MAX_QUADRUPLES = 20


class LatticeError(ValueError):
    """A stage of the lattice reconstruction failed; ``flag`` names the failure."""

    def __init__(self, message: str, flag: str = "noRationalLattice"):
        super().__init__(message)
        self.flag = flag


class NotRationalError(ValueError):
    pass


# --------------------------------------------------------------------------
# exact helpers


def to_matrix(rows) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in r] for r in rows])


def T_DM(d) -> sympy.Matrix:
    return sympy.Matrix([[1, 1, 0, 0], [0, 1, d, 0], [0, 0, 1, 1], [0, 0, 0, 1]])


def S_DM(k) -> sympy.Matrix:
    return sympy.Matrix([[1, 0, 0, 0], [-k, 1, 0, 0], [-1, 0, 1, 0], [-1, 0, 0, 1]])


def Q_DM(k) -> sympy.Matrix:
    return sympy.Matrix([[0, 0, 0, 1], [0, 0, -1, 1], [0, 1, 0, -k], [-1, -1, k, 0]])


def is_integral(M: sympy.Matrix) -> bool:
    return all(x.is_integer for x in M)


def charpoly_coeffs(M: sympy.Matrix) -> list:
    lam = sympy.Symbol("lam")
    return sympy.Poly(M.charpoly(lam).as_expr(), lam).all_coeffs()


def pairing(x, y, Q: sympy.Matrix):
    """<x, y> = y^T Q x; with Q = Q_DM this makes S_DM a transvection with lambda = +1."""
    return (sympy.Matrix(y).T * Q * sympy.Matrix(x))[0, 0]


def primitive(v) -> sympy.Matrix:
    """Primitive integer multiple of a rational vector, first nonzero entry positive."""
    v = [sympy.Rational(x) for x in v]
    den = sympy.ilcm(*[x.q for x in v]) if v else 1
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints) or 1
    ints = [i // g for i in ints]
    first = next((i for i in ints if i), 0)
    if first < 0:
        ints = [-i for i in ints]
    return sympy.Matrix(ints)


# --------------------------------------------------------------------------
# candidates and vanishing vectors


def find_conifold_candidates(scheme) -> list:
    """Finite singular points with spectrum {0,1,1,2}, closest to the origin first."""
    out = []
    for sp in scheme.points:
        if sp.point.infinite or not sp.spectrum.rational:
            continue
        if tuple(sorted(sp.spectrum.exponents)) == CONIFOLD_SPECTRUM:
            out.append(sp.point)
    return sorted(out, key=lambda p: abs(complex(p.value(30))))


def _svals(A: mpmath.matrix):
    return sorted((abs(s) for s in mpmath.svd_c(A, compute_uv=False)), reverse=True)


def extract_vanishing_vector(M: mpmath.matrix, tol=RANK_TOL) -> mpmath.matrix:
    """Unit vector spanning the image of M - Id, which must be numerically of rank one."""
    n = M.rows
    A = M - mpmath.eye(n)
    sv = _svals(A)
    if sv[0] == 0 or sv[1] / sv[0] >= tol:
        raise LatticeError("not a PL-type point: M - Id is not of rank one", "notPLType")
    v = A * mpmath.matrix([1] * n)
    if mpmath.norm(v) < sv[0] * tol:
        # probe happened to lie in the kernel; use the largest column
        j = max(range(n), key=lambda c: mpmath.norm(A[:, c]))
        v = A[:, j]
    return v / mpmath.norm(v)


# --------------------------------------------------------------------------
# lattice basis


def _np(v: mpmath.matrix) -> np.ndarray:
    return np.array([complex(v[i]) for i in range(v.rows)])


def _orbit(generators: list, v0: mpmath.matrix, max_length: int, cap: int):
    """Breadth-first orbit of v0 under words in the generators, deduplicated."""
    seen = {}
    vecs = [v0]
    words = [()]

    def key(v):
        u = _np(v) / np.linalg.norm(_np(v0))
        return tuple(np.round(np.concatenate([u.real, u.imag]), 6))

    seen[key(v0)] = 0
    frontier = [0]
    for _ in range(max_length):
        nxt = []
        for idx in frontier:
            for g, M in enumerate(generators):
                w = M * vecs[idx]
                k = key(w)
                if k in seen:
                    continue
                seen[k] = len(vecs)
                vecs.append(w)
                words.append(words[idx] + (g,))
                nxt.append(len(vecs) - 1)
                if len(vecs) >= cap:
                    return vecs, words
        frontier = nxt
        if not frontier:
            break
    return vecs, words


def _greedy(F: np.ndarray, first: int, skip: set) -> list | None:
    """Greedy choice of 4 columns of F (normalized) maximizing the residual at each step.

    Among near-best candidates the earliest (shortest word) is taken.
    """
    chosen = [first]
    for _ in range(3):
        Qb, _ = np.linalg.qr(F[:, chosen])
        resid = np.linalg.norm(F - Qb @ (Qb.conj().T @ F), axis=0)
        resid[chosen] = 0
        for s in skip:
            resid[s] = 0
        best = resid.max()
        if best < 1e-8:
            return None
        j = int(np.argmax(resid >= 0.5 * best))
        chosen.append(j)
    return chosen


def lattice_basis_candidates(generators: list, v0: mpmath.matrix, max_length: int = 6,
                             max_quadruples: int = MAX_QUADRUPLES, cap: int = 4096):
    """Yield up to ``max_quadruples`` quadruples of orbit vectors (as 4x4 mp matrices, columns)."""
    vecs, words = _orbit(generators, v0, max_length, cap)
    if len(vecs) < 4:
        return
    F = np.column_stack([_np(v) for v in vecs])
    F = F / np.linalg.norm(F, axis=0)
    seen = set()
    tried = 0
    skip: set = set()
    for attempt in range(len(vecs)):
        q = _greedy(F, 0, skip)
        if q is None:
            return
        key = tuple(sorted(q))
        if key not in seen:
            seen.add(key)
            B = mpmath.matrix(4, 4)
            for c, idx in enumerate(q):
                for r in range(4):
                    B[r, c] = vecs[idx][r]
            yield B, [words[i] for i in q]
            tried += 1
            if tried >= max_quadruples:
                return
        # exclude the last chosen vector next time to get a different quadruple
        skip.add(q[-1 - attempt % 3])


def generate_lattice_basis(generators: list, v0: mpmath.matrix, max_length: int = 6) -> mpmath.matrix:
    """First (best) quadruple of independent orbit vectors of v0."""
    for B, _ in lattice_basis_candidates(generators, v0, max_length, 1):
        return B
    raise LatticeError("lattice generation failed: orbit does not span")


# --------------------------------------------------------------------------
# rationalization


def _mpf_to_fraction(x) -> Fraction:
    x = mpmath.mpf(x)
    if x == 0:
        return Fraction(0)
    sign, man, exp, _ = x._mpf_
    return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)


def rationalize(x, max_den: int = 10**8, tol=mpmath.mpf(10) ** -20) -> Fraction:
    """Continued-fraction approximation p/q with q <= max_den and |x - p/q| < tol."""
    xf = _mpf_to_fraction(x)
    r = xf.limit_denominator(max_den)
    if abs(xf - r) >= _mpf_to_fraction(tol):
        raise NotRationalError(f"not rational at this precision: {mpmath.nstr(x, 20)}")
    return r


def rationalize_matrix(M: mpmath.matrix, max_den: int, tol) -> sympy.Matrix:
    scale = max(1, float(mpmath.mnorm(M, 1)))
    rows = []
    for i in range(M.rows):
        row = []
        for j in range(M.cols):
            z = mpmath.mpc(M[i, j])
            if abs(z.imag) > tol * scale:
                raise NotRationalError("entry with non-vanishing imaginary part")
            row.append(rationalize(z.real, max_den, tol * scale))
        rows.append(row)
    return to_matrix(rows)


def _unipotent4(M: sympy.Matrix) -> bool:
    return (M - sympy.eye(4)) ** 4 == sympy.zeros(4, 4)


@dataclass
class RationalMonodromies:
    matrices: dict  # label -> sympy Matrix (rational)
    basis: mpmath.matrix  # columns: lattice vectors in Frobenius coordinates
    conifold: str
    words: list
    attempts: int


def rational_monodromies(rep, candidates: list, max_den: int = 10**8, tol=None,
                         word_length: int = 6, max_quadruples: int = MAX_QUADRUPLES,
                         mum_label: str = "0") -> RationalMonodromies:
    """Exact rational monodromies via the retry ladder: quadruples per candidate, then next candidate."""
    if tol is None:
        tol = mpmath.mpf(10) ** (-(rep.digits // 4))
    gens = [rep.matrices[lab] for lab in rep.order]
    attempts = 0
    last = "no conifold candidate"
    for point in candidates:
        lab = point.label if hasattr(point, "label") else point
        try:
            v0 = extract_vanishing_vector(rep.matrices[lab])
        except LatticeError as exc:
            last = f"{lab}: {exc}"
            continue
        for B, words in lattice_basis_candidates(gens, v0, word_length, max_quadruples):
            attempts += 1
            try:
                Binv = mpmath.inverse(B)
                rat = {}
                for key, M in rep.matrices.items():
                    rat[key] = rationalize_matrix(Binv * M * B, max_den, tol)
            except (NotRationalError, ZeroDivisionError) as exc:
                last = f"{lab}: {exc}"
                continue
            if not all(all(c.is_integer for c in charpoly_coeffs(M)) for M in rat.values()):
                last = f"{lab}: non-integral characteristic polynomial"
                continue
            if not (_unipotent4(rat[mum_label]) and _unipotent4(rat[lab])):
                last = f"{lab}: MUM or conifold matrix not unipotent"
                continue
            log.info("rational lattice from %s after %d attempt(s)", lab, attempts)
            return RationalMonodromies(rat, B, lab, words, attempts)
    raise LatticeError(f"no rational lattice found ({last})", "noRationalLattice")


# --------------------------------------------------------------------------
# invariant form


def invariant_form(matrices) -> sympy.Matrix:
    """Primitive integral antisymmetric Q with M^T Q M = Q for all given matrices."""
    syms = sympy.symbols("q0:6")
    idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    Q = sympy.zeros(4, 4)
    for s, (i, j) in zip(syms, idx):
        Q[i, j] = s
        Q[j, i] = -s
    eqs = []
    for M in matrices:
        E = M.T * Q * M - Q
        eqs.extend(E[i, j] for i, j in idx)
    A, _ = sympy.linear_eq_to_matrix(eqs, syms)
    null = A.nullspace()
    if len(null) != 1:
        raise LatticeError(f"form not unique: solution space of dimension {len(null)}", "formNotUnique")
    vec = primitive(list(null[0]))
    out = sympy.zeros(4, 4)
    for c, (i, j) in zip(vec, idx):
        out[i, j] = c
        out[j, i] = -c
    return out


# --------------------------------------------------------------------------
# standardization


@dataclass
class LatticeResult:
    basis: mpmath.matrix | None
    rational: dict
    standard: dict  # label -> sympy Matrix in the standardized basis
    change: sympy.Matrix  # columns: standardized basis in the rational basis
    d: int
    k: int
    c2H: int
    integral: bool
    Q: sympy.Matrix
    mum: str
    conifold: str
    order: list = field(default_factory=list)

    @property
    def invariants(self) -> dict:
        return {"H3": self.d, "c2H": self.c2H, "k": self.k}


def _as_int(x) -> int | None:
    x = sympy.Rational(x)
    return int(x) if x.q == 1 else None


def standardize(rational: dict, mum: str, conifold: str, basis=None, order=None) -> LatticeResult:
    """Bring the MUM and conifold monodromies to T_DM(d), S_DM(k) by an exact change of basis."""
    I4 = sympy.eye(4)
    T, S = rational[mum], rational[conifold]
    N = T - I4
    if N**4 != sympy.zeros(4, 4) or N**3 == sympy.zeros(4, 4):
        raise LatticeError("MUM matrix is not maximally unipotent", "nonStandardLattice")
    A = S - I4
    if A.rank() != 1:
        raise LatticeError("conifold matrix is not a rank-one transvection", "nonStandardLattice")
    col = next(j for j in range(4) if any(A[:, j]))
    # sign chosen so that a pair already in normal form gets the identity basis change
    u = -A[:, col]
    # A = -u * phi^T
    i0 = next(i for i in range(4) if u[i] != 0)
    phi = -A[i0, :] / u[i0]
    flag = [u, N * u, N**2 * u, N**3 * u]
    if sympy.Matrix.hstack(*flag).rank() != 4:
        raise LatticeError("incompatible MUM/conifold pair: vanishing vector not cyclic", "nonStandardLattice")
    d = (phi * flag[3])[0, 0]
    k = (phi * flag[1])[0, 0]
    di, ki = _as_int(d), _as_int(k)
    if di is None or ki is None or di <= 0 or ki <= 0:
        raise LatticeError(f"non-standard lattice: d={d}, k={k}", "nonStandardLattice")
    e1 = flag[3] / d
    e2 = (flag[2] - flag[3]) / d
    e3 = flag[1] - k * e1 - d * e2
    e4 = u - k * e2 - e3
    E = sympy.Matrix.hstack(e1, e2, e3, e4)
    Einv = E.inv()
    std = {lab: Einv * M * E for lab, M in rational.items()}
    if std[mum] != T_DM(di) or std[conifold] != S_DM(ki):
        raise LatticeError("standardization did not reach the normal form", "nonStandardLattice")
    c2H = 12 * ki - 2 * di
    integral = all(is_integral(M) for M in std.values())
    try:
        Q = invariant_form(list(std.values()))
        if Q[0, 3] < 0:
            Q = -Q
    except LatticeError:
        Q = Q_DM(ki)
    new_basis = basis * mpmath.matrix(E.evalf(60).tolist()) if basis is not None else None
    return LatticeResult(new_basis, rational, std, E, di, ki, c2H, integral, Q, mum, conifold,
                         list(order) if order else [])


# --------------------------------------------------------------------------
# Picard-Lefschetz classification


@dataclass(frozen=True)
class PLEntry:
    kind: str  # identity | conifoldLike | mum | other
    lam: int | None = None
    v: tuple | None = None


def classify_pl(M: sympy.Matrix, Q: sympy.Matrix) -> PLEntry:
    """Identity, transvection M(a) = a - lam <v,a> v, maximally unipotent, or other."""
    I4 = sympy.eye(M.rows)
    A = M - I4
    if A == sympy.zeros(*A.shape):
        return PLEntry("identity", 0)
    if A.rank() == 1:
        col = next(j for j in range(A.cols) if any(A[:, j]))
        v = primitive(list(A[:, col]))
        # <v, a> = a^T Q v, so the transvection is a -> a - lam (v^T Q^T a) v
        P = v * (Q * v).T
        i, j = next((i, j) for i, j in product(range(4), range(4)) if P[i, j] != 0)
        lam = -A[i, j] / P[i, j]
        if A == -lam * P and lam.is_integer and lam >= 1:
            return PLEntry("conifoldLike", int(lam), tuple(int(x) for x in v))
        return PLEntry("other")
    if A**4 == sympy.zeros(4, 4) and A**3 != sympy.zeros(4, 4):
        return PLEntry("mum")
    return PLEntry("other")


def classify_all(result: LatticeResult) -> dict:
    return {lab: classify_pl(M, result.Q) for lab, M in result.standard.items()}


# --------------------------------------------------------------------------
# grouping


def group_by_invariants(results) -> dict:
    """Group results by (H^3, c2.H); within a group compare genus-0 tables.

    ``results`` holds objects or dicts with ``id``, ``H3``, ``c2H`` and ``genus0``.
    """
    groups: dict = {}
    for r in results:
        get = r.get if isinstance(r, dict) else lambda k, r=r: getattr(r, k, None)
        key = (get("H3"), get("c2H"))
        if key[0] is None:
            continue
        groups.setdefault(key, []).append(r)
    report = {}
    for key in sorted(groups):
        members = groups[key]
        tables = [(m.get("genus0") if isinstance(m, dict) else getattr(m, "genus0", None)) or {} for m in members]
        equal = True
        for t in tables[1:]:
            common = set(t) & set(tables[0])
            if any(t[d] != tables[0][d] for d in common):
                equal = False
        ids = [(m.get("id") if isinstance(m, dict) else getattr(m, "id", None)) for m in members]
        report[key] = {"ids": ids, "likely_equivalent": equal and len(members) > 1}
    return report
