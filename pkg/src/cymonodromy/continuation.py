"""Analytic continuation of the solution space by Taylor-series stepping.

At an ordinary point z0 the operator sum_i a_i(z) D^i gives a linear recurrence
for the Taylor coefficients of any solution in x = z - z0.  A step of length
|h| <= safety * (distance to the nearest singular point) maps the vector
(y, y', y'', y''') at z0 to the same vector at z0 + h.  Loop matrices are
products of step matrices; monodromies are expressed in the Frobenius basis
at z=0.

The inner loops run in gmpy2 at ``digits`` decimal digits plus guard bits;
results are returned as mpmath matrices.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import gmpy2
import mpmath

from .frobenius import frobenius_wronskian
from .opcore import DZ, DifferentialOperator, SingularPoint, singular_points

log = logging.getLogger(__name__)

GUARD_BITS = 64
SAFETY = 0.5
BASE_FRACTION = 0.9
BASE_ANGLE = 0.1
CIRCLE_VERTICES = 16


class PathTooCloseError(ValueError):
    pass


def _bits(digits: int) -> int:
    return int(math.ceil(digits * math.log2(10))) + GUARD_BITS


def to_mpmath(M) -> mpmath.matrix:
    out = mpmath.matrix(len(M), len(M[0]))
    for i, row in enumerate(M):
        for j, x in enumerate(row):
            out[i, j] = _mpc_to_mpmath(x)
    return out


def _mpfr_to_mpmath(x):
    if x == 0:
        return mpmath.mpf(0)
    man, exp = x.as_mantissa_exp()
    return mpmath.mpf((int(man), int(exp)))


def _mpc_to_mpmath(x):
    if not isinstance(x, type(gmpy2.mpc(0))):
        return mpmath.mpc(complex(x)) if isinstance(x, complex) else mpmath.mpc(x)
    return mpmath.mpc(_mpfr_to_mpmath(x.real), _mpfr_to_mpmath(x.imag))


def _mpmath_to_mpc(x):
    x = mpmath.mpc(x)
    return gmpy2.mpc(gmpy2.mpfr(_mpf_str(x.real)), gmpy2.mpfr(_mpf_str(x.imag)))


def _mpf_str(x):
    return mpmath.nstr(x, mpmath.mp.dps + 5, strip_zeros=False) if x else "0"


def _matmul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum((A[i][k] * B[k][j] for k in range(m)), gmpy2.mpc(0)) for j in range(p)] for i in range(n)]


def _identity():
    return [[gmpy2.mpc(1 if i == j else 0) for j in range(4)] for i in range(4)]


@dataclass(frozen=True)
class Path:
    vertices: tuple  # Python complex numbers (exact binary values)
    encircled: str | None = None

    @property
    def basepoint(self) -> complex:
        return self.vertices[0]

    def reversed(self) -> "Path":
        return Path(tuple(reversed(self.vertices)), self.encircled)

    def __add__(self, other: "Path") -> "Path":
        if self.vertices[-1] != other.vertices[0]:
            raise ValueError("paths do not connect")
        return Path(self.vertices + other.vertices[1:])


@dataclass
class TransferMatrix:
    matrix: mpmath.matrix
    start: complex
    end: complex
    basis: str = "derivatives"  # columns map (y, y', y'', y''') at start to end
    steps: int = 0


class _Stepper:
    """Taylor stepping for one operator at a fixed working precision."""

    def __init__(self, op: DifferentialOperator, singulars: list[complex], digits: int, safety: float = SAFETY):
        self.digits = digits
        self.bits = _bits(digits)
        self.safety = safety
        self.singulars = list(singulars)
        self.coeffs = [[gmpy2.mpq(c.numerator, c.denominator) for c in a] for a in op.to(DZ).coeffs]

    def nearest(self, z: complex) -> float:
        return min(abs(z - s) for s in self.singulars) if self.singulars else math.inf

    def _shifted(self, z0):
        out = []
        for a in self.coeffs:
            c = [gmpy2.mpc(x) for x in a]
            n = len(c)
            for i in range(n):
                for j in range(n - 2, i - 1, -1):
                    c[j] = c[j] + z0 * c[j + 1]
            out.append(c)
        return out

    def step(self, z0: complex, h: complex):
        """Matrix mapping (y, y', y'', y''') at z0 to z0 + h."""
        rho = self.nearest(z0)
        ratio = abs(complex(h)) / rho
        if ratio > 0.75:
            raise PathTooCloseError(f"step {z0} -> {z0 + h} exceeds the radius of convergence margin")
        nterms = int(math.ceil(self.bits * math.log(2) / -math.log(ratio))) + 16 if ratio > 0 else 4
        z0m = gmpy2.mpc(z0)
        hm = gmpy2.mpc(h)
        a = self._shifted(z0m)
        lead = a[4][0]
        # b[i][j] = a_ij h^(4-i+j) / a_40, recurrence for d_n = c_n h^n
        terms = []
        for i in range(5):
            for j, aij in enumerate(a[i]):
                if (i, j) == (4, 0) or aij == 0:
                    continue
                terms.append((i, j, aij * hm ** (4 - i + j) / lead))
        cols = 4
        d = []
        for n in range(4):
            # initial conditions: y^(k)(0) = delta_{k,col}  ->  c_n = delta/n!
            d.append([gmpy2.mpc(0)] * cols)
            d[n][n] = hm**n / math.factorial(n)
        zero = gmpy2.mpc(0)
        for m in range(0, max(nterms - 4, 0)):
            acc = [zero] * cols
            for i, j, b in terms:
                if j > m:
                    continue
                idx = m - j + i
                ff = 1
                for t in range(i):
                    ff *= idx - t
                if ff == 0:
                    continue
                coef = b * ff
                dv = d[idx]
                acc = [acc[c] + coef * dv[c] for c in range(cols)]
            denom = -((m + 4) * (m + 3) * (m + 2) * (m + 1))
            d.append([x / denom for x in acc])
        out = [[zero] * cols for _ in range(4)]
        for n, dv in enumerate(d):
            for k in range(4):
                if n < k:
                    continue
                ff = 1
                for t in range(k):
                    ff *= n - t
                row = out[k]
                for c in range(cols):
                    row[c] += ff * dv[c]
        for k in range(1, 4):
            scale = hm ** (-k)
            out[k] = [x * scale for x in out[k]]
        return out

    def segment(self, z0: complex, z1: complex):
        """Transfer along the straight segment z0 -> z1 with adaptive steps."""
        M = _identity()
        z = z0
        nsteps = 0
        while z != z1:
            rho = self.nearest(z)
            remaining = z1 - z
            if abs(remaining) <= self.safety * rho:
                znew = z1
            else:
                znew = z + remaining / abs(remaining) * self.safety * rho
            # the step is the exact difference of two binary endpoints
            M = _matmul(self.step(z, gmpy2.mpc(znew) - gmpy2.mpc(z)), M)
            z = znew
            nsteps += 1
        return M, nsteps

    def path(self, path: Path):
        with gmpy2.context(gmpy2.get_context(), precision=self.bits):
            M = _identity()
            nsteps = 0
            for z0, z1 in zip(path.vertices, path.vertices[1:]):
                S, n = self.segment(z0, z1)
                M = _matmul(S, M)
                nsteps += n
            return M, nsteps


def _finite_values(points: list[SingularPoint]) -> list[complex]:
    return [complex(p.value(30)) for p in points if not p.infinite]


def transfer_matrix(op: DifferentialOperator, path: Path, digits: int = 100,
                    singulars: list[complex] | None = None) -> TransferMatrix:
    if singulars is None:
        singulars = _finite_values(singular_points(op))
    check_path(path, singulars)
    stepper = _Stepper(op, singulars, digits)
    M, n = stepper.path(path)
    with mpmath.workdps(digits + 10):
        return TransferMatrix(to_mpmath(M), path.vertices[0], path.vertices[-1], steps=n)


def _segment_distance(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    if ab == 0:
        return abs(p - a)
    t = max(0.0, min(1.0, ((p - a) * ab.conjugate()).real / abs(ab) ** 2))
    return abs(p - (a + t * ab))


def check_path(path: Path, singulars: list[complex], margin: float = 0.0, rel_margin: float = 1e-9):
    """Raise ``PathTooCloseError`` when a segment comes within the margin of a singular point.

    The relative margin (against the segment scale) also catches segments that
    pass through a point but miss it by rounding.
    """
    for a, b in zip(path.vertices, path.vertices[1:]):
        scale = max(abs(a), abs(b))
        for s in singulars:
            dist = _segment_distance(s, a, b)
            if dist <= max(margin, rel_margin * scale):
                raise PathTooCloseError(f"segment {a} -> {b} passes within {dist:.3g} of singular point {s}")


# --------------------------------------------------------------------------
# Loops


@dataclass
class LoopSet:
    basepoint: complex
    order: list  # labels in product order
    loops: dict  # label -> Path
    frobenius_point: complex
    cut_angle: float


def build_loops(points: list[SingularPoint], base_fraction: float = BASE_FRACTION,
                base_angle: float = BASE_ANGLE, circle_vertices: int = CIRCLE_VERTICES) -> LoopSet:
    """Star-shaped loops from a common basepoint, one per finite singular point.

    The basepoint sits at ``base_fraction`` times the modulus of the nearest
    nonzero singular point, rotated by ``base_angle`` radians off its direction.
    Loops run straight towards their point, go once counter-clockwise around a
    small circle and return.  ``order`` lists points counter-clockwise (seen
    from the basepoint) starting at the widest free direction, so that the
    loop product in that order encircles all finite points.
    """
    finite = [p for p in points if not p.infinite]
    if not finite:
        raise ValueError("need at least one finite singular point")
    values = {p.label: complex(p.value(30)) for p in finite}
    nonzero = [(abs(v), lab) for lab, v in values.items() if v != 0]
    if nonzero:
        r0, lab0 = min(nonzero)
        direction = cmath.phase(values[lab0])
    else:
        r0, direction = 1.0, 0.0
    base = cmath.rect(base_fraction * r0, direction + base_angle)
    frob = cmath.rect(0.5 * r0, direction + base_angle)
    labels = list(values)
    loops = {}
    for lab in labels:
        s = values[lab]
        others = [abs(s - values[o]) for o in labels if o != lab]
        radius = 0.25 * min(others + [abs(s - base)])
        # keep the circle clear of every other loop's radial segment
        for o in labels:
            if o != lab:
                d = _segment_distance(s, base, values[o])
                if d > 0:
                    radius = min(radius, 0.5 * d)
        u = (base - s) / abs(base - s)
        entry = s + radius * u
        start = cmath.phase(u)
        circle = [s + cmath.rect(radius, start + 2 * math.pi * k / circle_vertices)
                  for k in range(1, circle_vertices)]
        verts = (base, entry, *circle, entry, base)
        loops[lab] = Path(tuple(verts), lab)
    angles = {lab: cmath.phase(values[lab] - base) for lab in labels}
    ordered = sorted(angles.values())
    gaps = [(ordered[(i + 1) % len(ordered)] - ordered[i]) % (2 * math.pi) or 2 * math.pi for i in range(len(ordered))]
    i = max(range(len(gaps)), key=lambda k: gaps[k])
    cut = ordered[i] + gaps[i] / 2
    order = sorted(labels, key=lambda lab: (angles[lab] - cut) % (2 * math.pi))
    return LoopSet(base, order, loops, frob, cut)


# --------------------------------------------------------------------------
# Monodromy representation


@dataclass
class MonodromyRep:
    basepoint: complex
    order: list  # labels in product order z_1..z_l
    loops: dict
    matrices: dict  # label -> mpmath matrix in the Frobenius basis; includes "oo"
    digits: int
    precision_estimate: float | None = None
    points: dict = field(default_factory=dict)  # label -> SingularPoint

    def product_deviation(self) -> mpmath.mpf:
        prod = mpmath.eye(4)
        for lab in self.order:
            prod = self.matrices[lab] * prod
        prod = prod * self.matrices["oo"]
        return mpmath.mnorm(prod - mpmath.eye(4), 1)


def _frobenius_frame(op, stepper: _Stepper, loops: LoopSet, values: dict, digits: int):
    radius = min(abs(v) for v in values.values() if v != 0)
    with gmpy2.context(gmpy2.get_context(), precision=stepper.bits):
        Wf = frobenius_wronskian(op, loops.frobenius_point, radius, digits)
        S, _ = stepper.segment(loops.frobenius_point, loops.basepoint)
        return _matmul(S, Wf)


def monodromy_rep(op: DifferentialOperator, digits: int = 100, estimate_precision: bool = True,
                  points: list[SingularPoint] | None = None, **loop_opts) -> MonodromyRep:
    """Monodromy matrices of all finite singular points in the Frobenius basis at 0.

    ``M = W^{-1} Phi W`` where W is the Wronskian of the Frobenius basis at the
    basepoint and Phi the loop transfer matrix; M acts on coordinate columns,
    so the continuation of y_i is sum_j M[j, i] y_j.  The matrix at infinity is
    defined by (M_{z_l} ... M_{z_1}) M_oo = Id.
    """
    if points is None:
        points = singular_points(op)
    rep = _monodromy_once(op, digits, points, **loop_opts)
    if estimate_precision:
        low = _monodromy_once(op, max(digits // 2, 15), points, **loop_opts)
        with mpmath.workdps(digits + 10):
            dev = max(mpmath.mnorm(rep.matrices[k] - low.matrices[k], 1) / mpmath.mnorm(rep.matrices[k], 1)
                      for k in rep.order)
            rep.precision_estimate = float(-mpmath.log10(dev)) if dev else float(digits)
    return rep


def _monodromy_once(op, digits, points, **loop_opts) -> MonodromyRep:
    finite = [p for p in points if not p.infinite]
    values = {p.label: complex(p.value(30)) for p in finite}
    loops = build_loops(points, **loop_opts)
    stepper = _Stepper(op, list(values.values()), digits)
    for path in loops.loops.values():
        check_path(path, list(values.values()))
    W = _frobenius_frame(op, stepper, loops, values, digits)
    # rescale derivative rows by |basepoint|^k so W is well conditioned
    scale = [abs(loops.basepoint) ** k for k in range(4)]
    mats = {}
    with mpmath.workdps(digits + 10):
        Dm = mpmath.diag(scale)
        Dinv = mpmath.diag([1 / mpmath.mpf(x) for x in scale])
        Wm = Dm * to_mpmath(W)
        Winv = mpmath.inverse(Wm)
    for lab in loops.order:
        Phi, nsteps = stepper.path(loops.loops[lab])
        with mpmath.workdps(digits + 10):
            mats[lab] = Winv * (Dm * to_mpmath(Phi) * Dinv) * Wm
        log.debug("loop %s: %d steps", lab, nsteps)
    with mpmath.workdps(digits + 10):
        prod = mpmath.eye(4)
        for lab in loops.order:
            prod = mats[lab] * prod
        mats["oo"] = mpmath.inverse(prod)
    return MonodromyRep(loops.basepoint, loops.order, loops.loops, mats, digits,
                        points={p.label: p for p in points})


# --------------------------------------------------------------------------
# Consistency report


@dataclass
class PointCheck:
    label: str
    charpoly: list  # nearest-integer coefficients, highest degree first
    charpoly_deviation: float
    exponent_deviation: float | None
    ok: bool


def charpoly_numeric(M: mpmath.matrix) -> list:
    """Characteristic polynomial det(lambda I - M), coefficients highest first (Faddeev-LeVerrier)."""
    n = M.rows
    coeffs = [mpmath.mpc(1)]
    Mk = mpmath.zeros(n, n)
    I = mpmath.eye(n)
    for k in range(1, n + 1):
        Mk = M * (Mk + coeffs[-1] * I)
        c = -sum(Mk[i, i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def consistency_check(rep: MonodromyRep, scheme, tol_digits: float | None = None) -> list[PointCheck]:
    """Integral characteristic polynomials and eigenvalue/exponent agreement per point."""
    tol = mpmath.mpf(10) ** (-(tol_digits if tol_digits is not None else rep.digits / 2))
    spectra = {sp.point.label: sp.spectrum for sp in scheme.points}
    out = []
    with mpmath.workdps(rep.digits + 10):
        for lab, M in rep.matrices.items():
            cp = charpoly_numeric(M)
            ints = [int(mpmath.nint(mpmath.re(c))) for c in cp]
            dev = max(abs(c - i) for c, i in zip(cp, ints))
            exp_dev = None
            if lab in spectra and spectra[lab].rational:
                target = sorted((mpmath.expjpi(2 * mpmath.mpf(e.numerator) / e.denominator) for e in spectra[lab]),
                                key=lambda v: (float(mpmath.re(v)), float(mpmath.im(v))))
                # roots of the integral polynomial vs exp(2 pi i exponent)
                poly_at = [abs(mpmath.polyval(cp, t)) for t in target]
                exp_dev = float(max(poly_at))
            ok = dev < tol and (exp_dev is None or exp_dev < tol)
            out.append(PointCheck(lab, ints, float(dev), exp_dev, bool(ok)))
    return out
