"""Pipeline driver, corpus ingestion and reports.

Corpus files are JSON lines, one equation per line::

    {"id": "AESZ-28", "operator": "theta^4 - z*(...) + ...", "metadata": {...}}

``operator`` is either operator text or a structured object
``{"theta_parts": [[c0, c1, ...], ...]}`` listing the coefficients (in
increasing powers of theta) of P_j in L = sum_j z^j P_j(theta); numbers may
be integers or rational strings such as ``"-3/4"``.  Blank lines and lines
starting with ``#`` are skipped.

Results are written either as a table or as JSON lines (``--format machine``)
where every exact number is a string.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath

from . import _poly as P
from .conifold import ConifoldError, conifold_period
from .continuation import consistency_check, monodromy_rep
from .frobenius import InconsistentYukawaError, NotMUMError, d3F0, frobenius_basis, genus0_instantons, mirror_map
from .genus1 import Genus1Error, assign_exponents, genus1_instantons
from .lattice import (LatticeError, classify_all, find_conifold_candidates, group_by_invariants,
                      rational_monodromies, standardize)
from .opcore import (THETA, DifferentialOperator, OperatorSyntaxError, UnsupportedOrderError,
                     discriminant_factorization, parse_operator, riemann_scheme)

log = logging.getLogger(__name__)

FLAGS = (
    "noConifoldCandidate",
    "noRationalLattice",
    "nonIntegralLattice",
    "c3Failed",
    "genus1Aborted",
    "nonIntegralN1",
    "continuationFailed",
    "frobeniusFailed",
)


class CorpusError(ValueError):
    pass


class InputError(ValueError):
    """A record cannot be turned into a supported operator."""


# --------------------------------------------------------------------------
# records


@dataclass
class EquationRecord:
    id: str
    operator: str | dict
    metadata: dict = field(default_factory=dict)

    def to_operator(self) -> DifferentialOperator:
        try:
            if isinstance(self.operator, str):
                return parse_operator(self.operator, self.id)
            if isinstance(self.operator, dict) and "theta_parts" in self.operator:
                return operator_from_parts(self.operator["theta_parts"], self.id)
        except (OperatorSyntaxError, UnsupportedOrderError, ValueError) as exc:
            raise InputError(f"{self.id}: {exc}") from exc
        raise InputError(f"{self.id}: operator must be text or an object with 'theta_parts'")


def operator_from_parts(parts, name=None) -> DifferentialOperator:
    """Operator from the coefficient lists of P_j(theta), L = sum_j z^j P_j(theta)."""
    parts = [[Fraction(c) for c in p] for p in parts]
    order = max((len(P.trim(p)) - 1 for p in parts), default=-1)
    if order != 4:
        raise UnsupportedOrderError(f"unsupported order {order}; only order 4 operators are handled")
    coeffs = tuple(P.trim([p[i] if i < len(p) else Fraction(0) for p in parts]) for i in range(5))
    return DifferentialOperator(coeffs, THETA, name)


@dataclass
class PipelineOptions:
    digits: int = 100
    order: int = 30
    max_denominator: int = 10**8
    word_length: int = 6
    skip_genus1: bool = False


@dataclass
class ResultRecord:
    id: str
    riemann_scheme: list = field(default_factory=list)
    basepoint: str | None = None
    loop_order: list = field(default_factory=list)
    conifold: str | None = None
    monodromy: dict = field(default_factory=dict)  # label -> 4x4 matrix of rational strings
    invariants: dict = field(default_factory=dict)  # H3, c2H, k, c3, c3_genus1
    pl: dict = field(default_factory=dict)  # label -> {kind, lambda, v}
    genus0: dict = field(default_factory=dict)  # degree (string) -> integer string
    genus1: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    precision: dict = field(default_factory=dict)

    def flag(self, name: str, message: str | None = None):
        if name not in self.flags:
            self.flags.append(name)
        if message:
            self.messages.append(f"{name}: {message}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))

    @property
    def H3(self):
        return self.invariants.get("H3")

    @property
    def c2H(self):
        return self.invariants.get("c2H")


def _q(x) -> str:
    return str(Fraction(x)) if not hasattr(x, "p") else (str(x.p) if x.q == 1 else f"{x.p}/{x.q}")


def matrix_strings(M) -> list:
    return [[_q(M[i, j]) for j in range(M.cols)] for i in range(M.rows)]


def matrix_from_strings(rows):
    import sympy

    return sympy.Matrix([[sympy.Rational(x) for x in r] for r in rows])


# --------------------------------------------------------------------------
# pipeline


def run_pipeline(record: EquationRecord, opts: PipelineOptions | None = None) -> ResultRecord:
    """Run every stage on one equation; stage failures become flags.

    Only malformed input raises (``InputError``).
    """
    opts = opts or PipelineOptions()
    op = record.to_operator()
    res = ResultRecord(record.id)
    digits = opts.digits
    scheme = riemann_scheme(op)
    res.riemann_scheme = [
        {"point": sp.point.label,
         "exponents": [str(e) if sp.spectrum.rational else mpmath.nstr(e, 20) for e in sp.spectrum.exponents]}
        for sp in scheme.points
    ]

    candidates = find_conifold_candidates(scheme)
    if not candidates:
        res.flag("noConifoldCandidate", "no finite singular point with exponents {0,1,1,2}")
        return res

    try:
        rep = monodromy_rep(op, digits=digits)
    except Exception as exc:  # noqa: BLE001 - any numerical breakdown is a stage failure
        res.flag("continuationFailed", str(exc))
        return res
    res.basepoint = mpmath.nstr(mpmath.mpc(rep.basepoint), 17)
    res.loop_order = list(rep.order)
    with mpmath.workdps(digits + 10):
        res.precision = {
            "digits": digits,
            "estimate": round(rep.precision_estimate, 1) if rep.precision_estimate is not None else None,
            "product_deviation": mpmath.nstr(rep.product_deviation(), 5),
        }
        bad = [c.label for c in consistency_check(rep, scheme) if not c.ok]
    if bad:
        res.messages.append(f"eigenvalue/exponent mismatch at {', '.join(bad)}")

    try:
        with mpmath.workdps(digits + 10):
            rm = rational_monodromies(rep, candidates, max_den=opts.max_denominator,
                                      word_length=opts.word_length)
            lat = standardize(rm.matrices, "0", rm.conifold, rm.basis, rep.order)
    except LatticeError as exc:
        res.flag("noRationalLattice", f"{exc.flag}: {exc}")
        return res
    res.conifold = lat.conifold
    res.monodromy = {lab: matrix_strings(M) for lab, M in lat.standard.items()}
    res.invariants = {"H3": lat.d, "c2H": lat.c2H, "k": lat.k, "c3": None}
    classes = classify_all(lat)
    res.pl = {lab: {"kind": e.kind, "lambda": e.lam, "v": list(e.v) if e.v else None}
              for lab, e in classes.items()}
    if not lat.integral:
        res.flag("nonIntegralLattice", "standardized monodromies have non-integral entries")

    try:
        fb = frobenius_basis(op, opts.order)
        mm = mirror_map(fb)
        g0 = genus0_instantons(d3F0(op, fb, mm, lat.d))
    except (NotMUMError, InconsistentYukawaError) as exc:
        res.flag("frobeniusFailed", str(exc))
        return res
    res.genus0 = {str(d): _q(n) for d, n in g0.genus0.items()}

    c3 = None
    try:
        with mpmath.workdps(digits + 10):
            cp = conifold_period(op, rep, rep.points[lat.conifold], lat.d, lat.c2H)
        c3 = cp.c3
        res.invariants["c3"] = c3
        res.precision["conifold"] = {k: (v if isinstance(v, str) else f"{v:.3e}") for k, v in cp.residuals.items()}
    except ConifoldError as exc:
        res.flag("c3Failed", str(exc))

    if opts.skip_genus1:
        return res
    try:
        disc = discriminant_factorization(op)
        exps = assign_exponents(disc, list(rep.points.values()), classes)
        solved = genus1_instantons(fb, mm, g0.genus0, lat.c2H, exps, None)
        res.invariants["c3_genus1"] = _q(solved.c3)
        g1 = solved
        if c3 is not None and solved.c3 != c3:
            res.messages.append(f"c3 from n1_1 = 0 ({solved.c3}) differs from the conifold value ({c3})")
            g1 = genus1_instantons(fb, mm, g0.genus0, lat.c2H, exps, c3)
    except Genus1Error as exc:
        res.flag("genus1Aborted", str(exc))
        return res
    res.genus1 = {str(d): _q(n) for d, n in g1.genus1.items()}
    if g1.nonintegral:
        res.flag("nonIntegralN1", f"degrees {g1.nonintegral}")
    return res


# --------------------------------------------------------------------------
# corpus and reports


def load_corpus(path) -> list[EquationRecord]:
    records, seen = [], set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "operator" not in obj:
                raise CorpusError(f"line {lineno}: entry needs 'id' and 'operator'")
            rid = str(obj["id"])
            if rid in seen:
                raise CorpusError(f"line {lineno}: duplicate id {rid!r}")
            seen.add(rid)
            records.append(EquationRecord(rid, obj["operator"], obj.get("metadata") or {}))
    return records


TABLE_COLUMNS = ("group", "id", "H3", "c2H", "c3", "k", "singular points", "flags")


def _fmt(x) -> str:
    return "-" if x is None else str(x)


def emit_report(results: list, fmt: str = "table", out=None) -> str:
    """Write ``results`` as a table sorted by (H3, c2H) or as JSON lines; returns the text."""
    if fmt == "machine":
        text = "".join(r.to_json() + "\n" for r in results)
    else:
        groups = group_by_invariants([{"id": r.id, "H3": r.H3, "c2H": r.c2H, "genus0": r.genus0} for r in results])
        gid = {}
        for n, (key, g) in enumerate(groups.items(), 1):
            for rid in g["ids"]:
                gid[rid] = f"G{n}" + ("*" if g["likely_equivalent"] else "")
        done = sorted((r for r in results if r.H3 is not None), key=lambda r: (r.H3, r.c2H, r.id))
        rest = [r for r in results if r.H3 is None]
        rows = [TABLE_COLUMNS]
        for r in done + rest:
            pts = ",".join(p["point"] for p in r.riemann_scheme)
            rows.append((gid.get(r.id, "-"), r.id, _fmt(r.H3), _fmt(r.c2H), _fmt(r.invariants.get("c3")),
                         _fmt(r.invariants.get("k")), pts, ",".join(r.flags) or "ok"))
        widths = [max(len(str(row[i])) for row in rows) for i in range(len(TABLE_COLUMNS))]
        text = "".join("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() + "\n" for row in rows)
    if out is not None:
        out.write(text)
    return text


def _run_one(args):
    record, opts = args
    return run_pipeline(record, opts)


def run_corpus(records: list, opts: PipelineOptions, jobs: int = 1) -> list[ResultRecord]:
    if jobs <= 1:
        return [run_pipeline(r, opts) for r in records]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, [(r, opts) for r in records]))


# --------------------------------------------------------------------------
# command line


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cymonodromy", description="Monodromy and invariants of Calabi-Yau operators")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the pipeline on a corpus file")
    run.add_argument("corpus", help="JSON-lines corpus file")
    run.add_argument("--digits", type=int, default=100)
    run.add_argument("--order", type=int, default=30, help="series order for instanton numbers")
    run.add_argument("--max-denominator", type=float, default=1e8)
    run.add_argument("--word-length", type=int, default=6)
    run.add_argument("--skip-genus1", action="store_true")
    run.add_argument("--output", default=None, help="write the report here instead of stdout")
    run.add_argument("--format", choices=("table", "machine"), default="table")
    run.add_argument("--jobs", type=int, default=1, help="equations processed in parallel")
    run.add_argument("--only", action="append", default=None, help="restrict to these ids")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        records = load_corpus(args.corpus)
    except (OSError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.only:
        records = [r for r in records if r.id in set(args.only)]
    opts = PipelineOptions(args.digits, args.order, int(args.max_denominator), args.word_length, args.skip_genus1)
    try:
        results = run_corpus(records, opts, args.jobs)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w") as fh:
            emit_report(results, args.format, fh)
    else:
        emit_report(results, args.format, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
