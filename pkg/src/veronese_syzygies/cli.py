"""Command line entry point: ``vsyz <subcommand> [flags]``.

Every flag can also be supplied through the environment as
``VSYZ_<FLAG>`` (dashes become underscores, e.g. ``VSYZ_D=4``,
``VSYZ_TRIM_HEAD=2``); an explicit command-line flag wins.  The prefix
itself can be changed with ``VSYZ_ENV_PREFIX``.

Output goes to standard output; with ``--out DIR`` the files of each
module's export format are written below DIR as well, and computed Betti
databases are cached there (``DIR/data/n2/d{d}/b{b}``).  Errors are reported
on standard error as one ``error: kind=... message=...`` line with a nonzero
exit status.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import analysis, betti, core, hilbert, jobs, koszul, monomial_syzygies, rank, schur

DEFAULT_ENV_PREFIX = "VSYZ_"

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MISMATCH = 1

COMMANDS = ("basis", "numerator", "range", "plan", "work", "aggregate", "betti", "schur", "dominant",
            "esyz", "check-conj", "bs", "stats", "qq", "verify-golden")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.kind = kind
        self.code = code


# ---------------------------------------------------------------------------
# argument parsing


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    try:
        vals = tuple(float(x) for x in str(text).replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("tolerances must be a nonempty list of positive numbers")
    return vals


def _ints(text) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in str(text).replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# (flag, kwargs); every subcommand accepts every flag
_FLAGS = [
    ("--n", dict(type=int, default=2, help="number of variables minus one (default 2)")),
    ("--d", dict(type=int, default=None, help="Veronese degree")),
    ("--b", dict(type=int, default=None, help="twist b of S(b;d)")),
    ("--p", dict(type=int, default=None, help="homological degree")),
    ("--q", dict(type=int, default=None, help="row of the Betti table")),
    ("--a", dict(type=_ints, default=None, help="multidegree, e.g. 7,3,2")),
    ("--backend", dict(choices=("prime", "float"), default="prime", help="rank backend")),
    ("--primes", dict(type=int, default=3, help="number of random 30-bit primes")),
    ("--seed", dict(type=int, default=0, help="seed for prime selection")),
    ("--tolerances", dict(type=_floats, default=rank.DEFAULT_TOLERANCES,
                          help="float-LU pivot tolerances, comma separated")),
    ("--trim-head", dict(type=int, default=0, help="Q-Q: drop this many leading points")),
    ("--trim-tail", dict(type=int, default=0, help="Q-Q: drop this many trailing points")),
    ("--queue", dict(default=None, help="job queue directory")),
    ("--out", dict(default=None, help="output / database directory")),
    ("--workers", dict(type=int, default=1, help="worker processes for 'work'")),
    ("--all-b", dict(type=_bool, nargs="?", const=True, default=False, help="run for b = 0..d-1")),
    ("--complex", dict(choices=("artinian", "standard"), default=None,
                       help="complex used for ranks: the quotient by the d-th powers (same Betti "
                            "numbers, smaller matrices) or the full Koszul complex; default "
                            "'standard' for plan/work, 'artinian' otherwise")),
    ("--shortcut", dict(type=_bool, nargs="?", const=True, default=True,
                        help="use the Hilbert numerator outside the relevant range (default on)")),
    ("--symmetry", dict(type=_bool, nargs="?", const=True, default=True,
                        help="plan: only S_3-canonical multidegrees (default on)")),
    ("--duality", dict(type=_bool, nargs="?", const=True, default=True,
                       help="plan: allow planning the dual module (default on)")),
    ("--write-matrices", dict(type=_bool, nargs="?", const=True, default=False,
                              help="plan/basis: write matrix files")),
    ("--table", dict(default=None, help="bs/stats: read a Betti table from this file instead")),
    ("--all", dict(type=_bool, nargs="?", const=True, default=False,
                   help="esyz: keep weights of boundaries too")),
    ("--verbose", dict(type=_bool, nargs="?", const=True, default=False, help="log progress")),
]


def _env_defaults(environ) -> dict:
    prefix = environ.get("VSYZ_ENV_PREFIX", DEFAULT_ENV_PREFIX)
    out = {}
    for flag, _ in _FLAGS:
        key = prefix + flag.lstrip("-").replace("-", "_").upper()
        if key in environ:
            out[flag] = environ[key]
    return out


def build_parser(environ=None) -> argparse.ArgumentParser:
    environ = os.environ if environ is None else environ
    env = _env_defaults(environ)
    common = argparse.ArgumentParser(add_help=False)
    for flag, kw in _FLAGS:
        kw = dict(kw)
        if flag in env:
            kw["default"] = env[flag]  # strings go through the flag's type
        common.add_argument(flag, **kw)
    parser = argparse.ArgumentParser(prog="vsyz", description="Syzygies of Veronese embeddings of P^2.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    helps = {
        "basis": "degree-d monomials, or a strand basis with --p --q --a",
        "numerator": "multigraded Hilbert numerator of S(b;d)",
        "range": "nonvanishing table and relevant range",
        "plan": "plan rank tasks (and create a queue with --queue)",
        "work": "run workers on a queue",
        "aggregate": "assemble Betti data from a finished queue",
        "betti": "Betti table of S(b;d)",
        "schur": "Schur decomposition of K_{p,q}(b;d)",
        "dominant": "dominant weights of K_{p,q}(b;d) (or per p along row q)",
        "esyz": "dominant weights of the monomial syzygies E_{p,q}(b;d)",
        "check-conj": "compare dominant weights of E and K",
        "bs": "Boij-Soderberg decomposition",
        "stats": "Betti distribution moments, unimodality and redundancy",
        "qq": "Q-Q plot data of a Betti distribution",
        "verify-golden": "compare computed tables with the shipped reference files",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


# ---------------------------------------------------------------------------
# helpers


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise CliError("missing-flag", f"'{args.command}' needs --{name.replace('_', '-')}")


def _validate(args, pipeline: bool = True):
    if args.d is not None and args.d < 1:
        raise CliError("invalid-d", f"d must be positive, got {args.d}")
    if args.n < 0:
        raise CliError("invalid-n", f"n must be nonnegative, got {args.n}")
    if pipeline and args.n != 2:
        raise CliError("invalid-n", f"the Betti pipeline is implemented for n = 2, got n = {args.n}")
    if args.b is not None and args.d is not None and not 0 <= args.b < args.d:
        raise CliError("invalid-b", f"b must satisfy 0 <= b < d, got b={args.b}, d={args.d}")
    if args.primes < 1:
        raise CliError("invalid-primes", "--primes must be at least 1")
    if args.workers < 1:
        raise CliError("invalid-workers", "--workers must be at least 1")
    if args.trim_head < 0 or args.trim_tail < 0:
        raise CliError("invalid-trim", "trim counts must be nonnegative")
    if args.p is not None and args.p < 0:
        raise CliError("invalid-p", "p must be nonnegative")


def _bs(args) -> list[int]:
    """The b values a command runs over."""
    if args.all_b or args.b is None:
        return list(range(args.d))
    return [args.b]


def _complex(args, default: str) -> bool:
    return (args.complex or default) == "artinian"


def _rank_kw(args) -> dict:
    if args.backend == "prime":
        return {"primes": rank.random_primes(args.primes, args.seed), "seed": args.seed}
    return {"tolerances": tuple(args.tolerances)}


def _emit(text: str):
    sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def _write(args, name: str, text: str) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _database(args, b: int, positions=None) -> betti.BettiDatabase:
    """Betti data of S(b;d): cached under --out if present, otherwise computed.

    With ``positions`` only those positions are guaranteed complete.
    """
    d = args.d
    if args.out is not None:
        db = betti.BettiDatabase.load(args.out, b, d)
    else:
        db = betti.BettiDatabase(b, d)
    wanted = positions
    if wanted is None:
        wanted = sorted(hilbert.nonvanishing_table(b, d).positions())
    todo = [pq for pq in wanted if pq not in db.complete]
    if not todo:
        return db
    artinian = _complex(args, "artinian")
    if args.shortcut:
        rr = hilbert.relevant_range(b, d)
        if any(pq not in rr for pq in todo):
            betti.fill_from_numerator(db)
        todo = [pq for pq in todo if pq in rr]
        if todo:
            betti.compute_betti(b, d, shortcut=True, artinian=artinian, backend=args.backend,
                                positions=None if positions is None else todo, db=db, **_rank_kw(args))
    else:
        betti.compute_betti(b, d, shortcut=False, artinian=artinian, backend=args.backend,
                            positions=todo, db=db, **_rank_kw(args))
    if args.out is not None:
        db.save(args.out)
    return db


def _table(args, b: int) -> dict:
    if args.table:
        return betti.read_table_file(args.table)
    try:
        return _database(args, b).total_table()
    except betti.IncompleteDatabaseError as exc:
        raise CliError("missing-data", str(exc), EXIT_DATA) from None


def _fmt_weights(ws) -> str:
    return " ".join("(" + ",".join(map(str, w)) + ")" for w in sorted(ws, reverse=True)) or "-"


# ---------------------------------------------------------------------------
# subcommands


def cmd_basis(args):
    _validate(args, pipeline=False)
    _need(args, "d")
    if args.p is None:
        mons = core.monomial_basis(args.n, args.d)
        _emit("".join(" ".join(map(str, m)) + "\n" for m in mons))
        return 0
    _need(args, "b", "q", "a")
    spec = koszul.StrandSpec(args.n, args.d, args.b, args.p, args.q, tuple(args.a),
                             artinian=_complex(args, "standard"))
    mons = core.monomial_basis(args.n, args.d)
    lines = []
    for wedge in koszul.strand_basis(spec):
        f = koszul.cofactor(spec, wedge)
        lines.append(" ^ ".join("".join(map(str, mons[i])) for i in wedge) + " | " + " ".join(map(str, f)))
    _emit("".join(ln + "\n" for ln in lines) + f"# {len(lines)} basis elements\n")
    if args.write_matrices and args.out is not None and args.p >= 1:
        m = koszul.build_differential(spec)
        path = koszul.write_matrix(m, Path(args.out) / koszul.matrix_filename(spec))
        _emit(f"# matrix {m.nrows}x{m.ncols} nnz={m.nnz} written to {path}")
    return 0


def cmd_numerator(args):
    _validate(args)
    _need(args, "d", "b")
    A = hilbert.numerator(args.b, args.d)
    text = "".join(ln + "\n" for ln in A.lines())
    _emit(text)
    _write(args, f"numerator_n2_d{args.d}_b{args.b}.txt", text)
    return 0


def cmd_range(args):
    _validate(args)
    _need(args, "d")
    out = []
    for b in _bs(args):
        table = hilbert.nonvanishing_table(b, args.d)
        rr = hilbert.relevant_range(b, args.d)
        pairs = hilbert.ambiguous_pairs(b, args.d)
        out.append(f"b={b} d={args.d}")
        out.append("nonzero: " + " ".join(f"({p},{q})" for p, q in sorted(table.positions(), key=lambda t: (t[1], t[0]))))
        out.append("relevant: " + " ".join(f"({p},{q})" for p, q in sorted(rr, key=lambda t: (t[1], t[0]))))
        out.append("pairs: " + " ".join(f"({p},{q})-({p - 1},{q + 1})" for p, q in pairs))
    _emit("\n".join(out))
    return 0


def cmd_plan(args):
    _validate(args)
    _need(args, "d")
    lines = []
    for b in _bs(args):
        man = jobs.plan(b, args.d, symmetry=args.symmetry, duality=args.duality,
                        hilbert_shortcut=args.shortcut, artinian=_complex(args, "standard"))
        big = man.largest()
        # reported as dim C_p x dim C_{p-1}, the transpose of the stored matrix
        shape = f"{big.cols}x{big.rows}" if big else "-"
        lines.append(f"b={b} d={args.d} planned_b={man.plan_b} tasks={man.count} largest={shape}")
        lines.extend(f"warning: {w}" for w in man.warnings)
        if args.queue is not None:
            if args.all_b:
                raise CliError("usage", "--queue takes a single --b")
            config = jobs.QueueConfig(backend=args.backend, primes=args.primes, seed=args.seed,
                                      tolerances=tuple(args.tolerances))
            jobs.Queue(args.queue).init(man, config, write_matrices=args.write_matrices)
            lines.append(f"queue initialised at {args.queue}")
    _emit("\n".join(lines))
    return 0


def cmd_work(args):
    _validate(args, pipeline=False)
    _need(args, "queue")
    if not (Path(args.queue) / "manifest.txt").exists():
        raise CliError("missing-queue", f"{args.queue} is not a planned queue (run 'plan --queue' first)", EXIT_DATA)
    limits = jobs.WorkerLimits(poll=True)
    codes = jobs.run_workers(args.queue, args.workers, limits)
    summary = jobs.Queue(args.queue).summary()
    _emit(" ".join(f"{k}={v}" for k, v in sorted(summary.items())) + " exit_codes=" + ",".join(map(str, codes)))
    return 0 if summary.get("pending", 0) == 0 and summary.get("failed", 0) == 0 else EXIT_DATA


def cmd_aggregate(args):
    _validate(args, pipeline=False)
    _need(args, "queue")
    try:
        db = jobs.aggregate(args.queue, args.out)
    except jobs.MissingResultsError as exc:
        raise CliError("missing-results", str(exc), EXIT_DATA) from None
    table = db.total_table()
    _emit(format_header(db.b, db.d) + betti.format_table(table))
    return 0


def format_header(b, d) -> str:
    return f"# Betti table of S({b};{d}); rows q, columns p\n"


def cmd_betti(args):
    _validate(args)
    _need(args, "d")
    out = []
    for b in _bs(args):
        db = _database(args, b)
        try:
            table = db.total_table()
        except betti.IncompleteDatabaseError as exc:
            raise CliError("missing-data", str(exc), EXIT_DATA) from None
        out.append(format_header(b, args.d) + betti.format_table(table))
        _write(args, f"betti_d{args.d}_b{b}.csv", betti.betti_csv(table))
        _write(args, f"multigraded_d{args.d}_b{b}.txt", "".join(ln + "\n" for ln in betti.multigraded_lines(db)))
    _emit("\n".join(out))
    return 0


def _positions_of_row(args, b):
    table = hilbert.nonvanishing_table(b, args.d)
    return sorted(p for p, q in table.positions() if q == args.q)


def cmd_schur(args):
    _validate(args)
    _need(args, "d", "b", "q")
    ps = [args.p] if args.p is not None else _positions_of_row(args, args.b)
    db = _database(args, args.b, positions=[(p, args.q) for p in ps])
    out = []
    for p in ps:
        dec = schur.decompose_position(db, p, args.q)
        if not dec.residual_ok:
            raise CliError("not-decomposable", f"K_({p},{args.q}) is not a sum of Schur modules", EXIT_DATA)
        text = "".join(ln + "\n" for ln in dec.lines())
        out.append(f"# K_({p},{args.q})({args.b};{args.d}) dim={dec.dimension()} modules={dec.total_modules()}\n" + text)
        _write(args, f"schur_d{args.d}_b{args.b}_p{p}_q{args.q}.txt", text)
    _emit("".join(out))
    return 0


def cmd_dominant(args):
    _validate(args)
    _need(args, "d", "b", "q")
    ps = [args.p] if args.p is not None else _positions_of_row(args, args.b)
    db = _database(args, args.b, positions=[(p, args.q) for p in ps])
    counts = []
    lines = []
    for p in ps:
        ws = schur.kpq_dominant_weights(db, p, args.q)
        counts.append(len(ws))
        lines.append(f"{p} {len(ws)} {_fmt_weights(ws)}")
    if args.p is None:
        lines.append("sequence: " + " ".join(map(str, counts)))
    _emit("\n".join(lines))
    return 0


def cmd_esyz(args):
    _validate(args)
    _need(args, "d", "b", "p", "q")
    ws = monomial_syzygies.e_dominant_weights(args.p, args.q, args.b, args.d, args.n, nonboundary=not args.all)
    _emit(f"{args.b} {args.d} {args.p} {args.q} {_fmt_weights(ws)}")
    return 0


def cmd_check_conj(args):
    _validate(args)
    _need(args, "d")
    verdicts = []
    for b in _bs(args):
        db = _database(args, b)
        positions = None
        if args.p is not None and args.q is not None:
            positions = [(args.p, args.q)]
        verdicts.extend(monomial_syzygies.check_database(db, positions))
    text = "".join(v.record() + "\n" for v in verdicts)
    bad = sum(not v.match for v in verdicts)
    _emit(text + f"# {len(verdicts)} positions, {len(verdicts) - bad} match, {bad} mismatch")
    _write(args, f"conjecture_d{args.d}.txt", text)
    return 0 if bad == 0 else EXIT_MISMATCH


def cmd_bs(args):
    _validate(args)
    if args.table is None:
        _need(args, "d", "b")
    table = _table(args, args.b)
    try:
        dec = analysis.bs_decompose(table)
    except ValueError as exc:
        raise CliError("not-decomposable", str(exc), EXIT_DATA) from None
    text = "".join(ln + "\n" for ln in dec.lines())
    _emit(text)
    if args.table is None:
        _write(args, f"bs_d{args.d}_b{args.b}.txt", text)
    return 0


def cmd_stats(args):
    _validate(args)
    if args.table is None:
        _need(args, "d", "b")
    table = _table(args, args.b)
    qs = [args.q] if args.q is not None else sorted({q for (_, q), v in table.items() if v})
    lines = []
    for q in qs:
        row = analysis.table_row(table, q)
        if not any(row.values()):
            continue
        dist = analysis.betti_distribution(row)
        seq = [row.get(p, 0) for p in range(min(row), max(row) + 1)]
        lines.append(f"q={q} offset={dist.offset} length={len(dist.raw)} total={sum(dist.raw)}")
        lines.append(f"  mean={dist.mean:.12g} variance={dist.variance:.12g} "
                     f"skewness={dist.skewness:.12g} excess_kurtosis={dist.excess_kurtosis:.12g}")
        lines.append(f"  unimodal={analysis.is_unimodal(seq)}")
    if args.p is not None and args.q is not None:
        try:
            r = analysis.redundancy_ratio(table, args.p, args.q)
        except ZeroDivisionError as exc:
            raise CliError("zero-denominator", str(exc), EXIT_DATA) from None
        lines.append(f"redundancy({args.p},{args.q})={r.numerator}/{r.denominator}={float(r):.6g}")
    best = analysis.most_redundant(table)
    if best is not None:
        (p, q), r = best
        lines.append(f"most_redundant=({p},{q}) {r.numerator}/{r.denominator}={float(r):.6g}")
    _emit("\n".join(lines))
    return 0


def cmd_qq(args):
    _validate(args)
    _need(args, "q")
    if args.table is None:
        _need(args, "d", "b")
    table = _table(args, args.b)
    row = analysis.table_row(table, args.q)
    try:
        dist = analysis.betti_distribution(row)
        pairs = analysis.qq_data(dist, args.trim_head, args.trim_tail)
    except ValueError as exc:
        raise CliError("degenerate-distribution", str(exc), EXIT_DATA) from None
    text = "".join(f"{x!r}\t{y!r}\n" for x, y in pairs)
    _emit(text)
    if args.table is None:
        _write(args, f"qq_d{args.d}_b{args.b}_q{args.q}_h{args.trim_head}_t{args.trim_tail}.tsv", text)
    return 0


def cmd_verify_golden(args):
    _validate(args)
    _need(args, "d")
    lines = []
    bad = 0
    for b in _bs(args):
        try:
            expected = betti.golden_table(b, args.d)
        except FileNotFoundError as exc:
            raise CliError("missing-golden", str(exc), EXIT_DATA) from None
        found = _table(args, b)
        diffs = betti.table_diff(found, expected)
        bad += len(diffs)
        lines.append(f"b={b} d={args.d} diffs={len(diffs)}")
        lines.extend(f"  ({p},{q}) expected={e} found={f}" for (p, q), e, f in diffs)
    _emit("\n".join(lines))
    return 0 if bad == 0 else EXIT_MISMATCH


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def main(argv=None, environ=None) -> int:
    parser = build_parser(environ)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[args.command](args)
    except CliError as exc:
        print(f"error: kind={exc.kind} message={exc}", file=sys.stderr)
        return exc.code
    except (hilbert.RangeValidationError, hilbert.IntegrityError, koszul.MatrixFileError,
            jobs.QueueError, betti.IncompleteDatabaseError) as exc:
        print(f"error: kind={type(exc).__name__} message={exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: kind={type(exc).__name__} message={exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
