"""Command line entry point: ``relforge <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 generation/budget/gap
failure, 3 verification failure. Diagnostics go to stderr, prefixed "error:".
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .catalog import PROPERTY_NAMES, PropertyDef, get_property, load_property_file, select_properties
from .cnf import ground
from .dsl import DslError, parse, pretty
from .evaluator import MAX_EXHAUSTIVE_N, BudgetError, check
from .generator import (
    DEFAULT_ATTEMPT_CAP,
    DEFAULT_ENUM_CAP,
    DEFAULT_POSITIVES,
    GenerationError,
    GenJob,
    generate,
    verify_dataset,
)
from .graph import GraphError, parse_graph_spec
from .sat import DEFAULT_CONFLICT_BUDGET, SolverBudgetError
from .seeds import job_seed

log = logging.getLogger("relforge")

OUT_ENV = "RELFORGE_OUT"
DEFAULT_OUT = "datasets"
DEFAULT_SIZES = "base..base+10"

EXIT_OK, EXIT_USAGE, EXIT_GENERATION, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


# --- size ranges -------------------------------------------------------------

_TERM = re.compile(r"^\s*(?:(base)\s*(?:([+-])\s*(\d+))?|(\d+))\s*$")


def _size_term(text: str, base: int) -> int:
    m = _TERM.match(text)
    if not m:
        raise UsageError(f"bad size {text!r} (use e.g. 7, base, base+10)")
    if m.group(4) is not None:
        return int(m.group(4))
    off = int(m.group(3) or 0)
    return base - off if m.group(2) == "-" else base + off


def parse_sizes(spec: str, base: int) -> list[int]:
    """Comma-separated sizes or ``a..b`` ranges, where ``base`` names the base size."""
    out: list[int] = []
    for part in spec.split(","):
        if ".." in part:
            lo_text, hi_text = part.split("..", 1)
            lo, hi = _size_term(lo_text, base), _size_term(hi_text, base)
            if lo > hi:
                raise UsageError(f"empty size range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_size_term(part, base))
    if any(s < 1 for s in out):
        raise UsageError(f"sizes must be >= 1 (got {spec!r} with base {base})")
    return list(dict.fromkeys(out))


# --- generation --------------------------------------------------------------


@dataclass(frozen=True)
class JobSpec:
    """Picklable description of one dataset build."""

    prop_name: str
    source: str | None  # formula text for user properties, None for built-ins
    base_size: int
    size: int
    family: str
    seed: int
    out: str
    force: bool
    emit_cnf: bool
    positives: int
    max_fbits: int
    enum_cap: int
    attempt_cap: int
    unpaired_threshold: float
    conflict_budget: int

    def prop(self) -> PropertyDef:
        if self.source is None:
            return get_property(self.prop_name)
        return PropertyDef(self.prop_name, parse(self.source), self.base_size, "combined")

    @property
    def dataset_id(self) -> str:
        return f"{self.prop_name}/{self.family}/v{self.size}"


def run_job(spec: JobSpec) -> tuple[int, str]:
    """Build, verify and write one dataset. Returns (exit code, message)."""
    from .dataset_io import data_path, write_dataset

    started = time.perf_counter()
    prop = spec.prop()
    job = GenJob(prop, spec.size, spec.family, spec.seed, target_positives=spec.positives,
                 max_fbits=spec.max_fbits, enum_cap=spec.enum_cap, attempt_cap=spec.attempt_cap,
                 unpaired_threshold=spec.unpaired_threshold, conflict_budget=spec.conflict_budget)
    path = data_path(spec.out, prop.name, spec.family, spec.size)
    if not spec.force and path.exists():
        return EXIT_USAGE, f"{path} exists (use --force to overwrite)"
    try:
        ls, info = generate(job)
    except (GenerationError, SolverBudgetError) as exc:
        text = str(exc)
        return EXIT_GENERATION, text if text.startswith(spec.dataset_id) else f"{spec.dataset_id}: {text}"
    report = verify_dataset(ls, prop, spec.max_fbits if spec.family == "perturb" else None)
    if not report.ok:
        kind, detail = report.violations[0]
        return EXIT_VERIFY, f"{spec.dataset_id}: {len(report.violations)} violations, first: {kind}: {detail}"
    try:
        write_dataset(ls, path, job, info, force=spec.force)
        if spec.emit_cnf:
            _write_cnf(prop, spec.size, path.with_suffix(".cnf"))
    except FileExistsError as exc:
        return EXIT_USAGE, str(exc)
    elapsed = time.perf_counter() - started
    return EXIT_OK, (f"{spec.dataset_id}: {len(ls.positives)}+{len(ls.negatives)} records "
                     f"in {elapsed:.1f}s -> {path}")


def _write_cnf(prop: PropertyDef, size: int, path: Path) -> None:
    from .dataset_io import _atomic_write

    cnf = ground(prop.formula, size)
    text = cnf.to_dimacs([f"property {prop.name}", f"size {size}", pretty(prop.formula),
                          f"edge (i, j) is variable i*{size}+j+1"])
    _atomic_write(path, text.encode("ascii"), True)


def _properties(args: argparse.Namespace) -> list[tuple[PropertyDef, str | None]]:
    if args.property_file:
        if args.base_size is None:
            raise UsageError("--property-file needs --base-size")
        prop = load_property_file(args.property_file, args.base_size, args.name)
        return [(prop, pretty(prop.formula))]
    if not args.property:
        raise UsageError("one of --property or --property-file is required")
    try:
        props = select_properties(args.property)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if not props:
        raise UsageError("empty property selection")
    return [(p, None) for p in props]


def plan_jobs(args: argparse.Namespace, families: Sequence[str]) -> list[JobSpec]:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    jobs = []
    for prop, source in _properties(args):
        for family in families:
            for size in parse_sizes(args.sizes, prop.base_size):
                jobs.append(JobSpec(
                    prop.name, source, prop.base_size, size, family,
                    job_seed(args.seed, prop.name, family, size), str(out), args.force,
                    args.emit_cnf, args.positives, args.max_fbits, args.enum_cap,
                    args.attempt_cap, args.unpaired_threshold, args.conflict_budget))
    return jobs


def cmd_generate(args: argparse.Namespace, families: Sequence[str]) -> int:
    jobs = plan_jobs(args, families)
    if args.dry_run:
        for j in jobs:
            print(f"{j.dataset_id}\tseed={j.seed}")
        log.info("%d jobs planned", len(jobs))
        return EXIT_OK
    codes = []
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = map(run_job, jobs)
    for code, message in results:
        codes.append(code)
        if code:
            _fail(message)
        else:
            log.info("%s", message)
    return max(codes, default=EXIT_OK)


# --- check -------------------------------------------------------------------


def _formula_arg(args: argparse.Namespace):
    if args.formula is not None:
        return parse(args.formula)
    if args.property is not None:
        try:
            return get_property(args.property).formula
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    raise UsageError("one of --property or --formula is required")


def _graphs_from_file(path: str) -> list[str]:
    specs = []
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        # dataset records (label, n, bits[, ref]) or plain n:bits lines
        specs.append(f"{fields[1]}:{fields[2]}" if len(fields) >= 3 else line)
    return specs


def cmd_check(args: argparse.Namespace) -> int:
    f = _formula_arg(args)
    specs = list(args.graph or [])
    if args.graph_file:
        specs.extend(_graphs_from_file(args.graph_file))
    if not specs:
        raise UsageError("no graphs given (use --graph n:bits or --graph-file)")
    graphs = [parse_graph_spec(s) for s in specs]
    for g in graphs:
        print(f"{g}\t{'satisfies' if check(f, g) else 'violates'}")
    return EXIT_OK


# --- split -------------------------------------------------------------------


def cmd_split(args: argparse.Namespace) -> int:
    from .dataset_io import SplitGapError, make_splits, write_splits

    root = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    families = ("random", "perturb") if args.family == "both" else (args.family,)
    props = [p for p, _ in _properties(args)]
    code = EXIT_OK
    for prop in props:
        for family in families:
            try:
                specs = make_splits(prop, family, root, args.seed)
            except SplitGapError as exc:
                _fail(str(exc))
                code = EXIT_GENERATION
                continue
            for path in write_splits(specs, prop.name, family, root, force=args.force):
                print(path)
    return code


# --- score -------------------------------------------------------------------


def cmd_score(args: argparse.Namespace) -> int:
    from .metrics import MetricsError, emit_tables, read_results, render_tables, score_records

    try:
        records = read_results(args.results)
        st = score_records(records, args.sizes, PROPERTY_NAMES)
    except MetricsError as exc:
        _fail(str(exc))
        return EXIT_GENERATION
    for path in emit_tables(st, args.out, records):
        log.info("wrote %s", path)
    sys.stdout.write(render_tables(st)["overall.csv"])
    return EXIT_OK


# --- stats -------------------------------------------------------------------


def cmd_stats(args: argparse.Namespace) -> int:
    from .oracle import closed_form_count, closed_form_expression, differential_test

    n = args.n
    name = args.property
    f = _formula_arg(args)
    total = 1 << (n * n)
    if args.formula_only:
        expr = closed_form_expression(name) if name else None
        if expr is None:
            _fail(f"no closed-form count known for {name or 'this formula'}")
            return EXIT_GENERATION
        count = closed_form_count(name, n)
        frac = Fraction(count, total)
        log10 = math.log10(count) - n * n * math.log10(2)
        print(f"property={name} n={n}")
        print(f"count={expr} = {count}")
        print(f"fraction={expr}/2^(n^2) ~ 10^{log10:.4f} ({float(frac):.4g})")
        return EXIT_OK
    if n > MAX_EXHAUSTIVE_N:
        _fail(f"exact counting scans all 2^(n^2) graphs and is limited to n <= "
              f"{MAX_EXHAUSTIVE_N}; use --formula-only for n={n}")
        return EXIT_GENERATION
    label = name or "<formula>"
    report = differential_test(f, n, name=label)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VERIFY


# --- parser ------------------------------------------------------------------


def _add_build_args(p: argparse.ArgumentParser, with_family: bool) -> None:
    p.add_argument("--property", help="comma-separated names or 'all16'")
    p.add_argument("--property-file", help="file holding one DSL formula")
    p.add_argument("--name", help="name for --property-file (default: file stem)")
    p.add_argument("--base-size", type=int, help="base size for --property-file")
    if with_family:
        p.add_argument("--family", choices=("random", "perturb", "both"), default="random")
    p.add_argument("--sizes", default=DEFAULT_SIZES, help="e.g. base..base+10 or 5,6,7")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dry-run", action="store_true", help="list the planned jobs and exit")
    p.add_argument("--force", action="store_true", help="overwrite existing datasets")
    p.add_argument("--emit-cnf", action="store_true", help="also write the grounded DIMACS CNF")
    p.add_argument("--positives", type=int, default=DEFAULT_POSITIVES,
                   help="positives sampled above the base size")
    p.add_argument("--max-fbits", type=int, default=2)
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    p.add_argument("--attempt-cap", type=int, default=DEFAULT_ATTEMPT_CAP)
    p.add_argument("--unpaired-threshold", type=float, default=0.0)
    p.add_argument("--conflict-budget", type=int, default=DEFAULT_CONFLICT_BUDGET)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relforge {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    # verbosity flags are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_build_args(sub.add_parser("generate", parents=[common], help="build datasets (GraphRandom by default)"), True)
    _add_build_args(sub.add_parser("perturb", parents=[common], help="build GraphPerturb datasets"), False)

    p = sub.add_parser("check", parents=[common], help="evaluate a property on graphs")
    p.add_argument("--property")
    p.add_argument("--formula")
    p.add_argument("--graph", action="append", help="n:bits (repeatable)")
    p.add_argument("--graph-file", help="file of n:bits lines or dataset records")

    p = sub.add_parser("split", parents=[common], help="write train/test category files")
    p.add_argument("--property")
    p.add_argument("--property-file")
    p.add_argument("--name")
    p.add_argument("--base-size", type=int)
    p.add_argument("--family", choices=("random", "perturb", "both"), default="both")
    p.add_argument("--out", help=f"dataset root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--seed", type=int, default=0, help="seed of the validation hold-out")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("score", parents=[common], help="unified and relative score tables from a results file")
    p.add_argument("results")
    p.add_argument("--out", default="scores")
    p.add_argument("--sizes", type=int, default=10, help="test sizes per cell (0: any)")

    p = sub.add_parser("stats", parents=[common], help="positive counts and fractions")
    p.add_argument("--property")
    p.add_argument("--formula")
    p.add_argument("--n", type=int, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="brute force (n <= 4)")
    mode.add_argument("--formula-only", action="store_true", help="closed-form count")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose > 1 else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        if args.command in ("generate", "perturb"):
            if args.jobs < 1:
                raise UsageError("--jobs must be >= 1")
            families = {"random": ("random",), "perturb": ("perturb",),
                        "both": ("random", "perturb")}[getattr(args, "family", "perturb")]
            return cmd_generate(args, families)
        if args.command == "check":
            return cmd_check(args)
        if args.command == "split":
            return cmd_split(args)
        if args.command == "score":
            if args.sizes == 0:
                args.sizes = None
            return cmd_score(args)
        if args.command == "stats":
            if args.n < 1:
                raise UsageError("--n must be >= 1")
            return cmd_stats(args)
    except (UsageError, DslError, GraphError, OSError, ValueError) as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except BudgetError as exc:
        _fail(str(exc))
        return EXIT_GENERATION
    raise AssertionError(args.command)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
