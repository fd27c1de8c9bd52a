"""Command-line interface: ``dsns extract|deviation|merge|compose|solve|bench``.

Settings resolve in this order, later winning: built-in defaults, the
DSNS_SEED environment variable (seed only), a ``--config`` file of
``key = value`` lines, then command-line flags.

Exit status: 0 success, 1 usage or configuration error, 2 I/O error,
3 the solver ran out of budget before reaching an answer.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import mean
from typing import Optional, Sequence

from . import __version__
from .attributes import (
    ExtractionError,
    chess_attributes,
    extract_file,
    schema_for,
    sequence_from_sans,
)
from .chess_core import FenError, parse_fen
from .composer import (
    CONVENTIONS,
    STRATEGIES,
    ComposerConfig,
    Composition,
    ConfigError,
    CycleSources,
    CycleStats,
    check_conventions,
    compose_cycle,
    validate_composition,
)
from .corpus_io import (
    FormatError,
    load_chess_fixture,
    load_corpus,
    parse_config,
    read_attribute_csv,
    read_pgn,
    write_attribute_csv,
    write_pgn,
)
from .engine import (
    DEFAULT_PRECISION,
    Deviation,
    EngineError,
    Sample,
    chain_merge,
    deviation,
)
from .mate_solver import BudgetExhausted, Continuation, SolveLimits, find_keys

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2, which means I/O here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# settings


@dataclass
class CliConfig:
    command: str
    strategy: str = "dsns"
    sample: Optional[str] = None
    foreign: list = field(default_factory=list)
    corpus: Optional[str] = None
    conventions: frozenset = frozenset()
    seed: int = 0
    workers: int = 1
    budget_attempts: Optional[int] = None
    budget_seconds: Optional[float] = None
    precision: int = DEFAULT_PRECISION
    max_nodes: int = 20_000
    max_mate_tests: int = 1
    out: Optional[str] = None
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    convention_sets: list = field(default_factory=lambda: [frozenset()])
    cycles: int = 1

    def composer_config(self, strategy: Optional[str] = None,
                        conventions: Optional[frozenset] = None) -> ComposerConfig:
        return ComposerConfig(
            strategy=strategy or self.strategy,
            conventions=self.conventions if conventions is None else conventions,
            solve_limits=SolveLimits(max_nodes=self.max_nodes),
            seed=self.seed,
            max_mate_tests=self.max_mate_tests,
            precision=self.precision,
        )


def _conventions(text: str) -> frozenset:
    names = frozenset(x.strip() for x in text.split(",") if x.strip() and x.strip() != "none")
    unknown = names - set(CONVENTIONS)
    if unknown:
        raise UsageError(f"unknown conventions: {', '.join(sorted(unknown))}")
    return names


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {text!r}") from None


def _float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{key} must be a number, got {text!r}") from None


def _apply(cfg: CliConfig, key: str, value) -> None:
    """Set one setting from text (config file) or an already-typed flag value."""
    text = value if isinstance(value, str) else None
    if key in ("strategy",):
        if value not in STRATEGIES:
            raise UsageError(f"unknown strategy {value!r}")
        cfg.strategy = value
    elif key in ("sample", "corpus", "out"):
        setattr(cfg, key, value)
    elif key == "foreign":
        cfg.foreign = [x.strip() for x in value.split(",") if x.strip()] if text is not None else list(value)
    elif key == "conventions":
        cfg.conventions = _conventions(value) if text is not None else frozenset(value)
    elif key in ("seed", "workers", "budget_attempts", "precision", "max_nodes", "cycles",
                 "max_mate_tests"):
        setattr(cfg, key, _int(key, value) if text is not None else value)
    elif key == "budget_seconds":
        cfg.budget_seconds = _float(key, value) if text is not None else value
    elif key == "strategies":
        names = [x.strip() for x in value.split(",")] if text is not None else list(value)
        for n in names:
            if n not in STRATEGIES:
                raise UsageError(f"unknown strategy {n!r}")
        cfg.strategies = names
    elif key == "convention_sets":
        parts = value.split(";") if text is not None else list(value)
        cfg.convention_sets = [_conventions(p) for p in parts]
    else:
        raise UsageError(f"unknown setting {key!r}")


def resolve_config(args: argparse.Namespace, env: Optional[dict] = None) -> CliConfig:
    env = os.environ if env is None else env
    cfg = CliConfig(args.command)
    if env.get("DSNS_SEED"):
        cfg.seed = _int("DSNS_SEED", env["DSNS_SEED"])
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror}") from None
        for key, value in parse_config(text).items():
            _apply(cfg, key, value)
    for key in ("strategy", "sample", "corpus", "out", "seed", "workers", "budget_attempts",
                "budget_seconds", "precision", "max_nodes", "max_mate_tests", "cycles"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    # one budget flag on the command line replaces both budgets from the file
    if getattr(args, "budget_attempts", None) is not None:
        cfg.budget_seconds = None
    if getattr(args, "budget_seconds", None) is not None:
        cfg.budget_attempts = None
    if getattr(args, "foreign", None):
        cfg.foreign = list(args.foreign)
    if getattr(args, "conventions", None) is not None:
        cfg.conventions = _conventions(args.conventions)
    if getattr(args, "strategies", None):
        _apply(cfg, "strategies", args.strategies)
    if getattr(args, "convention_sets", None):
        _apply(cfg, "convention_sets", args.convention_sets)
    if cfg.workers < 1:
        raise UsageError("workers must be at least 1")
    if cfg.foreign and cfg.strategy != "dsns" and args.command == "compose":
        raise UsageError("--foreign only applies to the dsns strategy")
    return cfg


# ---------------------------------------------------------------------------
# shared helpers


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _load_sample(path: Optional[str], domain: str = "chess") -> Sample:
    if path is None:
        return load_chess_fixture()
    with open(path, encoding="utf-8", newline="") as fh:
        return read_attribute_csv(fh, domain=domain)


def _load_corpus_positions(path: Optional[str]) -> list:
    if path is None:
        return [e.position for e in load_corpus()]
    text = Path(path).read_text(encoding="utf-8")
    if path.lower().endswith(".pgn"):
        return [g.position for g in read_pgn(text)]
    return [parse_fen(line) for line in text.splitlines() if line.strip()]


def _sources(cfg: CliConfig, strategy: str) -> CycleSources:
    if strategy == "dsns":
        foreign = [_load_sample(p, domain=Path(p).stem) for p in cfg.foreign]
        return CycleSources(chess=_load_sample(cfg.sample), foreign=foreign)
    if strategy == "experience-table":
        return CycleSources(corpus=_load_corpus_positions(cfg.corpus))
    return CycleSources()


def _budgets(cfg: CliConfig) -> tuple:
    if cfg.budget_attempts is None and cfg.budget_seconds is None:
        raise UsageError("give --budget-attempts or --budget-seconds")
    return cfg.budget_attempts, cfg.budget_seconds


def _stats_line(stats: CycleStats, comps: Sequence[Composition]) -> str:
    var = mean(c.report.variations for c in comps) if comps else 0.0
    return (f"attempts={stats.attempts} emitted={stats.emitted} cph={stats.cph:.2f} "
            f"mean_variations={var:.2f} elapsed={stats.elapsed:.1f}s")


# ---------------------------------------------------------------------------
# commands


def cmd_extract(args: argparse.Namespace) -> int:
    rows = []
    for name in args.inputs:
        try:
            if args.kind == "chess":
                games = read_pgn(Path(name).read_text(encoding="utf-8"))
                for i, g in enumerate(games, start=1):
                    year = _pgn_year(g.tags.get("Date", "")) if args.year is None else args.year
                    oid = f"{Path(name).stem}#{i}"
                    seq = sequence_from_sans(g.position, g.main_line(), year, oid)
                    rows.append(chess_attributes(seq))
            else:
                is_audio = Path(name).suffix.lower() == ".wav"
                if is_audio != (args.kind == "audio"):
                    raise ExtractionError(f"not a {args.kind} file")
                s = extract_file(name, args.year)
                rows.append(replace(s, object_id=Path(name).name))
        except (OSError, ExtractionError, FormatError, FenError, ValueError) as exc:
            print(f"warning: skipped {name}: {exc}", file=sys.stderr)
    if not rows:
        print("error: no rows extracted", file=sys.stderr)
        return EXIT_IO
    out, close = _open_out(args.out)
    try:
        write_attribute_csv(rows, out)
    finally:
        if close:
            out.close()
    print(f"{len(rows)} rows, schema {','.join(schema_for(args.kind))}", file=sys.stderr)
    return EXIT_OK


def _pgn_year(date: str) -> Optional[int]:
    head = date[:4]
    return int(head) if head.isdigit() else None


def cmd_deviation(args: argparse.Namespace) -> int:
    sample = _load_sample(args.sample, args.domain)
    by_id = {s.object_id: s for s in sample.strings}
    try:
        a, b = by_id[args.first], by_id[args.second]
    except KeyError as exc:
        raise UsageError(f"no string with id {exc.args[0]!r} in the sample") from None
    d = deviation(a, b, args.precision or DEFAULT_PRECISION)
    print(f"{d.value!r}\t{d.text}\tattributes={d.n_attributes}")
    return EXIT_OK


def cmd_merge(args: argparse.Namespace) -> int:
    precision = args.precision or DEFAULT_PRECISION
    devs = [Deviation(_float("deviation", v), precision) for v in args.values]
    print(chain_merge(devs[0], devs[1:]).text)
    return EXIT_OK


def cmd_compose(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    attempts, seconds = _budgets(cfg)
    comps, stats = compose_cycle(_sources(cfg, cfg.strategy), cfg.composer_config(),
                                 attempts, seconds, cfg.workers)
    out, close = _open_out(cfg.out)
    try:
        for c in comps:
            write_pgn(c, out)
    finally:
        if close:
            out.close()
    print(_stats_line(stats, comps), file=sys.stdout if close else sys.stderr)
    return EXIT_OK


def _print_tree(node: Continuation, indent: int, out) -> None:
    for d in node.defenses:
        c = d.continuations[0]
        dual = f"  (dual: {', '.join(x.san for x in d.continuations[1:])})" \
            if len(d.continuations) > 1 else ""
        print(f"{'  ' * indent}... {d.san} {c.san}{dual}", file=out)
        _print_tree(c, indent + 1, out)


def cmd_solve(args: argparse.Namespace) -> int:
    if args.pgn:
        games = read_pgn(Path(args.pgn).read_text(encoding="utf-8"))
        positions = [g.position for g in games]
    elif args.fen:
        positions = [parse_fen(args.fen)]
    else:
        raise UsageError("give a FEN or --pgn FILE")
    limits = SolveLimits(max_time=args.max_time, max_nodes=args.max_nodes)
    status = EXIT_OK
    for pos in positions:
        try:
            report = find_keys(pos, limits)
        except BudgetExhausted as exc:
            print(f"{pos.fen()}: search stopped: {exc}")
            status = EXIT_BUDGET
            continue
        if not report.keys:
            print("no mate in 3")
            continue
        keys = report.key_sans if args.all_keys else report.key_sans[:1]
        n = len(report.key_sans)
        print(f"{n} key{'s' if n != 1 else ''}: {', '.join(keys)}; "
              f"mate in {report.shortest_mate_depth}; cooked: {'yes' if report.is_cooked else 'no'}")
        tree = report.tree
        print(tree.root.san)
        _print_tree(tree.root, 1, sys.stdout)
        print(f"variations: {report.variations}; duals: move 2 {report.dual_count_move2}, "
              f"move 3 {report.dual_count_move3}")
        comp = Composition(pos, tree, report, None)
        verdict = check_conventions(comp, CONVENTIONS, args.strict_duals)
        print("conventions: " + ", ".join(f"{k} {'pass' if ok else 'fail'}" for k, ok in verdict.items()))
    return status


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    attempts, seconds = _budgets(cfg)
    header = ("strategy", "conventions", "cycles", "attempts", "emitted", "cph",
              "pieces", "variations", "duals", "sparsity", "valid")
    rows = []
    for strategy in cfg.strategies:
        sources = _sources(cfg, strategy)
        for conv in cfg.convention_sets:
            cphs, att, emitted, metrics, valid = [], 0, 0, [], 0
            for cycle in range(cfg.cycles):
                ccfg = cfg.composer_config(strategy, conv)
                ccfg.seed = cfg.seed + cycle
                comps, stats = compose_cycle(sources, ccfg, attempts, seconds, cfg.workers)
                cphs.append(stats.cph)
                att += stats.attempts
                emitted += stats.emitted
                for c in comps:
                    metrics.append(c.metrics())
                    valid += not validate_composition(c, ccfg)

            def avg(key: str) -> str:
                return f"{mean(m[key] for m in metrics):.2f}" if metrics else "-"

            duals = f"{mean(m['duals_move2'] + m['duals_move3'] for m in metrics):.2f}" \
                if metrics else "-"
            rows.append((strategy, ",".join(sorted(conv)) or "none", str(cfg.cycles), str(att),
                         str(emitted), f"{mean(cphs):.2f}", avg("pieces"), avg("variations"),
                         duals, avg("sparsity"), f"{valid}/{emitted}"))
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    out, close = _open_out(cfg.out)
    try:
        for r in [header, *rows]:
            print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip(), file=out)
    finally:
        if close:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _composer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--sample", help="chess attribute CSV (default: bundled fixture)")
    p.add_argument("--foreign", action="append", help="foreign-domain attribute CSV; repeatable")
    p.add_argument("--corpus", help="FEN list or PGN for the experience table "
                                    "(default: bundled corpus)")
    p.add_argument("--conventions", help=f"comma-separated subset of {', '.join(CONVENTIONS)}")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--budget-attempts", type=int)
    budget.add_argument("--budget-seconds", type=float)
    p.add_argument("--precision", type=int)
    p.add_argument("--max-nodes", type=int, help="solver node limit per mate test")
    p.add_argument("--max-mate-tests", type=int, help="mate tests per placement attempt")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsns", description="Compose mate-in-3 chess problems from DSNS strings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="write attribute CSV rows for PGN, PGM/PPM or WAV files")
    p.add_argument("kind", choices=("chess", "image", "audio"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("--year", type=int, help="year attribute for every row")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("deviation", help="deviation between two strings of a sample")
    p.add_argument("sample")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--domain", default="chess")
    p.add_argument("--precision", type=int)
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("merge", help="merge deviations, target domain first")
    p.add_argument("values", nargs="+")
    p.add_argument("--precision", type=int)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("compose", help="run a composing cycle and write PGN")
    p.add_argument("--strategy", choices=STRATEGIES)
    _composer_flags(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("solve", help="solve a position for mate in up to three")
    p.add_argument("fen", nargs="?")
    p.add_argument("--pgn", help="solve the start position of every game in a PGN file")
    p.add_argument("--all-keys", action="store_true")
    p.add_argument("--max-nodes", type=int, default=10_000_000)
    p.add_argument("--max-time", type=float)
    p.add_argument("--strict-duals", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="strategy x convention matrix with surrogate metrics")
    p.add_argument("--strategies", help="comma-separated strategies (default: all)")
    p.add_argument("--convention-sets",
                   help="semicolon-separated convention sets, e.g. 'none;no-check-key,no-cooks'")
    p.add_argument("--cycles", type=int)
    _composer_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, EngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FenError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if args.command == "solve" and not getattr(args, "pgn", None) else EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
