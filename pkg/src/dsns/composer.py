"""Composing mate-in-3 problems from pairs of chess DSNS strings.

The pipeline for one attempt:

1. derive constraints from the two strings (piece-count ranges, Shannon
   targets, material cap, sparsity band, first/last moving piece kinds);
2. pick a random piece multiset per colour that meets them;
3. drop the kings, then alternate White/Black drawing a piece kind or a
   blank, placing pieces on random empty squares while the position stays
   legal and inside the material and sparsity guards;
4. once both colours are inside their count ranges, ask the solver for a
   forced mate in exactly three; on failure take the last piece back;
5. strip pieces the mate does not need, check the conventions and emit.

Two baselines share steps 3-5: ``random`` places uniformly drawn pieces
without any DSNS guidance, and ``experience-table`` draws squares from
per-piece placement frequencies learned from a corpus.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .chess_core import (
    BLACK,
    KIND_LETTERS,
    SHANNON_WEIGHTS,
    WHITE,
    IllegalPositionError,
    Piece,
    Position,
    flight_squares,
    material_difference,
    opposite,
    sparsity,
)
from .engine import (
    DEFAULT_PRECISION,
    DsnsString,
    Sample,
    SearchBudget,
    cross_domain_pair,
)
from .mate_solver import (
    BudgetExhausted,
    MateSearch,
    SolutionTree,
    SolveLimits,
    SolveReport,
    find_keys,
    verify_tree,
)

STRATEGIES = ("dsns", "random", "experience-table")
CONVENTIONS = (
    "no-cooks",
    "no-duals",
    "no-check-key",
    "no-capture-key",
    "no-flight-restricting-key",
)
OFFICERS = ("Q", "R", "B", "N")
PLACEABLE = ("Q", "R", "B", "N", "P")
CODE_TO_KIND = {i + 1: k for i, k in enumerate(KIND_LETTERS)}

MAX_OFFICERS = 8
MAX_PAWNS = 8
MAX_ARMY = 16  # including the king

# piece-count ranges (kings included) for the strategies without DSNS strings
BASELINE_WHITE_COUNT = (2, 8)
BASELINE_BLACK_COUNT = (1, 8)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constraints and permutations


@dataclass(frozen=True)
class PiecePermutation:
    """A multiset of non-king pieces for one colour, stored sorted."""

    kinds: tuple

    @property
    def shannon(self) -> int:
        return sum(SHANNON_WEIGHTS[k] for k in self.kinds)

    @property
    def officers(self) -> int:
        return sum(1 for k in self.kinds if k != "P")

    @property
    def pawns(self) -> int:
        return self.kinds.count("P")

    def __len__(self) -> int:
        return len(self.kinds)

    def __str__(self) -> str:
        return "".join(self.kinds) or "-"


def _nearest_int(v: float) -> int:
    return int(np.floor(v + 0.5))


def _count_range(a: Optional[float], b: Optional[float]) -> tuple[int, int]:
    vals = [_nearest_int(v) for v in (a, b) if v is not None]
    if not vals:
        return 1, MAX_ARMY
    lo, hi = min(vals), max(vals)
    return max(1, lo), min(MAX_ARMY, max(1, hi))


def _average(a: Optional[float], b: Optional[float]) -> Optional[float]:
    vals = [v for v in (a, b) if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass(frozen=True)
class Constraints:
    """Everything the two source strings impose on a composition.

    A None field means the attribute was NULL in both strings (or in
    either, for the sparsity band) and the dependent rule is skipped.
    """

    white_range: tuple = (1, MAX_ARMY)
    black_range: tuple = (1, MAX_ARMY)
    white_shannon: Optional[int] = None
    black_shannon: Optional[int] = None
    material_cap: Optional[float] = None
    sparsity_total: Optional[float] = None
    terminal_kinds: frozenset = frozenset()

    @classmethod
    def from_strings(cls, s1: DsnsString, s2: DsnsString) -> "Constraints":
        a, b = s1.as_dict(), s2.as_dict()

        def both(name: str) -> tuple:
            return a.get(name), b.get(name)

        ws, bs = _average(*both("white_shannon")), _average(*both("black_shannon"))
        md = [v for v in both("material_difference") if v is not None]
        sp = both("sparsity")
        kinds = set()
        for name in ("first_mover", "last_mover"):
            for v in both(name):
                if v is not None:
                    kinds.add(CODE_TO_KIND[min(6, max(1, _nearest_int(v)))])
        return cls(
            white_range=_count_range(*both("white_pieces")),
            black_range=_count_range(*both("black_pieces")),
            white_shannon=None if ws is None else _nearest_int(ws),
            black_shannon=None if bs is None else _nearest_int(bs),
            material_cap=max(md) if md else None,
            sparsity_total=None if None in sp else sp[0] + sp[1],
            terminal_kinds=frozenset(kinds),
        )

    def count_range(self, color: str) -> tuple:
        return self.white_range if color == WHITE else self.black_range

    def material_ok(self, pos: Position) -> bool:
        return self.material_cap is None or material_difference(pos) <= self.material_cap

    def sparsity_ok(self, value: float) -> bool:
        if self.sparsity_total is None:
            return True
        if self.sparsity_total >= 1:
            return value >= 0.25
        return value <= 0.75

    def counts_ok(self, pos: Position) -> bool:
        for color in (WHITE, BLACK):
            lo, hi = self.count_range(color)
            if not lo <= pos.piece_count(color) <= hi:
                return False
        return True

    def violations(self, pos: Position) -> list[str]:
        out = []
        if not self.counts_ok(pos):
            out.append("piece count outside range")
        if not self.material_ok(pos):
            out.append("material difference above cap")
        if not self.sparsity_ok(sparsity(pos)):
            out.append("sparsity outside band")
        return out


def color_permutations(target_shannon: Optional[int], count_range: tuple) -> list[PiecePermutation]:
    """Multisets for one colour matching a Shannon target and a count range (king included)."""
    lo, hi = count_range
    out = []
    for q in range(MAX_OFFICERS + 1):
        for r in range(MAX_OFFICERS + 1 - q):
            for b in range(MAX_OFFICERS + 1 - q - r):
                for n in range(MAX_OFFICERS + 1 - q - r - b):
                    officers = 9 * q + 5 * r + 3 * b + 3 * n
                    for p in range(MAX_PAWNS + 1):
                        total = q + r + b + n + p + 1
                        if total > min(hi, MAX_ARMY):
                            break
                        if total < lo:
                            continue
                        if target_shannon is not None and officers + p != target_shannon:
                            continue
                        kinds = ("Q",) * q + ("R",) * r + ("B",) * b + ("N",) * n + ("P",) * p
                        out.append(PiecePermutation(kinds))
    return out


def enumerate_permutations(
    target_shannon_white: Optional[int],
    target_shannon_black: Optional[int],
    count_range_white: tuple,
    count_range_black: tuple,
) -> list[tuple[PiecePermutation, PiecePermutation]]:
    whites = color_permutations(target_shannon_white, count_range_white)
    blacks = color_permutations(target_shannon_black, count_range_black)
    return list(itertools.product(whites, blacks))


# ---------------------------------------------------------------------------
# experience table


@dataclass
class ExperienceTable:
    """Per (colour, kind) probability of occupying each of the 64 squares."""

    probabilities: dict

    def weights(self, color: str, kind: str) -> np.ndarray:
        return self.probabilities.get((color, kind), np.zeros(64))

    def probability(self, color: str, kind: str, sq: int) -> float:
        return float(self.weights(color, kind)[sq])


def build_experience_table(corpus: Iterable[Position]) -> ExperienceTable:
    counts: dict = {}
    n = 0
    for pos in corpus:
        n += 1
        for sq, p in pos.pieces():
            counts.setdefault((p.color, p.kind), np.zeros(64))[sq] += 1
    if n == 0:
        raise ConfigError("experience table needs at least one position")
    return ExperienceTable({key: c / c.sum() for key, c in counts.items()})


# ---------------------------------------------------------------------------
# compositions


@dataclass(frozen=True)
class Provenance:
    strategy: str
    source_ids: tuple
    seed: int


@dataclass
class Composition:
    position: Position
    solution: SolutionTree
    report: SolveReport
    provenance: Provenance
    constraints: Optional[Constraints] = None
    sources: tuple = ()  # the two strings the constraints came from

    @property
    def fen(self) -> str:
        return self.position.fen()

    def metrics(self) -> dict:
        """Structural quality measures reported in place of an aesthetics score."""
        pos = self.position
        return {
            "pieces": pos.piece_count(WHITE) + pos.piece_count(BLACK),
            "variations": self.report.variations,
            "duals_move2": self.report.dual_count_move2,
            "duals_move3": self.report.dual_count_move3,
            "sparsity": sparsity(pos),
        }


@dataclass
class ComposerConfig:
    strategy: str = "dsns"
    conventions: frozenset = frozenset()
    solve_limits: SolveLimits = SolveLimits(max_nodes=20_000)
    placement_cap: int = 1000
    seed: int = 0
    passes: int = 3
    strict_duals: bool = False
    max_mate_tests: int = 1
    search_budget: SearchBudget = SearchBudget(20_000, 20_000)
    precision: int = DEFAULT_PRECISION

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        self.conventions = frozenset(self.conventions)
        unknown = self.conventions - set(CONVENTIONS)
        if unknown:
            raise ConfigError(f"unknown conventions: {', '.join(sorted(unknown))}")
        if self.passes < 1 or self.placement_cap < 1 or self.max_mate_tests < 1:
            raise ConfigError("passes, placement cap and mate-test limit must be at least 1")


# ---------------------------------------------------------------------------
# mate testing and optimization


def exact_three(pos: Position, limits: SolveLimits) -> bool:
    """True if White's shortest forced mate takes exactly three moves.

    A search that runs out of budget counts as no mate.
    """
    if pos.turn != WHITE:
        return False
    try:
        s = MateSearch(pos, limits)
        return s.mates_within(3) and not s.mates_within(2)
    except BudgetExhausted:
        return False


def _drop_stale_castling(placement: list, castling: tuple) -> tuple:
    homes = [(4, 7, WHITE), (4, 0, WHITE), (60, 63, BLACK), (60, 56, BLACK)]
    return tuple(
        ok and placement[k] == Piece(c, "K") and placement[r] == Piece(c, "R")
        for ok, (k, r, c) in zip(castling, homes)
    )


def remove_piece(pos: Position, sq: int) -> Optional[Position]:
    """The position without the piece on ``sq``, or None if that is illegal."""
    placement = list(pos.placement)
    placement[sq] = None
    try:
        return Position(tuple(placement), pos.turn, _drop_stale_castling(placement, pos.castling),
                        None, pos.halfmove, pos.fullmove)
    except IllegalPositionError:
        return None


def scan_order() -> list[int]:
    """a8 to h8, then down the board to a1 to h1."""
    return [rank * 8 + f for rank in range(7, -1, -1) for f in range(8)]


def optimize(pos: Position, limits: SolveLimits, passes: int = 3) -> Position:
    """Remove every piece the forced mate in three does not need.

    Passes alternate White, Black, White, ... scanning from a8 to h1. The
    cycle is repeated until a full cycle removes nothing, which makes the
    result a fixed point: optimizing it again changes nothing.
    """
    order = scan_order()
    while True:
        changed = False
        for i in range(passes):
            color = WHITE if i % 2 == 0 else BLACK
            for sq in order:
                p = pos.placement[sq]
                if p is None or p.color != color or p.kind == "K":
                    continue
                trial = remove_piece(pos, sq)
                if trial is not None and exact_three(trial, limits):
                    pos = trial
                    changed = True
        if not changed:
            return pos


def check_conventions(c: Composition, conventions: Iterable[str] = CONVENTIONS,
                      strict_duals: bool = False) -> dict[str, bool]:
    """Pass (True) or fail (False) for each requested convention."""
    report = c.report
    key = c.solution.key
    out = {}
    for name in conventions:
        if name == "no-cooks":
            out[name] = not report.is_cooked
        elif name == "no-duals":
            out[name] = report.dual_count_move2 == 0 and (
                not strict_duals or report.dual_count_move3 == 0)
        elif name == "no-check-key":
            out[name] = not key.check
        elif name == "no-capture-key":
            out[name] = not key.capture
        elif name == "no-flight-restricting-key":
            before = flight_squares(c.position, BLACK)
            after = flight_squares(c.position.push(key), BLACK)
            out[name] = before <= after
        else:
            raise ConfigError(f"unknown convention {name!r}")
    return out


def validate_composition(c: Composition, config: ComposerConfig,
                         limits: Optional[SolveLimits] = None) -> list[str]:
    """Re-check an emitted composition from scratch; returns the problems found."""
    limits = limits or config.solve_limits
    problems = []
    try:
        report = find_keys(c.position, limits)
    except BudgetExhausted:
        return ["re-solve ran out of budget"]
    if not report.keys:
        problems.append("no key found on re-solve")
    elif report.shortest_mate_depth != 3:
        problems.append(f"shortest mate is {report.shortest_mate_depth}, not 3")
    problems += verify_tree(c.solution)
    if optimize(c.position, config.solve_limits, config.passes) != c.position:
        problems.append("not optimization-idempotent")
    failed = [k for k, ok in check_conventions(c, config.conventions,
                                               config.strict_duals).items() if not ok]
    problems += [f"convention {k} fails" for k in failed]
    if c.constraints is not None:
        problems += c.constraints.violations(c.position)
    return problems


# ---------------------------------------------------------------------------
# placement


class _Attempt:
    """Mutable state of one composing attempt, from empty board to outcome."""

    def __init__(self, rng: random.Random, config: ComposerConfig,
                 constraints: Optional[Constraints], table: Optional[ExperienceTable]) -> None:
        self.rng = rng
        self.config = config
        self.constraints = constraints
        self.table = table
        self.board: dict[int, Piece] = {}
        self.castle_coins: dict[int, bool] = {}
        self.mate_tests = 0

    # -- helpers ----------------------------------------------------------

    def _castling(self) -> tuple:
        homes = [(4, 7, WHITE), (4, 0, WHITE), (60, 63, BLACK), (60, 56, BLACK)]
        rights = []
        for i, (k, r, c) in enumerate(homes):
            if self.board.get(k) == Piece(c, "K") and self.board.get(r) == Piece(c, "R"):
                if i not in self.castle_coins:
                    self.castle_coins[i] = self.rng.random() < 0.5
                rights.append(self.castle_coins[i])
            else:
                rights.append(False)
        return tuple(rights)

    def position(self) -> Optional[Position]:
        placement = [None] * 64
        for sq, p in self.board.items():
            placement[sq] = p
        try:
            return Position(tuple(placement), WHITE, self._castling())
        except IllegalPositionError:
            return None

    def _square_for(self, color: str, kind: str) -> Optional[int]:
        empty = [s for s in range(64) if s not in self.board]
        if self.table is None:
            return self.rng.choice(empty)
        w = self.table.weights(color, kind)
        cands = [s for s in empty if w[s] > 0]
        if not cands:
            return None
        return self.rng.choices(cands, weights=[float(w[s]) for s in cands])[0]

    def place_kings(self) -> bool:
        for _ in range(self.config.placement_cap):
            self.board.clear()
            wk, bk = self._square_for(WHITE, "K"), None
            if wk is None:
                return False
            self.board[wk] = Piece(WHITE, "K")
            bk = self._square_for(BLACK, "K")
            if bk is None:
                return False
            self.board[bk] = Piece(BLACK, "K")
            if self.position() is not None:
                return True
        return False

    # -- the loop ---------------------------------------------------------

    def run(self, remaining: dict[str, list[str]], count_targets: dict[str, tuple]
            ) -> Optional[tuple[Position, SolutionTree, SolveReport]]:
        cfg, rng, cons = self.config, self.rng, self.constraints
        if not self.place_kings():
            return None
        color = WHITE
        choices = PLACEABLE + (None,)
        for _ in range(cfg.placement_cap):
            if not remaining[color]:
                if not remaining[opposite(color)]:
                    return None
                color = opposite(color)
                continue
            kind = rng.choice(choices)
            if kind is None:  # a blank passes the turn
                color = opposite(color)
                continue
            if kind not in remaining[color]:
                continue
            if color == WHITE and cons is not None and cons.terminal_kinds:
                on_board = any(p.color == WHITE and p.kind in cons.terminal_kinds
                               for p in self.board.values())
                if kind not in cons.terminal_kinds and not on_board and rng.random() < 0.5:
                    continue
            sq = self._square_for(color, kind)
            if sq is None:
                continue
            self.board[sq] = Piece(color, kind)
            pos = self.position()
            if pos is None:
                del self.board[sq]
                continue
            remaining[color].remove(kind)
            last = sq
            if cons is not None:
                if not cons.material_ok(pos) or not cons.sparsity_ok(sparsity(pos)):
                    return None
            if self._counts_reached(pos, count_targets):
                outcome = self._try_mate(pos, remaining, last)
                if outcome is not None:
                    return outcome
                if self.mate_tests >= cfg.max_mate_tests:
                    return None
            color = opposite(color)
        return None

    def _counts_reached(self, pos: Position, targets: dict[str, tuple]) -> bool:
        return all(targets[c][0] <= pos.piece_count(c) <= targets[c][1] for c in (WHITE, BLACK))

    def _take_back(self, sq: int, remaining: dict) -> None:
        p = self.board.pop(sq, None)
        if p is not None:
            remaining[p.color].append(p.kind)

    def _try_mate(self, pos: Position, remaining: dict, last: int):
        cfg = self.config
        self.mate_tests += 1
        if not exact_three(pos, cfg.solve_limits):
            self._take_back(last, remaining)
            return None
        best = optimize(pos, cfg.solve_limits, cfg.passes)
        try:
            report = find_keys(best, cfg.solve_limits)
        except BudgetExhausted:
            self._take_back(last, remaining)
            return None
        tree = report.tree
        comp = Composition(best, tree, report, Provenance(cfg.strategy, (), cfg.seed))
        passed = all(check_conventions(comp, cfg.conventions, cfg.strict_duals).values())
        fits = self.constraints is None or not self.constraints.violations(best)
        if passed and fits:
            return best, tree, report
        # carry on from the optimized board and add pieces
        self.board = {sq: p for sq, p in best.pieces()}
        if "no-flight-restricting-key" in cfg.conventions and last in self.board:
            self._take_back(last, remaining)
        return None


def _baseline_targets(rng: random.Random) -> dict[str, tuple]:
    w = rng.randint(*BASELINE_WHITE_COUNT)
    b = rng.randint(*BASELINE_BLACK_COUNT)
    return {WHITE: (w, w), BLACK: (b, b)}


def _baseline_remaining(rng: random.Random, targets: dict) -> dict[str, list[str]]:
    # kinds are drawn freely; the multiset only bounds how many pieces go down
    out = {}
    for color in (WHITE, BLACK):
        n = targets[color][0] - 1
        out[color] = [rng.choice(PLACEABLE) for _ in range(n)]
    return out


def compose_one(s1: DsnsString, s2: DsnsString, config: ComposerConfig,
                rng: Optional[random.Random] = None, attempts: Optional[int] = None
                ) -> tuple[Optional[Composition], int]:
    """Run attempts for one pair of strings until one composition is emitted.

    The number of attempts defaults to the number of permutation pairs the
    strings admit. Returns the composition (or None) and the attempts used.
    """
    rng = rng or random.Random(config.seed)
    cons = Constraints.from_strings(s1, s2)
    whites = color_permutations(cons.white_shannon, cons.white_range)
    blacks = color_permutations(cons.black_shannon, cons.black_range)
    total = len(whites) * len(blacks)
    if total == 0:
        return None, 0
    budget = total if attempts is None else min(total, attempts)
    targets = {WHITE: cons.white_range, BLACK: cons.black_range}
    for used in range(1, budget + 1):
        remaining = {WHITE: list(rng.choice(whites).kinds), BLACK: list(rng.choice(blacks).kinds)}
        outcome = _Attempt(rng, config, cons, None).run(remaining, targets)
        if outcome is not None:
            pos, tree, report = outcome
            prov = Provenance(config.strategy, (s1.object_id, s2.object_id), config.seed)
            return Composition(pos, tree, report, prov, cons, (s1, s2)), used
    return None, budget


def compose_baseline(config: ComposerConfig, rng: random.Random,
                     table: Optional[ExperienceTable] = None) -> Optional[Composition]:
    """One attempt of the random or experience-table strategy."""
    targets = _baseline_targets(rng)
    remaining = _baseline_remaining(rng, targets)
    outcome = _Attempt(rng, config, None, table).run(remaining, targets)
    if outcome is None:
        return None
    pos, tree, report = outcome
    return Composition(pos, tree, report, Provenance(config.strategy, (), config.seed))


# ---------------------------------------------------------------------------
# cycles


@dataclass
class CycleStats:
    attempts: int = 0
    emitted: int = 0
    elapsed: float = 0.0
    duplicates: int = 0
    pairs: int = 0

    @property
    def cph(self) -> float:
        hours = self.elapsed / 3600.0
        return self.emitted / hours if hours > 0 else 0.0

    def merge(self, other: "CycleStats") -> "CycleStats":
        return CycleStats(self.attempts + other.attempts, self.emitted + other.emitted,
                          max(self.elapsed, other.elapsed), self.duplicates + other.duplicates,
                          self.pairs + other.pairs)


@dataclass
class CycleSources:
    chess: Optional[Sample] = None
    foreign: Sequence[Sample] = field(default_factory=list)
    corpus: Sequence[Position] = field(default_factory=list)


def _check_sources(strategy: str, sources: CycleSources) -> None:
    if strategy == "dsns" and (sources.chess is None or len(sources.chess) == 0):
        raise ConfigError("the dsns strategy needs a chess sample")
    if strategy == "experience-table" and not sources.corpus:
        raise ConfigError("the experience-table strategy needs a corpus of positions")


def _run_worker(sources: CycleSources, config: ComposerConfig, attempts: Optional[int],
                seconds: Optional[float], seed: int) -> tuple[list[Composition], CycleStats]:
    rng = random.Random(seed)
    np_seeds = np.random.SeedSequence(seed)
    stats = CycleStats()
    out: list[Composition] = []
    seen: set = set()
    start = time.monotonic()
    table = build_experience_table(sources.corpus) if config.strategy == "experience-table" else None

    def budget_left() -> Optional[int]:
        if attempts is None:
            return None
        return attempts - stats.attempts

    def out_of_budget() -> bool:
        if attempts is not None and stats.attempts >= attempts:
            return True
        return seconds is not None and time.monotonic() - start >= seconds

    def keep(c: Composition) -> None:
        if c.fen in seen:
            stats.duplicates += 1
            return
        seen.add(c.fen)
        out.append(c)
        stats.emitted += 1

    while not out_of_budget():
        if config.strategy == "dsns":
            sub = int(np_seeds.spawn(1)[0].generate_state(1)[0])
            found = cross_domain_pair(sources.chess, list(sources.foreign), config.search_budget,
                                      sub, config.precision)
            stats.pairs += 1
            comp, used = compose_one(found.first, found.second, config, rng, budget_left())
            stats.attempts += max(used, 1)  # a pair with no permutation still costs one
            if comp is not None:
                comp.provenance = Provenance(config.strategy, tuple(found.source_ids), config.seed)
                keep(comp)
        else:
            stats.attempts += 1
            comp = compose_baseline(config, rng, table)
            if comp is not None:
                comp.provenance = Provenance(config.strategy, (), config.seed)
                keep(comp)
    stats.elapsed = time.monotonic() - start
    return out, stats


def _worker_entry(args):
    return _run_worker(*args)


def compose_cycle(
    sources: CycleSources,
    config: ComposerConfig,
    attempts: Optional[int] = None,
    seconds: Optional[float] = None,
    workers: int = 1,
) -> tuple[list[Composition], CycleStats]:
    """Compose until the attempt or time budget runs out.

    Work is split across ``workers`` processes, each with a seed derived
    from ``config.seed``; results are merged in worker order and duplicate
    positions are dropped.
    """
    if attempts is None and seconds is None:
        raise ConfigError("give an attempt budget, a time budget or both")
    _check_sources(config.strategy, sources)
    if (attempts is not None and attempts <= 0) or (seconds is not None and seconds <= 0):
        return [], CycleStats()
    workers = max(1, workers)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(workers)]
    shares = [None] * workers
    if attempts is not None:
        shares = [attempts // workers + (1 if i < attempts % workers else 0) for i in range(workers)]
    jobs = [(sources, config, shares[i], seconds, seeds[i]) for i in range(workers)
            if shares[i] is None or shares[i] > 0]
    if len(jobs) == 1:
        results = [_run_worker(*jobs[0])]
    else:
        from multiprocessing import Pool

        with Pool(len(jobs)) as pool:
            results = pool.map(_worker_entry, jobs)
    merged: list[Composition] = []
    seen: set = set()
    stats = CycleStats()
    for comps, st in results:
        stats = stats.merge(st)
        for c in comps:
            if c.fen in seen:
                stats.duplicates += 1
                stats.emitted -= 1
                continue
            seen.add(c.fen)
            merged.append(c)
    return merged, stats
