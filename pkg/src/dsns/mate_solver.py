"""Forced-mate search for White up to three moves.

The search is a plain AND/OR walk over the mutable ``Board``: White nodes
succeed if any move forces mate, Black nodes succeed only if every reply
still loses. Results are cached per (Zobrist hash, remaining moves).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .chess_core import (
    Board,
    Move,
    Position,
    WHITE,
    board_san,
)

MAX_DEPTH = 3


class BudgetExhausted(RuntimeError):
    """The search stopped on its node or time limit before reaching an answer."""


@dataclass(frozen=True)
class SolveLimits:
    max_time: Optional[float] = None  # seconds
    max_nodes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_time is None and self.max_nodes is None:
            raise ValueError("set max_time, max_nodes or both")
        if self.max_time is not None and self.max_time <= 0:
            raise ValueError("max_time must be positive")
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")


DEFAULT_LIMITS = SolveLimits(max_nodes=10_000_000)


@dataclass
class Continuation:
    """A White move together with every Black defense that follows it.

    ``mate_depth`` counts White moves to mate from this move on, so a
    mating move has depth 1 and no defenses.
    """

    move: Move
    san: str
    mate_depth: int
    defenses: list["Defense"] = field(default_factory=list)


@dataclass
class Defense:
    """A Black reply and all White continuations that keep the forced mate.

    Continuations are ordered shortest mate first; the first one is the
    main line.
    """

    move: Move
    san: str
    continuations: list[Continuation] = field(default_factory=list)


@dataclass
class SolutionTree:
    position: Position
    root: Continuation

    @property
    def key(self) -> Move:
        return self.root.move

    @property
    def depth(self) -> int:
        return self.root.mate_depth

    @property
    def defenses(self) -> list[Defense]:
        return self.root.defenses

    def main_line(self) -> list[str]:
        line = [self.root.san]
        node = self.root
        while node.defenses:
            d = node.defenses[0]
            node = d.continuations[0]
            line += [d.san, node.san]
        return line

    def leaves(self) -> list[list[str]]:
        """All lines along the main continuation at each defense, as SAN."""
        out: list[list[str]] = []

        def walk(node: Continuation, prefix: list[str]) -> None:
            here = prefix + [node.san]
            if not node.defenses:
                out.append(here)
                return
            for d in node.defenses:
                walk(d.continuations[0], here + [d.san])

        walk(self.root, [])
        return out


@dataclass
class SolveReport:
    keys: list[Move]
    is_cooked: bool
    dual_count_move2: int
    dual_count_move3: int
    variations: int
    shortest_mate_depth: int  # 0 when there is no mate within three moves
    tree: Optional[SolutionTree] = None
    key_sans: list[str] = field(default_factory=list)
    nodes: int = 0


class MateSearch:
    """Single-use search context carrying the board, cache and budget."""

    def __init__(self, pos: Position, limits: SolveLimits) -> None:
        if pos.turn != WHITE:
            raise ValueError("mate search expects White to move")
        self.position = pos
        self.board = Board.from_position(pos)
        self.limits = limits
        self.cache: dict = {}
        self.killers: dict = {}  # remaining moves -> last Black reply that escaped
        self.deadline = (time.monotonic() + limits.max_time) if limits.max_time else None
        self.max_nodes = limits.max_nodes
        self._next_check = 1024

    def _tick(self) -> None:
        b = self.board
        if self.max_nodes is not None and b.nodes > self.max_nodes:
            raise BudgetExhausted(f"node limit {self.max_nodes} reached")
        if self.deadline is not None and b.nodes >= self._next_check:
            self._next_check = b.nodes + 1024
            if time.monotonic() > self.deadline:
                raise BudgetExhausted(f"time limit {self.limits.max_time}s reached")

    # -- boolean search -------------------------------------------------

    def _white_moves(self) -> list:
        """Legal White moves with checking moves first."""
        b = self.board
        checks, quiet = [], []
        for m in b.legal_moves():
            b.make(m)
            (checks if b.in_check() else quiet).append(m)
            b.unmake()
        return checks + quiet

    def _black_replies(self) -> list:
        b = self.board
        sq = b.sq
        first, rest = [], []
        for m in b.legal_moves():
            # captures and king moves refute most often; try them first
            if sq[m[1]] or abs(sq[m[0]]) == 6:
                first.append(m)
            else:
                rest.append(m)
        return first + rest

    def mate_in_one(self) -> bool:
        b = self.board
        key = (b.hash, 1)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        self._tick()
        result = False
        may_check, legal = b.check_filter(), b.legal_filter()
        for m in b.pseudo_moves():
            if not may_check(m) or not legal(m):
                continue
            b.make(m)
            if b.in_check() and not b.has_legal_move():
                result = True
            b.unmake()
            if result:
                break
        self.cache[key] = result
        return result

    def mates_within(self, n: int) -> bool:
        """White to move: can White force mate in at most ``n`` moves?"""
        if n == 1:
            return self.mate_in_one()
        b = self.board
        key = (b.hash, n)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        self._tick()
        result = False
        for m in self._white_moves():
            b.make(m)
            ok = self.black_loses(n - 1)
            b.unmake()
            if ok:
                result = True
                break
        self.cache[key] = result
        return result

    def black_loses(self, n: int) -> bool:
        """Black to move after a White move: is Black mated now or within ``n``?"""
        b = self.board
        if n == 0:
            return b.in_check() and not b.has_legal_move()
        key = (b.hash, -n)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        replies = self._black_replies()
        result = True
        if not replies:
            result = b.in_check()
        else:
            killer = self.killers.get(n)
            if killer is not None and killer in replies:
                replies.remove(killer)
                replies.insert(0, killer)
            for r in replies:
                b.make(r)
                ok = self.mates_within(n)
                b.unmake()
                if not ok:
                    self.killers[n] = r
                    result = False
                    break
        self.cache[key] = result
        return result

    def move_mate_depth(self, m: tuple, n: int) -> int:
        """Smallest d <= n such that ``m`` forces mate in d moves, else 0."""
        b = self.board
        b.make(m)
        try:
            for d in range(1, n + 1):
                if self.black_loses(d - 1):
                    return d
            return 0
        finally:
            b.unmake()

    # -- tree building --------------------------------------------------

    def build(self, m: tuple, depth: int) -> Continuation:
        """Tree for White move ``m`` that is known to mate in ``depth``."""
        b = self.board
        move, text = b.to_move(m), board_san(b, m)
        node = Continuation(move, text, depth)
        b.make(m)
        try:
            for r in self._ordered(b.legal_moves()):
                defense = Defense(b.to_move(r), board_san(b, r))
                b.make(r)
                try:
                    defense.continuations = self.continuations(depth - 1)
                finally:
                    b.unmake()
                node.defenses.append(defense)
        finally:
            b.unmake()
        return node

    def continuations(self, n: int) -> list[Continuation]:
        """All White moves here that force mate within ``n``, shortest first."""
        found = []
        for m in self._ordered(self.board.legal_moves()):
            d = self.move_mate_depth(m, n)
            if d:
                found.append((d, m))
        found.sort(key=lambda t: t[0])  # stable: keeps generation order on ties
        return [self.build(m, d) for d, m in found]

    @staticmethod
    def _ordered(moves: list) -> list:
        return sorted(moves, key=lambda m: (m[0], m[1], m[2]))


def _root_moves(search: MateSearch) -> list:
    return search._ordered(search.board.legal_moves())


def shortest_mate(pos: Position, limits: SolveLimits = DEFAULT_LIMITS, max_depth: int = MAX_DEPTH) -> int:
    """Shortest forced mate for White in moves, or 0 if none within ``max_depth``."""
    s = MateSearch(pos, limits)
    for d in range(1, max_depth + 1):
        if s.mates_within(d):
            return d
    return 0


def solve_mate3(pos: Position, limits: SolveLimits = DEFAULT_LIMITS) -> Optional[SolutionTree]:
    """Tree for the first key of the shortest forced mate, or None.

    Raises BudgetExhausted if the limits stop the search first.
    """
    s = MateSearch(pos, limits)
    for d in range(1, MAX_DEPTH + 1):
        if not s.mates_within(d):
            continue
        for m in _root_moves(s):
            if s.move_mate_depth(m, d) == d:
                return SolutionTree(pos, s.build(m, d))
    return None


def find_keys(pos: Position, limits: SolveLimits = DEFAULT_LIMITS) -> SolveReport:
    """Every first move that forces mate within three, plus analysis of the first key."""
    s = MateSearch(pos, limits)
    shortest = 0
    for d in range(1, MAX_DEPTH + 1):
        if s.mates_within(d):
            shortest = d
            break
    if not shortest:
        return SolveReport([], False, 0, 0, 0, 0, nodes=s.board.nodes)
    keyed = []
    for m in _root_moves(s):
        d = s.move_mate_depth(m, MAX_DEPTH)
        if d:
            keyed.append((d, m))
    # the analysed key is the first one achieving the shortest mate
    first = next(m for d, m in keyed if d == shortest)
    tree = SolutionTree(pos, s.build(first, shortest))
    b = s.board
    keys = [b.to_move(m) for _, m in keyed]
    sans = [board_san(b, m) for _, m in keyed]
    move2, move3 = detect_duals(tree)
    return SolveReport(keys, len(keys) > 1, move2, move3, count_variations(tree), shortest,
                       tree, sans, nodes=b.nodes)


def count_variations(tree: SolutionTree) -> int:
    """Number of distinct Black reply sequences along the main continuations."""

    def walk(node: Continuation) -> int:
        if not node.defenses:
            return 1
        return sum(walk(d.continuations[0]) for d in node.defenses)

    return walk(tree.root)


def detect_duals(tree: SolutionTree) -> tuple[int, int]:
    """Defense nodes offering White more than one mating continuation.

    Returns counts for White's second and third moves. Below a defense only
    the main continuation is followed, so alternative lines are not counted
    twice.
    """
    counts = [0, 0, 0, 0]

    def walk(node: Continuation, white_move: int) -> None:
        for d in node.defenses:
            if len(d.continuations) > 1:
                counts[white_move + 1] += 1
            walk(d.continuations[0], white_move + 1)

    walk(tree.root, 1)
    return counts[2], counts[3]


def verify_tree(tree: SolutionTree) -> list[str]:
    """Independent re-check of a tree on immutable positions.

    Every leaf must be checkmate, every Black reply must appear exactly
    once, and no line may exceed three White moves. Returns the problems
    found; an empty list means the tree is sound.
    """
    from .chess_core import legal_moves

    problems: list[str] = []

    def white(pos: Position, node: Continuation, line: list[str], moves_left: int) -> None:
        here = line + [node.san]
        if moves_left <= 0:
            problems.append(f"line too long: {' '.join(here)}")
            return
        after = pos.push(node.move)
        if not node.defenses:
            if not after.is_checkmate():
                problems.append(f"leaf is not mate: {' '.join(here)}")
            return
        replies = legal_moves(after)
        seen = [d.move for d in node.defenses]
        if sorted(m.uci() for m in replies) != sorted(m.uci() for m in seen):
            problems.append(f"defenses incomplete after {' '.join(here)}")
        for d in node.defenses:
            if not d.continuations:
                problems.append(f"no continuation after {' '.join(here + [d.san])}")
            for c in d.continuations:
                white(after.push(d.move), c, here + [d.san], moves_left - 1)

    white(tree.position, tree.root, [], MAX_DEPTH)
    return problems
